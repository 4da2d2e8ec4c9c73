//! Exact rational scalars and sparse linear algebra over Q.
//!
//! Pivoting is deterministic: the leftmost column wins, and among candidate
//! rows the one with the smallest index. Columns are ordered by index; callers
//! that attach string labels keep them sorted so that index order and label
//! order agree.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Sparse vector: index -> nonzero coefficient.
pub type SparseVec = BTreeMap<usize, Rational>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// "p/q", or "p" when q = 1.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational, LinAlgError> {
    let t = s.trim();
    let bad = || LinAlgError::Parse(s.to_string());
    match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// Serde adapter for a single rational stored as a string.
pub mod rational_string {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => parse_rational(&s).map_err(D::Error::custom),
            Raw::I(i) => Ok(int(i)),
        }
    }
}

pub fn add_scaled(acc: &mut SparseVec, v: &SparseVec, c: &Rational) {
    if c.is_zero() {
        return;
    }
    for (k, x) in v {
        add_entry(acc, *k, x * c);
    }
}

pub fn add_entry(acc: &mut SparseVec, k: usize, x: Rational) {
    if x.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match acc.entry(k) {
        Entry::Vacant(e) => {
            e.insert(x);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += x;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub fn scale_vec(v: &SparseVec, c: &Rational) -> SparseVec {
    if c.is_zero() {
        return SparseVec::new();
    }
    v.iter().map(|(k, x)| (*k, x * c)).collect()
}

/// Sparse matrix stored by rows. No explicit zeros are kept.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<SparseVec>,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseMatrix {}x{}", self.nrows, self.ncols)?;
        for (r, row) in self.rows.iter().enumerate() {
            if !row.is_empty() {
                let cells: Vec<String> = row.iter().map(|(c, x)| format!("{c}:{x}")).collect();
                writeln!(f, "  {r}: {}", cells.join(" "))?;
            }
        }
        Ok(())
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, rows: vec![SparseVec::new(); nrows], labels: None }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].insert(i, Rational::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), ncols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (c, x) in row.iter().enumerate() {
                m.set(r, c, x.clone());
            }
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let dense: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        Self::from_dense(&dense)
    }

    /// Builds a matrix whose columns are the given sparse vectors.
    pub fn from_columns(nrows: usize, cols: &[SparseVec]) -> Self {
        let mut m = Self::zeros(nrows, cols.len());
        for (c, v) in cols.iter().enumerate() {
            for (r, x) in v {
                assert!(*r < nrows, "column entry out of range");
                m.rows[*r].insert(c, x.clone());
            }
        }
        m
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.ncols);
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &SparseVec {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.rows[r].get(&c).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, x: Rational) {
        assert!(r < self.nrows && c < self.ncols, "index out of range");
        if x.is_zero() {
            self.rows[r].remove(&c);
        } else {
            self.rows[r].insert(c, x);
        }
    }

    pub fn add_at(&mut self, r: usize, c: usize, x: Rational) {
        assert!(r < self.nrows && c < self.ncols, "index out of range");
        add_entry(&mut self.rows[r], c, x);
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// (row, col, value) in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, x)| (r, *c, x)))
    }

    pub fn column(&self, c: usize) -> SparseVec {
        let mut v = SparseVec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(x) = row.get(&c) {
                v.insert(r, x.clone());
            }
        }
        v
    }

    pub fn columns(&self) -> Vec<SparseVec> {
        let mut cols = vec![SparseVec::new(); self.ncols];
        for (r, c, x) in self.entries() {
            cols[c].insert(r, x.clone());
        }
        cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for (r, c, x) in self.entries() {
            t.rows[c].insert(r, x.clone());
        }
        t
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinAlgError> {
        if self.ncols != other.nrows {
            return Err(LinAlgError::DimensionMismatch { expected: self.ncols, got: other.nrows });
        }
        let mut out = Self::zeros(self.nrows, other.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = SparseVec::new();
            for (k, x) in row {
                add_scaled(&mut acc, &other.rows[*k], x);
            }
            out.rows[r] = acc;
        }
        Ok(out)
    }

    /// Matrix times sparse column vector.
    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (r, row) in self.rows.iter().enumerate() {
            let mut s = Rational::zero();
            if row.len() < v.len() {
                for (c, x) in row {
                    if let Some(y) = v.get(c) {
                        s += x * y;
                    }
                }
            } else {
                for (c, y) in v {
                    if let Some(x) = row.get(c) {
                        s += x * y;
                    }
                }
            }
            if !s.is_zero() {
                out.insert(r, s);
            }
        }
        out
    }

    pub fn mul_dense(&self, v: &[Rational]) -> Result<Vec<Rational>, LinAlgError> {
        if v.len() != self.ncols {
            return Err(LinAlgError::DimensionMismatch { expected: self.ncols, got: v.len() });
        }
        Ok(self.rows.iter().map(|row| row.iter().fold(Rational::zero(), |s, (c, x)| s + x * &v[*c])).collect())
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinAlgError> {
        self.combine(other, &Rational::one())
    }

    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinAlgError> {
        self.combine(other, &-Rational::one())
    }

    fn combine(&self, other: &SparseMatrix, c: &Rational) -> Result<SparseMatrix, LinAlgError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.nrows * self.ncols,
                got: other.nrows * other.ncols,
            });
        }
        let mut out = self.clone();
        for (r, row) in other.rows.iter().enumerate() {
            add_scaled(&mut out.rows[r], row, c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> SparseMatrix {
        let mut out = Self::zeros(self.nrows, self.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            out.rows[r] = scale_vec(row, c);
        }
        out.labels = self.labels.clone();
        out
    }

    /// Reduced row-echelon form and the strictly increasing pivot columns.
    pub fn rref(&self) -> (SparseMatrix, Vec<usize>) {
        let mut rows: Vec<SparseVec> = self.rows.iter().filter(|r| !r.is_empty()).cloned().collect();
        let mut pivots = Vec::new();
        let mut done = 0;
        // Rows below `done` are processed in order of their leading column.
        while done < rows.len() {
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in rows.iter().enumerate().skip(done) {
                if let Some((&c, _)) = row.iter().next() {
                    if best.is_none_or(|(bc, _)| c < bc) {
                        best = Some((c, i));
                    }
                }
            }
            let Some((col, idx)) = best else { break };
            rows.swap(done, idx);
            let inv = rows[done][&col].recip();
            let pivot_row = scale_vec(&rows[done], &inv);
            for (i, row) in rows.iter_mut().enumerate() {
                if i == done {
                    continue;
                }
                if let Some(x) = row.get(&col).cloned() {
                    add_scaled(row, &pivot_row, &-x);
                }
            }
            rows[done] = pivot_row;
            pivots.push(col);
            done += 1;
            // Drop rows that became zero so they never count as candidates.
            let tail: Vec<SparseVec> = rows.drain(done..).filter(|r| !r.is_empty()).collect();
            rows.extend(tail);
        }
        let mut out = Self::zeros(self.nrows, self.ncols);
        for (i, row) in rows.into_iter().enumerate() {
            out.rows[i] = row;
        }
        out.labels = self.labels.clone();
        (out, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Kernel basis, one vector per free column in increasing order; each has
    /// a 1 at its free column and 0 at the other free columns.
    pub fn nullspace(&self) -> Vec<SparseVec> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.ncols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for f in (0..self.ncols).filter(|&c| !is_pivot[c]) {
            let mut v = SparseVec::new();
            v.insert(f, Rational::one());
            for (i, &p) in pivots.iter().enumerate() {
                if let Some(x) = r.rows[i].get(&f) {
                    v.insert(p, -x.clone());
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Some exact solution of M x = b with free variables zeroed, or None when
    /// the system is inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Result<Option<Vec<Rational>>, LinAlgError> {
        if b.len() != self.nrows {
            return Err(LinAlgError::DimensionMismatch { expected: self.nrows, got: b.len() });
        }
        let rhs: SparseVec = b.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, x.clone())).collect();
        Ok(self.solve_sparse(&rhs).map(|x| {
            let mut dense = vec![Rational::zero(); self.ncols];
            for (i, v) in x {
                dense[i] = v;
            }
            dense
        }))
    }

    pub fn solve_sparse(&self, b: &SparseVec) -> Option<SparseVec> {
        let aug = self.augment(b);
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.ncols) {
            return None;
        }
        let mut x = SparseVec::new();
        for (i, &p) in pivots.iter().enumerate() {
            if let Some(v) = r.rows[i].get(&self.ncols) {
                x.insert(p, v.clone());
            }
        }
        Some(x)
    }

    /// Whether b lies in the column span.
    pub fn is_consistent(&self, b: &SparseVec) -> bool {
        self.solve_sparse(b).is_some()
    }

    fn augment(&self, b: &SparseVec) -> SparseMatrix {
        let mut aug = Self::zeros(self.nrows, self.ncols + 1);
        for (r, row) in self.rows.iter().enumerate() {
            aug.rows[r] = row.clone();
        }
        for (r, x) in b {
            aug.rows[*r].insert(self.ncols, x.clone());
        }
        aug
    }

    pub fn inverse(&self) -> Result<SparseMatrix, LinAlgError> {
        if self.nrows != self.ncols {
            return Err(LinAlgError::DimensionMismatch { expected: self.nrows, got: self.ncols });
        }
        let n = self.nrows;
        if n == 0 {
            return Ok(Self::zeros(0, 0));
        }
        let mut aug = Self::zeros(n, 2 * n);
        for (r, row) in self.rows.iter().enumerate() {
            aug.rows[r] = row.clone();
            aug.rows[r].insert(n + r, Rational::one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(LinAlgError::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            inv.rows[r] = red.rows[r].range(n..).map(|(c, x)| (c - n, x.clone())).collect();
        }
        Ok(inv)
    }

    pub fn max_abs_entry(&self) -> Rational {
        self.entries().map(|(_, _, x)| x.abs()).fold(Rational::zero(), |a, b| if b > a { b } else { a })
    }

    /// Dense rows as strings, for JSON certificates.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.nrows).map(|r| (0..self.ncols).map(|c| format_rational(&self.get(r, c))).collect()).collect()
    }
}
