//! Polynomial polyvector fields Sym g ⊗ Λ g*, the Schouten bracket, the
//! Chevalley–Eilenberg differential δ = [π, ·]_s and its cohomology.
//!
//! Sign conventions: `interior` removes index i from slot r (1-based) of the
//! increasing index tuple with sign (−1)^{r−1}. Inside the Schouten bracket
//! the contraction acts from the right, with sign (−1)^{k−r} on a k-form;
//! this is the convention under which [E,Ω]_s = −3Ω, δ(αE) = α∧π, δΩ = 0
//! and [π,π]_s = 0 all hold. Wedge sorts the concatenated tuple counting
//! transpositions. Monomials are ordered by exponent vector (lexicographic),
//! then by index tuple (lexicographic).

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{int, Rational, SparseMatrix, SparseVec};
use crate::liealg::{poisson_structure, LieAlgebra, LieError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("polynomial degree {degree} exceeds truncation {dmax}")]
    Truncation { degree: usize, dmax: usize },
    #[error("form degree {form} exceeds dimension {dim}")]
    FormDegree { form: usize, dim: usize },
    #[error("element is not a cocycle")]
    NotCocycle,
    #[error("element is not homogeneous in bidegree {0:?}")]
    NotHomogeneous(Bidegree),
    #[error("invalid polyvector JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bidegree {
    pub form: usize,
    pub poly: usize,
}

impl Bidegree {
    pub fn new(form: usize, poly: usize) -> Self {
        Bidegree { form, poly }
    }
}

/// Exponent vector for the Sym factor and increasing index tuple for the Λ
/// factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub sym: Vec<u32>,
    pub form: Vec<usize>,
}

impl Monomial {
    pub fn poly_degree(&self) -> usize {
        self.sym.iter().map(|&e| e as usize).sum()
    }

    pub fn bidegree(&self) -> Bidegree {
        Bidegree::new(self.form.len(), self.poly_degree())
    }

    pub fn key(&self) -> String {
        let s: Vec<String> = self.sym.iter().map(|e| e.to_string()).collect();
        let f: Vec<String> = self.form.iter().map(|i| (i + 1).to_string()).collect();
        format!("[{}|{}]", s.join(","), f.join(","))
    }
}

/// Sign and merged tuple of I ∧ J, or None if they share an index.
fn merge_forms(a: &[usize], b: &[usize]) -> Option<(bool, Vec<usize>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            // b[j] jumps over the remaining a[i..].
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((inversions % 2 == 1, out))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVector {
    dim: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl PolyVector {
    pub fn zero(dim: usize) -> Self {
        PolyVector { dim, terms: BTreeMap::new() }
    }

    pub fn one(dim: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], vec![], Rational::one());
        p
    }

    /// c · e^sym ⊗ ε^form; `form` need not be sorted.
    pub fn monomial(dim: usize, sym: Vec<u32>, form: Vec<usize>, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(sym, form, c);
        p
    }

    /// The linear function e_i.
    pub fn generator(dim: usize, i: usize) -> Self {
        let mut sym = vec![0; dim];
        sym[i] = 1;
        Self::monomial(dim, sym, vec![], Rational::one())
    }

    /// The constant 1-form ε^i.
    pub fn coform(dim: usize, i: usize) -> Self {
        Self::monomial(dim, vec![0; dim], vec![i], Rational::one())
    }

    /// Adds c · e^sym ⊗ ε^{form}, sorting `form` with its sign.
    pub fn add_term(&mut self, sym: Vec<u32>, form: Vec<usize>, c: Rational) {
        assert_eq!(sym.len(), self.dim, "exponent vector length");
        assert!(form.iter().all(|&i| i < self.dim), "form index out of range");
        let mut f = form;
        let mut odd = false;
        // Insertion sort counting transpositions.
        for i in 1..f.len() {
            let mut j = i;
            while j > 0 && f[j - 1] > f[j] {
                f.swap(j - 1, j);
                odd = !odd;
                j -= 1;
            }
        }
        if f.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let c = if odd { -c } else { c };
        self.add_monomial(Monomial { sym, form: f }, c);
    }

    fn add_monomial(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn max_poly_degree(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.poly_degree()).max()
    }

    /// The single bidegree of a nonzero homogeneous element.
    pub fn bidegree(&self) -> Option<Bidegree> {
        let mut it = self.terms.keys().map(|m| m.bidegree());
        let first = it.next()?;
        it.all(|b| b == first).then_some(first)
    }

    /// Single form degree, if homogeneous in it.
    pub fn form_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|m| m.form.len());
        let first = it.next()?;
        it.all(|b| b == first).then_some(first)
    }

    pub fn homogeneous_parts(&self) -> BTreeMap<Bidegree, PolyVector> {
        let mut out: BTreeMap<Bidegree, PolyVector> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.bidegree()).or_insert_with(|| Self::zero(self.dim)).add_monomial(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        PolyVector { dim: self.dim, terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    fn check_ambient(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::AmbientMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_monomial(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn check_dmax(&self, dmax: usize) -> Result<(), PolyError> {
        match self.max_poly_degree() {
            Some(d) if d > dmax => Err(PolyError::Truncation { degree: d, dmax }),
            _ => Ok(()),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        let mut out = Self::zero(self.dim);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((neg, form)) = merge_forms(&m1.form, &m2.form) {
                    let sym = m1.sym.iter().zip(&m2.sym).map(|(a, b)| a + b).collect();
                    let c = c1 * c2;
                    out.add_monomial(Monomial { sym, form }, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// ι_{e_i} on the Λ factor.
    pub fn interior(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            if let Some((neg, rest)) = interior_tuple(&m.form, i) {
                out.add_monomial(Monomial { sym: m.sym.clone(), form: rest }, if neg { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// ∂^i on the Sym factor.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.sym[i];
            if e > 0 {
                let mut sym = m.sym.clone();
                sym[i] -= 1;
                out.add_monomial(Monomial { sym, form: m.form.clone() }, c * int(e as i64));
            }
        }
        out
    }

    /// [F, G]_s = Σ_i ι_{e_i}F ∧ ∂^i G − (−1)^{(|F|−1)(|G|−1)} Σ_i ι_{e_i}G ∧ ∂^i F,
    /// extended bilinearly over form-degree components.
    pub fn schouten(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        let mut out = Self::zero(self.dim);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                schouten_terms(m1, m2, &(c1 * c2), &mut out);
            }
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let items: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(m, c)| {
                serde_json::json!({
                    "sym": m.sym,
                    "form": m.form.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "coef": crate::exactla::format_rational(c),
                })
            })
            .collect();
        serde_json::Value::Array(items)
    }

    pub fn from_json_value(dim: usize, v: &serde_json::Value) -> Result<Self, PolyError> {
        let bad = |s: &str| PolyError::Json(s.to_string());
        let arr = v.as_array().ok_or_else(|| bad("expected array"))?;
        let mut out = Self::zero(dim);
        for item in arr {
            let sym: Vec<u32> = serde_json::from_value(item.get("sym").cloned().ok_or_else(|| bad("missing sym"))?)
                .map_err(|e| PolyError::Json(e.to_string()))?;
            let form: Vec<usize> =
                serde_json::from_value(item.get("form").cloned().ok_or_else(|| bad("missing form"))?)
                    .map_err(|e| PolyError::Json(e.to_string()))?;
            let coef = crate::liealg::rational_from_value(item.get("coef").ok_or_else(|| bad("missing coef"))?)?;
            if sym.len() != dim {
                return Err(bad("sym length differs from dim"));
            }
            if form.windows(2).any(|w| w[0] >= w[1]) || form.iter().any(|&i| i == 0 || i > dim) {
                return Err(bad("form indices must be strictly increasing and 1-based"));
            }
            out.add_term(sym, form.into_iter().map(|i| i - 1).collect(), coef);
        }
        Ok(out)
    }
}

/// Removes index i from an increasing tuple; sign (−1)^{r−1} for slot r.
fn interior_tuple(form: &[usize], i: usize) -> Option<(bool, Vec<usize>)> {
    let pos = form.iter().position(|&x| x == i)?;
    let mut rest = form.to_vec();
    rest.remove(pos);
    Some((pos % 2 == 1, rest))
}

fn schouten_terms(m1: &Monomial, m2: &Monomial, c: &Rational, out: &mut PolyVector) {
    let f = m1.form.len() as i64;
    let g = m2.form.len() as i64;
    half_schouten(m1, m2, c, out);
    let sign_odd = ((f - 1) * (g - 1)).rem_euclid(2) == 1;
    // − (−1)^{(|F|−1)(|G|−1)} Σ ι G ∧ ∂ F
    let c2 = if sign_odd { c.clone() } else { -c.clone() };
    half_schouten(m2, m1, &c2, out);
}

/// Adds c · Σ_i ι_{e_i}(m1) ∧ ∂^i(m2).
fn half_schouten(m1: &Monomial, m2: &Monomial, c: &Rational, out: &mut PolyVector) {
    for (slot, &i) in m1.form.iter().enumerate() {
        let e = m2.sym[i];
        if e == 0 {
            continue;
        }
        let mut rest = m1.form.clone();
        rest.remove(slot);
        let Some((neg, form)) = merge_forms(&rest, &m2.form) else { continue };
        let mut sym: Vec<u32> = m1.sym.iter().zip(&m2.sym).map(|(a, b)| a + b).collect();
        sym[i] -= 1;
        let mut x = c * int(e as i64);
        // Right contraction: slot r of k carries (−1)^{k−r}.
        let slot_odd = (m1.form.len() - 1 - slot) % 2 == 1;
        if slot_odd != neg {
            x = -x;
        }
        out.add_monomial(Monomial { sym, form }, x);
    }
}

impl Add for &PolyVector {
    type Output = PolyVector;
    fn add(self, rhs: &PolyVector) -> PolyVector {
        self.checked_add(rhs).expect("ambient mismatch")
    }
}

impl Sub for &PolyVector {
    type Output = PolyVector;
    fn sub(self, rhs: &PolyVector) -> PolyVector {
        self.checked_add(&-rhs).expect("ambient mismatch")
    }
}

impl Neg for &PolyVector {
    type Output = PolyVector;
    fn neg(self) -> PolyVector {
        self.scale(&-Rational::one())
    }
}

/// All exponent vectors of total degree m in n variables, lexicographically
/// increasing.
pub fn exponent_vectors(n: usize, m: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, m: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in 0..=m {
            prefix.push(e);
            rec(n, m - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if m == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(n, m as u32, &mut Vec::new(), &mut out);
    out
}

/// Increasing k-subsets of 0..n in lexicographic order.
pub fn index_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in start..n {
            prefix.push(i);
            rec(i + 1, n, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Monomial basis of a bidegree in the global order.
pub fn bidegree_basis(n: usize, b: Bidegree) -> Vec<Monomial> {
    let mut out = Vec::new();
    let tuples = index_tuples(n, b.form);
    for sym in exponent_vectors(n, b.poly) {
        for form in &tuples {
            out.push(Monomial { sym: sym.clone(), form: form.clone() });
        }
    }
    out
}

/// The CE complex ChE(g, Sym g) truncated at polynomial degree `dmax`.
#[derive(Clone, Debug)]
pub struct CeComplex {
    algebra: LieAlgebra,
    pi: PolyVector,
    dmax: usize,
}

impl CeComplex {
    pub fn new(algebra: LieAlgebra, dmax: usize) -> Result<Self, PolyError> {
        let pi = poisson_structure(&algebra)?;
        Ok(CeComplex { algebra, pi, dmax })
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn dmax(&self) -> usize {
        self.dmax
    }

    pub fn pi(&self) -> &PolyVector {
        &self.pi
    }

    /// Schouten bracket with truncation checks on inputs and output.
    pub fn bracket(&self, f: &PolyVector, g: &PolyVector) -> Result<PolyVector, PolyError> {
        f.check_dmax(self.dmax)?;
        g.check_dmax(self.dmax)?;
        let out = f.schouten(g)?;
        out.check_dmax(self.dmax)?;
        Ok(out)
    }

    /// δ = [π, ·]_s.
    pub fn delta(&self, f: &PolyVector) -> Result<PolyVector, PolyError> {
        if f.dim() != self.dim() {
            return Err(PolyError::AmbientMismatch(self.dim(), f.dim()));
        }
        self.bracket(&self.pi, f)
    }

    pub fn basis(&self, b: Bidegree) -> Result<Vec<Monomial>, PolyError> {
        self.check_bidegree(b)?;
        Ok(bidegree_basis(self.dim(), b))
    }

    fn check_bidegree(&self, b: Bidegree) -> Result<(), PolyError> {
        if b.form > self.dim() {
            return Err(PolyError::FormDegree { form: b.form, dim: self.dim() });
        }
        if b.poly > self.dmax {
            return Err(PolyError::Truncation { degree: b.poly, dmax: self.dmax });
        }
        Ok(())
    }

    /// Coordinates of a homogeneous element in the monomial basis of `b`.
    pub fn coordinates(&self, f: &PolyVector, b: Bidegree) -> Result<SparseVec, PolyError> {
        let basis = self.basis(b)?;
        let index: BTreeMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut v = SparseVec::new();
        for (m, c) in f.terms() {
            let i = index.get(m).ok_or(PolyError::NotHomogeneous(b))?;
            v.insert(*i, c.clone());
        }
        Ok(v)
    }

    pub fn from_coordinates(&self, v: &SparseVec, b: Bidegree) -> Result<PolyVector, PolyError> {
        let basis = self.basis(b)?;
        let mut out = PolyVector::zero(self.dim());
        for (i, c) in v {
            out.add_monomial(basis[*i].clone(), c.clone());
        }
        Ok(out)
    }

    /// Matrix of δ from bidegree (k, m) to (k+1, m); zero rows when k = n.
    pub fn delta_matrix(&self, b: Bidegree) -> Result<SparseMatrix, PolyError> {
        let src = self.basis(b)?;
        let tgt_b = Bidegree::new(b.form + 1, b.poly);
        let tgt_len = if tgt_b.form > self.dim() { 0 } else { bidegree_basis(self.dim(), tgt_b).len() };
        let mut cols = Vec::with_capacity(src.len());
        for m in &src {
            let f = PolyVector { dim: self.dim(), terms: [(m.clone(), Rational::one())].into_iter().collect() };
            let d = self.delta(&f)?;
            cols.push(if tgt_len == 0 { SparseVec::new() } else { self.coordinates(&d, tgt_b)? });
        }
        let labels = src.iter().map(|m| m.key()).collect();
        Ok(SparseMatrix::from_columns(tgt_len, &cols).with_labels(labels))
    }

    pub fn cohomology(&self, b: Bidegree) -> Result<Cohomology, PolyError> {
        self.cohomology_with(b, &[])
    }

    /// Cohomology at `b`; the cocycles in `preferred` are taken first as
    /// representatives when independent modulo coboundaries, the remainder
    /// come from echelon pivots.
    pub fn cohomology_with(&self, b: Bidegree, preferred: &[PolyVector]) -> Result<Cohomology, PolyError> {
        let basis_len = self.basis(b)?.len();
        let d_out = self.delta_matrix(b)?;
        let cocycles = d_out.nullspace();
        let coboundaries: Vec<SparseVec> = if b.form == 0 {
            Vec::new()
        } else {
            self.delta_matrix(Bidegree::new(b.form - 1, b.poly))?
                .columns()
                .into_iter()
                .filter(|c| !c.is_empty())
                .collect()
        };
        let mut candidates: Vec<SparseVec> = Vec::new();
        for p in preferred {
            let v = self.coordinates(p, b)?;
            if !d_out.apply(&v).is_empty() {
                return Err(PolyError::NotCocycle);
            }
            candidates.push(v);
        }
        candidates.extend(cocycles.iter().cloned());
        let mut cols = coboundaries.clone();
        cols.extend(candidates.iter().cloned());
        let (_, pivots) = SparseMatrix::from_columns(basis_len, &cols).rref();
        let nb = coboundaries.len();
        let reps: Vec<SparseVec> = pivots.iter().filter(|&&p| p >= nb).map(|&p| candidates[p - nb].clone()).collect();
        let boundary_rank = pivots.iter().filter(|&&p| p < nb).count();
        let representatives = reps.iter().map(|v| self.from_coordinates(v, b)).collect::<Result<Vec<_>, _>>()?;
        Ok(Cohomology {
            bidegree: b,
            basis_len,
            cocycle_dim: cocycles.len(),
            boundary_rank,
            coboundaries,
            reps,
            representatives,
        })
    }

    /// Dimension table for all bidegrees up to the truncation.
    pub fn cohomology_table(&self) -> Result<BTreeMap<Bidegree, usize>, PolyError> {
        let mut t = BTreeMap::new();
        for m in 0..=self.dmax {
            for k in 0..=self.dim() {
                let b = Bidegree::new(k, m);
                t.insert(b, self.cohomology(b)?.dim());
            }
        }
        Ok(t)
    }

    /// Bracket of two cohomology classes given by cocycle representatives,
    /// expressed in the representative basis of the target bidegree.
    pub fn cohomology_bracket(&self, a: &PolyVector, b: &PolyVector) -> Result<CohomologyClass, PolyError> {
        for x in [a, b] {
            if !self.delta(x)?.is_zero() {
                return Err(PolyError::NotCocycle);
            }
        }
        let (Some(ba), Some(bb)) = (a.bidegree(), b.bidegree()) else {
            return Ok(CohomologyClass::zero());
        };
        let s = self.bracket(a, b)?;
        if ba.form + bb.form == 0 || ba.poly + bb.poly == 0 {
            debug_assert!(s.is_zero());
            return Ok(CohomologyClass::zero());
        }
        let target = Bidegree::new(ba.form + bb.form - 1, ba.poly + bb.poly - 1);
        if target.form > self.dim() {
            return Ok(CohomologyClass::zero());
        }
        let h = self.cohomology(target)?;
        Ok(CohomologyClass { bidegree: Some(target), coords: h.classify(self, &s)? })
    }
}

/// Per-bidegree cohomology with echelon representatives.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub bidegree: Bidegree,
    pub basis_len: usize,
    pub cocycle_dim: usize,
    pub boundary_rank: usize,
    coboundaries: Vec<SparseVec>,
    reps: Vec<SparseVec>,
    pub representatives: Vec<PolyVector>,
}

impl Cohomology {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Coordinates of the class of a cocycle in the representative basis.
    pub fn classify(&self, cx: &CeComplex, f: &PolyVector) -> Result<SparseVec, PolyError> {
        if !cx.delta(f)?.is_zero() {
            return Err(PolyError::NotCocycle);
        }
        self.classify_coords(&cx.coordinates(f, self.bidegree)?)
    }

    /// Same as `classify` on monomial coordinates of a known cocycle.
    pub fn classify_coords(&self, v: &SparseVec) -> Result<SparseVec, PolyError> {
        let nb = self.coboundaries.len();
        let mut cols = self.coboundaries.clone();
        cols.extend(self.reps.iter().cloned());
        let m = SparseMatrix::from_columns(self.basis_len, &cols);
        let x = m.solve_sparse(v).ok_or(PolyError::NotCocycle)?;
        Ok(x.into_iter().filter(|(i, _)| *i >= nb).map(|(i, c)| (i - nb, c)).collect())
    }

    pub fn rep_coordinates(&self) -> &[SparseVec] {
        &self.reps
    }

    pub fn coboundary_columns(&self) -> &[SparseVec] {
        &self.coboundaries
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyClass {
    pub bidegree: Option<Bidegree>,
    pub coords: SparseVec,
}

impl CohomologyClass {
    pub fn zero() -> Self {
        CohomologyClass { bidegree: None, coords: SparseVec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::rat;
    use crate::liealg::{abelian, cartan_cocycle, casimir, euler_field, heisenberg3, so3};

    fn so3_parts() -> (CeComplex, PolyVector, PolyVector, PolyVector) {
        let l = so3();
        let k = l.killing_form();
        let q = casimir(&l, &k).unwrap();
        let omega = cartan_cocycle(&l, &k);
        let e = euler_field(&l);
        (CeComplex::new(l, 8).unwrap(), q, omega, e)
    }

    #[test]
    fn wedge_signs() {
        let e1 = PolyVector::coform(2, 0);
        let e2 = PolyVector::coform(2, 1);
        assert!(e1.wedge(&e1).unwrap().is_zero());
        assert_eq!(e2.wedge(&e1).unwrap(), -&e1.wedge(&e2).unwrap());
        assert!(matches!(e1.wedge(&PolyVector::coform(3, 0)), Err(PolyError::AmbientMismatch(2, 3))));
    }

    #[test]
    fn interior_and_partial() {
        let e12 = PolyVector::monomial(2, vec![0, 0], vec![0, 1], int(1));
        assert_eq!(e12.interior(0), PolyVector::coform(2, 1));
        assert_eq!(e12.interior(1), -&PolyVector::coform(2, 0));
        let (_, _, omega, _) = so3_parts();
        assert_eq!(omega.interior(0), PolyVector::monomial(3, vec![0; 3], vec![1, 2], int(-2)));
        let x2 = PolyVector::monomial(2, vec![2, 0], vec![], int(1));
        assert_eq!(x2.partial(0), PolyVector::monomial(2, vec![1, 0], vec![], int(2)));
        assert!(PolyVector::generator(2, 1).partial(0).is_zero());
    }

    #[test]
    fn partial_of_casimir_power() {
        // ∂^i(q^m) = m q^{m−1} ∂^i q with ∂^i q = 2 q^{ij} e_j.
        let (_, q, _, _) = so3_parts();
        let q2 = q.wedge(&q).unwrap();
        for i in 0..3 {
            let lhs = q2.partial(i);
            let rhs = q.wedge(&q.partial(i)).unwrap().scale(&int(2));
            assert_eq!(lhs, rhs);
            assert_eq!(q.partial(i), PolyVector::generator(3, i).scale(&int(-1)));
        }
    }

    #[test]
    fn schouten_sign_oracle() {
        let (cx, q, omega, e) = so3_parts();
        assert_eq!(e.schouten(&omega).unwrap(), omega.scale(&int(-3)));
        assert!(cx.delta(&omega).unwrap().is_zero());
        assert!(cx.pi().schouten(cx.pi()).unwrap().is_zero());
        let qe = q.wedge(&e).unwrap();
        assert_eq!(cx.delta(&qe).unwrap(), q.wedge(cx.pi()).unwrap());
        assert_eq!(cx.delta(&e).unwrap(), cx.pi().clone());
        // [E, q] = 2q·q' = 2q
        assert_eq!(e.schouten(&q).unwrap(), q.scale(&int(2)));
    }

    #[test]
    fn so3_delta_ranks_at_poly1() {
        let (cx, ..) = so3_parts();
        let m = cx.delta_matrix(Bidegree::new(1, 1)).unwrap();
        assert_eq!(m.ncols(), 9);
        assert_eq!(m.rank(), 6);
        assert_eq!(cx.delta_matrix(Bidegree::new(2, 1)).unwrap().rank(), 3);
    }

    #[test]
    fn so3_invariant_quadratics_are_casimir() {
        let (cx, q, ..) = so3_parts();
        let ns = cx.delta_matrix(Bidegree::new(0, 2)).unwrap().nullspace();
        assert_eq!(ns.len(), 1);
        let v = cx.from_coordinates(&ns[0], Bidegree::new(0, 2)).unwrap();
        // Proportional to q = −½(e1² + e2² + e3²).
        assert_eq!(v, q.scale(&int(-2)));
        let h = cx.cohomology(Bidegree::new(0, 2)).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.representatives[0], v);
    }

    #[test]
    fn heisenberg_center() {
        let cx = CeComplex::new(heisenberg3(), 3).unwrap();
        let h = cx.cohomology(Bidegree::new(0, 1)).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.representatives[0], PolyVector::generator(3, 2));
    }

    #[test]
    fn cohomology_bracket_independent_of_representative() {
        let (cx, q, omega, e) = so3_parts();
        assert!(cx.cohomology_bracket(&q, &q.wedge(&omega).unwrap()).unwrap().is_zero());
        assert!(cx.cohomology_bracket(&omega, &omega).unwrap().is_zero());
        assert!(matches!(cx.cohomology_bracket(&e, &q), Err(PolyError::NotCocycle)));
        // Heisenberg has nonzero brackets; shifting a representative by a
        // coboundary leaves the class of the bracket unchanged.
        let hx = CeComplex::new(heisenberg3(), 3).unwrap();
        let a_b = Bidegree::new(1, 1);
        let b_b = Bidegree::new(1, 0);
        let ha = hx.cohomology(a_b).unwrap();
        let hb = hx.cohomology(b_b).unwrap();
        let mut nonzero = 0;
        for a in &ha.representatives {
            for b in &hb.representatives {
                let r = hx.cohomology_bracket(a, b).unwrap();
                for i in 0..3 {
                    let shift = hx.delta(&PolyVector::generator(3, i)).unwrap();
                    if shift.is_zero() {
                        continue;
                    }
                    let r2 = hx.cohomology_bracket(&(a + &shift), b).unwrap();
                    assert_eq!(r, r2);
                }
                nonzero += usize::from(!r.is_zero());
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn abelian_cohomology_is_everything() {
        let cx = CeComplex::new(abelian(2), 3).unwrap();
        for (b, d) in cx.cohomology_table().unwrap() {
            assert_eq!(d, bidegree_basis(2, b).len());
        }
    }

    #[test]
    fn json_round_trip() {
        let (_, q, omega, _) = so3_parts();
        let x = &q.wedge(&omega).unwrap() + &q.scale(&rat(3, 5));
        let v = x.to_json_value();
        assert_eq!(PolyVector::from_json_value(3, &v).unwrap(), x);
        let bad = serde_json::json!([{"sym": [0, 0, 0], "form": [2, 1], "coef": "1"}]);
        assert!(PolyVector::from_json_value(3, &bad).is_err());
    }

    #[test]
    fn truncation_is_an_error() {
        let cx = CeComplex::new(so3(), 2).unwrap();
        let f = PolyVector::monomial(3, vec![3, 0, 0], vec![], int(1));
        assert!(matches!(cx.delta(&f), Err(PolyError::Truncation { degree: 3, dmax: 2 })));
    }
}
