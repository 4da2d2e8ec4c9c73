//! Derivations of the free associative algebra T V on N generators: the
//! extension ψ ↦ ψ̄, the bracket [ψ, χ]_D, inner derivations b′, the first
//! factor trace S_n, its inverse Q on inner derivations, the reduced DGLA
//! T V ⊕ Hom(V, T V), the scalar 3-cocycle σ on outer derivations and the
//! finite solve showing σ is not a coboundary.
//!
//! Generators are 0-based internally and printed 1-based (e1, ε1).
//! Tensor grade: T^n V has grade n, Hom(V, V^{⊗(k+1)}) has grade k.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dgla::{BracketCache, Dgla, DglaContraction, DglaError};
use crate::exactla::{add_entry, format_rational, Rational, SparseMatrix, SparseVec};
use crate::obstruction::left_certificate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeError {
    #[error("word of length {len} exceeds the truncation {max}")]
    Truncation { len: usize, max: usize },
    #[error("Q needs at least two generators (N = {0})")]
    TooFewGenerators(usize),
    #[error("argument is not in the complement ker S: {0}")]
    NotInComplement(String),
    #[error("mixed generator counts {0} and {1}")]
    Mismatch(usize, usize),
}

fn word_display(w: &[usize]) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.iter().map(|i| format!("e{}", i + 1)).collect()
    }
}

fn terms_display<K>(terms: &BTreeMap<K, Rational>, f: impl Fn(&K) -> String) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, c) in terms {
        let neg = c < &Rational::zero();
        let a = if neg { -c.clone() } else { c.clone() };
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if !a.is_one() {
            s.push_str(&format_rational(&a));
            s.push('·');
        }
        s.push_str(&f(k));
    }
    s
}

fn add_term<K: Ord>(m: &mut BTreeMap<K, Rational>, k: K, c: Rational) {
    use std::collections::btree_map::Entry;
    if c.is_zero() {
        return;
    }
    match m.entry(k) {
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

/// Element of T V: finite sums of words over {0..N-1}.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TensorPoly {
    n: usize,
    terms: BTreeMap<Vec<usize>, Rational>,
}

impl TensorPoly {
    pub fn zero(n: usize) -> Self {
        TensorPoly { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::word(n, &[])
    }

    pub fn word(n: usize, w: &[usize]) -> Self {
        assert!(w.iter().all(|&i| i < n), "generator out of range");
        let mut t = Self::zero(n);
        t.terms.insert(w.to_vec(), Rational::one());
        t
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Rational> {
        &self.terms
    }

    pub fn coefficient(&self, w: &[usize]) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    /// ε: coefficient of the empty word.
    pub fn augmentation(&self) -> Rational {
        self.coefficient(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_len(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).max()
    }

    pub fn add_term(&mut self, w: Vec<usize>, c: Rational) {
        add_term(&mut self.terms, w, c);
    }

    pub fn add_scaled(&mut self, other: &TensorPoly, c: &Rational) {
        for (w, x) in &other.terms {
            add_term(&mut self.terms, w.clone(), x * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> TensorPoly {
        let mut out = TensorPoly::zero(self.n);
        out.add_scaled(self, c);
        out
    }

    /// Concatenation product.
    pub fn mul(&self, other: &TensorPoly) -> TensorPoly {
        let mut out = TensorPoly::zero(self.n);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let mut w = u.clone();
                w.extend_from_slice(v);
                out.add_term(w, a * b);
            }
        }
        out
    }

    /// Part of length exactly `len`.
    pub fn part(&self, len: usize) -> TensorPoly {
        TensorPoly {
            n: self.n,
            terms: self.terms.iter().filter(|(w, _)| w.len() == len).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    /// ζ: v₁⊗…⊗v_n ↦ v₂⊗…⊗v_n⊗v₁ on every word.
    pub fn cyclic(&self) -> TensorPoly {
        let mut out = TensorPoly::zero(self.n);
        for (w, c) in &self.terms {
            let mut r = w.clone();
            if !r.is_empty() {
                r.rotate_left(1);
            }
            out.add_term(r, c.clone());
        }
        out
    }
}

impl fmt::Display for TensorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&terms_display(&self.terms, |w| word_display(w)))
    }
}

/// ψ ∈ Hom(V, T V): term (j, w) means e_j ↦ w, i.e. the tensor w ⊗ ε^j.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FreeDeriv {
    n: usize,
    terms: BTreeMap<(usize, Vec<usize>), Rational>,
}

impl FreeDeriv {
    pub fn zero(n: usize) -> Self {
        FreeDeriv { n, terms: BTreeMap::new() }
    }

    pub fn term(n: usize, j: usize, out: &[usize]) -> Self {
        assert!(j < n && out.iter().all(|&i| i < n), "generator out of range");
        let mut d = Self::zero(n);
        d.terms.insert((j, out.to_vec()), Rational::one());
        d
    }

    /// The covector Σ α_j ε^j (grade −1).
    pub fn covector(alpha: &[Rational]) -> Self {
        let mut d = Self::zero(alpha.len());
        for (j, a) in alpha.iter().enumerate() {
            add_term(&mut d.terms, (j, vec![]), a.clone());
        }
        d
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(usize, Vec<usize>), Rational> {
        &self.terms
    }

    /// Component ψ_j^{out}.
    pub fn component(&self, j: usize, out: &[usize]) -> Rational {
        self.terms.get(&(j, out.to_vec())).cloned().unwrap_or_else(Rational::zero)
    }

    /// ψ(e_j).
    pub fn value(&self, j: usize) -> TensorPoly {
        let mut t = TensorPoly::zero(self.n);
        for ((k, w), c) in &self.terms {
            if *k == j {
                t.add_term(w.clone(), c.clone());
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Tensor grade when homogeneous.
    pub fn grade(&self) -> Option<i32> {
        let mut it = self.terms.keys().map(|(_, w)| w.len() as i32 - 1);
        let g = it.next()?;
        it.all(|h| h == g).then_some(g)
    }

    pub fn max_out_len(&self) -> Option<usize> {
        self.terms.keys().map(|(_, w)| w.len()).max()
    }

    pub fn part(&self, grade: i32) -> FreeDeriv {
        FreeDeriv {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|((_, w), _)| w.len() as i32 - 1 == grade)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn add_term(&mut self, j: usize, out: Vec<usize>, c: Rational) {
        add_term(&mut self.terms, (j, out), c);
    }

    pub fn add_scaled(&mut self, other: &FreeDeriv, c: &Rational) {
        for (k, x) in &other.terms {
            add_term(&mut self.terms, k.clone(), x * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> FreeDeriv {
        let mut out = FreeDeriv::zero(self.n);
        out.add_scaled(self, c);
        out
    }
}

impl fmt::Display for FreeDeriv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&terms_display(&self.terms, |(j, w)| deriv_term_display(*j, w)))
    }
}

fn deriv_term_display(j: usize, w: &[usize]) -> String {
    if w.is_empty() {
        format!("ε{}", j + 1)
    } else {
        format!("{}⊗ε{}", word_display(w), j + 1)
    }
}

fn check_len(len: usize, max: usize) -> Result<(), FreeError> {
    if len > max {
        Err(FreeError::Truncation { len, max })
    } else {
        Ok(())
    }
}

fn same_n(a: usize, b: usize) -> Result<(), FreeError> {
    if a == b {
        Ok(())
    } else {
        Err(FreeError::Mismatch(a, b))
    }
}

/// ψ̄(a): the derivation extension, Leibniz over concatenation; results
/// longer than `max_len` are an error.
pub fn deriv_extend(psi: &FreeDeriv, a: &TensorPoly, max_len: usize) -> Result<TensorPoly, FreeError> {
    same_n(psi.n, a.n)?;
    let values: Vec<TensorPoly> = (0..psi.n).map(|j| psi.value(j)).collect();
    let mut out = TensorPoly::zero(a.n);
    for (w, c) in &a.terms {
        for r in 0..w.len() {
            for (v, x) in &values[w[r]].terms {
                let mut nw = Vec::with_capacity(w.len() + v.len());
                nw.extend_from_slice(&w[..r]);
                nw.extend_from_slice(v);
                nw.extend_from_slice(&w[r + 1..]);
                check_len(nw.len(), max_len)?;
                out.add_term(nw, c * x);
            }
        }
    }
    Ok(out)
}

/// [ψ, χ]_D = ψ̄∘χ − χ̄∘ψ.
pub fn d_bracket(psi: &FreeDeriv, chi: &FreeDeriv, max_len: usize) -> Result<FreeDeriv, FreeError> {
    same_n(psi.n, chi.n)?;
    let mut out = FreeDeriv::zero(psi.n);
    for j in 0..psi.n {
        for (w, c) in deriv_extend(psi, &chi.value(j), max_len)?.terms {
            out.add_term(j, w, c);
        }
        for (w, c) in deriv_extend(chi, &psi.value(j), max_len)?.terms {
            out.add_term(j, w, -c);
        }
    }
    Ok(out)
}

/// b′(x) = ad_x restricted to V: e_j ↦ x e_j − e_j x.
pub fn inner(x: &TensorPoly, max_len: usize) -> Result<FreeDeriv, FreeError> {
    let mut out = FreeDeriv::zero(x.n);
    for (w, c) in &x.terms {
        check_len(w.len() + 1, max_len)?;
        for j in 0..x.n {
            let mut right = w.clone();
            right.push(j);
            let mut left = vec![j];
            left.extend_from_slice(w);
            out.add_term(j, right, c.clone());
            out.add_term(j, left, -c.clone());
        }
    }
    Ok(out)
}

/// S_n: v₀⊗…⊗v_n⊗α ↦ α(v₀) v₁⊗…⊗v_n on the grade-n part; S_{−1} = S₀ = 0.
pub fn first_factor_trace(psi: &FreeDeriv, n: i32) -> TensorPoly {
    let mut out = TensorPoly::zero(psi.n);
    if n < 1 {
        return out;
    }
    for ((j, w), c) in &psi.terms {
        if w.len() as i32 == n + 1 && w[0] == *j {
            out.add_term(w[1..].to_vec(), c.clone());
        }
    }
    out
}

/// S = Σ_n S_n.
pub fn trace(psi: &FreeDeriv) -> TensorPoly {
    let mut out = TensorPoly::zero(psi.n);
    for ((j, w), c) in &psi.terms {
        if w.len() >= 2 && w[0] == *j {
            out.add_term(w[1..].to_vec(), c.clone());
        }
    }
    out
}

/// True when every grade ≥ 1 part lies in ker S (grades −1, 0 always do).
pub fn in_complement(psi: &FreeDeriv) -> bool {
    trace(psi).is_zero()
}

/// Q = Σ_{n≥1} Q_n with Q_n = −1/(Nⁿ−1) Σ_{r<n} N^{n−r−1} ζ^r∘S_n.
pub fn q_map(psi: &FreeDeriv) -> Result<TensorPoly, FreeError> {
    let n_gen = psi.n;
    if n_gen < 2 {
        return Err(FreeError::TooFewGenerators(n_gen));
    }
    let big_n = Rational::from_integer((n_gen as i64).into());
    let s = trace(psi);
    let mut out = TensorPoly::zero(n_gen);
    let Some(max) = s.max_len() else {
        return Ok(out);
    };
    for n in 1..=max {
        let sn = s.part(n);
        if sn.is_zero() {
            continue;
        }
        let pow = |e: usize| -> Rational { (0..e).fold(Rational::one(), |acc, _| acc * &big_n) };
        let norm = -Rational::one() / (pow(n) - Rational::one());
        let mut rot = sn;
        for r in 0..n {
            out.add_scaled(&rot, &(&norm * pow(n - r - 1)));
            rot = rot.cyclic();
        }
    }
    Ok(out)
}

/// P = id − b′∘Q: projection onto ker S along inner derivations.
pub fn project(psi: &FreeDeriv, max_len: usize) -> Result<FreeDeriv, FreeError> {
    let mut out = psi.clone();
    out.add_scaled(&inner(&q_map(psi)?, max_len)?, &-Rational::one());
    Ok(out)
}

/// Element (x, ψ) of T V ⊕ Hom(V, T V).
pub type ReducedElement = (TensorPoly, FreeDeriv);

/// [(x,ψ), (y,χ)] = (ψ̄(y) − χ̄(x), [ψ,χ]_D).
pub fn reduced_bracket(a: &ReducedElement, b: &ReducedElement, max_len: usize) -> Result<ReducedElement, FreeError> {
    let mut t = deriv_extend(&a.1, &b.0, max_len)?;
    t.add_scaled(&deriv_extend(&b.1, &a.0, max_len)?, &-Rational::one());
    Ok((t, d_bracket(&a.1, &b.1, max_len)?))
}

/// b_red(x, ψ) = (0, b′(x)).
pub fn reduced_differential(a: &ReducedElement, max_len: usize) -> Result<ReducedElement, FreeError> {
    Ok((TensorPoly::zero(a.0.n), inner(&a.0, max_len)?))
}

/// Bracket of outer derivations through the complement: P[ψ, χ]_D.
pub fn cohomology_bracket(psi: &FreeDeriv, chi: &FreeDeriv, max_len: usize) -> Result<FreeDeriv, FreeError> {
    project(&d_bracket(psi, chi, max_len)?, max_len)
}

/// Closed form of [α, ψ]_H for a covector α and a grade-2 ψ ∈ ker S₂:
/// Σ_r α_r(ψ_j^{r i₀ i₁} + ψ_j^{i₀ r i₁} + ψ_j^{i₀ i₁ r})
/// + 1/(N−1) Σ_{r,s} α_r(ψ_s^{r s i₀} δ^{i₁}_j − ψ_s^{r s i₁} δ^{i₀}_j).
pub fn cohomology_bracket_free(alpha: &[Rational], psi: &FreeDeriv) -> Result<FreeDeriv, FreeError> {
    let n = psi.n;
    same_n(alpha.len(), n)?;
    if n < 2 {
        return Err(FreeError::TooFewGenerators(n));
    }
    let inv = Rational::one() / Rational::from_integer((n as i64 - 1).into());
    let mut out = FreeDeriv::zero(n);
    for ((j, w), x) in &psi.terms {
        if w.len() != 3 {
            continue;
        }
        let (a, b, c) = (w[0], w[1], w[2]);
        out.add_term(*j, vec![b, c], &alpha[a] * x);
        out.add_term(*j, vec![a, c], &alpha[b] * x);
        out.add_term(*j, vec![a, b], &alpha[c] * x);
        if b == *j {
            let t = &alpha[a] * x * &inv;
            for k in 0..n {
                out.add_term(k, vec![c, k], t.clone());
                out.add_term(k, vec![k, c], -t.clone());
            }
        }
    }
    Ok(out)
}

fn natural_bound(ds: &[&FreeDeriv]) -> usize {
    ds.iter().map(|d| d.max_out_len().unwrap_or(0)).sum::<usize>() + 1
}

/// σ(ψ₁, ψ₂, ψ₃) = −ε(ψ̄₁(Q[ψ₂,ψ₃]_D) + cyclic) for arguments in the
/// complement. Nonzero only when the tensor grades sum to 0.
pub fn sigma_general(psi1: &FreeDeriv, psi2: &FreeDeriv, psi3: &FreeDeriv) -> Result<Rational, FreeError> {
    for p in [psi1, psi2, psi3] {
        if !in_complement(p) {
            return Err(FreeError::NotInComplement(p.to_string()));
        }
    }
    let bound = natural_bound(&[psi1, psi2, psi3]);
    let mut total = Rational::zero();
    for (a, b, c) in [(psi1, psi2, psi3), (psi2, psi3, psi1), (psi3, psi1, psi2)] {
        let q = q_map(&d_bracket(b, c, bound)?)?;
        total += deriv_extend(a, &q, bound)?.augmentation();
    }
    Ok(-total)
}

/// σ(α, β, ψ) = 1/(N−1) Σ_{k,j,l} α_l β_k (ψ_j^{ljk} − ψ_j^{kjl}).
pub fn sigma_closed_form(alpha: &[Rational], beta: &[Rational], psi: &FreeDeriv) -> Result<Rational, FreeError> {
    let n = psi.n;
    same_n(alpha.len(), n)?;
    same_n(beta.len(), n)?;
    if n < 2 {
        return Err(FreeError::TooFewGenerators(n));
    }
    let mut total = Rational::zero();
    for ((j, w), x) in &psi.terms {
        if w.len() == 3 && w[1] == *j {
            total += x * (&alpha[w[0]] * &beta[w[2]] - &alpha[w[2]] * &beta[w[0]]);
        }
    }
    Ok(total / Rational::from_integer((n as i64 - 1).into()))
}

fn all_words(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..n).map(move |i| {
                    let mut v = w.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// All words of length `len` over N generators, lexicographic.
pub fn words(n: usize, len: usize) -> Vec<Vec<usize>> {
    all_words(n, len)
}

/// One element of the sparse basis of the complement at a grade.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComplementElem {
    /// e_out ⊗ ε^j (grades −1, 0, or out[0] ≠ j).
    Single(usize, Vec<usize>),
    /// e_{j tail} ⊗ ε^j − e_{0 tail} ⊗ ε^0 for j ≥ 1.
    Diff(usize, Vec<usize>),
}

impl ComplementElem {
    pub fn to_deriv(&self, n: usize) -> FreeDeriv {
        match self {
            ComplementElem::Single(j, w) => FreeDeriv::term(n, *j, w),
            ComplementElem::Diff(j, tail) => {
                let mut a = vec![*j];
                a.extend_from_slice(tail);
                let mut b = vec![0];
                b.extend_from_slice(tail);
                let mut d = FreeDeriv::term(n, *j, &a);
                d.add_term(0, b, -Rational::one());
                d
            }
        }
    }

    pub fn key(&self) -> String {
        match self {
            ComplementElem::Single(j, w) => deriv_term_display(*j, w),
            ComplementElem::Diff(j, tail) => {
                let mut a = vec![*j];
                a.extend_from_slice(tail);
                let mut b = vec![0];
                b.extend_from_slice(tail);
                format!("{}−{}", deriv_term_display(*j, &a), deriv_term_display(0, &b))
            }
        }
    }
}

/// Sparse basis of the complement at a tensor grade: all of V* (grade −1),
/// all of Hom(V,V) (grade 0), ker S_k for k ≥ 1. Dimension N^{k+2} − N^k.
pub fn complement_basis(n: usize, grade: i32) -> Vec<ComplementElem> {
    if grade < -1 {
        return vec![];
    }
    let len = (grade + 1) as usize;
    let mut out = Vec::new();
    for w in all_words(n, len) {
        for j in 0..n {
            if len < 2 || w[0] != j {
                out.push(ComplementElem::Single(j, w.clone()));
            }
        }
    }
    if len >= 2 {
        for tail in all_words(n, len - 1) {
            for j in 1..n {
                out.push(ComplementElem::Diff(j, tail.clone()));
            }
        }
    }
    out
}

/// Coordinates of a complement element on [`complement_basis`] positions,
/// given the position map of that basis.
fn complement_coords(psi: &FreeDeriv, index: &HashMap<ComplementElem, usize>) -> Result<SparseVec, FreeError> {
    let mut out = SparseVec::new();
    for ((j, w), c) in &psi.terms {
        let e = if w.len() < 2 || w[0] != *j {
            ComplementElem::Single(*j, w.clone())
        } else if *j >= 1 {
            ComplementElem::Diff(*j, w[1..].to_vec())
        } else {
            continue;
        };
        let pos = index.get(&e).ok_or_else(|| FreeError::NotInComplement(psi.to_string()))?;
        add_entry(&mut out, *pos, c.clone());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum Letter {
    Tensor(Vec<usize>),
    Complement(ComplementElem, FreeDeriv),
    Inner(Vec<usize>, FreeDeriv),
}

/// The reduced DGLA T V ⊕ Hom(V, T V) in degrees −1, 0, truncated at tensor
/// grade tmax − 1, in the basis adapted to the complement: tensor words,
/// ker S elements, and b′(words). Letter weight is tensor grade + 1.
#[derive(Debug)]
pub struct FreeReduced {
    n: usize,
    tmax: usize,
    letters: Vec<Letter>,
    tensor_index: HashMap<Vec<usize>, usize>,
    inner_index: HashMap<Vec<usize>, usize>,
    comp_index: HashMap<ComplementElem, usize>,
    cache: BracketCache,
}

impl FreeReduced {
    pub fn new(n: usize, tmax: usize) -> Result<Self, FreeError> {
        if n < 2 {
            return Err(FreeError::TooFewGenerators(n));
        }
        let mut letters = Vec::new();
        let mut tensor_index = HashMap::new();
        let mut inner_index = HashMap::new();
        let mut comp_index = HashMap::new();
        for len in 0..tmax {
            for w in all_words(n, len) {
                tensor_index.insert(w.clone(), letters.len());
                letters.push(Letter::Tensor(w));
            }
        }
        for grade in -1..tmax as i32 {
            for e in complement_basis(n, grade) {
                comp_index.insert(e.clone(), letters.len());
                let d = e.to_deriv(n);
                letters.push(Letter::Complement(e, d));
            }
            if grade >= 1 {
                for w in all_words(n, grade as usize) {
                    inner_index.insert(w.clone(), letters.len());
                    let d = inner(&TensorPoly::word(n, &w), tmax)?;
                    letters.push(Letter::Inner(w, d));
                }
            }
        }
        Ok(FreeReduced { n, tmax, letters, tensor_index, inner_index, comp_index, cache: BracketCache::default() })
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn tmax(&self) -> usize {
        self.tmax
    }

    /// Letter of a tensor word, if inside the truncation.
    pub fn tensor_letter(&self, w: &[usize]) -> Option<usize> {
        self.tensor_index.get(w).copied()
    }

    pub fn complement_letter(&self, e: &ComplementElem) -> Option<usize> {
        self.comp_index.get(e).copied()
    }

    /// Natural form of a letter.
    pub fn element(&self, i: usize) -> ReducedElement {
        match &self.letters[i] {
            Letter::Tensor(w) => (TensorPoly::word(self.n, w), FreeDeriv::zero(self.n)),
            Letter::Complement(_, d) | Letter::Inner(_, d) => (TensorPoly::zero(self.n), d.clone()),
        }
    }

    pub fn tensor_to_vec(&self, x: &TensorPoly) -> Result<SparseVec, FreeError> {
        let mut out = SparseVec::new();
        for (w, c) in &x.terms {
            let i = self.tensor_index.get(w).ok_or(FreeError::Truncation { len: w.len(), max: self.tmax - 1 })?;
            add_entry(&mut out, *i, c.clone());
        }
        Ok(out)
    }

    /// Coordinates of a derivation: Q ψ on the b′ letters, P ψ on the
    /// complement letters.
    pub fn deriv_to_vec(&self, psi: &FreeDeriv) -> Result<SparseVec, FreeError> {
        if let Some(l) = psi.max_out_len() {
            check_len(l, self.tmax)?;
        }
        let q = q_map(psi)?;
        let mut out = SparseVec::new();
        for (w, c) in &q.terms {
            add_entry(&mut out, self.inner_index[w], c.clone());
        }
        let mut rest = psi.clone();
        rest.add_scaled(&inner(&q, self.tmax)?, &-Rational::one());
        for (k, c) in complement_coords(&rest, &self.comp_index)? {
            add_entry(&mut out, k, c);
        }
        Ok(out)
    }

    pub fn to_vec(&self, a: &ReducedElement) -> Result<SparseVec, FreeError> {
        let mut out = self.tensor_to_vec(&a.0)?;
        for (k, c) in self.deriv_to_vec(&a.1)? {
            add_entry(&mut out, k, c);
        }
        Ok(out)
    }

    pub fn to_element(&self, v: &SparseVec) -> ReducedElement {
        let mut x = TensorPoly::zero(self.n);
        let mut d = FreeDeriv::zero(self.n);
        for (i, c) in v {
            let (t, p) = self.element(*i);
            x.add_scaled(&t, c);
            d.add_scaled(&p, c);
        }
        (x, d)
    }

    /// H = K1 ⊕ complement; h(b′(a)) = a.
    pub fn contraction(&self) -> DglaContraction {
        let n = self.letters.len();
        let mut c = DglaContraction {
            h_keys: vec![],
            h_degrees: vec![],
            h_weights: vec![],
            i: vec![],
            p: vec![SparseVec::new(); n],
            h: vec![SparseVec::new(); n],
        };
        for (j, l) in self.letters.iter().enumerate() {
            let is_h = match l {
                Letter::Tensor(w) => w.is_empty(),
                Letter::Complement(..) => true,
                Letter::Inner(w, _) => {
                    c.h[j].insert(self.tensor_index[w], Rational::one());
                    false
                }
            };
            if is_h {
                c.p[j].insert(c.h_keys.len(), Rational::one());
                c.h_keys.push(self.key(j));
                c.h_degrees.push(self.degree(j));
                c.h_weights.push(self.weight(j));
                c.i.push([(j, Rational::one())].into_iter().collect());
            }
        }
        c
    }
}

impl Dgla for FreeReduced {
    fn dim(&self) -> usize {
        self.letters.len()
    }

    fn key(&self, i: usize) -> String {
        match &self.letters[i] {
            Letter::Tensor(w) => word_display(w),
            Letter::Complement(e, _) => e.key(),
            Letter::Inner(w, _) => format!("ad({})", word_display(w)),
        }
    }

    fn degree(&self, i: usize) -> i32 {
        match self.letters[i] {
            Letter::Tensor(_) => -1,
            _ => 0,
        }
    }

    fn weight(&self, i: usize) -> u32 {
        match &self.letters[i] {
            Letter::Tensor(w) => w.len() as u32 + 1,
            Letter::Complement(_, d) | Letter::Inner(_, d) => d.max_out_len().unwrap_or(0) as u32,
        }
    }

    fn max_weight(&self) -> u32 {
        self.tmax as u32
    }

    fn differential(&self, i: usize) -> SparseVec {
        match &self.letters[i] {
            Letter::Tensor(w) if !w.is_empty() => [(self.inner_index[w], Rational::one())].into_iter().collect(),
            _ => SparseVec::new(),
        }
    }

    fn bracket(&self, i: usize, j: usize) -> Result<SparseVec, DglaError> {
        self.cache.get_or((i, j), || {
            let (a, b) = (self.element(i), self.element(j));
            let trunc = |e: FreeError| match e {
                FreeError::Truncation { len, .. } => {
                    DglaError::Truncation { weight: len as u32 + 1, max: self.tmax as u32 }
                }
                other => DglaError::Invariant(other.to_string()),
            };
            let mut t = deriv_extend(&a.1, &b.0, self.tmax - 1).map_err(trunc)?;
            t.add_scaled(&deriv_extend(&b.1, &a.0, self.tmax - 1).map_err(trunc)?, &-Rational::one());
            let d = d_bracket(&a.1, &b.1, self.tmax).map_err(|e| match e {
                FreeError::Truncation { len, .. } => {
                    DglaError::Truncation { weight: len as u32, max: self.tmax as u32 }
                }
                other => DglaError::Invariant(other.to_string()),
            })?;
            self.to_vec(&(t, d)).map_err(|e| DglaError::Invariant(e.to_string()))
        })
    }
}

/// Arguments of one equation of the σ system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SigmaTriple {
    /// (A, B, C) in Hom(V,V), indices a < b < c of e_i⊗ε^j at i·N + j.
    Gl(usize, usize, usize),
    /// (α, B, ρ): covector, Hom(V,V), grade-1 complement element.
    Mixed(usize, usize, usize),
    /// (α, β, ψ): covectors i < j, grade-2 complement element.
    Covectors(usize, usize, usize),
}

/// Tensor-degree-0 scalar 2-cochains θ on outer derivations and the linear
/// map θ ↦ δθ on the triples of tensor degree 0. Unknowns: θ₀₀ on
/// Λ²Hom(V,V) (pairs a < b), then θ₋₁₁ on V* ⊗ ker S₁.
#[derive(Debug)]
pub struct SigmaSystem {
    n: usize,
    gl: Vec<FreeDeriv>,
    rho: Vec<ComplementElem>,
    psi: Vec<ComplementElem>,
    pub triples: Vec<SigmaTriple>,
    pub matrix: SparseMatrix,
}

/// Outcome of solving δθ = target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaSolve {
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub augmented_rank: usize,
    /// θ with δθ = target, when feasible.
    pub theta: Option<SparseVec>,
    /// y with yᵀA = 0 and y·target = 1, when infeasible.
    pub core: Option<SparseVec>,
}

impl SigmaSolve {
    pub fn feasible(&self) -> bool {
        self.theta.is_some()
    }

    pub fn verdict(&self) -> &'static str {
        if self.feasible() {
            "exact"
        } else {
            "infeasible"
        }
    }
}

impl SigmaSystem {
    pub fn new(n: usize) -> Result<Self, FreeError> {
        if n < 2 {
            return Err(FreeError::TooFewGenerators(n));
        }
        let gl: Vec<FreeDeriv> = (0..n * n).map(|a| FreeDeriv::term(n, a % n, &[a / n])).collect();
        let rho = complement_basis(n, 1);
        let psi = complement_basis(n, 2);
        let rho_index: HashMap<ComplementElem, usize> = rho.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let gl_pairs = n * n * (n * n - 1) / 2;
        let pair_index = |a: usize, b: usize| -> usize {
            // position of (a, b), a < b, in lexicographic order
            let m = n * n;
            a * m - a * (a + 1) / 2 + (b - a - 1)
        };
        let mixed_index = |i: usize, r: usize| gl_pairs + i * rho.len() + r;
        let unknowns = gl_pairs + n * rho.len();
        let bound = 5;
        let bracket_h = |x: &FreeDeriv, y: &FreeDeriv| cohomology_bracket(x, y, bound);
        // θ(u, z) for u given in natural form and z a basis element of kind
        // (grade, position); only tensor-degree-0 pairs contribute.
        let theta_row = |u: &FreeDeriv, z_grade: i32, z: usize| -> Result<SparseVec, FreeError> {
            let mut row = SparseVec::new();
            let ug = match u.grade() {
                Some(g) => g,
                None => return Ok(row),
            };
            match (ug, z_grade) {
                (0, 0) => {
                    for ((j, w), c) in &u.terms {
                        let a = w[0] * n + j;
                        if a < z {
                            add_entry(&mut row, pair_index(a, z), c.clone());
                        } else if a > z {
                            add_entry(&mut row, pair_index(z, a), -c.clone());
                        }
                    }
                }
                (-1, 1) => {
                    for ((j, _), c) in &u.terms {
                        add_entry(&mut row, mixed_index(*j, z), c.clone());
                    }
                }
                (1, -1) => {
                    for (r, c) in complement_coords(u, &rho_index)? {
                        add_entry(&mut row, mixed_index(z, r), -c);
                    }
                }
                _ => {}
            }
            Ok(row)
        };
        let covector = |i: usize| FreeDeriv::term(n, i, &[]);
        let mut triples = Vec::new();
        let mut rows = Vec::new();
        // δθ(x,y,z) = −θ([x,y],z) + θ([x,z],y) − θ([y,z],x)
        let mut push = |t: SigmaTriple, parts: [(FreeDeriv, i32, usize); 3]| -> Result<(), FreeError> {
            let [(x, _, _), (y, _, _), (z, _, _)] = &parts;
            let (gx, ix) = (parts[0].1, parts[0].2);
            let (gy, iy) = (parts[1].1, parts[1].2);
            let (gz, iz) = (parts[2].1, parts[2].2);
            let mut row = SparseVec::new();
            for (u, g, k, s) in [
                (bracket_h(x, y)?, gz, iz, -Rational::one()),
                (bracket_h(x, z)?, gy, iy, Rational::one()),
                (bracket_h(y, z)?, gx, ix, -Rational::one()),
            ] {
                for (c, v) in theta_row(&u, g, k)? {
                    add_entry(&mut row, c, v * &s);
                }
            }
            triples.push(t);
            rows.push(row);
            Ok(())
        };
        let m = n * n;
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    push(
                        SigmaTriple::Gl(a, b, c),
                        [(gl[a].clone(), 0, a), (gl[b].clone(), 0, b), (gl[c].clone(), 0, c)],
                    )?;
                }
            }
        }
        for i in 0..n {
            for (b, gb) in gl.iter().enumerate() {
                for (r, e) in rho.iter().enumerate() {
                    push(
                        SigmaTriple::Mixed(i, b, r),
                        [(covector(i), -1, i), (gb.clone(), 0, b), (e.to_deriv(n), 1, r)],
                    )?;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for (p, e) in psi.iter().enumerate() {
                    push(
                        SigmaTriple::Covectors(i, j, p),
                        [(covector(i), -1, i), (covector(j), -1, j), (e.to_deriv(n), 2, p)],
                    )?;
                }
            }
        }
        let mut matrix = SparseMatrix::zeros(rows.len(), unknowns);
        for (r, row) in rows.iter().enumerate() {
            for (c, x) in row {
                matrix.set(r, *c, x.clone());
            }
        }
        Ok(SigmaSystem { n, gl, rho, psi, triples, matrix })
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Natural forms of the arguments of a triple.
    pub fn arguments(&self, t: &SigmaTriple) -> [FreeDeriv; 3] {
        let n = self.n;
        let cov = |i: usize| FreeDeriv::term(n, i, &[]);
        match *t {
            SigmaTriple::Gl(a, b, c) => [self.gl[a].clone(), self.gl[b].clone(), self.gl[c].clone()],
            SigmaTriple::Mixed(i, b, r) => [cov(i), self.gl[b].clone(), self.rho[r].to_deriv(n)],
            SigmaTriple::Covectors(i, j, p) => [cov(i), cov(j), self.psi[p].to_deriv(n)],
        }
    }

    /// σ on every triple, as the right-hand side.
    pub fn sigma_rhs(&self) -> Result<SparseVec, FreeError> {
        let mut rhs = SparseVec::new();
        for (r, t) in self.triples.iter().enumerate() {
            let [a, b, c] = self.arguments(t);
            add_entry(&mut rhs, r, sigma_general(&a, &b, &c)?);
        }
        Ok(rhs)
    }

    /// δθ on every triple.
    pub fn delta(&self, theta: &SparseVec) -> SparseVec {
        self.matrix.apply(theta)
    }

    pub fn solve(&self, rhs: &SparseVec) -> SigmaSolve {
        let a = &self.matrix;
        let rank = a.rank();
        let mut aug = SparseMatrix::zeros(a.nrows(), a.ncols() + 1);
        for (r, c, x) in a.entries() {
            aug.set(r, c, x.clone());
        }
        for (r, x) in rhs {
            aug.set(*r, a.ncols(), x.clone());
        }
        let augmented_rank = aug.rank();
        let theta = a.solve_sparse(rhs);
        let core = theta.is_none().then(|| left_certificate(a, rhs));
        SigmaSolve { unknowns: a.ncols(), equations: a.nrows(), rank, augmented_rank, theta, core }
    }
}

/// σ(ε¹, ε², e₁⊗e₂⊗e₂⊗ε²) at N generators.
pub fn sigma_probe(n: usize) -> Result<Rational, FreeError> {
    if n < 2 {
        return Err(FreeError::TooFewGenerators(n));
    }
    sigma_general(&FreeDeriv::term(n, 0, &[]), &FreeDeriv::term(n, 1, &[]), &FreeDeriv::term(n, 1, &[0, 1, 1]))
}

/// Solves δθ = σ over tensor-degree-0 cochains; `tmax` must host grade-2
/// derivations (tmax ≥ 3).
pub fn sigma_nonexact(n: usize, tmax: usize) -> Result<SigmaSolve, FreeError> {
    check_len(3, tmax)?;
    let sys = SigmaSystem::new(n)?;
    let rhs = sys.sigma_rhs()?;
    Ok(sys.solve(&rhs))
}

/// Deterministic JSON summary of the σ computation.
pub fn sigma_certificate(n: usize, tmax: usize) -> Result<Value, FreeError> {
    let probe = sigma_probe(n)?;
    let s = sigma_nonexact(n, tmax)?;
    Ok(json!({
        "N": n,
        "Tmax": tmax,
        "sigma_probe": format_rational(&probe),
        "exactness": s.verdict(),
        "rank": s.rank,
        "augmented_rank": s.augmented_rank,
        "unknowns": s.unknowns,
        "equations": s.equations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::verify_contraction;
    use crate::dgla::check_dgla;
    use crate::exactla::{int, rat};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_complement(rng: &mut ChaCha8Rng, n: usize, grade: i32) -> FreeDeriv {
        let mut d = FreeDeriv::zero(n);
        for e in complement_basis(n, grade) {
            if rng.gen_bool(0.3) {
                d.add_scaled(&e.to_deriv(n), &int(rng.gen_range(-3..=3)));
            }
        }
        d
    }

    fn random_deriv(rng: &mut ChaCha8Rng, n: usize, grade: i32) -> FreeDeriv {
        let mut d = FreeDeriv::zero(n);
        for w in words(n, (grade + 1) as usize) {
            for j in 0..n {
                if rng.gen_bool(0.3) {
                    d.add_term(j, w.clone(), int(rng.gen_range(-3..=3)));
                }
            }
        }
        d
    }

    fn random_tensor(rng: &mut ChaCha8Rng, n: usize, len: usize) -> TensorPoly {
        let mut t = TensorPoly::zero(n);
        for w in words(n, len) {
            if rng.gen_bool(0.5) {
                t.add_term(w, int(rng.gen_range(-3..=3)));
            }
        }
        t
    }

    fn cov(n: usize, j: usize) -> FreeDeriv {
        FreeDeriv::term(n, j, &[])
    }

    #[test]
    fn extension_examples() {
        let mut euler = FreeDeriv::zero(2);
        euler.add_term(0, vec![0], int(1));
        euler.add_term(1, vec![1], int(1));
        let x = TensorPoly::word(2, &[0, 1]);
        assert_eq!(deriv_extend(&euler, &x, 4).unwrap(), x.scale(&int(2)));
        let psi = FreeDeriv::term(2, 0, &[1]);
        let mut want = TensorPoly::word(2, &[1, 0]);
        want.add_term(vec![0, 1], int(1));
        assert_eq!(deriv_extend(&psi, &TensorPoly::word(2, &[0, 0]), 4).unwrap(), want);
        assert!(deriv_extend(&psi, &TensorPoly::one(2), 4).unwrap().is_zero());
        assert!(matches!(
            deriv_extend(&FreeDeriv::term(2, 0, &[0, 0]), &TensorPoly::word(2, &[0, 0]), 2),
            Err(FreeError::Truncation { .. })
        ));
    }

    #[test]
    fn bracket_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_deriv(&mut rng, 2, 1);
        assert!(d_bracket(&psi, &psi, 6).unwrap().is_zero());
        assert!(d_bracket(&cov(2, 0), &cov(2, 1), 6).unwrap().is_zero());
        for _ in 0..10 {
            let x = random_tensor(&mut rng, 2, 1);
            let y = random_tensor(&mut rng, 2, 2);
            let mut comm = x.mul(&y);
            comm.add_scaled(&y.mul(&x), &int(-1));
            let lhs = d_bracket(&inner(&x, 6).unwrap(), &inner(&y, 6).unwrap(), 6).unwrap();
            assert_eq!(lhs, inner(&comm, 6).unwrap());
        }
    }

    #[test]
    fn inner_examples_and_injectivity() {
        assert!(inner(&TensorPoly::one(2), 4).unwrap().is_zero());
        let ad = inner(&TensorPoly::word(2, &[0]), 4).unwrap();
        let mut want = TensorPoly::word(2, &[0, 1]);
        want.add_term(vec![1, 0], int(-1));
        assert_eq!(ad.value(1), want);
        for n in [2, 3] {
            for len in 1..=3 {
                let ws = words(n, len);
                let g = FreeReduced::new(n, len + 1).unwrap();
                let cols: Vec<SparseVec> = ws
                    .iter()
                    .map(|w| g.deriv_to_vec(&inner(&TensorPoly::word(n, w), len + 1).unwrap()).unwrap())
                    .collect();
                assert_eq!(SparseMatrix::from_columns(g.dim(), &cols).rank(), ws.len());
            }
        }
    }

    #[test]
    fn trace_examples_and_cyclic_identity() {
        assert_eq!(first_factor_trace(&FreeDeriv::term(2, 0, &[0, 1]), 1), TensorPoly::word(2, &[1]));
        assert!(first_factor_trace(&FreeDeriv::term(2, 1, &[0, 1]), 1).is_zero());
        assert!(first_factor_trace(&FreeDeriv::term(2, 0, &[0]), 0).is_zero());
        for n in [2, 3] {
            for len in 1..=4 {
                for w in words(n, len) {
                    let a = TensorPoly::word(n, &w);
                    let lhs = first_factor_trace(&inner(&a, 5).unwrap(), len as i32);
                    let mut rhs = a.cyclic();
                    rhs.add_scaled(&a, &int(-(n as i64)));
                    assert_eq!(lhs, rhs, "word {}", a);
                }
            }
        }
    }

    #[test]
    fn q_inverts_inner_derivations() {
        for len in 1..=4 {
            for w in words(2, len) {
                let a = TensorPoly::word(2, &w);
                assert_eq!(q_map(&inner(&a, 5).unwrap()).unwrap(), a);
            }
        }
        for e in complement_basis(3, 2) {
            assert!(q_map(&e.to_deriv(3)).unwrap().is_zero());
        }
        assert!(q_map(&FreeDeriv::term(2, 0, &[1])).unwrap().is_zero());
        assert_eq!(q_map(&FreeDeriv::term(1, 0, &[0, 0])), Err(FreeError::TooFewGenerators(1)));
    }

    #[test]
    fn projection_splits_derivations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for grade in 1..=3 {
            let psi = random_deriv(&mut rng, 2, grade);
            let p = project(&psi, 5).unwrap();
            assert!(in_complement(&p));
            let mut back = p.clone();
            back.add_scaled(&inner(&q_map(&psi).unwrap(), 5).unwrap(), &int(1));
            assert_eq!(back, psi);
        }
        assert_eq!(complement_basis(2, 2).len(), 16 - 4);
        assert_eq!(complement_basis(3, 1).len(), 27 - 3);
    }

    #[test]
    fn reduced_bracket_examples() {
        let x = (TensorPoly::word(2, &[0]), FreeDeriv::zero(2));
        let y = (TensorPoly::word(2, &[1]), FreeDeriv::zero(2));
        let r = reduced_bracket(&x, &y, 4).unwrap();
        assert!(r.0.is_zero() && r.1.is_zero());
        let psi = FreeDeriv::term(2, 1, &[0, 0]);
        let r = reduced_bracket(&(TensorPoly::zero(2), psi.clone()), &y, 4).unwrap();
        assert_eq!(r.0, TensorPoly::word(2, &[0, 0]));
        assert!(r.1.is_zero());
        let d = reduced_differential(&x, 4).unwrap();
        assert!(reduced_differential(&d, 4).unwrap().1.is_zero());
    }

    #[test]
    fn sigma_vanishes_off_the_covector_component() {
        let n = 2;
        let gl: Vec<FreeDeriv> = (0..n * n).map(|a| FreeDeriv::term(n, a % n, &[a / n])).collect();
        for a in &gl {
            for b in &gl {
                for c in &gl {
                    assert!(sigma_general(a, b, c).unwrap().is_zero());
                }
            }
        }
        for j in 0..n {
            for b in &gl {
                for e in complement_basis(n, 1) {
                    assert!(sigma_general(&cov(n, j), b, &e.to_deriv(n)).unwrap().is_zero());
                }
            }
        }
        let off = FreeDeriv::term(n, 0, &[0, 1]);
        assert!(matches!(sigma_general(&cov(n, 0), &cov(n, 1), &off), Err(FreeError::NotInComplement(_))));
    }

    #[test]
    fn sigma_probe_values() {
        assert_eq!(sigma_probe(2).unwrap(), int(-1));
        assert_eq!(sigma_probe(3).unwrap(), rat(-1, 2));
        let psi = FreeDeriv::term(2, 1, &[0, 1, 1]);
        let (a, b) = ([int(1), int(0)], [int(0), int(1)]);
        assert_eq!(sigma_closed_form(&a, &b, &psi).unwrap(), int(1));
        assert!(sigma_closed_form(&a, &a, &psi).unwrap().is_zero());
    }

    #[test]
    fn sigma_closed_form_is_negated_general_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3] {
            for _ in 0..20 {
                let a: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-2..=2))).collect();
                let b: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-2..=2))).collect();
                let psi = random_complement(&mut rng, n, 2);
                let general = sigma_general(&FreeDeriv::covector(&a), &FreeDeriv::covector(&b), &psi).unwrap();
                // three-term reduction −α(Q₁[β,ψ]_D) + β(Q₁[α,ψ]_D)
                let apply = |c: &[Rational], t: &TensorPoly| -> Rational {
                    t.terms().iter().filter(|(w, _)| w.len() == 1).map(|(w, x)| &c[w[0]] * x).sum()
                };
                let qa = q_map(&d_bracket(&FreeDeriv::covector(&a), &psi, 4).unwrap()).unwrap();
                let qb = q_map(&d_bracket(&FreeDeriv::covector(&b), &psi, 4).unwrap()).unwrap();
                assert_eq!(general, apply(&b, &qa) - apply(&a, &qb));
                assert_eq!(sigma_closed_form(&a, &b, &psi).unwrap(), -general);
            }
        }
    }

    #[test]
    fn cohomology_bracket_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            for _ in 0..10 {
                let a: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-2..=2))).collect();
                let psi = random_complement(&mut rng, n, 2);
                let closed = cohomology_bracket_free(&a, &psi).unwrap();
                assert!(in_complement(&closed));
                assert_eq!(closed, cohomology_bracket(&FreeDeriv::covector(&a), &psi, 4).unwrap());
            }
            let a: Vec<Rational> = (0..n).map(|i| int(i as i64 + 1)).collect();
            let inner_psi = inner(&TensorPoly::word(n, &[0, 1]), 4).unwrap();
            assert!(cohomology_bracket(&FreeDeriv::covector(&a), &inner_psi, 4).unwrap().is_zero());
            let zero = vec![Rational::zero(); n];
            assert!(cohomology_bracket_free(&zero, &random_complement(&mut rng, n, 2)).unwrap().is_zero());
        }
    }

    #[test]
    fn sigma_is_not_exact() {
        for n in [2, 3] {
            let s = sigma_nonexact(n, 4).unwrap();
            assert_eq!(s.verdict(), "infeasible");
            assert_eq!(s.augmented_rank, s.rank + 1);
        }
        let s = sigma_nonexact(2, 4).unwrap();
        assert_eq!((s.unknowns, s.equations, s.rank), (18, 64, 14));
        assert!(matches!(sigma_nonexact(2, 2), Err(FreeError::Truncation { .. })));
    }

    #[test]
    fn constructed_coboundary_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = SigmaSystem::new(2).unwrap();
        let theta: SparseVec =
            (0..sys.unknowns()).map(|k| (k, int(rng.gen_range(-3..=3)))).filter(|(_, c)| !c.is_zero()).collect();
        let rhs = sys.delta(&theta);
        let s = sys.solve(&rhs);
        let found = s.theta.expect("feasible");
        assert_eq!(sys.delta(&found), rhs);
    }

    #[test]
    fn reduced_dgla_and_contraction() {
        let g = FreeReduced::new(2, 4).unwrap();
        check_dgla(&g, 4).unwrap();
        let c = g.contraction();
        assert!(c.projector_is_diagonal(&g));
        verify_contraction(&c.to_contraction(&g).unwrap()).unwrap();
        assert_eq!(c.h_dim(), 1 + 2 + 4 + (8 - 2) + (16 - 4) + (32 - 8));
        let psi = FreeDeriv::term(2, 1, &[0, 1, 1]);
        assert_eq!(g.to_element(&g.deriv_to_vec(&psi).unwrap()).1, psi);
    }

    #[test]
    fn one_generator_is_commutative() {
        for len in 0..4 {
            assert!(inner(&TensorPoly::word(1, &vec![0; len]), 5).unwrap().is_zero());
        }
        assert_eq!(FreeReduced::new(1, 3).err(), Some(FreeError::TooFewGenerators(1)));
    }

    #[test]
    fn transfer_reproduces_sigma() {
        use crate::linfty::{Cutoff, DglaPackage, GradedBasis, Transfer};
        let g = FreeReduced::new(2, 4).unwrap();
        let c = g.contraction();
        let u = GradedBasis::from_contraction(&c);
        let (b, br) = (DglaPackage::differential(&g), DglaPackage::bracket(&g));
        let t = Transfer::new(u.clone(), GradedBasis::from_dgla(&g), &c, &b, &br).unwrap();
        let one = u.index_of("1").unwrap();
        for w in u.words(Cutoff::new(4, 4)) {
            let d = t.d(&w).unwrap();
            match w.len() {
                3 if !w.letters().contains(&one) => {
                    let args: Vec<FreeDeriv> =
                        w.letters().iter().map(|&y| g.element(*c.i[y].keys().next().unwrap()).1).collect();
                    let s = sigma_general(&args[0], &args[1], &args[2]).unwrap();
                    assert_eq!(d.get(&one).cloned().unwrap_or_else(Rational::zero), s);
                    assert!(d.keys().all(|&k| k == one));
                }
                4 => assert!(d.is_empty()),
                _ => {}
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn extension_is_lie_morphism(seed in 0u64..1000, g1 in 0i32..2, g2 in 0i32..2, len in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_deriv(&mut rng, 2, g1);
            let chi = random_deriv(&mut rng, 2, g2);
            let x = random_tensor(&mut rng, 2, len);
            let br = d_bracket(&psi, &chi, 8).unwrap();
            let lhs = deriv_extend(&br, &x, 8).unwrap();
            let mut rhs = deriv_extend(&psi, &deriv_extend(&chi, &x, 8).unwrap(), 8).unwrap();
            rhs.add_scaled(&deriv_extend(&chi, &deriv_extend(&psi, &x, 8).unwrap(), 8).unwrap(), &int(-1));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn bracket_jacobi(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_deriv(&mut rng, 2, 0);
            let b = random_deriv(&mut rng, 2, 1);
            let c = random_deriv(&mut rng, 2, -1);
            let mut s = d_bracket(&a, &d_bracket(&b, &c, 8).unwrap(), 8).unwrap();
            s.add_scaled(&d_bracket(&b, &d_bracket(&c, &a, 8).unwrap(), 8).unwrap(), &int(1));
            s.add_scaled(&d_bracket(&c, &d_bracket(&a, &b, 8).unwrap(), 8).unwrap(), &int(1));
            prop_assert!(s.is_zero());
        }

        #[test]
        fn sigma_is_antisymmetric(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_complement(&mut rng, 2, -1);
            let b = random_complement(&mut rng, 2, -1);
            let p = random_complement(&mut rng, 2, 2);
            let s = sigma_general(&a, &b, &p).unwrap();
            prop_assert_eq!(sigma_general(&b, &a, &p).unwrap(), -s.clone());
            prop_assert_eq!(sigma_general(&a, &p, &b).unwrap(), -s.clone());
            prop_assert_eq!(sigma_general(&p, &a, &b).unwrap(), s);
        }
    }
}
