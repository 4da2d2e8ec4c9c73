//! Graded symmetric coalgebra over a finite graded basis, Taylor maps,
//! coderivations and coalgebra morphisms, and homotopy transfer of L∞
//! structures along a contraction.
//!
//! Degrees here are shifted (the V = G[1] grading) unless a function says
//! otherwise. Words are canonical multisets of letter indices; every
//! operation derives its Koszul sign by explicit transposition counting.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Mutex;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dgla::{Dgla, DglaContraction, DglaError};
use crate::exactla::{add_scaled, format_rational, Rational, SparseMatrix, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinftyError {
    #[error("duplicate basis key {0}")]
    DuplicateKey(String),
    #[error("square-zero condition fails on word {word}")]
    NotSquareZero { word: String },
    #[error("residual of arity {arity} is nonzero on word {word}")]
    Residual { arity: usize, word: String },
    #[error("linear part is not invertible")]
    Singular,
    #[error("series did not terminate within {0} terms")]
    SeriesCap(usize),
    #[error("perturbation must have arity ≥ 2, got a map with arity {0}")]
    NotPerturbation(usize),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Dgla(#[from] DglaError),
}

/// Letters with shifted degrees and nonnegative weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBasis {
    keys: Vec<String>,
    degrees: Vec<i32>,
    weights: Vec<u32>,
}

impl GradedBasis {
    pub fn new(keys: Vec<String>, degrees: Vec<i32>) -> Result<Self, LinftyError> {
        let n = degrees.len();
        Self::with_weights(keys, degrees, vec![0; n])
    }

    pub fn with_weights(keys: Vec<String>, degrees: Vec<i32>, weights: Vec<u32>) -> Result<Self, LinftyError> {
        if keys.len() != degrees.len() || keys.len() != weights.len() {
            return Err(LinftyError::Shape("keys, degrees and weights differ in length".into()));
        }
        let mut seen = HashSet::new();
        for k in &keys {
            if !seen.insert(k) {
                return Err(LinftyError::DuplicateKey(k.clone()));
            }
        }
        Ok(GradedBasis { keys, degrees, weights })
    }

    /// Shifted basis of a DGLA: V-degree = G-degree − 1.
    pub fn from_dgla(g: &dyn Dgla) -> Self {
        let n = g.dim();
        GradedBasis {
            keys: (0..n).map(|i| g.key(i)).collect(),
            degrees: (0..n).map(|i| g.degree(i) - 1).collect(),
            weights: (0..n).map(|i| g.weight(i)).collect(),
        }
    }

    /// Shifted basis of the cohomology side of a contraction.
    pub fn from_contraction(c: &DglaContraction) -> Self {
        GradedBasis {
            keys: c.h_keys.clone(),
            degrees: c.h_degrees.iter().map(|d| d - 1).collect(),
            weights: c.h_weights.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.degrees[i]
    }

    pub fn weight(&self, i: usize) -> u32 {
        self.weights[i]
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.degrees[i].rem_euclid(2) == 1
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// All canonical words with 1..=arity letters and total weight within
    /// the cutoff, in a deterministic order.
    pub fn words(&self, cutoff: Cutoff) -> Vec<Word> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.extend_words(0, 0, cutoff, &mut cur, &mut out);
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }

    fn extend_words(&self, from: usize, weight: u32, cutoff: Cutoff, cur: &mut Vec<usize>, out: &mut Vec<Word>) {
        if !cur.is_empty() {
            out.push(Word(cur.clone()));
        }
        if cur.len() == cutoff.arity {
            return;
        }
        for i in from..self.len() {
            let w = weight + self.weights[i];
            if cutoff.weight.is_some_and(|m| w > m) {
                continue;
            }
            if self.is_odd(i) && cur.last() == Some(&i) {
                continue;
            }
            cur.push(i);
            self.extend_words(i, w, cutoff, cur, out);
            cur.pop();
        }
    }
}

/// Bounds on word length and total letter weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoff {
    pub arity: usize,
    pub weight: Option<u32>,
}

impl Cutoff {
    pub fn arity(arity: usize) -> Self {
        Cutoff { arity, weight: None }
    }

    pub fn new(arity: usize, weight: u32) -> Self {
        Cutoff { arity, weight: Some(weight) }
    }
}

/// Canonical symmetric word: letters sorted ascending, odd letters at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Word(vec![i])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self, basis: &GradedBasis) -> i32 {
        self.0.iter().map(|&i| basis.degree(i)).sum()
    }

    pub fn weight(&self, basis: &GradedBasis) -> u32 {
        self.0.iter().map(|&i| basis.weight(i)).sum()
    }

    pub fn display(&self, basis: &GradedBasis) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0.iter().map(|&i| basis.key(i)).collect::<Vec<_>>().join("•")
    }

    fn sub(&self, mask: u64) -> Word {
        Word(self.0.iter().enumerate().filter(|(p, _)| mask >> p & 1 == 1).map(|(_, &i)| i).collect())
    }
}

pub type WordSum = BTreeMap<Word, Rational>;
pub type TensorSum = BTreeMap<(Word, Word), Rational>;

fn sign(odd: bool) -> Rational {
    if odd {
        -Rational::one()
    } else {
        Rational::one()
    }
}

fn add_word(acc: &mut WordSum, w: Word, c: Rational) {
    if c.is_zero() {
        return;
    }
    match acc.entry(w) {
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

fn add_sums(acc: &mut WordSum, s: &WordSum, c: &Rational) {
    for (w, x) in s {
        add_word(acc, w.clone(), x * c);
    }
}

fn add_tensor(acc: &mut TensorSum, k: (Word, Word), c: Rational) {
    if c.is_zero() {
        return;
    }
    match acc.entry(k) {
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

/// Sorts letters into canonical order; None when an odd letter repeats.
/// The sign is the Koszul sign of the sorting permutation.
pub fn canonicalize(letters: &[usize], basis: &GradedBasis) -> Option<(Word, Rational)> {
    let mut a = letters.to_vec();
    let mut odd = false;
    for i in 1..a.len() {
        let mut j = i;
        while j > 0 && a[j - 1] > a[j] {
            if basis.is_odd(a[j - 1]) && basis.is_odd(a[j]) {
                odd = !odd;
            }
            a.swap(j - 1, j);
            j -= 1;
        }
    }
    if a.windows(2).any(|p| p[0] == p[1] && basis.is_odd(p[0])) {
        return None;
    }
    Some((Word(a), sign(odd)))
}

/// Koszul parity of moving the letters at positions in `mask` to the front.
fn split_parity(w: &Word, mask: u64, basis: &GradedBasis) -> bool {
    let mut odd = false;
    let mut odd_rest = 0u32;
    for (p, &i) in w.0.iter().enumerate() {
        if mask >> p & 1 == 1 {
            if basis.is_odd(i) && odd_rest % 2 == 1 {
                odd = !odd;
            }
        } else if basis.is_odd(i) {
            odd_rest += 1;
        }
    }
    odd
}

/// Koszul parity of listing the letters of `w` in the position order `seq`.
fn permutation_parity(w: &Word, seq: &[usize], basis: &GradedBasis) -> bool {
    let mut odd = false;
    for a in 0..seq.len() {
        for b in a + 1..seq.len() {
            if seq[a] > seq[b] && basis.is_odd(w.0[seq[a]]) && basis.is_odd(w.0[seq[b]]) {
                odd = !odd;
            }
        }
    }
    odd
}

/// Symmetric product u•v of two words.
pub fn word_product(u: &Word, v: &Word, basis: &GradedBasis) -> Option<(Word, Rational)> {
    let mut l = u.0.clone();
    l.extend_from_slice(&v.0);
    canonicalize(&l, basis)
}

/// Symmetric product v₁•…•v_k of vectors, in the given order.
pub fn sym_product(vecs: &[SparseVec], basis: &GradedBasis) -> WordSum {
    let mut acc: WordSum = [(Word::unit(), Rational::one())].into_iter().collect();
    for v in vecs {
        let mut next = WordSum::new();
        for (w, c) in &acc {
            for (i, a) in v {
                let mut l = w.0.clone();
                l.push(*i);
                if let Some((cw, s)) = canonicalize(&l, basis) {
                    add_word(&mut next, cw, c * a * s);
                }
            }
        }
        acc = next;
    }
    acc
}

/// Shuffle comultiplication Δ(w) = Σ_S ε(S) x_S ⊗ x_{S^c}.
pub fn comultiply(w: &Word, basis: &GradedBasis) -> TensorSum {
    let n = w.len();
    let mut out = TensorSum::new();
    for mask in 0..(1u64 << n) {
        let s = sign(split_parity(w, mask, basis));
        add_tensor(&mut out, (w.sub(mask), w.sub(!mask & ((1u64 << n) - 1))), s);
    }
    out
}

/// A multilinear graded-symmetric map evaluated on canonical words.
pub trait Multilinear: Sync {
    fn degree(&self) -> i32;
    /// Inclusive arity bounds outside which the map vanishes.
    fn arity_range(&self) -> (usize, usize);
    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError>;
}

fn in_range(m: &dyn Multilinear, r: usize) -> bool {
    let (lo, hi) = m.arity_range();
    r >= lo.max(1) && r <= hi
}

/// Linear extension of a Taylor map to a sum of words.
pub fn apply_linear(m: &dyn Multilinear, s: &WordSum) -> Result<SparseVec, LinftyError> {
    let mut out = SparseVec::new();
    for (w, c) in s {
        if in_range(m, w.len()) {
            add_scaled(&mut out, &m.eval(w)?, c);
        }
    }
    Ok(out)
}

/// Coderivation extension: Σ_{S≠∅} ε(S) D(x_S) • x_{S^c}.
pub fn coderivation_apply(d: &dyn Multilinear, w: &Word, basis: &GradedBasis) -> Result<WordSum, LinftyError> {
    let n = w.len();
    let full = (1u64 << n) - 1;
    let mut out = WordSum::new();
    for mask in 1..=full {
        if !in_range(d, mask.count_ones() as usize) {
            continue;
        }
        let v = d.eval(&w.sub(mask))?;
        if v.is_empty() {
            continue;
        }
        let eps = sign(split_parity(w, mask, basis));
        let rest = w.sub(full & !mask);
        for (i, c) in &v {
            let mut l = vec![*i];
            l.extend_from_slice(&rest.0);
            if let Some((cw, s)) = canonicalize(&l, basis) {
                add_word(&mut out, cw, c * &eps * s);
            }
        }
    }
    Ok(out)
}

pub fn coderivation_sum(d: &dyn Multilinear, s: &WordSum, basis: &GradedBasis) -> Result<WordSum, LinftyError> {
    let mut out = WordSum::new();
    for (w, c) in s {
        add_sums(&mut out, &coderivation_apply(d, w, basis)?, c);
    }
    Ok(out)
}

/// Unordered set partitions of {0..n}, blocks ordered by their minimum.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    fn rec(k: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(k);
            rec(k + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![k]);
        rec(k + 1, n, blocks, out);
        blocks.pop();
    }
    rec(0, n, &mut blocks, &mut out);
    out
}

/// e^{*φ}(w) = Σ over set partitions ε · φ(B₁)•…•φ(B_k), for φ of degree 0
/// from `src` words to `tgt` letters. With `nonlinear_only`, the all-
/// singleton partition is skipped, giving e^{*φ} − e^{*φ₁}.
fn morphism_apply_inner(
    phi: &dyn Multilinear,
    w: &Word,
    src: &GradedBasis,
    tgt: &GradedBasis,
    nonlinear_only: bool,
) -> Result<WordSum, LinftyError> {
    if w.is_empty() {
        return Ok([(Word::unit(), Rational::one())].into_iter().collect());
    }
    let mut out = WordSum::new();
    let mut memo: HashMap<Word, SparseVec> = HashMap::new();
    'parts: for part in set_partitions(w.len()) {
        if nonlinear_only && part.iter().all(|b| b.len() == 1) {
            continue;
        }
        let mut vals = Vec::with_capacity(part.len());
        for b in &part {
            if !in_range(phi, b.len()) {
                continue 'parts;
            }
            let sub = Word(b.iter().map(|&p| w.0[p]).collect());
            let v = match memo.get(&sub) {
                Some(v) => v.clone(),
                None => {
                    let v = phi.eval(&sub)?;
                    memo.insert(sub, v.clone());
                    v
                }
            };
            if v.is_empty() {
                continue 'parts;
            }
            vals.push(v);
        }
        let seq: Vec<usize> = part.iter().flatten().copied().collect();
        let eps = sign(permutation_parity(w, &seq, src));
        add_sums(&mut out, &sym_product(&vals, tgt), &eps);
    }
    Ok(out)
}

pub fn morphism_apply(
    phi: &dyn Multilinear,
    w: &Word,
    src: &GradedBasis,
    tgt: &GradedBasis,
) -> Result<WordSum, LinftyError> {
    morphism_apply_inner(phi, w, src, tgt, false)
}

pub fn morphism_sum(
    phi: &dyn Multilinear,
    s: &WordSum,
    src: &GradedBasis,
    tgt: &GradedBasis,
) -> Result<WordSum, LinftyError> {
    let mut out = WordSum::new();
    for (w, c) in s {
        add_sums(&mut out, &morphism_apply(phi, w, src, tgt)?, c);
    }
    Ok(out)
}

/// Taylor map stored as a sparse table on canonical words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaylorMap {
    degree: i32,
    table: BTreeMap<Word, SparseVec>,
}

impl TaylorMap {
    pub fn new(degree: i32) -> Self {
        TaylorMap { degree, table: BTreeMap::new() }
    }

    /// Evaluates `m` on every word of the cutoff.
    pub fn tabulate(m: &dyn Multilinear, basis: &GradedBasis, cutoff: Cutoff) -> Result<Self, LinftyError> {
        let mut t = TaylorMap::new(m.degree());
        for w in basis.words(cutoff) {
            if in_range(m, w.len()) {
                t.insert(w.clone(), m.eval(&w)?);
            }
        }
        Ok(t)
    }

    pub fn insert(&mut self, w: Word, v: SparseVec) {
        if v.is_empty() {
            self.table.remove(&w);
        } else {
            self.table.insert(w, v);
        }
    }

    pub fn get(&self, w: &Word) -> Option<&SparseVec> {
        self.table.get(w)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, &SparseVec)> {
        self.table.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    /// True when no entry of arity r is nonzero.
    pub fn vanishes_at_arity(&self, r: usize) -> bool {
        self.table.keys().all(|w| w.len() != r)
    }

    pub fn restrict_arity(&self, r: usize) -> TaylorMap {
        TaylorMap {
            degree: self.degree,
            table: self.table.iter().filter(|(w, _)| w.len() == r).map(|(w, v)| (w.clone(), v.clone())).collect(),
        }
    }

    pub fn to_json(&self, src: &GradedBasis, tgt: &GradedBasis) -> Value {
        let mut by_arity: BTreeMap<usize, serde_json::Map<String, Value>> = BTreeMap::new();
        for (w, v) in &self.table {
            let val: serde_json::Map<String, Value> =
                v.iter().map(|(i, c)| (tgt.key(*i).to_string(), Value::String(format_rational(c)))).collect();
            by_arity.entry(w.len()).or_default().insert(w.display(src), Value::Object(val));
        }
        json!({
            "degree": self.degree,
            "arities": by_arity.into_iter().map(|(r, m)| (r.to_string(), Value::Object(m))).collect::<serde_json::Map<_, _>>(),
        })
    }
}

impl Multilinear for TaylorMap {
    fn degree(&self) -> i32 {
        self.degree
    }

    fn arity_range(&self) -> (usize, usize) {
        let lo = self.table.keys().map(|w| w.len()).min().unwrap_or(1);
        let hi = self.table.keys().map(|w| w.len()).max().unwrap_or(0);
        (lo, hi)
    }

    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        Ok(self.table.get(w).cloned().unwrap_or_default())
    }
}

/// Arity-one map given by its columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnaryMap {
    pub degree: i32,
    pub cols: Vec<SparseVec>,
}

impl Multilinear for UnaryMap {
    fn degree(&self) -> i32 {
        self.degree
    }

    fn arity_range(&self) -> (usize, usize) {
        (1, 1)
    }

    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        Ok(match w.letters() {
            [i] => self.cols[*i].clone(),
            _ => SparseVec::new(),
        })
    }
}

/// Pointwise sum of maps of equal degree.
pub struct SumMap<'a>(pub Vec<&'a dyn Multilinear>);

impl Multilinear for SumMap<'_> {
    fn degree(&self) -> i32 {
        self.0.first().map_or(0, |m| m.degree())
    }

    fn arity_range(&self) -> (usize, usize) {
        let lo = self.0.iter().map(|m| m.arity_range().0).min().unwrap_or(1);
        let hi = self.0.iter().map(|m| m.arity_range().1).max().unwrap_or(0);
        (lo, hi)
    }

    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        let mut out = SparseVec::new();
        for m in &self.0 {
            if in_range(*m, w.len()) {
                add_scaled(&mut out, &m.eval(w)?, &Rational::one());
            }
        }
        Ok(out)
    }
}

/// Parity of the sign relating a k-ary map to its shift by [1], from the
/// shifted degrees of the arguments in order.
pub fn shift_up_parity(v_degrees: &[i32]) -> bool {
    let k = v_degrees.len() as i64;
    let s: i64 = v_degrees.iter().enumerate().map(|(m, &d)| d as i64 * (k - 1 - m as i64)).sum();
    s.rem_euclid(2) == 1
}

/// Parity of the sign relating a k-ary map on V to its shift by [−1], from
/// the unshifted degrees of the arguments in order.
pub fn shift_down_parity(g_degrees: &[i32]) -> bool {
    let k = g_degrees.len() as i64;
    let s: i64 =
        k * (k - 1) / 2 + g_degrees.iter().enumerate().map(|(m, &d)| d as i64 * (k - 1 - m as i64)).sum::<i64>();
    s.rem_euclid(2) == 1
}

/// Table of a multilinear map on ordered argument tuples.
pub type TupleTable = BTreeMap<Vec<usize>, SparseVec>;

/// φ ↦ φ[1] for a table over letters with unshifted degrees `g_degrees`.
pub fn shift_up(t: &TupleTable, g_degrees: &[i32]) -> TupleTable {
    t.iter()
        .map(|(args, v)| {
            let vd: Vec<i32> = args.iter().map(|&i| g_degrees[i] - 1).collect();
            (args.clone(), v.iter().map(|(k, c)| (*k, c * sign(shift_up_parity(&vd)))).collect())
        })
        .collect()
}

/// ψ ↦ ψ[−1] for a table over letters with shifted degrees `v_degrees`.
pub fn shift_down(t: &TupleTable, v_degrees: &[i32]) -> TupleTable {
    t.iter()
        .map(|(args, v)| {
            let gd: Vec<i32> = args.iter().map(|&i| v_degrees[i] + 1).collect();
            (args.clone(), v.iter().map(|(k, c)| (*k, c * sign(shift_down_parity(&gd)))).collect())
        })
        .collect()
}

/// The L∞ package of a DGLA: d₁ = b[1] and d₂ = [ , ][1], i.e.
/// d₂(x, y) = (−1)^{|x|} [x, y] with |x| the shifted degree.
pub struct DglaPackage<'a> {
    g: &'a dyn Dgla,
    basis: GradedBasis,
    unary: bool,
    binary: bool,
}

impl<'a> DglaPackage<'a> {
    pub fn full(g: &'a dyn Dgla) -> Self {
        DglaPackage { g, basis: GradedBasis::from_dgla(g), unary: true, binary: true }
    }

    pub fn differential(g: &'a dyn Dgla) -> Self {
        DglaPackage { g, basis: GradedBasis::from_dgla(g), unary: true, binary: false }
    }

    pub fn bracket(g: &'a dyn Dgla) -> Self {
        DglaPackage { g, basis: GradedBasis::from_dgla(g), unary: false, binary: true }
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }
}

impl Multilinear for DglaPackage<'_> {
    fn degree(&self) -> i32 {
        1
    }

    fn arity_range(&self) -> (usize, usize) {
        (if self.unary { 1 } else { 2 }, if self.binary { 2 } else { 1 })
    }

    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        match w.letters() {
            [i] if self.unary => Ok(self.g.differential(*i)),
            [i, j] if self.binary => {
                let s = sign(shift_up_parity(&[self.basis.degree(*i), self.basis.degree(*j)]));
                Ok(self.g.bracket(*i, *j)?.into_iter().map(|(k, c)| (k, c * &s)).collect())
            }
            _ => Ok(SparseVec::new()),
        }
    }
}

/// Nijenhuis–Richardson bracket [d₁, d₂] = d₁∘d̄₂ − (−1)^{|d₁||d₂|} d₂∘d̄₁,
/// tabulated on the words of the cutoff.
pub fn nr_bracket(
    d1: &dyn Multilinear,
    d2: &dyn Multilinear,
    basis: &GradedBasis,
    cutoff: Cutoff,
) -> Result<TaylorMap, LinftyError> {
    let s = sign((d1.degree() * d2.degree()).rem_euclid(2) == 1);
    let mut t = TaylorMap::new(d1.degree() + d2.degree());
    for w in basis.words(cutoff) {
        let mut v = apply_linear(d1, &coderivation_apply(d2, &w, basis)?)?;
        add_scaled(&mut v, &apply_linear(d2, &coderivation_apply(d1, &w, basis)?)?, &-s.clone());
        t.insert(w, v);
    }
    Ok(t)
}

/// Checks D̄² = 0 on every word of the cutoff.
pub fn check_linfty(d: &dyn Multilinear, basis: &GradedBasis, cutoff: Cutoff) -> Result<(), LinftyError> {
    for w in basis.words(cutoff) {
        let dd = coderivation_sum(d, &coderivation_apply(d, &w, basis)?, basis)?;
        if !dd.is_empty() {
            return Err(LinftyError::NotSquareZero { word: w.display(basis) });
        }
    }
    Ok(())
}

/// Arity-|w| residual P(φ)(w) = D(e^{*φ}(w)) − φ(d̄(w)) of a degree-0
/// Taylor map φ from (U, d) to (V, D).
pub fn residual_on(
    phi: &dyn Multilinear,
    big_d: &dyn Multilinear,
    small_d: &dyn Multilinear,
    w: &Word,
    u: &GradedBasis,
    v: &GradedBasis,
) -> Result<SparseVec, LinftyError> {
    let mut out = apply_linear(big_d, &morphism_apply(phi, w, u, v)?)?;
    add_scaled(&mut out, &apply_linear(phi, &coderivation_apply(small_d, w, u)?)?, &-Rational::one());
    Ok(out)
}

/// Checks that all residuals vanish on the words of the cutoff.
pub fn check_residuals(
    phi: &dyn Multilinear,
    big_d: &dyn Multilinear,
    small_d: &dyn Multilinear,
    u: &GradedBasis,
    v: &GradedBasis,
    cutoff: Cutoff,
) -> Result<(), LinftyError> {
    for w in u.words(cutoff) {
        if !residual_on(phi, big_d, small_d, &w, u, v)?.is_empty() {
            return Err(LinftyError::Residual { arity: w.len(), word: w.display(u) });
        }
    }
    Ok(())
}

/// Taylor coefficients of the inverse of the coalgebra morphism e^{*φ}
/// (U → V, degree 0), tabulated on the V-words of the cutoff. With
/// ψ₁ = φ₁⁻¹ and A = e^{*ψ₁}∘(e^{*φ} − e^{*φ₁}), the inverse is
/// (id + A)⁻¹∘e^{*ψ₁}; A shortens words so the series is finite.
pub fn invert_morphism(
    phi: &dyn Multilinear,
    u: &GradedBasis,
    v: &GradedBasis,
    cutoff: Cutoff,
) -> Result<TaylorMap, LinftyError> {
    if u.len() != v.len() {
        return Err(LinftyError::Singular);
    }
    let cols: Vec<SparseVec> = (0..u.len()).map(|j| phi.eval(&Word::letter(j))).collect::<Result<_, _>>()?;
    let inv = SparseMatrix::from_columns(v.len(), &cols).inverse().map_err(|_| LinftyError::Singular)?;
    let psi1 = UnaryMap { degree: 0, cols: inv.columns() };
    let mut t = TaylorMap::new(0);
    for w in v.words(cutoff) {
        let mut term = morphism_apply(&psi1, &w, v, u)?;
        let mut total = term.clone();
        let mut steps = 0;
        while !term.is_empty() {
            steps += 1;
            if steps > w.len() + 1 {
                return Err(LinftyError::SeriesCap(w.len() + 1));
            }
            let mut next = WordSum::new();
            for (x, c) in &term {
                let a = morphism_sum(&psi1, &morphism_apply_inner(phi, x, u, v, true)?, v, u)?;
                add_sums(&mut next, &a, &-c.clone());
            }
            add_sums(&mut total, &next, &Rational::one());
            term = next;
        }
        let val: SparseVec = total.into_iter().filter(|(x, _)| x.len() == 1).map(|(x, c)| (x.0[0], c)).collect();
        t.insert(w, val);
    }
    Ok(t)
}

/// Composite e^{*ψ}∘e^{*φ} on a word of U.
pub fn compose_morphisms(
    psi: &dyn Multilinear,
    phi: &dyn Multilinear,
    w: &Word,
    u: &GradedBasis,
    v: &GradedBasis,
    x: &GradedBasis,
) -> Result<WordSum, LinftyError> {
    morphism_sum(psi, &morphism_apply(phi, w, u, v)?, v, x)
}

/// Coassociativity of Δ on w.
pub fn check_coassociative(w: &Word, basis: &GradedBasis) -> bool {
    let mut left: BTreeMap<(Word, Word, Word), Rational> = BTreeMap::new();
    let mut right = left.clone();
    for ((a, b), c) in comultiply(w, basis) {
        for ((a1, a2), c1) in comultiply(&a, basis) {
            *left.entry((a1, a2, b.clone())).or_insert_with(Rational::zero) += &c * c1;
        }
        for ((b1, b2), c2) in comultiply(&b, basis) {
            *right.entry((a.clone(), b1, b2)).or_insert_with(Rational::zero) += &c * c2;
        }
    }
    left.retain(|_, c| !c.is_zero());
    right.retain(|_, c| !c.is_zero());
    left == right
}

/// τ∘Δ = Δ with τ(a⊗b) = (−1)^{|a||b|} b⊗a.
pub fn check_cocommutative(w: &Word, basis: &GradedBasis) -> bool {
    let d = comultiply(w, basis);
    let mut t = TensorSum::new();
    for ((a, b), c) in &d {
        let s = sign((a.degree(basis) * b.degree(basis)).rem_euclid(2) == 1);
        add_tensor(&mut t, (b.clone(), a.clone()), c * s);
    }
    t == d
}

/// Counit law: the (w ⊗ 1) and (1 ⊗ w) components of Δ(w) have coefficient 1.
pub fn check_counit(w: &Word, basis: &GradedBasis) -> bool {
    let d = comultiply(w, basis);
    let one = Rational::one();
    d.get(&(w.clone(), Word::unit())) == Some(&one) && d.get(&(Word::unit(), w.clone())) == Some(&one)
}

/// Δ∘D̄ = (D̄⊗id + id⊗D̄)∘Δ on w.
pub fn check_coderivation_law(d: &dyn Multilinear, w: &Word, basis: &GradedBasis) -> Result<bool, LinftyError> {
    let mut lhs = TensorSum::new();
    for (x, c) in coderivation_apply(d, w, basis)? {
        for (k, c2) in comultiply(&x, basis) {
            add_tensor(&mut lhs, k, &c * c2);
        }
    }
    let mut rhs = TensorSum::new();
    for ((a, b), c) in comultiply(w, basis) {
        for (x, c1) in coderivation_apply(d, &a, basis)? {
            add_tensor(&mut rhs, (x, b.clone()), &c * c1);
        }
        let s = sign((d.degree() * a.degree(basis)).rem_euclid(2) == 1);
        for (x, c2) in coderivation_apply(d, &b, basis)? {
            add_tensor(&mut rhs, (a.clone(), x), &c * c2 * &s);
        }
    }
    Ok(lhs == rhs)
}

/// Δ∘Φ = (Φ⊗Φ)∘Δ on w.
pub fn check_morphism_law(
    phi: &dyn Multilinear,
    w: &Word,
    u: &GradedBasis,
    v: &GradedBasis,
) -> Result<bool, LinftyError> {
    let mut lhs = TensorSum::new();
    for (x, c) in morphism_apply(phi, w, u, v)? {
        for (k, c2) in comultiply(&x, v) {
            add_tensor(&mut lhs, k, &c * c2);
        }
    }
    let mut rhs = TensorSum::new();
    for ((a, b), c) in comultiply(w, u) {
        let fa = morphism_apply(phi, &a, u, v)?;
        let fb = morphism_apply(phi, &b, u, v)?;
        for (x, c1) in &fa {
            for (y, c2) in &fb {
                add_tensor(&mut rhs, (x.clone(), y.clone()), &c * c1 * c2);
            }
        }
    }
    Ok(lhs == rhs)
}

/// How β acts on words of V.
#[derive(Clone, Debug)]
enum BetaMode {
    /// P is diagonal: letter j is acyclic iff flagged.
    Diagonal(Vec<bool>),
    /// General idempotent P given by columns; β = g(P̄) with g(0) = 0 and
    /// g(l) = 1/l on the eigenvalues 0..n of P̄ on n-letter words.
    Interpolate(UnaryMap),
}

/// Polynomial coefficients (ascending) of g_n with g(0) = 0, g(l) = 1/l
/// for l = 1..n.
fn beta_polynomial(n: usize) -> Vec<Rational> {
    let mut g = vec![Rational::zero(); n + 1];
    for l in 1..=n {
        let mut basis_poly = vec![Rational::one()];
        let mut denom = Rational::one();
        for m in 0..=n {
            if m == l {
                continue;
            }
            let mut next = vec![Rational::zero(); basis_poly.len() + 1];
            for (k, c) in basis_poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * Rational::from_integer((m as i64).into());
            }
            basis_poly = next;
            denom *= Rational::from_integer((l as i64 - m as i64).into());
        }
        let scale = Rational::one() / (Rational::from_integer((l as i64).into()) * denom);
        for (k, c) in basis_poly.iter().enumerate() {
            g[k] += c * &scale;
        }
    }
    g
}

/// Homotopy transfer of the L∞ structure b[1] + D′ on V along a
/// contraction onto U. Values are computed lazily per word and cached.
pub struct Transfer<'a> {
    u: GradedBasis,
    v: GradedBasis,
    c: &'a DglaContraction,
    b: &'a dyn Multilinear,
    dprime: &'a dyn Multilinear,
    i_map: UnaryMap,
    p_map: UnaryMap,
    h_map: UnaryMap,
    beta: BetaMode,
    x_cache: Mutex<HashMap<Word, WordSum>>,
}

impl<'a> Transfer<'a> {
    pub fn new(
        u: GradedBasis,
        v: GradedBasis,
        c: &'a DglaContraction,
        b: &'a dyn Multilinear,
        dprime: &'a dyn Multilinear,
    ) -> Result<Self, LinftyError> {
        if c.i.len() != u.len() || c.p.len() != v.len() || c.h.len() != v.len() {
            return Err(LinftyError::Shape("contraction does not match the bases".into()));
        }
        let lo = dprime.arity_range().0;
        if lo < 2 && dprime.arity_range().1 >= lo.max(1) {
            return Err(LinftyError::NotPerturbation(lo));
        }
        let h_map = UnaryMap { degree: -1, cols: c.h.clone() };
        let mut proj = Vec::with_capacity(v.len());
        for j in 0..v.len() {
            let w = Word::letter(j);
            let mut pj = apply_linear(b, &coderivation_apply(&h_map, &w, &v)?)?;
            add_scaled(&mut pj, &apply_linear(&h_map, &coderivation_apply(b, &w, &v)?)?, &Rational::one());
            proj.push(pj);
        }
        let diagonal = proj
            .iter()
            .enumerate()
            .all(|(j, pj)| pj.is_empty() || (pj.len() == 1 && pj.get(&j).is_some_and(|x| x.is_one())));
        let beta = if diagonal {
            BetaMode::Diagonal(proj.iter().map(|pj| !pj.is_empty()).collect())
        } else {
            BetaMode::Interpolate(UnaryMap { degree: 0, cols: proj })
        };
        Ok(Transfer {
            i_map: UnaryMap { degree: 0, cols: c.i.clone() },
            p_map: UnaryMap { degree: 0, cols: c.p.clone() },
            h_map,
            u,
            v,
            c,
            b,
            dprime,
            beta,
            x_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn u_basis(&self) -> &GradedBasis {
        &self.u
    }

    pub fn v_basis(&self) -> &GradedBasis {
        &self.v
    }

    pub fn contraction(&self) -> &DglaContraction {
        self.c
    }

    /// True when β is computed by letter counting.
    pub fn beta_is_diagonal(&self) -> bool {
        matches!(self.beta, BetaMode::Diagonal(_))
    }

    /// β = f(P̄) with f(l) = 1/l, f(0) = 0.
    pub fn beta(&self, s: &WordSum) -> Result<WordSum, LinftyError> {
        match &self.beta {
            BetaMode::Diagonal(acyclic) => {
                let mut out = WordSum::new();
                for (w, c) in s {
                    let l = w.letters().iter().filter(|&&i| acyclic[i]).count();
                    if l > 0 {
                        add_word(&mut out, w.clone(), c / Rational::from_integer((l as i64).into()));
                    }
                }
                Ok(out)
            }
            BetaMode::Interpolate(proj) => {
                let mut by_len: BTreeMap<usize, WordSum> = BTreeMap::new();
                for (w, c) in s {
                    add_word(by_len.entry(w.len()).or_default(), w.clone(), c.clone());
                }
                let mut out = WordSum::new();
                for (n, part) in by_len {
                    let g = beta_polynomial(n);
                    let mut acc = WordSum::new();
                    for k in (0..g.len()).rev() {
                        acc = coderivation_sum(proj, &acc, &self.v)?;
                        add_sums(&mut acc, &part, &g[k]);
                    }
                    add_sums(&mut out, &acc, &Rational::one());
                }
                Ok(out)
            }
        }
    }

    /// η = h̄∘β.
    pub fn eta(&self, s: &WordSum) -> Result<WordSum, LinftyError> {
        coderivation_sum(&self.h_map, &self.beta(s)?, &self.v)
    }

    fn e_i(&self, w: &Word) -> Result<WordSum, LinftyError> {
        morphism_apply(&self.i_map, w, &self.u, &self.v)
    }

    /// X(w) = Σ_r (−η D̄′)^r e^{*i}(w).
    pub fn x(&self, w: &Word) -> Result<WordSum, LinftyError> {
        if let Some(x) = self.x_cache.lock().expect("cache poisoned").get(w) {
            return Ok(x.clone());
        }
        let mut term = self.e_i(w)?;
        let mut total = term.clone();
        let cap = w.len() + 1;
        let mut steps = 0;
        while !term.is_empty() {
            steps += 1;
            if steps > cap {
                return Err(LinftyError::SeriesCap(cap));
            }
            let next = self.eta(&coderivation_sum(self.dprime, &term, &self.v)?)?;
            term = next.into_iter().map(|(k, c)| (k, -c)).collect();
            add_sums(&mut total, &term, &Rational::one());
        }
        self.x_cache.lock().expect("cache poisoned").insert(w.clone(), total.clone());
        Ok(total)
    }

    /// Σ_r (−D̄′η)^r applied to a sum of V-words.
    fn resolvent_right(&self, s: WordSum) -> Result<WordSum, LinftyError> {
        let cap = s.keys().map(|w| w.len()).max().unwrap_or(0) + 1;
        let mut term = s;
        let mut total = term.clone();
        let mut steps = 0;
        while !term.is_empty() {
            steps += 1;
            if steps > cap {
                return Err(LinftyError::SeriesCap(cap));
            }
            let next = coderivation_sum(self.dprime, &self.eta(&term)?, &self.v)?;
            term = next.into_iter().map(|(k, c)| (k, -c)).collect();
            add_sums(&mut total, &term, &Rational::one());
        }
        Ok(total)
    }

    fn linear_part(s: &WordSum) -> SparseVec {
        s.iter().filter(|(w, _)| w.len() == 1).map(|(w, c)| (w.0[0], c.clone())).collect()
    }

    /// Taylor coefficient of φ on a U-word.
    pub fn phi(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        Ok(Self::linear_part(&self.x(w)?))
    }

    /// Transferred structure on a U-word: p∘b∘i on letters plus
    /// p∘pr∘(id + D̄′η)⁻¹∘D̄′∘e^{*i}.
    pub fn d(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        let mut out = SparseVec::new();
        if w.len() == 1 {
            let bi = apply_linear(self.b, &self.e_i(w)?)?;
            out = apply_linear(&self.p_map, &bi.into_iter().map(|(k, c)| (Word::letter(k), c)).collect())?;
        }
        let z = self.resolvent_right(coderivation_sum(self.dprime, &self.e_i(w)?, &self.v)?)?;
        let lin = Self::linear_part(&z);
        let pz = apply_linear(&self.p_map, &lin.into_iter().map(|(k, c)| (Word::letter(k), c)).collect())?;
        add_scaled(&mut out, &pz, &Rational::one());
        Ok(out)
    }

    /// Taylor coefficient of ψ on a V-word: p∘pr∘(id + D̄′η)⁻¹.
    pub fn psi(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        let z = self.resolvent_right([(w.clone(), Rational::one())].into_iter().collect())?;
        let lin = Self::linear_part(&z);
        apply_linear(&self.p_map, &lin.into_iter().map(|(k, c)| (Word::letter(k), c)).collect())
    }

    pub fn d_map(&self) -> TransferPart<'_, 'a> {
        TransferPart { t: self, which: Part::D }
    }

    pub fn phi_map(&self) -> TransferPart<'_, 'a> {
        TransferPart { t: self, which: Part::Phi }
    }

    pub fn psi_map(&self) -> TransferPart<'_, 'a> {
        TransferPart { t: self, which: Part::Psi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    D,
    Phi,
    Psi,
}

/// One of the transferred Taylor maps, viewed as a [`Multilinear`].
pub struct TransferPart<'t, 'a> {
    t: &'t Transfer<'a>,
    which: Part,
}

impl Multilinear for TransferPart<'_, '_> {
    fn degree(&self) -> i32 {
        match self.which {
            Part::D => 1,
            Part::Phi | Part::Psi => 0,
        }
    }

    fn arity_range(&self) -> (usize, usize) {
        (1, usize::MAX)
    }

    fn eval(&self, w: &Word) -> Result<SparseVec, LinftyError> {
        match self.which {
            Part::D => self.t.d(w),
            Part::Phi => self.t.phi(w),
            Part::Psi => self.t.psi(w),
        }
    }
}

/// Transferred structure (d, φ, ψ) tabulated on the cutoff.
#[derive(Clone, Debug)]
pub struct TransferTables {
    pub d: TaylorMap,
    pub phi: TaylorMap,
    pub psi: TaylorMap,
}

/// Transfers b[1] + D′ along the contraction and tabulates d and φ on
/// U-words and ψ on V-words of the cutoff.
pub fn linfty_transfer(
    c: &DglaContraction,
    u: &GradedBasis,
    v: &GradedBasis,
    b: &dyn Multilinear,
    dprime: &dyn Multilinear,
    cutoff: Cutoff,
) -> Result<TransferTables, LinftyError> {
    let t = Transfer::new(u.clone(), v.clone(), c, b, dprime)?;
    Ok(TransferTables {
        d: TaylorMap::tabulate(&t.d_map(), u, cutoff)?,
        phi: TaylorMap::tabulate(&t.phi_map(), u, cutoff)?,
        psi: TaylorMap::tabulate(&t.psi_map(), v, cutoff)?,
    })
}
