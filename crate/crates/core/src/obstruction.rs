//! The characteristic 3-class of a DGLA with a contraction onto its
//! cohomology H: the section φ₁, the homotopy-derived φ₂, the cochain w₃
//! and its class z₃, the graded Chevalley–Eilenberg differential on
//! cochains of H, and the finite exactness decision δ_H θ = z₃.
//!
//! Degrees are unshifted throughout.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dgla::{bracket_vec, differential_vec, CeDgla, Dgla, DglaContraction, DglaError};
use crate::exactla::{
    add_scaled, format_rational, int, parse_rational, LinAlgError, Rational, SparseMatrix, SparseVec,
};
use crate::liealg::{
    cartan_cocycle, casimir, derivation_with_symmetric_part, from_json, to_json, BilinearForm, CasimirPolynomial,
    DerivationSearch, LieAlgebra, LieError,
};
use crate::polyvec::{CeComplex, PolyError, PolyVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObstructionError {
    #[error("section fails at {0}: value must be a cocycle projecting to its class")]
    NotSection(String),
    #[error("w₃ is not a cocycle on ({0})")]
    NotCocycle(String),
    #[error("φ₂ violates the order-2 equation on ({0})")]
    Phi2(String),
    #[error("θ unknown for ({0}) lies beyond the truncation")]
    ThetaTruncation(String),
    #[error("certificate: {0}")]
    Certificate(String),
    #[error(transparent)]
    Dgla(#[from] DglaError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

fn sign(odd: bool) -> Rational {
    if odd {
        -Rational::one()
    } else {
        Rational::one()
    }
}

fn odd(x: i32) -> bool {
    x.rem_euclid(2) == 1
}

/// Value of a cochain whose coefficients are linear forms in unknowns:
/// H letter → coefficient vector over unknown indices. Concrete values use
/// the single unknown 0.
pub type SymVal = BTreeMap<usize, SparseVec>;

fn sym_add(acc: &mut SymVal, v: &SymVal, c: &Rational) {
    for (k, coeffs) in v {
        let e = acc.entry(*k).or_default();
        add_scaled(e, coeffs, c);
        if e.is_empty() {
            acc.remove(k);
        }
    }
}

fn concrete(v: &SparseVec) -> SymVal {
    v.iter().map(|(k, c)| (*k, [(0usize, c.clone())].into_iter().collect())).collect()
}

fn to_concrete(v: &SymVal) -> SparseVec {
    v.iter().filter_map(|(k, c)| c.get(&0).map(|x| (*k, x.clone()))).collect()
}

/// Graded-antisymmetric sort of cochain arguments: each adjacent swap of
/// a, b contributes −(−1)^{|a||b|}; None when an even letter repeats.
pub fn lambda_canonical(args: &[usize], degree: impl Fn(usize) -> i32) -> Option<(Vec<usize>, Rational)> {
    let mut a = args.to_vec();
    let mut flip = false;
    for i in 1..a.len() {
        let mut j = i;
        while j > 0 && a[j - 1] > a[j] {
            if !odd(degree(a[j - 1]) * degree(a[j])) {
                flip = !flip;
            }
            a.swap(j - 1, j);
            j -= 1;
        }
    }
    if a.windows(2).any(|p| p[0] == p[1] && !odd(degree(p[0]))) {
        return None;
    }
    Some((a, sign(flip)))
}

/// A graded-antisymmetric k-cochain on H with values in H, stored on
/// canonical argument tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedCochain {
    pub arity: usize,
    pub degree: i32,
    pub values: BTreeMap<Vec<usize>, SparseVec>,
}

impl GradedCochain {
    pub fn new(arity: usize, degree: i32) -> Self {
        GradedCochain { arity, degree, values: BTreeMap::new() }
    }

    pub fn eval(&self, args: &[usize], degree: impl Fn(usize) -> i32) -> SparseVec {
        match lambda_canonical(args, degree) {
            None => SparseVec::new(),
            Some((a, s)) => {
                self.values.get(&a).map(|v| v.iter().map(|(k, c)| (*k, c * &s)).collect()).unwrap_or_default()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|v| v.is_empty())
    }
}

/// Canonical k-tuples of letters from `letters` (ascending list) whose
/// weights sum to at most `max_weight`.
pub fn canonical_tuples(
    letters: &[usize],
    k: usize,
    max_weight: u32,
    degree: impl Fn(usize) -> i32 + Copy,
    weight: impl Fn(usize) -> u32 + Copy,
) -> Vec<Vec<usize>> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        letters: &[usize],
        from: usize,
        k: usize,
        budget: u32,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        degree: &dyn Fn(usize) -> i32,
        weight: &dyn Fn(usize) -> u32,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for (pos, &l) in letters.iter().enumerate().skip(from) {
            if weight(l) > budget {
                continue;
            }
            if cur.last() == Some(&l) && !odd(degree(l)) {
                continue;
            }
            cur.push(l);
            rec(letters, pos, k, budget - weight(l), cur, out, degree, weight);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(letters, 0, k, max_weight, &mut Vec::new(), &mut out, &degree, &weight);
    out
}

/// Order-3 obstruction data for a DGLA and a contraction onto H.
pub struct Obstruction<'a> {
    g: &'a dyn Dgla,
    c: &'a DglaContraction,
    phi2_shift: Option<GradedCochain>,
    hb_cache: Mutex<HashMap<(usize, usize), SparseVec>>,
    phi2_cache: Mutex<HashMap<(usize, usize), SparseVec>>,
}

impl<'a> Obstruction<'a> {
    /// Checks that i is a section: b(i y) = 0 and p(i y) = y.
    pub fn new(g: &'a dyn Dgla, c: &'a DglaContraction) -> Result<Self, ObstructionError> {
        for y in 0..c.h_dim() {
            let iy = &c.i[y];
            if !differential_vec(g, iy).is_empty() || c.apply_p(iy) != [(y, Rational::one())].into_iter().collect() {
                return Err(ObstructionError::NotSection(c.h_keys[y].clone()));
            }
        }
        Ok(Obstruction { g, c, phi2_shift: None, hb_cache: Mutex::default(), phi2_cache: Mutex::default() })
    }

    /// Replaces φ₂ by φ₂ + φ₁∘θ for a degree −1 cochain θ; this changes w₃
    /// within its class by a δ_H-coboundary.
    pub fn with_phi2_shift(mut self, theta: GradedCochain) -> Self {
        self.phi2_shift = Some(theta);
        self.phi2_cache = Mutex::default();
        self
    }

    pub fn h_dim(&self) -> usize {
        self.c.h_dim()
    }

    pub fn h_key(&self, y: usize) -> &str {
        &self.c.h_keys[y]
    }

    pub fn h_degree(&self, y: usize) -> i32 {
        self.c.h_degrees[y]
    }

    pub fn h_weight(&self, y: usize) -> u32 {
        self.c.h_weights[y]
    }

    pub fn h_index(&self, key: &str) -> Option<usize> {
        self.c.h_keys.iter().position(|k| k == key)
    }

    pub fn section(&self, y: usize) -> &SparseVec {
        &self.c.i[y]
    }

    /// [y₁, y₂]_H = p[φ₁y₁, φ₁y₂].
    pub fn h_bracket(&self, y1: usize, y2: usize) -> Result<SparseVec, ObstructionError> {
        if let Some(v) = self.hb_cache.lock().expect("cache").get(&(y1, y2)) {
            return Ok(v.clone());
        }
        let v = self.c.apply_p(&bracket_vec(self.g, &self.c.i[y1], &self.c.i[y2])?);
        self.hb_cache.lock().expect("cache").insert((y1, y2), v.clone());
        Ok(v)
    }

    /// φ₂(y₁, y₂) = −h[φ₁y₁, φ₁y₂] (plus φ₁θ when shifted).
    pub fn phi2(&self, y1: usize, y2: usize) -> Result<SparseVec, ObstructionError> {
        if let Some(v) = self.phi2_cache.lock().expect("cache").get(&(y1, y2)) {
            return Ok(v.clone());
        }
        let br = bracket_vec(self.g, &self.c.i[y1], &self.c.i[y2])?;
        let mut v = self.c.apply_h(&br);
        v = v.into_iter().map(|(k, c)| (k, -c)).collect();
        if let Some(theta) = &self.phi2_shift {
            let t = theta.eval(&[y1, y2], |y| self.h_degree(y));
            add_scaled(&mut v, &self.c.apply_i(&t), &Rational::one());
        }
        self.phi2_cache.lock().expect("cache").insert((y1, y2), v.clone());
        Ok(v)
    }

    /// b φ₂(y₁,y₂) + [φ₁y₁, φ₁y₂] − φ₁[y₁,y₂]_H = 0.
    pub fn check_phi2(&self, y1: usize, y2: usize) -> Result<(), ObstructionError> {
        let mut lhs = differential_vec(self.g, &self.phi2(y1, y2)?);
        add_scaled(&mut lhs, &bracket_vec(self.g, &self.c.i[y1], &self.c.i[y2])?, &Rational::one());
        add_scaled(&mut lhs, &self.c.apply_i(&self.h_bracket(y1, y2)?), &-Rational::one());
        if lhs.is_empty() {
            Ok(())
        } else {
            Err(ObstructionError::Phi2(self.args_display(&[y1, y2])))
        }
    }

    fn phi2_first_vec(&self, u: &SparseVec, y: usize) -> Result<SparseVec, ObstructionError> {
        let mut out = SparseVec::new();
        for (k, c) in u {
            add_scaled(&mut out, &self.phi2(*k, y)?, c);
        }
        Ok(out)
    }

    fn bracket_section(&self, y: usize, x: &SparseVec) -> Result<SparseVec, ObstructionError> {
        Ok(bracket_vec(self.g, &self.c.i[y], x)?)
    }

    pub fn args_display(&self, args: &[usize]) -> String {
        args.iter().map(|&y| self.h_key(y)).collect::<Vec<_>>().join(", ")
    }

    /// The six-term cochain w₃(y₁, y₂, y₃) in the DGLA.
    pub fn w3(&self, y1: usize, y2: usize, y3: usize) -> Result<SparseVec, ObstructionError> {
        let (d1, d2, d3) = (self.h_degree(y1), self.h_degree(y2), self.h_degree(y3));
        let mut out = SparseVec::new();
        add_scaled(&mut out, &self.bracket_section(y1, &self.phi2(y2, y3)?)?, &sign(odd(d1)));
        add_scaled(&mut out, &self.bracket_section(y2, &self.phi2(y1, y3)?)?, &-sign(odd(d2 + d2 * d1)));
        add_scaled(&mut out, &self.bracket_section(y3, &self.phi2(y1, y2)?)?, &sign(odd(d3 + d3 * (d1 + d2))));
        add_scaled(&mut out, &self.phi2_first_vec(&self.h_bracket(y1, y2)?, y3)?, &-Rational::one());
        add_scaled(&mut out, &self.phi2_first_vec(&self.h_bracket(y1, y3)?, y2)?, &sign(odd(d3 * d2)));
        add_scaled(&mut out, &self.phi2_first_vec(&self.h_bracket(y2, y3)?, y1)?, &-sign(odd((d2 + d3) * d1)));
        Ok(out)
    }

    /// z₃ = p∘w₃ after checking b∘w₃ = 0.
    pub fn z3(&self, y1: usize, y2: usize, y3: usize) -> Result<SparseVec, ObstructionError> {
        let w = self.w3(y1, y2, y3)?;
        if !differential_vec(self.g, &w).is_empty() {
            return Err(ObstructionError::NotCocycle(self.args_display(&[y1, y2, y3])));
        }
        Ok(self.c.apply_p(&w))
    }

    fn bracket_h_sym(&self, y: usize, v: &SymVal) -> Result<SymVal, ObstructionError> {
        let mut out = SymVal::new();
        for (k, coeffs) in v {
            for (r, c) in self.h_bracket(y, *k)? {
                let e = out.entry(r).or_default();
                add_scaled(e, coeffs, &c);
                if e.is_empty() {
                    out.remove(&r);
                }
            }
        }
        Ok(out)
    }

    /// (δ_H φ)(y₁, …, y_{k+1}) for a k-cochain of degree `phi_degree` given
    /// by `phi` on arbitrary argument order; the global factor
    /// −(−1)^{k(k−1)/2} is omitted (it equals 1 for k = 2 and k = 3).
    pub fn delta_h(
        &self,
        phi: &dyn Fn(&[usize]) -> Result<SymVal, ObstructionError>,
        phi_degree: i32,
        args: &[usize],
    ) -> Result<SymVal, ObstructionError> {
        let deg: Vec<i32> = args.iter().map(|&y| self.h_degree(y)).collect();
        let n = args.len();
        let mut out = SymVal::new();
        for i in 0..n {
            let before: i32 = deg[..i].iter().sum();
            let s = sign(odd(i as i32 + phi_degree * deg[i] + deg[i] * before));
            let rest: Vec<usize> = args.iter().enumerate().filter(|(p, _)| *p != i).map(|(_, &y)| y).collect();
            let val = phi(&rest)?;
            sym_add(&mut out, &self.bracket_h_sym(args[i], &val)?, &s);
        }
        for i in 0..n {
            for j in i + 1..n {
                let before: i32 = deg[..i].iter().sum();
                let between: i32 = deg[i + 1..j].iter().sum();
                let s = sign(odd(i as i32 + j as i32 + (deg[i] + deg[j]) * before + deg[j] * between));
                let br = self.h_bracket(args[i], args[j])?;
                let rest: Vec<usize> =
                    args.iter().enumerate().filter(|(p, _)| *p != i && *p != j).map(|(_, &y)| y).collect();
                for (k, c) in br {
                    let mut a = vec![k];
                    a.extend_from_slice(&rest);
                    sym_add(&mut out, &phi(&a)?, &(&s * c));
                }
            }
        }
        Ok(out)
    }

    /// z₃ as a cochain evaluator on arbitrary argument order.
    pub fn z3_sym(&self, args: &[usize]) -> Result<SymVal, ObstructionError> {
        match lambda_canonical(args, |y| self.h_degree(y)) {
            None => Ok(SymVal::new()),
            Some((a, s)) => {
                let v = self.z3(a[0], a[1], a[2])?;
                Ok(concrete(&v.into_iter().map(|(k, c)| (k, c * &s)).collect()))
            }
        }
    }

    /// H letters of weight at most `w`.
    pub fn letters_up_to(&self, w: u32) -> Vec<usize> {
        (0..self.h_dim()).filter(|&y| self.h_weight(y) <= w).collect()
    }

    pub fn probes(&self, k: usize, max_weight: u32) -> Vec<Vec<usize>> {
        canonical_tuples(&self.letters_up_to(max_weight), k, max_weight, |y| self.h_degree(y), |y| self.h_weight(y))
    }

    /// δ_H z₃ on every canonical quadruple of total weight ≤ `max_weight`.
    pub fn check_z3_cocycle(&self, max_weight: u32) -> Result<Option<Vec<usize>>, ObstructionError> {
        for q in self.probes(4, max_weight) {
            let v = self.delta_h(&|a| self.z3_sym(a), -1, &q)?;
            if !v.is_empty() {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    /// Solves δ_H θ = z₃ over degree −1 cochains θ on all canonical triples
    /// of total weight ≤ `max_weight`. With `weight_shift = Some(s)` the
    /// unknowns θ(a, b) → c are restricted to w(c) = w(a) + w(b) − s, which
    /// is no loss when δ_H preserves that grading and z₃ is homogeneous.
    pub fn c3_vanishes(&self, max_weight: u32, weight_shift: Option<i64>) -> Result<C3Result, ObstructionError> {
        let probes = self.probes(3, max_weight);
        let mut samples = Vec::with_capacity(probes.len());
        for p in &probes {
            samples.push((p.clone(), self.z3(p[0], p[1], p[2])?));
        }
        let mut by_degree: BTreeMap<(i32, u32), Vec<usize>> = BTreeMap::new();
        for y in 0..self.h_dim() {
            by_degree.entry((self.h_degree(y), self.h_weight(y))).or_default().push(y);
        }
        let max_w = self.g.max_weight();
        let unknowns: RefCell<BTreeMap<(Vec<usize>, usize), usize>> = RefCell::new(BTreeMap::new());
        let theta = |args: &[usize]| -> Result<SymVal, ObstructionError> {
            let Some((a, s)) = lambda_canonical(args, |y| self.h_degree(y)) else {
                return Ok(SymVal::new());
            };
            let deg = self.h_degree(a[0]) + self.h_degree(a[1]) - 1;
            let mut out = SymVal::new();
            let targets: Vec<usize> = match weight_shift {
                Some(sh) => {
                    let w = self.h_weight(a[0]) as i64 + self.h_weight(a[1]) as i64 - sh;
                    if w < 0 {
                        return Ok(out);
                    }
                    if w as u32 > max_w {
                        return Err(ObstructionError::ThetaTruncation(self.args_display(&a)));
                    }
                    by_degree.get(&(deg, w as u32)).cloned().unwrap_or_default()
                }
                None => (0..self.h_dim()).filter(|&y| self.h_degree(y) == deg).collect(),
            };
            let mut u = unknowns.borrow_mut();
            for c in targets {
                let n = u.len();
                let idx = *u.entry((a.clone(), c)).or_insert(n);
                out.insert(c, [(idx, s.clone())].into_iter().collect());
            }
            Ok(out)
        };
        let mut rows: Vec<(SparseVec, Rational, usize, usize)> = Vec::new();
        for (pi, (p, z)) in samples.iter().enumerate() {
            let d = self.delta_h(&theta, -1, p)?;
            let keys: BTreeSet<usize> = d.keys().chain(z.keys()).copied().collect();
            for k in keys {
                let row = d.get(&k).cloned().unwrap_or_default();
                let rhs = z.get(&k).cloned().unwrap_or_else(Rational::zero);
                rows.push((row, rhs, pi, k));
            }
        }
        let unknowns = unknowns.into_inner();
        let n = unknowns.len();
        let mut a = SparseMatrix::zeros(rows.len(), n);
        let mut rhs = SparseVec::new();
        for (r, (row, b, _, _)) in rows.iter().enumerate() {
            for (c, x) in row {
                a.set(r, *c, x.clone());
            }
            if !b.is_zero() {
                rhs.insert(r, b.clone());
            }
        }
        let rank = a.rank();
        let mut aug = SparseMatrix::zeros(rows.len(), n + 1);
        for (r, c, x) in a.entries() {
            aug.set(r, c, x.clone());
        }
        for (r, x) in &rhs {
            aug.set(*r, n, x.clone());
        }
        let augmented_rank = aug.rank();
        let names: Vec<(Vec<usize>, usize)> = {
            let mut v = vec![(vec![], 0); n];
            for (k, i) in &unknowns {
                v[*i] = k.clone();
            }
            v
        };
        let witness = match a.solve_sparse(&rhs) {
            Some(x) => {
                let mut theta = GradedCochain::new(2, -1);
                for (i, c) in x {
                    let (args, out) = &names[i];
                    add_scaled(
                        theta.values.entry(args.clone()).or_default(),
                        &[(*out, c)].into_iter().collect(),
                        &Rational::one(),
                    );
                }
                C3Witness::Theta(theta)
            }
            None => {
                let y = left_certificate(&a, &rhs);
                C3Witness::Core(y.into_iter().map(|(r, c)| (rows[r].2, rows[r].3, c)).collect())
            }
        };
        let row_labels = rows.iter().map(|(_, _, p, k)| (*p, *k)).collect();
        Ok(C3Result {
            samples,
            unknowns: n,
            equations: rows.len(),
            rank,
            augmented_rank,
            witness,
            system: a,
            row_labels,
        })
    }
}

/// A vector y with yᵀA = 0 and y·b ≠ 0, for an inconsistent system.
pub(crate) fn left_certificate(a: &SparseMatrix, b: &SparseVec) -> SparseVec {
    if a.ncols() == 0 {
        let (r, c) = b.iter().next().expect("inconsistent system has a nonzero rhs");
        return [(*r, Rational::one() / c)].into_iter().collect();
    }
    for y in a.transpose().nullspace() {
        let dot: Rational = y.iter().filter_map(|(r, c)| b.get(r).map(|x| c * x)).sum();
        if !dot.is_zero() {
            return y.into_iter().map(|(r, c)| (r, c / &dot)).collect();
        }
    }
    unreachable!("an inconsistent system has a separating left null vector")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum C3Witness {
    /// θ with δ_H θ = z₃ on all probes.
    Theta(GradedCochain),
    /// Equation combination (probe index, output letter, coefficient)
    /// whose left side vanishes identically while the right side sums to 1.
    Core(Vec<(usize, usize, Rational)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct C3Result {
    pub samples: Vec<(Vec<usize>, SparseVec)>,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub augmented_rank: usize,
    pub witness: C3Witness,
    /// Coefficient matrix of δ_H θ; rows labelled (probe index, output letter).
    pub system: SparseMatrix,
    pub row_labels: Vec<(usize, usize)>,
}

impl C3Result {
    pub fn vanishes(&self) -> bool {
        matches!(self.witness, C3Witness::Theta(_))
    }

    pub fn verdict(&self) -> &'static str {
        if self.vanishes() {
            "formal-order-3"
        } else {
            "non-formal"
        }
    }
}

/// Does a derivation D₁ with κ-symmetric part 2·id exist (equivalently
/// D₁(q) = 4q)? Infeasible exactly for Cartan-3-regular algebras.
pub fn derivation_scaling_check(l: &LieAlgebra, kappa: &BilinearForm) -> Result<DerivationSearch, ObstructionError> {
    Ok(derivation_with_symmetric_part(l, kappa, &int(2))?)
}

fn power_name(a: usize, suffix: &str) -> String {
    match a {
        0 if suffix.is_empty() => "1".to_string(),
        0 => suffix.to_string(),
        1 => format!("q{suffix}"),
        _ => format!("q^{a}{suffix}"),
    }
}

/// Named representatives q^a and q^a Ω (2a ≤ dmax) of a quadratic algebra.
pub fn quadratic_representatives(
    l: &LieAlgebra,
    kappa: &BilinearForm,
    dmax: usize,
) -> Result<Vec<(String, PolyVector)>, ObstructionError> {
    let q = casimir(l, kappa)?;
    let omega = cartan_cocycle(l, kappa);
    let mut out = Vec::new();
    for a in 0..=dmax / 2 {
        let qa = CasimirPolynomial::monomial(a).embed(&q);
        out.push((power_name(a, ""), qa.clone()));
        if !omega.is_zero() {
            out.push((power_name(a, "Ω"), qa.wedge(&omega)?));
        }
    }
    Ok(out)
}

/// The full CE DGLA at cutoff `dmax` with its contraction; quadratic
/// algebras use q^a and q^a Ω as representatives.
pub fn ce_setup(
    l: &LieAlgebra,
    kappa: Option<&BilinearForm>,
    dmax: usize,
) -> Result<(CeDgla, DglaContraction), ObstructionError> {
    let g = CeDgla::new(CeComplex::new(l.clone(), dmax)?)?;
    let pref = match kappa {
        Some(k) if k.check_quadratic(l).is_ok() => quadratic_representatives(l, k, dmax)?,
        _ => Vec::new(),
    };
    let c = g.contraction(&pref)?;
    Ok((g, c))
}

fn vec_json(v: &SparseVec, key: impl Fn(usize) -> String) -> Value {
    Value::Object(v.iter().map(|(k, c)| (key(*k), Value::String(format_rational(c)))).collect())
}

/// Builds the c₃ certificate for a Lie algebra at polynomial cutoff `dmax`.
/// Probes are all triples of cohomology letters of total polynomial degree
/// ≤ dmax − 2.
pub fn c3_certificate(l: &LieAlgebra, kappa: Option<&BilinearForm>, dmax: usize) -> Result<Value, ObstructionError> {
    let (g, c) = ce_setup(l, kappa, dmax)?;
    let obs = Obstruction::new(&g, &c)?;
    let probe_weight = dmax.saturating_sub(2) as u32;
    let res = obs.c3_vanishes(probe_weight, Some(1))?;
    let key = |y: usize| obs.h_key(y).to_string();
    let samples: Vec<Value> = res
        .samples
        .iter()
        .filter(|(_, z)| !z.is_empty())
        .map(|(p, z)| json!({"args": p.iter().map(|&y| key(y)).collect::<Vec<_>>(), "value": vec_json(z, key)}))
        .collect();
    let witness = match &res.witness {
        C3Witness::Theta(theta) => {
            json!({"theta": theta.values.iter().filter(|(_, v)| !v.is_empty()).map(|(a, v)| json!({
            "args": a.iter().map(|&y| key(y)).collect::<Vec<_>>(),
            "value": vec_json(v, key),
        })).collect::<Vec<_>>()})
        }
        C3Witness::Core(rows) => json!({"core": rows.iter().map(|(p, k, c)| json!({
            "probe": res.samples[*p].0.iter().map(|&y| key(y)).collect::<Vec<_>>(),
            "output": key(*k),
            "coefficient": format_rational(c),
        })).collect::<Vec<_>>()}),
    };
    let scaling = match kappa {
        Some(k) if k.check_quadratic(l).is_ok() => match derivation_scaling_check(l, k)? {
            DerivationSearch::Infeasible { .. } => Value::String("infeasible".into()),
            DerivationSearch::Witness(_) => Value::String("witness".into()),
        },
        _ => Value::Null,
    };
    let algebra: Value = serde_json::from_str(&to_json(l, kappa)).expect("valid json");
    Ok(json!({
        "verdict": res.verdict(),
        "algebra": algebra,
        "dmax": dmax,
        "probe_count": res.samples.len(),
        "z3_samples": samples,
        "system_rank": {
            "unknowns": res.unknowns,
            "equations": res.equations,
            "rank": res.rank,
            "augmented_rank": res.augmented_rank,
        },
        "witness_or_core": witness,
        "derivation_scaling_check": scaling,
    }))
}

/// Re-derives a c₃ certificate from its embedded algebra and cutoff,
/// re-checks the witness or infeasibility core against the recomputed
/// system, and requires the stored certificate to match exactly.
pub fn verify_certificate(cert: &Value) -> Result<String, ObstructionError> {
    let bad = |m: &str| ObstructionError::Certificate(m.to_string());
    let algebra = cert.get("algebra").ok_or_else(|| bad("missing algebra"))?;
    let dmax = cert.get("dmax").and_then(Value::as_u64).ok_or_else(|| bad("missing dmax"))? as usize;
    let (l, kappa) = from_json(&algebra.to_string())?;
    let (g, c) = ce_setup(&l, kappa.as_ref(), dmax)?;
    let obs = Obstruction::new(&g, &c)?;
    let res = obs.c3_vanishes(dmax.saturating_sub(2) as u32, Some(1))?;
    let deg = |y: usize| obs.h_degree(y);
    match (&res.witness, cert.get("witness_or_core")) {
        (C3Witness::Theta(_), Some(w)) if w.get("theta").is_some() => {
            let mut theta = GradedCochain::new(2, -1);
            for e in w["theta"].as_array().ok_or_else(|| bad("theta not a list"))? {
                let args = keys_to_letters(&obs, &e["args"])?;
                let val = value_to_vec(&obs, &e["value"])?;
                let (a, s) = lambda_canonical(&args, deg).ok_or_else(|| bad("theta on vanishing arguments"))?;
                add_scaled(theta.values.entry(a).or_default(), &val, &s);
            }
            for (p, z) in &res.samples {
                let lhs = obs.delta_h(&|a| Ok(concrete(&theta.eval(a, deg))), -1, p)?;
                if to_concrete(&lhs) != *z {
                    return Err(bad(&format!("δ_H θ ≠ z₃ on ({})", obs.args_display(p))));
                }
            }
        }
        (C3Witness::Core(_), Some(w)) if w.get("core").is_some() => {
            // y pairs to 1 with z₃ and annihilates every column of the system.
            let mut y = SparseVec::new();
            for e in w["core"].as_array().ok_or_else(|| bad("core not a list"))? {
                let probe = keys_to_letters(&obs, &e["probe"])?;
                let out = keys_to_letters(&obs, &Value::Array(vec![e["output"].clone()]))?[0];
                let coeff = parse_rational(e["coefficient"].as_str().ok_or_else(|| bad("coefficient"))?)?;
                let p = res
                    .samples
                    .iter()
                    .position(|(q, _)| *q == probe)
                    .ok_or_else(|| bad("core probe outside probe set"))?;
                let r =
                    res.row_labels.iter().position(|&l| l == (p, out)).ok_or_else(|| bad("core row not in system"))?;
                add_scaled(&mut y, &[(r, coeff)].into_iter().collect(), &Rational::one());
            }
            let total: Rational = y
                .iter()
                .map(|(r, c)| {
                    let (p, k) = res.row_labels[*r];
                    res.samples[p].1.get(&k).map_or_else(Rational::zero, |x| c * x)
                })
                .sum();
            if !total.is_one() {
                return Err(bad("core does not pair to 1 with z₃"));
            }
            let mut ya = SparseVec::new();
            for (r, c) in &y {
                add_scaled(&mut ya, res.system.row(*r), c);
            }
            if !ya.is_empty() {
                return Err(bad("core does not annihilate the system"));
            }
        }
        _ => return Err(bad("verdict differs from recomputation")),
    }
    let recomputed = c3_certificate(&l, kappa.as_ref(), dmax)?;
    if &recomputed != cert {
        return Err(bad("certificate differs from recomputation"));
    }
    Ok(res.verdict().to_string())
}

fn keys_to_letters(obs: &Obstruction, v: &Value) -> Result<Vec<usize>, ObstructionError> {
    v.as_array()
        .ok_or_else(|| ObstructionError::Certificate("expected a list of keys".into()))?
        .iter()
        .map(|k| {
            k.as_str()
                .and_then(|s| obs.h_index(s))
                .ok_or_else(|| ObstructionError::Certificate(format!("unknown cohomology key {k}")))
        })
        .collect()
}

fn value_to_vec(obs: &Obstruction, v: &Value) -> Result<SparseVec, ObstructionError> {
    let mut out = SparseVec::new();
    for (k, c) in v.as_object().ok_or_else(|| ObstructionError::Certificate("expected an object".into()))? {
        let y = obs.h_index(k).ok_or_else(|| ObstructionError::Certificate(format!("unknown key {k}")))?;
        let c = parse_rational(c.as_str().ok_or_else(|| ObstructionError::Certificate("expected a string".into()))?)?;
        out.insert(y, c);
    }
    Ok(out)
}
