//! Truncated differential graded Lie algebras over a finite basis, together
//! with a contraction onto a cohomology basis.
//!
//! Every basis letter carries a weight with w(b x) = w(x) and
//! w([x, y]) ≤ w(x) + w(y). A computation that starts from words of total
//! weight at most the truncation therefore never leaves the basis; a bracket
//! that would is reported as [`DglaError::Truncation`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::contraction::{Contraction, ContractionError, FiniteComplex, GradedMap, GradedSpace};
use crate::exactla::{add_scaled, Rational, SparseMatrix, SparseVec};
use crate::liealg::{cartan_cocycle, casimir, euler_field, BilinearForm, CasimirPolynomial, LieAlgebra, LieError};
use crate::polyvec::{Bidegree, CeComplex, Monomial, PolyError, PolyVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DglaError {
    #[error("bracket leaves the truncation (weight {weight} > {max})")]
    Truncation { weight: u32, max: u32 },
    #[error("bracket is not closed on the chosen subspace: {0}")]
    NotClosed(String),
    #[error("{0}")]
    Invariant(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

/// A DGLA on a finite basis; degrees are unshifted.
pub trait Dgla: Sync {
    fn dim(&self) -> usize;
    fn key(&self, i: usize) -> String;
    fn degree(&self, i: usize) -> i32;
    fn weight(&self, i: usize) -> u32;
    fn max_weight(&self) -> u32;
    fn differential(&self, i: usize) -> SparseVec;
    fn bracket(&self, i: usize, j: usize) -> Result<SparseVec, DglaError>;
}

pub fn differential_vec(g: &dyn Dgla, x: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for (i, c) in x {
        add_scaled(&mut out, &g.differential(*i), c);
    }
    out
}

pub fn bracket_vec(g: &dyn Dgla, x: &SparseVec, y: &SparseVec) -> Result<SparseVec, DglaError> {
    let mut out = SparseVec::new();
    for (i, a) in x {
        for (j, b) in y {
            add_scaled(&mut out, &g.bracket(*i, *j)?, &(a * b));
        }
    }
    Ok(out)
}

/// Degree of a homogeneous vector (None for zero or mixed vectors).
pub fn vec_degree(g: &dyn Dgla, x: &SparseVec) -> Option<i32> {
    let mut it = x.keys().map(|&i| g.degree(i));
    let d = it.next()?;
    it.all(|e| e == d).then_some(d)
}

fn sign(odd: bool) -> Rational {
    if odd {
        -Rational::one()
    } else {
        Rational::one()
    }
}

/// Checks b² = 0, graded antisymmetry, the derivation rule and graded
/// Jacobi on all basis pairs/triples with total weight ≤ `max_weight`.
pub fn check_dgla(g: &dyn Dgla, max_weight: u32) -> Result<(), DglaError> {
    let n = g.dim();
    for i in 0..n {
        if !differential_vec(g, &g.differential(i)).is_empty() {
            return Err(DglaError::Invariant(format!("b² ≠ 0 on {}", g.key(i))));
        }
    }
    let unit = |i: usize| -> SparseVec { [(i, Rational::one())].into_iter().collect() };
    for i in 0..n {
        for j in 0..n {
            if g.weight(i) + g.weight(j) > max_weight {
                continue;
            }
            let (di, dj) = (g.degree(i), g.degree(j));
            let xy = g.bracket(i, j)?;
            let mut yx = g.bracket(j, i)?;
            yx = yx.into_iter().map(|(k, c)| (k, c * sign((di * dj) % 2 != 0))).collect();
            let mut sum = xy.clone();
            add_scaled(&mut sum, &yx, &Rational::one());
            if !sum.is_empty() {
                return Err(DglaError::Invariant(format!("antisymmetry fails on ({}, {})", g.key(i), g.key(j))));
            }
            let lhs = differential_vec(g, &xy);
            let mut rhs = bracket_vec(g, &g.differential(i), &unit(j))?;
            add_scaled(&mut rhs, &bracket_vec(g, &unit(i), &g.differential(j))?, &sign(di % 2 != 0));
            if lhs != rhs {
                return Err(DglaError::Invariant(format!("b is not a derivation on ({}, {})", g.key(i), g.key(j))));
            }
            for k in 0..n {
                if g.weight(i) + g.weight(j) + g.weight(k) > max_weight {
                    continue;
                }
                // [x,[y,z]] = [[x,y],z] + (−1)^{|x||y|}[y,[x,z]]
                let lhs = bracket_vec(g, &unit(i), &g.bracket(j, k)?)?;
                let mut rhs = bracket_vec(g, &xy, &unit(k))?;
                add_scaled(&mut rhs, &bracket_vec(g, &unit(j), &g.bracket(i, k)?)?, &sign((di * dj) % 2 != 0));
                if lhs != rhs {
                    return Err(DglaError::Invariant(format!(
                        "Jacobi fails on ({}, {}, {})",
                        g.key(i),
                        g.key(j),
                        g.key(k)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Contraction of a truncated DGLA onto a cohomology basis H (zero
/// differential): i per H letter, p and h per G letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DglaContraction {
    pub h_keys: Vec<String>,
    pub h_degrees: Vec<i32>,
    pub h_weights: Vec<u32>,
    pub i: Vec<SparseVec>,
    pub p: Vec<SparseVec>,
    pub h: Vec<SparseVec>,
}

impl DglaContraction {
    pub fn h_dim(&self) -> usize {
        self.h_keys.len()
    }

    pub fn apply_i(&self, y: &SparseVec) -> SparseVec {
        apply_cols(&self.i, y)
    }

    pub fn apply_p(&self, x: &SparseVec) -> SparseVec {
        apply_cols(&self.p, x)
    }

    pub fn apply_h(&self, x: &SparseVec) -> SparseVec {
        apply_cols(&self.h, x)
    }

    /// P = b h + h b = id − i p, per letter.
    pub fn projector(&self, g: &dyn Dgla, j: usize) -> SparseVec {
        let mut out = differential_vec(g, &self.h[j]);
        add_scaled(&mut out, &self.apply_h(&g.differential(j)), &Rational::one());
        out
    }

    /// True when P maps every letter to 0 or to itself.
    pub fn projector_is_diagonal(&self, g: &dyn Dgla) -> bool {
        (0..g.dim()).all(|j| {
            let pj = self.projector(g, j);
            pj.is_empty() || (pj.len() == 1 && pj.get(&j).is_some_and(|c| c.is_one()))
        })
    }

    /// Packs the maps into a chain-level contraction graded by G-degree.
    pub fn to_contraction(&self, g: &dyn Dgla) -> Result<Contraction, DglaError> {
        let (vs, vpos) = graded_space(g.dim(), |j| g.degree(j), |j| g.key(j), |j| g.weight(j));
        let (us, upos) =
            graded_space(self.h_dim(), |j| self.h_degrees[j], |j| self.h_keys[j].clone(), |j| self.h_weights[j]);
        let block_map = |src_n: usize,
                         src_pos: &[(i32, usize)],
                         tgt: &GradedSpace,
                         tgt_pos: &[(i32, usize)],
                         shift: i32,
                         f: &dyn Fn(usize) -> SparseVec|
         -> Result<BTreeMap<i32, SparseMatrix>, DglaError> {
            let mut blocks: BTreeMap<i32, SparseMatrix> = BTreeMap::new();
            for j in 0..src_n {
                let (k, c) = src_pos[j];
                let tk = k + shift;
                let src_dim = src_pos.iter().filter(|(d, _)| *d == k).count();
                let blk = blocks.entry(k).or_insert_with(|| SparseMatrix::zeros(tgt.dim(tk), src_dim));
                for (r, x) in f(j) {
                    let (rk, rr) = tgt_pos[r];
                    if rk != tk {
                        return Err(DglaError::Invariant(format!("map has wrong degree at letter {j}")));
                    }
                    blk.set(rr, c, x);
                }
            }
            Ok(blocks)
        };
        let b = block_map(g.dim(), &vpos, &vs, &vpos, 1, &|j| g.differential(j))?;
        let i = block_map(self.h_dim(), &upos, &vs, &vpos, 0, &|j| self.i[j].clone())?;
        let p = block_map(g.dim(), &vpos, &us, &upos, 0, &|j| self.p[j].clone())?;
        let h = block_map(g.dim(), &vpos, &vs, &vpos, -1, &|j| self.h[j].clone())?;
        let v = FiniteComplex::new(vs.clone(), GradedMap::from_blocks(&vs, &vs, 1, b)?)?;
        let u = FiniteComplex::trivial(us.clone());
        Ok(Contraction::new(
            u,
            v,
            GradedMap::from_blocks(&us, &vs, 0, i)?,
            GradedMap::from_blocks(&vs, &us, 0, p)?,
            GradedMap::from_blocks(&vs, &vs, -1, h)?,
        )?)
    }
}

fn apply_cols(cols: &[SparseVec], x: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for (j, c) in x {
        add_scaled(&mut out, &cols[*j], c);
    }
    out
}

/// Graded space from per-letter degrees; returns (degree, position) per letter.
fn graded_space(
    n: usize,
    degree: impl Fn(usize) -> i32,
    key: impl Fn(usize) -> String,
    weight: impl Fn(usize) -> u32,
) -> (GradedSpace, Vec<(i32, usize)>) {
    let mut by_deg: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for j in 0..n {
        by_deg.entry(degree(j)).or_default().push(j);
    }
    let mut pos = vec![(0, 0); n];
    let mut space = GradedSpace::new();
    for (k, letters) in &by_deg {
        for (c, &j) in letters.iter().enumerate() {
            pos[j] = (*k, c);
        }
        space = space.with_block(
            *k,
            letters.iter().map(|&j| key(j)).collect(),
            Some(letters.iter().map(|&j| weight(j)).collect()),
        );
    }
    (space, pos)
}

/// Cache for lazily computed basis brackets.
#[derive(Default, Debug)]
pub(crate) struct BracketCache(Mutex<HashMap<(usize, usize), Result<SparseVec, DglaError>>>);

impl BracketCache {
    pub(crate) fn get_or(
        &self,
        key: (usize, usize),
        f: impl FnOnce() -> Result<SparseVec, DglaError>,
    ) -> Result<SparseVec, DglaError> {
        if let Some(v) = self.0.lock().expect("cache poisoned").get(&key) {
            return v.clone();
        }
        let v = f();
        self.0.lock().expect("cache poisoned").insert(key, v.clone());
        v
    }
}

/// The full CE complex ChE(g, Sym g)[1] truncated at polynomial degree
/// `dmax`; the letter of a monomial of bidegree (k, m) has degree k − 1 and
/// weight m.
#[derive(Debug)]
pub struct CeDgla {
    cx: CeComplex,
    letters: Vec<(Bidegree, Monomial)>,
    index: HashMap<Monomial, usize>,
    cache: BracketCache,
}

impl CeDgla {
    pub fn new(cx: CeComplex) -> Result<Self, DglaError> {
        let mut letters = Vec::new();
        for m in 0..=cx.dmax() {
            for k in 0..=cx.dim() {
                let b = Bidegree::new(k, m);
                for mono in cx.basis(b)? {
                    letters.push((b, mono));
                }
            }
        }
        let index = letters.iter().enumerate().map(|(i, (_, m))| (m.clone(), i)).collect();
        Ok(CeDgla { cx, letters, index, cache: BracketCache::default() })
    }

    pub fn complex(&self) -> &CeComplex {
        &self.cx
    }

    pub fn letter(&self, i: usize) -> &(Bidegree, Monomial) {
        &self.letters[i]
    }

    pub fn to_vec(&self, f: &PolyVector) -> Result<SparseVec, DglaError> {
        let mut v = SparseVec::new();
        for (m, c) in f.terms() {
            let i = self
                .index
                .get(m)
                .ok_or(DglaError::Truncation { weight: m.poly_degree() as u32, max: self.cx.dmax() as u32 })?;
            v.insert(*i, c.clone());
        }
        Ok(v)
    }

    pub fn to_poly(&self, v: &SparseVec) -> PolyVector {
        let mut out = PolyVector::zero(self.cx.dim());
        for (i, c) in v {
            let m = &self.letters[*i].1;
            out.add_term(m.sym.clone(), m.form.clone(), c.clone());
        }
        out
    }

    /// Contraction onto cohomology per polynomial degree; the named cocycles
    /// in `preferred` are used as representatives (and keys) where possible.
    pub fn contraction(&self, preferred: &[(String, PolyVector)]) -> Result<DglaContraction, DglaError> {
        let n = self.cx.dim();
        let mut out = DglaContraction {
            h_keys: vec![],
            h_degrees: vec![],
            h_weights: vec![],
            i: vec![],
            p: vec![SparseVec::new(); self.letters.len()],
            h: vec![SparseVec::new(); self.letters.len()],
        };
        for m in 0..=self.cx.dmax() {
            let mut space = GradedSpace::new();
            let mut hspace = GradedSpace::new();
            let mut b_blocks = BTreeMap::new();
            let mut i_blocks = BTreeMap::new();
            let mut offsets = BTreeMap::new();
            let mut h_offsets = BTreeMap::new();
            for k in 0..=n {
                let b = Bidegree::new(k, m);
                let basis = self.cx.basis(b)?;
                let first = self.index[&basis[0]];
                offsets.insert(k as i32, first);
                space = space.with_block(k as i32, basis.iter().map(|x| x.key()).collect(), None);
                b_blocks.insert(k as i32, self.cx.delta_matrix(b)?);
                let pref: Vec<(String, PolyVector)> =
                    preferred.iter().filter(|(_, p)| p.bidegree() == Some(b)).cloned().collect();
                let pref_polys: Vec<PolyVector> = pref.iter().map(|(_, p)| p.clone()).collect();
                let coh = self.cx.cohomology_with(b, &pref_polys)?;
                let pref_coords =
                    pref_polys.iter().map(|p| self.cx.coordinates(p, b)).collect::<Result<Vec<_>, _>>()?;
                h_offsets.insert(k as i32, out.h_keys.len());
                for (j, rep) in coh.rep_coordinates().iter().enumerate() {
                    let name = pref_coords.iter().position(|c| c == rep).map(|t| pref[t].0.clone());
                    out.h_keys.push(name.unwrap_or_else(|| format!("H{k},{m}#{j}")));
                    out.h_degrees.push(k as i32 - 1);
                    out.h_weights.push(m as u32);
                    out.i.push(rep.iter().map(|(r, c)| (r + first, c.clone())).collect());
                }
                hspace = hspace.with_block(k as i32, (0..coh.dim()).map(|j| format!("{j}")).collect(), None);
                i_blocks.insert(k as i32, SparseMatrix::from_columns(basis.len(), coh.rep_coordinates()));
            }
            let v = FiniteComplex::new(space.clone(), GradedMap::from_blocks(&space, &space, 1, b_blocks)?)?;
            let u = FiniteComplex::trivial(hspace.clone());
            let i = GradedMap::from_blocks(&hspace, &space, 0, i_blocks)?;
            let c = crate::contraction::contraction_from_injection(u, v, i)?;
            for k in 0..=n as i32 {
                let first = offsets[&k];
                if let Some(pb) = c.p.block(k) {
                    for (r, col, x) in pb.entries() {
                        out.p[first + col].insert(h_offsets[&k] + r, x.clone());
                    }
                }
                if let Some(hb) = c.h.block(k) {
                    if k > 0 {
                        let tgt_first = offsets[&(k - 1)];
                        for (r, col, x) in hb.entries() {
                            out.h[first + col].insert(tgt_first + r, x.clone());
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl Dgla for CeDgla {
    fn dim(&self) -> usize {
        self.letters.len()
    }

    fn key(&self, i: usize) -> String {
        self.letters[i].1.key()
    }

    fn degree(&self, i: usize) -> i32 {
        self.letters[i].0.form as i32 - 1
    }

    fn weight(&self, i: usize) -> u32 {
        self.letters[i].0.poly as u32
    }

    fn max_weight(&self) -> u32 {
        self.cx.dmax() as u32
    }

    fn differential(&self, i: usize) -> SparseVec {
        let f = self.to_poly(&[(i, Rational::one())].into_iter().collect());
        let d = self.cx.delta(&f).expect("δ preserves polynomial degree");
        self.to_vec(&d).expect("δ preserves polynomial degree")
    }

    fn bracket(&self, i: usize, j: usize) -> Result<SparseVec, DglaError> {
        self.cache.get_or((i, j), || {
            let f = self.to_poly(&[(i, Rational::one())].into_iter().collect());
            let g = self.to_poly(&[(j, Rational::one())].into_iter().collect());
            let s = f.schouten(&g)?;
            self.to_vec(&s)
        })
    }
}

/// Which reduced generator a letter carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reduced {
    One,
    Euler,
    Pi,
    Omega,
}

impl Reduced {
    const ALL: [Reduced; 4] = [Reduced::One, Reduced::Euler, Reduced::Pi, Reduced::Omega];

    pub fn form(self) -> usize {
        match self {
            Reduced::One => 0,
            Reduced::Euler => 1,
            Reduced::Pi => 2,
            Reduced::Omega => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Reduced::One => "1",
            Reduced::Euler => "E",
            Reduced::Pi => "π",
            Reduced::Omega => "Ω",
        }
    }
}

/// The sub-DGLA K[q]{1, E, π, Ω} of a quadratic Lie algebra, truncated at
/// q-degree `amax`; letter 4a + t is q^a times the t-th generator, with
/// weight a. Brackets are computed with the Schouten bracket and matched
/// back onto the basis, so non-closure is detected, not assumed.
#[derive(Debug)]
pub struct ReducedQuadratic {
    dim: usize,
    amax: u32,
    polys: Vec<PolyVector>,
    cx: CeComplex,
    cache: BracketCache,
    diff: Vec<SparseVec>,
}

impl ReducedQuadratic {
    pub fn new(l: &LieAlgebra, kappa: &BilinearForm, amax: u32) -> Result<Self, DglaError> {
        kappa.check_quadratic(l)?;
        let q = casimir(l, kappa)?;
        let e = euler_field(l);
        let omega = cartan_cocycle(l, kappa);
        let cx = CeComplex::new(l.clone(), 2 * amax as usize + 1)?;
        let pi = cx.pi().clone();
        let mut polys = Vec::new();
        for a in 0..=amax {
            let qa = CasimirPolynomial::monomial(a as usize).embed(&q);
            for t in Reduced::ALL {
                let gen = match t {
                    Reduced::One => PolyVector::one(l.dim()),
                    Reduced::Euler => e.clone(),
                    Reduced::Pi => pi.clone(),
                    Reduced::Omega => omega.clone(),
                };
                polys.push(qa.wedge(&gen)?);
            }
        }
        let mut g = ReducedQuadratic { dim: l.dim(), amax, polys, cx, cache: BracketCache::default(), diff: vec![] };
        let mut diff = Vec::new();
        for j in 0..g.polys.len() {
            let d = g.cx.delta(&g.polys[j])?;
            diff.push(g.decompose(&d, g.polys[j].form_degree().unwrap_or(0) + 1)?);
        }
        g.diff = diff;
        Ok(g)
    }

    pub fn letter(a: u32, t: Reduced) -> usize {
        4 * a as usize + t.form()
    }

    pub fn poly(&self, i: usize) -> &PolyVector {
        &self.polys[i]
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn amax(&self) -> u32 {
        self.amax
    }

    /// Writes a form-degree-`form` polyvector as c·(basis letter).
    fn decompose(&self, f: &PolyVector, form: usize) -> Result<SparseVec, DglaError> {
        if f.is_zero() {
            return Ok(SparseVec::new());
        }
        if form > 3 {
            return Err(DglaError::NotClosed(format!("form degree {form}")));
        }
        let poly = f.max_poly_degree().unwrap_or(0);
        let a = match form {
            0 | 3 => poly / 2,
            _ => poly.saturating_sub(1) / 2,
        } as u32;
        if a > self.amax {
            return Err(DglaError::Truncation { weight: a, max: self.amax });
        }
        let j = 4 * a as usize + form;
        let basis = &self.polys[j];
        let (m, c) = f.terms().iter().next().expect("nonzero");
        let bc = basis.coefficient(m);
        if bc.is_zero() {
            return Err(DglaError::NotClosed(format!("{} not a multiple of a reduced letter", f.to_json_value())));
        }
        let ratio = c / &bc;
        if &basis.scale(&ratio) != f {
            return Err(DglaError::NotClosed(format!("{} not a multiple of a reduced letter", f.to_json_value())));
        }
        Ok([(j, ratio)].into_iter().collect())
    }

    /// Natural contraction: H = K[q]1 ⊕ K[q]Ω, p kills K[q]E ⊕ K[q]π and
    /// h(q^a π) = q^a E.
    pub fn contraction(&self) -> DglaContraction {
        let n = self.polys.len();
        let mut c = DglaContraction {
            h_keys: vec![],
            h_degrees: vec![],
            h_weights: vec![],
            i: vec![],
            p: vec![SparseVec::new(); n],
            h: vec![SparseVec::new(); n],
        };
        for a in 0..=self.amax {
            for t in [Reduced::One, Reduced::Omega] {
                let j = Self::letter(a, t);
                c.p[j].insert(c.h_keys.len(), Rational::one());
                c.h_keys.push(self.key(j));
                c.h_degrees.push(t.form() as i32 - 1);
                c.h_weights.push(a);
                c.i.push([(j, Rational::one())].into_iter().collect());
            }
            c.h[Self::letter(a, Reduced::Pi)].insert(Self::letter(a, Reduced::Euler), Rational::one());
        }
        c
    }
}

impl Dgla for ReducedQuadratic {
    fn dim(&self) -> usize {
        self.polys.len()
    }

    fn key(&self, i: usize) -> String {
        let (a, t) = (i / 4, Reduced::ALL[i % 4]);
        match (a, t) {
            (0, t) => t.label().to_string(),
            (1, Reduced::One) => "q".into(),
            (1, t) => format!("q{}", t.label()),
            (a, Reduced::One) => format!("q^{a}"),
            (a, t) => format!("q^{a}{}", t.label()),
        }
    }

    fn degree(&self, i: usize) -> i32 {
        (i % 4) as i32 - 1
    }

    fn weight(&self, i: usize) -> u32 {
        (i / 4) as u32
    }

    fn max_weight(&self) -> u32 {
        self.amax
    }

    fn differential(&self, i: usize) -> SparseVec {
        self.diff[i].clone()
    }

    fn bracket(&self, i: usize, j: usize) -> Result<SparseVec, DglaError> {
        self.cache.get_or((i, j), || {
            let w = self.weight(i) + self.weight(j);
            if w > self.amax {
                return Err(DglaError::Truncation { weight: w, max: self.amax });
            }
            let s = self.polys[i].schouten(&self.polys[j])?;
            let form = (i % 4 + j % 4).checked_sub(1);
            match form {
                None => Ok(SparseVec::new()),
                Some(f) => self.decompose(&s, f),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::verify_contraction;
    use crate::exactla::int;
    use crate::liealg::{abelian, heisenberg3, so3};

    fn so3_reduced(amax: u32) -> ReducedQuadratic {
        let l = so3();
        ReducedQuadratic::new(&l, &l.killing_form(), amax).unwrap()
    }

    #[test]
    fn reduced_so3_is_closed_dgla() {
        let g = so3_reduced(3);
        check_dgla(&g, 3).unwrap();
        // δ(q E) = q π.
        let qe = ReducedQuadratic::letter(1, Reduced::Euler);
        assert_eq!(g.differential(qe), [(ReducedQuadratic::letter(1, Reduced::Pi), int(1))].into_iter().collect());
        // [E, Ω] = −3 Ω.
        let br = g.bracket(1, 3).unwrap();
        assert_eq!(br, [(3, int(-3))].into_iter().collect());
    }

    #[test]
    fn reduced_so3_contraction_verifies() {
        let g = so3_reduced(3);
        let c = g.contraction();
        assert!(c.projector_is_diagonal(&g));
        verify_contraction(&c.to_contraction(&g).unwrap()).unwrap();
    }

    #[test]
    fn reduced_truncation_is_reported() {
        let g = so3_reduced(1);
        let q = ReducedQuadratic::letter(1, Reduced::One);
        let qe = ReducedQuadratic::letter(1, Reduced::Euler);
        assert!(matches!(g.bracket(qe, q), Err(DglaError::Truncation { .. })));
    }

    #[test]
    fn ce_dgla_contraction_heisenberg() {
        let cx = CeComplex::new(heisenberg3(), 2).unwrap();
        let g = CeDgla::new(cx).unwrap();
        check_dgla(&g, 2).unwrap();
        let c = g.contraction(&[]).unwrap();
        verify_contraction(&c.to_contraction(&g).unwrap()).unwrap();
    }

    #[test]
    fn ce_dgla_abelian_contraction_is_identity() {
        let cx = CeComplex::new(abelian(2), 2).unwrap();
        let g = CeDgla::new(cx).unwrap();
        let c = g.contraction(&[]).unwrap();
        assert_eq!(c.h_dim(), g.dim());
        assert!(c.h.iter().all(|v| v.is_empty()));
    }
}
