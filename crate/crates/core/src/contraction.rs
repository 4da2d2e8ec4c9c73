//! Finite graded complexes, homotopy contractions (i, p, h), construction of
//! a contraction from an injective quasi-isomorphism, side-condition forcing,
//! and the chain-level Perturbation Lemma.
//!
//! A contraction satisfies
//!   b_V i = i b_U,  b_U p = p b_V,  p i = id,  id − i p = b h + h b,
//!   h² = 0,  h i = 0,  p h = 0.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde_json::json;
use thiserror::Error;

use crate::exactla::{LinAlgError, Rational, SparseMatrix, SparseVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identity {
    ChainI,
    ChainP,
    Retraction,
    Homotopy,
    HSquared,
    HI,
    PH,
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Identity::ChainI => "b_V i = i b_U",
            Identity::ChainP => "b_U p = p b_V",
            Identity::Retraction => "p i = id",
            Identity::Homotopy => "id − i p = b h + h b",
            Identity::HSquared => "h h = 0",
            Identity::HI => "h i = 0",
            Identity::PH => "p h = 0",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("identity violated: {0}")]
    Violated(Identity),
    #[error("differential does not square to zero")]
    NotComplex,
    #[error("map is not injective in degree {0}")]
    NotInjective(i32),
    #[error("map is not a chain map")]
    NotChainMap,
    #[error("map is not a quasi-isomorphism onto cohomology in degree {0}")]
    NotQuasiIso(i32),
    #[error("perturbation does not square-compose: (b + δ)² ≠ 0")]
    NotPerturbation,
    #[error("perturbation does not lower the filtration grade")]
    FiltrationDegree,
    #[error("geometric series did not terminate within {0} terms")]
    SeriesCap(usize),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// Graded vector space with labelled basis and a secondary filtration grade
/// per basis element.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GradedSpace {
    blocks: BTreeMap<i32, Block>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Block {
    pub labels: Vec<String>,
    pub grades: Vec<u32>,
}

impl GradedSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) the basis in degree k; grades default to 0.
    pub fn with_block(mut self, k: i32, labels: Vec<String>, grades: Option<Vec<u32>>) -> Self {
        let grades = grades.unwrap_or_else(|| vec![0; labels.len()]);
        assert_eq!(grades.len(), labels.len());
        self.blocks.insert(k, Block { labels, grades });
        self
    }

    pub fn dim(&self, k: i32) -> usize {
        self.blocks.get(&k).map_or(0, |b| b.labels.len())
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.values().map(|b| b.labels.len()).sum()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.blocks.keys().copied()
    }

    pub fn block(&self, k: i32) -> Option<&Block> {
        self.blocks.get(&k)
    }

    pub fn max_grade(&self) -> u32 {
        self.blocks.values().flat_map(|b| b.grades.iter().copied()).max().unwrap_or(0)
    }
}

/// Linear map of fixed degree shift, one matrix per source degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    shift: i32,
    blocks: BTreeMap<i32, SparseMatrix>,
    target_dims: BTreeMap<i32, usize>,
}

impl GradedMap {
    pub fn zero(src: &GradedSpace, tgt: &GradedSpace, shift: i32) -> Self {
        let blocks = src.degrees().map(|k| (k, SparseMatrix::zeros(tgt.dim(k + shift), src.dim(k)))).collect();
        GradedMap { shift, blocks, target_dims: Self::dims(tgt) }
    }

    pub fn identity(space: &GradedSpace) -> Self {
        let blocks = space.degrees().map(|k| (k, SparseMatrix::identity(space.dim(k)))).collect();
        GradedMap { shift: 0, blocks, target_dims: Self::dims(space) }
    }

    fn dims(space: &GradedSpace) -> BTreeMap<i32, usize> {
        space.degrees().map(|k| (k, space.dim(k))).collect()
    }

    fn target_dim(&self, k: i32) -> usize {
        self.target_dims.get(&k).copied().unwrap_or(0)
    }

    /// Builds from explicit blocks; blocks for missing source degrees are zero.
    pub fn from_blocks(
        src: &GradedSpace,
        tgt: &GradedSpace,
        shift: i32,
        given: BTreeMap<i32, SparseMatrix>,
    ) -> Result<Self, ContractionError> {
        let mut m = Self::zero(src, tgt, shift);
        for (k, b) in given {
            let expect = (tgt.dim(k + shift), src.dim(k));
            if (b.nrows(), b.ncols()) != expect {
                return Err(ContractionError::Shape(format!(
                    "block at degree {k} is {}x{}, expected {}x{}",
                    b.nrows(),
                    b.ncols(),
                    expect.0,
                    expect.1
                )));
            }
            m.blocks.insert(k, b);
        }
        Ok(m)
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    pub fn block(&self, k: i32) -> Option<&SparseMatrix> {
        self.blocks.get(&k)
    }

    pub fn blocks(&self) -> &BTreeMap<i32, SparseMatrix> {
        &self.blocks
    }

    /// self ∘ other.
    pub fn compose(&self, other: &GradedMap) -> Result<GradedMap, ContractionError> {
        let mut blocks = BTreeMap::new();
        for (k, b) in &other.blocks {
            let mid = k + other.shift;
            let out = match self.blocks.get(&mid) {
                Some(a) => a.mul(b)?,
                None => {
                    if b.nrows() != 0 {
                        return Err(ContractionError::Shape(format!("no block at degree {mid} to compose with")));
                    }
                    SparseMatrix::zeros(self.target_dim(mid + self.shift), b.ncols())
                }
            };
            blocks.insert(*k, out);
        }
        Ok(GradedMap { shift: self.shift + other.shift, blocks, target_dims: self.target_dims.clone() })
    }

    fn zip(&self, other: &GradedMap, c: &Rational) -> Result<GradedMap, ContractionError> {
        if self.shift != other.shift {
            return Err(ContractionError::Shape(format!("shift {} vs {}", self.shift, other.shift)));
        }
        let mut blocks = self.blocks.clone();
        for (k, b) in &other.blocks {
            let scaled = b.scale(c);
            let entry = match blocks.remove(k) {
                Some(a) => a.add(&scaled)?,
                None => scaled,
            };
            blocks.insert(*k, entry);
        }
        let mut target_dims = self.target_dims.clone();
        target_dims.extend(other.target_dims.iter().map(|(k, d)| (*k, *d)));
        Ok(GradedMap { shift: self.shift, blocks, target_dims })
    }

    pub fn add(&self, other: &GradedMap) -> Result<GradedMap, ContractionError> {
        self.zip(other, &Rational::one())
    }

    pub fn sub(&self, other: &GradedMap) -> Result<GradedMap, ContractionError> {
        self.zip(other, &-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> GradedMap {
        GradedMap {
            shift: self.shift,
            blocks: self.blocks.iter().map(|(k, b)| (*k, b.scale(c))).collect(),
            target_dims: self.target_dims.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|b| b.is_zero())
    }

    /// Equality up to missing (zero) blocks.
    pub fn same_as(&self, other: &GradedMap) -> Result<bool, ContractionError> {
        Ok(self.sub(other)?.is_zero())
    }

    pub fn apply(&self, k: i32, v: &SparseVec) -> SparseVec {
        self.blocks.get(&k).map_or_else(SparseVec::new, |b| b.apply(v))
    }

    /// Every nonzero entry maps grade g to a grade ≤ g − drop.
    pub fn lowers_grade(&self, src: &GradedSpace, tgt: &GradedSpace, drop: u32) -> bool {
        self.blocks.iter().all(|(k, b)| {
            let (Some(sb), Some(tb)) = (src.block(*k), tgt.block(k + self.shift)) else { return b.is_zero() };
            b.entries().all(|(r, c, _)| tb.grades[r] + drop <= sb.grades[c])
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let blocks: serde_json::Map<String, serde_json::Value> =
            self.blocks.iter().map(|(k, b)| (k.to_string(), json!(b.to_string_rows()))).collect();
        json!({"shift": self.shift, "blocks": blocks})
    }
}

/// Finite cochain complex: a graded space and a degree +1 differential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteComplex {
    space: GradedSpace,
    b: GradedMap,
}

impl FiniteComplex {
    pub fn new(space: GradedSpace, b: GradedMap) -> Result<Self, ContractionError> {
        if b.shift() != 1 {
            return Err(ContractionError::Shape("differential must have degree +1".into()));
        }
        let c = FiniteComplex { space, b };
        c.check_shapes(&c.b, &c.space, &c.space)?;
        if !c.b.compose(&c.b)?.is_zero() {
            return Err(ContractionError::NotComplex);
        }
        Ok(c)
    }

    /// Complex with zero differential.
    pub fn trivial(space: GradedSpace) -> Self {
        let b = GradedMap::zero(&space, &space, 1);
        FiniteComplex { space, b }
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn b(&self) -> &GradedMap {
        &self.b
    }

    fn check_shapes(&self, m: &GradedMap, src: &GradedSpace, tgt: &GradedSpace) -> Result<(), ContractionError> {
        for k in src.degrees() {
            let blk = m.block(k).ok_or_else(|| ContractionError::Shape(format!("missing block at degree {k}")))?;
            if blk.ncols() != src.dim(k) || blk.nrows() != tgt.dim(k + m.shift()) {
                return Err(ContractionError::Shape(format!("bad block shape at degree {k}")));
            }
        }
        Ok(())
    }

    pub fn with_differential(&self, b: GradedMap) -> Result<Self, ContractionError> {
        Self::new(self.space.clone(), b)
    }

    /// Cohomology dimensions per degree.
    pub fn cohomology_dims(&self) -> BTreeMap<i32, usize> {
        self.space
            .degrees()
            .map(|k| {
                let out_rank = self.b.block(k).map_or(0, |m| m.rank());
                let in_rank = self.b.block(k - 1).map_or(0, |m| m.rank());
                (k, self.space.dim(k) - out_rank - in_rank)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contraction {
    pub u: FiniteComplex,
    pub v: FiniteComplex,
    pub i: GradedMap,
    pub p: GradedMap,
    pub h: GradedMap,
}

impl Contraction {
    pub fn new(
        u: FiniteComplex,
        v: FiniteComplex,
        i: GradedMap,
        p: GradedMap,
        h: GradedMap,
    ) -> Result<Self, ContractionError> {
        if i.shift() != 0 || p.shift() != 0 || h.shift() != -1 {
            return Err(ContractionError::Shape("i, p must have degree 0 and h degree −1".into()));
        }
        u.check_shapes(&i, u.space(), v.space())?;
        v.check_shapes(&p, v.space(), u.space())?;
        v.check_shapes(&h, v.space(), v.space())?;
        Ok(Contraction { u, v, i, p, h })
    }

    /// The identity contraction of a complex onto itself.
    pub fn identity(c: FiniteComplex) -> Self {
        let id = GradedMap::identity(c.space());
        let h = GradedMap::zero(c.space(), c.space(), -1);
        Contraction { u: c.clone(), v: c, i: id.clone(), p: id, h }
    }

    /// P = [b_V, h] = b h + h b.
    pub fn projector(&self) -> Result<GradedMap, ContractionError> {
        self.v.b().compose(&self.h)?.add(&self.h.compose(self.v.b())?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "i": self.i.to_json(),
            "p": self.p.to_json(),
            "h": self.h.to_json(),
            "b_u": self.u.b().to_json(),
            "b_v": self.v.b().to_json(),
        })
    }
}

/// Checks all seven contraction identities, reporting the first failure.
pub fn verify_contraction(c: &Contraction) -> Result<(), ContractionError> {
    let (bu, bv) = (c.u.b(), c.v.b());
    let check = |ok: bool, id: Identity| if ok { Ok(()) } else { Err(ContractionError::Violated(id)) };
    check(bv.compose(&c.i)?.same_as(&c.i.compose(bu)?)?, Identity::ChainI)?;
    check(bu.compose(&c.p)?.same_as(&c.p.compose(bv)?)?, Identity::ChainP)?;
    check(c.p.compose(&c.i)?.same_as(&GradedMap::identity(c.u.space()))?, Identity::Retraction)?;
    let lhs = GradedMap::identity(c.v.space()).sub(&c.i.compose(&c.p)?)?;
    check(lhs.same_as(&c.projector()?)?, Identity::Homotopy)?;
    check(c.h.compose(&c.h)?.is_zero(), Identity::HSquared)?;
    check(c.h.compose(&c.i)?.is_zero(), Identity::HI)?;
    check(c.p.compose(&c.h)?.is_zero(), Identity::PH)?;
    Ok(())
}

/// Checks the identities that do not involve the side conditions.
pub fn verify_without_side_conditions(c: &Contraction) -> Result<(), ContractionError> {
    match verify_contraction(c) {
        Err(ContractionError::Violated(Identity::HSquared | Identity::HI | Identity::PH)) | Ok(()) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Replaces h by [b,h] h b h b h b h [b,h], which satisfies the side
/// conditions whenever the first four identities hold.
pub fn force_side_conditions(c: &Contraction) -> Result<Contraction, ContractionError> {
    verify_without_side_conditions(c)?;
    let b = c.v.b();
    let pr = c.projector()?;
    let mut h = pr.clone();
    for f in [&c.h, b, &c.h, b, &c.h, b, &c.h, &pr] {
        h = h.compose(f)?;
    }
    let out = Contraction { h, ..c.clone() };
    verify_contraction(&out)?;
    Ok(out)
}

/// Builds p and h from an injective chain map i: U → V inducing an
/// isomorphism in cohomology. The complement W of i(U) + b(V) is spanned by
/// the standard basis vectors that are echelon pivots after i(U) and b(V);
/// then V = i(U) ⊕ W ⊕ b(W), p kills W ⊕ b(W) and h inverts b on W.
pub fn contraction_from_injection(
    u: FiniteComplex,
    v: FiniteComplex,
    i: GradedMap,
) -> Result<Contraction, ContractionError> {
    u.check_shapes(&i, u.space(), v.space())?;
    if !v.b().compose(&i)?.same_as(&i.compose(u.b())?)? {
        return Err(ContractionError::NotChainMap);
    }
    let mut w_basis: BTreeMap<i32, Vec<SparseVec>> = BTreeMap::new();
    let mut p_blocks = BTreeMap::new();
    let mut h_blocks = BTreeMap::new();
    let degrees: Vec<i32> = v.space().degrees().collect();
    for &k in &degrees {
        let n = v.space().dim(k);
        let iu: Vec<SparseVec> = i.block(k).map(|m| m.columns()).unwrap_or_default();
        if SparseMatrix::from_columns(n, &iu).rank() != iu.len() {
            return Err(ContractionError::NotInjective(k));
        }
        let bv: Vec<SparseVec> = v.b().block(k - 1).map(|m| m.columns()).unwrap_or_default();
        let w_prev = w_basis.get(&(k - 1)).cloned().unwrap_or_default();
        let bw: Vec<SparseVec> = w_prev.iter().map(|w| v.b().apply(k - 1, w)).collect();
        let mut cols = iu.clone();
        cols.extend(bv);
        let start = cols.len();
        cols.extend((0..n).map(|j| [(j, Rational::one())].into_iter().collect::<SparseVec>()));
        let (_, pivots) = SparseMatrix::from_columns(n, &cols).rref();
        let w: Vec<SparseVec> = pivots.iter().filter(|&&p| p >= start).map(|&p| cols[p].clone()).collect();
        // T = [i(U) | W | b(W_{k−1})] must be a basis of V_k.
        let mut t_cols = iu.clone();
        t_cols.extend(w.iter().cloned());
        t_cols.extend(bw.iter().cloned());
        if t_cols.len() != n {
            return Err(ContractionError::NotQuasiIso(k));
        }
        let t_inv = if n == 0 {
            SparseMatrix::zeros(0, 0)
        } else {
            SparseMatrix::from_columns(n, &t_cols).inverse().map_err(|_| ContractionError::NotQuasiIso(k))?
        };
        let nu = iu.len();
        let nw = w.len();
        let mut p_k = SparseMatrix::zeros(nu, n);
        for r in 0..nu {
            for (c, x) in t_inv.row(r) {
                p_k.set(r, *c, x.clone());
            }
        }
        p_blocks.insert(k, p_k);
        // h on b(W_{k−1}) coordinates returns the matching W_{k−1} vector.
        let nprev = v.space().dim(k - 1);
        let mut h_k = SparseMatrix::zeros(nprev, n);
        for (j, wv) in w_prev.iter().enumerate() {
            let coord_row = t_inv.row(nu + nw + j);
            for (c, x) in coord_row {
                for (r, y) in wv {
                    h_k.add_at(*r, *c, x * y);
                }
            }
        }
        h_blocks.insert(k, h_k);
        w_basis.insert(k, w);
    }
    let p = GradedMap::from_blocks(v.space(), u.space(), 0, p_blocks)?;
    let h = GradedMap::from_blocks(v.space(), v.space(), -1, h_blocks)?;
    let c = Contraction::new(u, v, i, p, h)?;
    verify_contraction(&c)?;
    Ok(c)
}

/// Result of the Perturbation Lemma: the new contraction between
/// (U, b_U + δ_U) and (V, b_V + δ_V), and δ_U itself.
#[derive(Clone, Debug)]
pub struct Perturbed {
    pub contraction: Contraction,
    pub delta_u: GradedMap,
    pub terms_used: usize,
}

/// (id + χ)⁻¹ = Σ (−χ)^k, summed until the power vanishes.
pub fn geometric_inverse(
    chi: &GradedMap,
    space: &GradedSpace,
    cap: usize,
) -> Result<(GradedMap, usize), ContractionError> {
    let mut sum = GradedMap::identity(space);
    let neg = chi.scale(&-Rational::one());
    let mut power = GradedMap::identity(space);
    for k in 1..=cap + 1 {
        power = neg.compose(&power)?;
        if power.is_zero() {
            return Ok((sum, k));
        }
        if k > cap {
            break;
        }
        sum = sum.add(&power)?;
    }
    Err(ContractionError::SeriesCap(cap))
}

/// ĩ = (1 + hδ)⁻¹ i, p̃ = p (1 + δh)⁻¹, h̃ = (1 + hδ)⁻¹ h,
/// δ_U = p (1 + δh)⁻¹ δ i.
pub fn perturb(c: &Contraction, delta_v: &GradedMap) -> Result<Perturbed, ContractionError> {
    let vs = c.v.space();
    if delta_v.shift() != 1 {
        return Err(ContractionError::Shape("perturbation must have degree +1".into()));
    }
    c.v.check_shapes(delta_v, vs, vs)?;
    let new_bv = c.v.b().add(delta_v)?;
    if !new_bv.compose(&new_bv)?.is_zero() {
        return Err(ContractionError::NotPerturbation);
    }
    if !delta_v.lowers_grade(vs, vs, 1) {
        return Err(ContractionError::FiltrationDegree);
    }
    let cap = vs.max_grade() as usize + 1;
    let (inv_hd, n1) = geometric_inverse(&c.h.compose(delta_v)?, vs, cap)?;
    let (inv_dh, n2) = geometric_inverse(&delta_v.compose(&c.h)?, vs, cap)?;
    let i_new = inv_hd.compose(&c.i)?;
    let p_new = c.p.compose(&inv_dh)?;
    let h_new = inv_hd.compose(&c.h)?;
    let delta_u = c.p.compose(&inv_dh)?.compose(delta_v)?.compose(&c.i)?;
    let u_new = c.u.with_differential(c.u.b().add(&delta_u)?)?;
    let v_new = c.v.with_differential(new_bv)?;
    let contraction = Contraction::new(u_new, v_new, i_new, p_new, h_new)?;
    verify_contraction(&contraction)?;
    Ok(Perturbed { contraction, delta_u, terms_used: n1.max(n2) })
}

/// Convenience: per-degree labels "k:j".
pub fn numbered_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|j| format!("{prefix}{j}")).collect()
}

/// Checks whether two maps agree after dropping zero blocks; used in tests
/// and certificates.
pub fn maps_equal(a: &GradedMap, b: &GradedMap) -> bool {
    a.same_as(b).unwrap_or(false)
}

/// Entry-level access used by JSON replay.
pub fn block_entry(m: &GradedMap, k: i32, r: usize, c: usize) -> Rational {
    m.block(k).map_or_else(Rational::zero, |b| b.get(r, c))
}
