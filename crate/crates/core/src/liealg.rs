//! Lie algebras by structure constants, invariant forms, and the quadratic
//! toolkit: Killing form, Casimir q, Euler field E, Cartan cocycle Ω and the
//! linear Poisson structure π.
//!
//! Basis indices are 0-based internally and 1-based in JSON.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{format_rational, int, parse_rational, LinAlgError, Rational, SparseMatrix, SparseVec};
use crate::polyvec::PolyVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieError {
    #[error("bracket index out of range: {0}")]
    IndexOutOfRange(usize),
    #[error("duplicate bracket entry for ({0}, {1})")]
    DuplicateBracket(usize, usize),
    #[error("nonzero self-bracket [e{0}, e{0}]")]
    SelfBracket(usize),
    #[error("Jacobi identity fails on (e{}, e{}, e{})", .0 .0 + 1, .0 .1 + 1, .0 .2 + 1)]
    Jacobi((usize, usize, usize)),
    #[error("bilinear form has shape {got}, expected {expected}")]
    FormShape { expected: usize, got: usize },
    #[error("bilinear form is not symmetric")]
    NotSymmetric,
    #[error("bilinear form is singular")]
    Singular,
    #[error("bilinear form is not invariant")]
    NotInvariant,
    #[error("unknown builtin algebra {0:?}")]
    UnknownBuiltin(String),
    #[error("invalid algebra JSON: {0}")]
    Json(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// Structure constants c^i_{jk} = ε^i([e_j, e_k]), antisymmetric in (j, k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<Rational>,
    names: Vec<String>,
}

impl LieAlgebra {
    /// Builds from the brackets [e_j, e_k] for j < k or j > k; the
    /// antisymmetric partner is filled in. Each unordered pair may appear once.
    pub fn from_brackets(dim: usize, brackets: &[(usize, usize, SparseVec)]) -> Result<Self, LieError> {
        let mut c = vec![Rational::zero(); dim * dim * dim];
        let mut seen = std::collections::BTreeSet::new();
        for (j, k, out) in brackets {
            let (j, k) = (*j, *k);
            for &x in [j, k].iter().chain(out.keys()) {
                if x >= dim {
                    return Err(LieError::IndexOutOfRange(x));
                }
            }
            if j == k {
                if out.values().any(|x| !x.is_zero()) {
                    return Err(LieError::SelfBracket(j));
                }
                continue;
            }
            if !seen.insert((j.min(k), j.max(k))) {
                return Err(LieError::DuplicateBracket(j, k));
            }
            for (i, x) in out {
                c[(i * dim + j) * dim + k] = x.clone();
                c[(i * dim + k) * dim + j] = -x.clone();
            }
        }
        let names = (1..=dim).map(|i| format!("e{i}")).collect();
        Ok(LieAlgebra { dim, c, names })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.dim);
        self.names = names;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// c^i_{jk}.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn bracket_basis(&self, j: usize, k: usize) -> SparseVec {
        (0..self.dim)
            .filter_map(|i| {
                let x = self.c(i, j, k);
                (!x.is_zero()).then(|| (i, x.clone()))
            })
            .collect()
    }

    pub fn bracket(&self, x: &SparseVec, y: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, a) in x {
            for (k, b) in y {
                let ab = a * b;
                for i in 0..self.dim {
                    let c = self.c(i, *j, *k);
                    if !c.is_zero() {
                        crate::exactla::add_entry(&mut out, i, c * &ab);
                    }
                }
            }
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// (ad_j)^i_k = c^i_{jk}.
    pub fn ad(&self, j: usize) -> SparseMatrix {
        let mut m = SparseMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                m.set(i, k, self.c(i, j, k).clone());
            }
        }
        m
    }

    /// First triple (i < j < k) on which the Jacobi identity fails.
    pub fn check_jacobi(&self) -> Result<(), LieError> {
        let n = self.dim;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let ei = unit(i);
                    let ej = unit(j);
                    let ek = unit(k);
                    let mut s = self.bracket(&ei, &self.bracket(&ej, &ek));
                    crate::exactla::add_scaled(&mut s, &self.bracket(&ej, &self.bracket(&ek, &ei)), &Rational::one());
                    crate::exactla::add_scaled(&mut s, &self.bracket(&ek, &self.bracket(&ei, &ej)), &Rational::one());
                    if !s.is_empty() {
                        return Err(LieError::Jacobi((i, j, k)));
                    }
                }
            }
        }
        Ok(())
    }

    /// κ(e_i, e_j) = tr(ad_i ad_j).
    pub fn killing_form(&self) -> BilinearForm {
        let n = self.dim;
        let ads: Vec<SparseMatrix> = (0..n).map(|j| self.ad(j)).collect();
        let mut k = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let prod = ads[i].mul(&ads[j]).expect("square");
                let tr = (0..n).fold(Rational::zero(), |s, d| s + prod.get(d, d));
                k[i][j] = tr.clone();
                k[j][i] = tr;
            }
        }
        BilinearForm { entries: k }
    }

    /// Basis of the symmetric invariant bilinear forms, as n x n matrices.
    pub fn invariant_forms(&self) -> Vec<BilinearForm> {
        let n = self.dim;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let var = |a: usize, b: usize| pairs.iter().position(|&p| p == (a.min(b), a.max(b))).unwrap();
        // κ([e_a,e_b],e_c) − κ(e_a,[e_b,e_c]) = 0.
        let mut rows: Vec<SparseVec> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut row = SparseVec::new();
                    for i in 0..n {
                        crate::exactla::add_entry(&mut row, var(i, c), self.c(i, a, b).clone());
                        crate::exactla::add_entry(&mut row, var(a, i), -self.c(i, b, c).clone());
                    }
                    if !row.is_empty() {
                        rows.push(row);
                    }
                }
            }
        }
        let mut m = SparseMatrix::zeros(rows.len(), pairs.len());
        for (r, row) in rows.iter().enumerate() {
            for (c, x) in row {
                m.set(r, *c, x.clone());
            }
        }
        m.nullspace()
            .into_iter()
            .map(|v| {
                let mut e = vec![vec![Rational::zero(); n]; n];
                for (idx, x) in v {
                    let (a, b) = pairs[idx];
                    e[a][b] = x.clone();
                    e[b][a] = x;
                }
                BilinearForm { entries: e }
            })
            .collect()
    }

    /// The form picked for built-in quadratic algebras: Killing for so3,
    /// identity for abelian ones. Other built-ins carry none.
    pub fn default_form(&self, name: &str) -> Option<BilinearForm> {
        let base = name.split(':').next().unwrap_or(name);
        match base {
            "so3" => Some(self.killing_form()),
            "abelian" => Some(BilinearForm::identity(self.dim)),
            _ => None,
        }
    }
}

fn unit(i: usize) -> SparseVec {
    let mut v = SparseVec::new();
    v.insert(i, Rational::one());
    v
}

/// Symmetric bilinear form given by its Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearForm {
    entries: Vec<Vec<Rational>>,
}

impl BilinearForm {
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self, LieError> {
        let n = entries.len();
        for row in &entries {
            if row.len() != n {
                return Err(LieError::FormShape { expected: n, got: row.len() });
            }
        }
        let f = BilinearForm { entries };
        if !f.is_symmetric() {
            return Err(LieError::NotSymmetric);
        }
        Ok(f)
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect()).collect();
        BilinearForm { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        BilinearForm { entries: self.entries.iter().map(|r| r.iter().map(|x| x * c).collect()).collect() }
    }

    pub fn matrix(&self) -> SparseMatrix {
        SparseMatrix::from_dense(&self.entries)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|x| x.is_zero())
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.matrix().rank() == self.dim()
    }

    pub fn eval(&self, x: &SparseVec, y: &SparseVec) -> Rational {
        let mut s = Rational::zero();
        for (i, a) in x {
            for (j, b) in y {
                s += &self.entries[*i][*j] * a * b;
            }
        }
        s
    }

    pub fn is_invariant(&self, l: &LieAlgebra) -> bool {
        let n = l.dim();
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n)
                    .all(|c| self.eval(&l.bracket_basis(a, b), &unit(c)) == self.eval(&unit(a), &l.bracket_basis(b, c)))
            })
        })
    }

    /// Symmetric, nondegenerate and invariant for `l`.
    pub fn check_quadratic(&self, l: &LieAlgebra) -> Result<(), LieError> {
        if self.dim() != l.dim() {
            return Err(LieError::FormShape { expected: l.dim(), got: self.dim() });
        }
        if !self.is_symmetric() {
            return Err(LieError::NotSymmetric);
        }
        if !self.is_nondegenerate() {
            return Err(LieError::Singular);
        }
        if !self.is_invariant(l) {
            return Err(LieError::NotInvariant);
        }
        Ok(())
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(|r| r.iter().map(format_rational).collect()).collect()
    }
}

/// Casimir coefficients q^{ij}, the inverse matrix of κ.
pub fn casimir_matrix(kappa: &BilinearForm) -> Result<SparseMatrix, LieError> {
    kappa.matrix().inverse().map_err(|e| match e {
        LinAlgError::Singular => LieError::Singular,
        other => other.into(),
    })
}

/// q = Σ q^{ij} e_i e_j in Sym² g.
pub fn casimir(l: &LieAlgebra, kappa: &BilinearForm) -> Result<PolyVector, LieError> {
    let n = l.dim();
    if kappa.dim() != n {
        return Err(LieError::FormShape { expected: n, got: kappa.dim() });
    }
    let q = casimir_matrix(kappa)?;
    let mut out = PolyVector::zero(n);
    for (i, j, x) in q.entries() {
        let mut sym = vec![0u32; n];
        sym[i] += 1;
        sym[j] += 1;
        out.add_term(sym, vec![], x.clone());
    }
    Ok(out)
}

/// Ω = Σ_{a<b<c} κ(e_a, [e_b, e_c]) ε^a∧ε^b∧ε^c.
pub fn cartan_cocycle(l: &LieAlgebra, kappa: &BilinearForm) -> PolyVector {
    let n = l.dim();
    let mut out = PolyVector::zero(n);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let v = kappa.eval(&unit(a), &l.bracket_basis(b, c));
                out.add_term(vec![0; n], vec![a, b, c], v);
            }
        }
    }
    out
}

/// E = Σ e_i ⊗ ε^i.
pub fn euler_field(l: &LieAlgebra) -> PolyVector {
    let n = l.dim();
    let mut out = PolyVector::zero(n);
    for i in 0..n {
        let mut sym = vec![0; n];
        sym[i] = 1;
        out.add_term(sym, vec![i], Rational::one());
    }
    out
}

/// π = ½ Σ c^i_{jk} e_i ⊗ ε^j∧ε^k = Σ_{j<k} c^i_{jk} e_i ⊗ ε^j∧ε^k.
pub fn poisson_structure(l: &LieAlgebra) -> Result<PolyVector, LieError> {
    l.check_jacobi()?;
    Ok(poisson_structure_unchecked(l))
}

pub fn poisson_structure_unchecked(l: &LieAlgebra) -> PolyVector {
    let n = l.dim();
    let mut out = PolyVector::zero(n);
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                let x = l.c(i, j, k);
                if !x.is_zero() {
                    let mut sym = vec![0; n];
                    sym[i] = 1;
                    out.add_term(sym, vec![j, k], x.clone());
                }
            }
        }
    }
    out
}

/// Outcome of the search for a derivation with prescribed κ-symmetric part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationSearch {
    /// No solution: rank of the system and of the augmented system.
    Infeasible { rank: usize, augmented_rank: usize, unknowns: usize },
    /// A derivation D (column j holds D e_j) meeting the constraint.
    Witness(SparseMatrix),
}

impl DerivationSearch {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, DerivationSearch::Infeasible { .. })
    }
}

/// Looks for a derivation D with κ(Dx, y) + κ(x, Dy) = 2λ κ(x, y).
pub fn derivation_with_symmetric_part(
    l: &LieAlgebra,
    kappa: &BilinearForm,
    lambda: &Rational,
) -> Result<DerivationSearch, LieError> {
    kappa.check_quadratic(l)?;
    let n = l.dim();
    // Unknown D_{ab} (coefficient of e_a in D e_b) has index a*n + b.
    let var = |a: usize, b: usize| a * n + b;
    let mut rows: Vec<(SparseVec, Rational)> = Vec::new();
    // D[e_j, e_k] − [D e_j, e_k] − [e_j, D e_k] = 0, component i.
    for j in 0..n {
        for k in j + 1..n {
            for i in 0..n {
                let mut row = SparseVec::new();
                for m in 0..n {
                    crate::exactla::add_entry(&mut row, var(i, m), l.c(m, j, k).clone());
                    crate::exactla::add_entry(&mut row, var(m, j), -l.c(i, m, k).clone());
                    crate::exactla::add_entry(&mut row, var(m, k), -l.c(i, j, m).clone());
                }
                if !row.is_empty() {
                    rows.push((row, Rational::zero()));
                }
            }
        }
    }
    let two_lambda = lambda * int(2);
    for a in 0..n {
        for b in a..n {
            let mut row = SparseVec::new();
            for m in 0..n {
                crate::exactla::add_entry(&mut row, var(m, a), kappa.get(m, b).clone());
                crate::exactla::add_entry(&mut row, var(m, b), kappa.get(a, m).clone());
            }
            rows.push((row, &two_lambda * kappa.get(a, b)));
        }
    }
    let mut m = SparseMatrix::zeros(rows.len(), n * n);
    let mut rhs = vec![Rational::zero(); rows.len()];
    for (r, (row, b)) in rows.into_iter().enumerate() {
        for (c, x) in row {
            m.set(r, c, x);
        }
        rhs[r] = b;
    }
    match m.solve(&rhs)? {
        Some(x) => {
            let mut d = SparseMatrix::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    d.set(a, b, x[var(a, b)].clone());
                }
            }
            Ok(DerivationSearch::Witness(d))
        }
        None => {
            let rank = m.rank();
            let rhs_sparse: SparseVec =
                rhs.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, x.clone())).collect();
            let mut aug = SparseMatrix::zeros(m.nrows(), n * n + 1);
            for (r, c, x) in m.entries() {
                aug.set(r, c, x.clone());
            }
            for (r, x) in rhs_sparse {
                aug.set(r, n * n, x);
            }
            Ok(DerivationSearch::Infeasible { rank, augmented_rank: aug.rank(), unknowns: n * n })
        }
    }
}

/// Cartan-3-regularity: no derivation has κ-symmetric part equal to id.
/// Returns the search record; regular iff it is infeasible.
pub fn cartan_3_regular(l: &LieAlgebra, kappa: &BilinearForm) -> Result<DerivationSearch, LieError> {
    derivation_with_symmetric_part(l, kappa, &Rational::one())
}

/// Polynomial in the Casimir: coefficient k multiplies q^k.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CasimirPolynomial {
    coeffs: Vec<Rational>,
}

impl CasimirPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        CasimirPolynomial { coeffs }
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![Rational::zero(); k + 1];
        c[k] = Rational::one();
        CasimirPolynomial { coeffs: c }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * int(k as i64)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &Vec<Rational>, i: usize| v.get(i).cloned().unwrap_or_else(Rational::zero);
        Self::new((0..len).map(|i| get(&self.coeffs, i) + get(&other.coeffs, i)).collect())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::default();
        }
        let mut c = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    /// Image in Sym g under q ↦ the Casimir element.
    pub fn embed(&self, q: &PolyVector) -> PolyVector {
        let mut out = PolyVector::zero(q.dim());
        let mut power = PolyVector::one(q.dim());
        for c in &self.coeffs {
            if !c.is_zero() {
                out = &out + &power.scale(c);
            }
            power = power.wedge(q).expect("same ambient");
        }
        out
    }
}

pub fn abelian(n: usize) -> LieAlgebra {
    LieAlgebra::from_brackets(n, &[]).expect("valid")
}

/// [x, y] = z.
pub fn heisenberg3() -> LieAlgebra {
    LieAlgebra::from_brackets(3, &[(0, 1, unit(2))]).expect("valid").with_names(vec![
        "x".into(),
        "y".into(),
        "z".into(),
    ])
}

/// [e1,e2] = e3, [e2,e3] = e1, [e3,e1] = e2.
pub fn so3() -> LieAlgebra {
    LieAlgebra::from_brackets(3, &[(0, 1, unit(2)), (1, 2, unit(0)), (2, 0, unit(1))]).expect("valid")
}

/// gl(m) ⋉ K^m. Basis E_ab (index a*m + b) followed by f_a (index m² + a);
/// [E_ab, E_cd] = δ_bc E_ad − δ_da E_cb, [E_ab, f_c] = δ_bc f_a.
pub fn affine(m: usize) -> LieAlgebra {
    let e = |a: usize, b: usize| a * m + b;
    let f = |a: usize| m * m + a;
    let dim = m * m + m;
    let mut brackets: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let (x, y) = (e(a, b), e(c, d));
                    if x >= y {
                        continue;
                    }
                    let out = brackets.entry((x, y)).or_default();
                    if b == c {
                        crate::exactla::add_entry(out, e(a, d), Rational::one());
                    }
                    if d == a {
                        crate::exactla::add_entry(out, e(c, b), -Rational::one());
                    }
                }
            }
            for c in 0..m {
                if b == c {
                    brackets.entry((e(a, b), f(c))).or_default().insert(f(a), Rational::one());
                }
            }
        }
    }
    let list: Vec<(usize, usize, SparseVec)> =
        brackets.into_iter().filter(|(_, v)| !v.is_empty()).map(|((x, y), v)| (x, y, v)).collect();
    let mut names: Vec<String> = Vec::new();
    for a in 1..=m {
        for b in 1..=m {
            names.push(format!("E{a}{b}"));
        }
    }
    for a in 1..=m {
        names.push(format!("f{a}"));
    }
    LieAlgebra::from_brackets(dim, &list).expect("valid").with_names(names)
}

/// Names: `abelian`, `abelian:N`, `heisenberg3`, `so3`, `affine`, `affine:M`.
/// `n` is the default size for the parameterized families.
pub fn builtin(name: &str, n: usize) -> Result<LieAlgebra, LieError> {
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => {
            let v: usize = a.parse().map_err(|_| LieError::UnknownBuiltin(name.to_string()))?;
            (b, Some(v))
        }
        None => (name, None),
    };
    match base {
        "abelian" => Ok(abelian(arg.unwrap_or(n))),
        "heisenberg3" if arg.is_none() => Ok(heisenberg3()),
        "so3" if arg.is_none() => Ok(so3()),
        "affine" => Ok(affine(arg.unwrap_or(n))),
        _ => Err(LieError::UnknownBuiltin(name.to_string())),
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
struct BracketJson {
    i: usize,
    j: usize,
    out: BTreeMap<String, RationalJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(transparent)]
struct RationalJson(#[serde(with = "crate::exactla::rational_string")] Rational);

#[derive(Serialize, Deserialize, Debug, Clone)]
struct AlgebraJson {
    dim: usize,
    brackets: Vec<BracketJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<Vec<Vec<RationalJson>>>,
}

/// Parses the JSON algebra format (1-based indices, optional κ).
pub fn from_json(text: &str) -> Result<(LieAlgebra, Option<BilinearForm>), LieError> {
    let raw: AlgebraJson = serde_json::from_str(text).map_err(|e| LieError::Json(e.to_string()))?;
    let dim = raw.dim;
    let one_based = |x: usize| x.checked_sub(1).filter(|&v| v < dim).ok_or(LieError::IndexOutOfRange(x));
    let mut brackets = Vec::new();
    for b in &raw.brackets {
        let mut out = SparseVec::new();
        for (k, v) in &b.out {
            let idx: usize = k.parse().map_err(|_| LieError::Json(format!("bad output index {k:?}")))?;
            let idx = one_based(idx)?;
            if out.insert(idx, v.0.clone()).is_some() {
                return Err(LieError::Json(format!("repeated output index {k:?}")));
            }
        }
        out.retain(|_, v| !v.is_zero());
        brackets.push((one_based(b.i)?, one_based(b.j)?, out));
    }
    let l = LieAlgebra::from_brackets(dim, &brackets)?;
    let kappa = match raw.kappa {
        Some(rows) => {
            Some(BilinearForm::new(rows.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect())?)
        }
        None => None,
    };
    if let Some(k) = &kappa {
        if k.dim() != dim {
            return Err(LieError::FormShape { expected: dim, got: k.dim() });
        }
    }
    Ok((l, kappa))
}

pub fn to_json(l: &LieAlgebra, kappa: Option<&BilinearForm>) -> String {
    let n = l.dim();
    let mut brackets = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let v = l.bracket_basis(j, k);
            if !v.is_empty() {
                let out = v.into_iter().map(|(i, x)| ((i + 1).to_string(), RationalJson(x))).collect();
                brackets.push(BracketJson { i: j + 1, j: k + 1, out });
            }
        }
    }
    let kappa = kappa.map(|k| k.entries().iter().map(|r| r.iter().cloned().map(RationalJson).collect()).collect());
    serde_json::to_string_pretty(&AlgebraJson { dim: n, brackets, kappa }).expect("serializable")
}

/// Parses a rational given either as a JSON string or integer.
pub fn rational_from_value(v: &serde_json::Value) -> Result<Rational, LieError> {
    match v {
        serde_json::Value::String(s) => Ok(parse_rational(s)?),
        serde_json::Value::Number(n) => {
            n.as_i64().map(int).ok_or_else(|| LieError::Json(format!("non-integer number {n}")))
        }
        other => Err(LieError::Json(format!("expected rational, got {other}"))),
    }
}
