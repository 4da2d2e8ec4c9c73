//! Exact homological algebra for L∞ formality questions: Schouten calculus
//! and Chevalley–Eilenberg cohomology of finite-dimensional Lie algebras,
//! homotopy contractions and perturbation, L∞ transfer, the characteristic
//! 3-class, and the derivation complex of a free associative algebra.

pub mod contraction;
pub mod dgla;
pub mod exactla;
pub mod freelie;
pub mod liealg;
pub mod linfty;
pub mod obstruction;
pub mod polyvec;

pub use contraction::{Contraction, FiniteComplex, GradedMap, GradedSpace};
pub use dgla::{Dgla, DglaContraction};
pub use exactla::{Rational, SparseMatrix, SparseVec};
pub use liealg::{BilinearForm, CasimirPolynomial, LieAlgebra};
pub use linfty::{Cutoff, GradedBasis, Multilinear, TaylorMap, Word, WordSum};
pub use polyvec::{Bidegree, CeComplex, PolyVector};
