//! Shared workloads for the criterion benches.

use formality_core::dgla::ReducedQuadratic;
use formality_core::freelie::{sigma_nonexact, FreeReduced};
use formality_core::liealg::{heisenberg3, so3};
use formality_core::linfty::{check_linfty, Cutoff, DglaPackage, GradedBasis, TaylorMap, Transfer};
use formality_core::obstruction::c3_certificate;
use formality_core::polyvec::CeComplex;

/// Cohomology table of the Heisenberg algebra up to polynomial degree `dmax`.
pub fn heisenberg_cohomology(dmax: usize) -> usize {
    let cx = CeComplex::new(heisenberg3(), dmax).expect("valid cutoff");
    cx.cohomology_table().expect("in range").values().sum()
}

/// Transferred so(3) structure on the reduced model, checked for 𝒟² = 0.
pub fn so3_transfer(arity: usize, weight: u32) -> usize {
    let l = so3();
    let g = ReducedQuadratic::new(&l, &l.killing_form(), weight).expect("quadratic");
    let c = g.contraction();
    let u = GradedBasis::from_contraction(&c);
    let (b, br) = (DglaPackage::differential(&g), DglaPackage::bracket(&g));
    let t = Transfer::new(u.clone(), GradedBasis::from_dgla(&g), &c, &b, &br).expect("contraction");
    let cutoff = Cutoff::new(arity, weight);
    let d = TaylorMap::tabulate(&t.d_map(), &u, cutoff).expect("in range");
    check_linfty(&d, &u, cutoff).expect("square zero");
    d.entries().count()
}

/// c₃ certificate for so(3) with the Killing form.
pub fn so3_c3(dmax: usize) -> String {
    let l = so3();
    let cert = c3_certificate(&l, Some(&l.killing_form()), dmax).expect("certificate");
    cert["verdict"].as_str().unwrap_or_default().to_string()
}

/// Size of the free reduced DGLA plus the σ exactness solve.
pub fn free_sigma(n: usize, tmax: usize) -> (usize, usize) {
    let g = FreeReduced::new(n, tmax).expect("n ≥ 2");
    let h = g.contraction().h_dim();
    (h, sigma_nonexact(n, tmax).expect("tmax ≥ 3").rank)
}
