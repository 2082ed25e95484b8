//! Random hermitian operators and states for property checks.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;

use crate::operator::{certify_hermitian, HermitianOperator, Operator, HERMITIAN_TOL};
use crate::spectral::eigendecompose;
use crate::state::{normalize, StateVector};
use crate::trace_algebra::TraceScalar;

/// Scalar with both components uniform in `[-scale, scale)`.
pub fn random_scalar<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> TraceScalar {
    Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// Hermitian matrix with entries of modulus at most about 1; exactly hermitian.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = random_scalar(1.0, rng);
            entries[i * dim + j] = z;
            entries[j * dim + i] = z.conj();
        }
    }
    let op = Operator::from_fn(dim, |i, j| entries[i * dim + j]);
    certify_hermitian(&op, HERMITIAN_TOL).expect("constructed hermitian")
}

/// Normalized state with random complex coefficients.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let raw = StateVector::new((0..dim).map(|_| random_scalar(1.0, rng)).collect());
        if let Ok(psi) = normalize(&raw) {
            return psi;
        }
    }
}

/// `size` operators sharing one random eigenbasis, with eigenvalues drawn
/// from the integers `-2..=2` so that degeneracies are common.
pub fn random_commuting_family<R: Rng + ?Sized>(dim: usize, size: usize, rng: &mut R) -> Vec<HermitianOperator> {
    let basis = eigendecompose(&random_hermitian(dim, rng)).expect("nonempty operator");
    let v = basis.vectors();
    (0..size)
        .map(|_| {
            let values: Vec<f64> = (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect();
            let scaled = Mat::from_fn(dim, dim, |i, k| v[(i, k)] * values[k]);
            let m = &scaled * v.adjoint();
            let op = Operator::from_mat(m, None).expect("square").hermitian_part();
            certify_hermitian(&op, HERMITIAN_TOL).expect("hermitian part")
        })
        .collect()
}
