use std::f64::consts::PI;

use hilbert_workbench::dynamics::{
    build_grid_model, build_oscillator_ladder, eq3_check, evolve_state, heisenberg_rhs, Potential,
};
use hilbert_workbench::measurement::{born_probabilities, measure_once, repeat_experiment, sample_stream};
use hilbert_workbench::operator::{
    av_decompose, certify_hermitian, dispersion, expect_c, expect_r, sym_antisym_split, trace_form_expectation,
    HERMITIAN_TOL,
};
use hilbert_workbench::polynomial::PolynomialObservable;
use hilbert_workbench::random::{random_commuting_family, random_hermitian, random_scalar, random_state};
use hilbert_workbench::spectral::{apply_function, eigendecompose, verify_dispersion_free, vn_generator};
use hilbert_workbench::state::{complex_inner, normalize, real_inner, superpose};
use hilbert_workbench::{GridMeta, StateVector, TraceScalar};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_grid_state(grid: &GridMeta, r: &mut ChaCha8Rng) -> StateVector {
    let coeffs: Vec<TraceScalar> = (0..grid.points()).map(|_| random_scalar(1.0, r)).collect();
    normalize(&StateVector::on_grid(coeffs, grid.clone()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_form_is_symmetric_and_rotation_orthogonal(seed in any::<u64>(), dim in 1usize..12) {
        let mut r = rng(seed);
        let f = random_state(dim, &mut r).scaled(random_scalar(3.0, &mut r));
        let g = random_state(dim, &mut r);
        prop_assert!((real_inner(&f, &g).unwrap() - real_inner(&g, &f).unwrap()).abs() <= 1e-12);
        prop_assert!(real_inner(&f, &f.i_rotated()).unwrap().abs() <= 1e-12);
        // independent summation of 2·Re Σ conj(f_j) g_j
        let direct: f64 = (0..dim).map(|j| 2.0 * (f.coeff(j).conj() * g.coeff(j)).re).sum();
        prop_assert!((real_inner(&f, &g).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        let cs = complex_inner(&f, &g).unwrap().norm();
        prop_assert!(cs <= f.norm() * g.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn weak_commutativity(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let b = random_hermitian(dim, &mut r);
        let psi = random_state(dim, &mut r);
        let value = trace_form_expectation(&a.commutator(&b).unwrap(), &psi).unwrap();
        prop_assert!(value.abs() <= 1e-10);
    }

    #[test]
    fn real_expectation_of_products_is_symmetric(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let b = random_hermitian(dim, &mut r);
        let psi = random_state(dim, &mut r);
        let ab = trace_form_expectation(&a.mul(&b).unwrap(), &psi).unwrap();
        let ba = trace_form_expectation(&b.mul(&a).unwrap(), &psi).unwrap();
        let anti = certify_hermitian(&a.mul(&b).unwrap().add(&b.mul(&a).unwrap()).unwrap(), HERMITIAN_TOL).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-10);
        prop_assert!((ab - expect_c(&anti, &psi).unwrap()).abs() <= 1e-10);
        prop_assert!((expect_r(&a, &psi).unwrap() - 2.0 * expect_c(&a, &psi).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn dispersion_and_av_agree(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let psi = random_state(dim, &mut r);
        let d = dispersion(&a, &psi).unwrap();
        let mean = expect_c(&a, &psi).unwrap();
        let second = expect_c(&a.square().unwrap(), &psi).unwrap();
        prop_assert!((d * d + mean * mean - second).abs() <= 1e-9);
        let av = av_decompose(&a, &psi).unwrap();
        prop_assert!((av.beta - d).abs() <= 1e-12);
        prop_assert!(av.beta >= 0.0);
        let (s, dd) = sym_antisym_split(&a, &random_hermitian(dim, &mut r)).unwrap();
        prop_assert!(certify_hermitian(s.operator(), HERMITIAN_TOL).is_ok());
        prop_assert!(certify_hermitian(dd.operator(), HERMITIAN_TOL).is_ok());
    }

    #[test]
    fn decompositions_are_dispersion_free(seed in any::<u64>(), dim in 1usize..=64) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let dec = eigendecompose(&a).unwrap();
        let norm = dec.spectral_norm();
        prop_assert!(verify_dispersion_free(&dec, &a).unwrap() <= 1e-8 * (1.0 + norm * norm).sqrt());
        prop_assert!(dec.eigen_residual(&a).unwrap() <= 1e-9 * (1.0 + norm));
        prop_assert!(dec.orthonormality_error() <= 1e-10);
        prop_assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn born_weights_are_complete(seed in any::<u64>(), dim in 2usize..=32) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let psi = random_state(dim, &mut r);
        let dec = eigendecompose(&a).unwrap();
        let total: f64 = born_probabilities(&dec, &psi).unwrap().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn collapse_is_idempotent(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let family = random_commuting_family(dim, 1, &mut r);
        let psi = random_state(dim, &mut r);
        let dec = eigendecompose(&family[0]).unwrap();
        let mut stream = sample_stream(seed, 0);
        let first = measure_once(&dec, &psi, &mut stream).unwrap();
        let weights = born_probabilities(&dec, &first.collapsed).unwrap();
        prop_assert!((weights[first.group_index].1 - 1.0).abs() <= 1e-10);
        for _ in 0..5 {
            prop_assert_eq!(measure_once(&dec, &first.collapsed, &mut stream).unwrap().group_index, first.group_index);
        }
    }

    #[test]
    fn generator_properties(seed in any::<u64>(), dim in 2usize..=8, size in 1usize..=3) {
        let mut r = rng(seed);
        let family = random_commuting_family(dim, size, &mut r);
        let result = vn_generator(&family).unwrap();
        let spectrum = eigendecompose(&result.r).unwrap();
        for g in 1..spectrum.groups().len() {
            let gap = spectrum.group_value(g) - spectrum.group_value(g - 1);
            prop_assert!((gap - 1.0).abs() <= 1e-9);
        }
        for (i, a) in family.iter().enumerate() {
            prop_assert!(result.r.commutator(a).unwrap().max_abs() <= 1e-9);
            prop_assert!(result.function_of_generator(i).unwrap().max_diff(a) <= 1e-9);
        }
    }

    #[test]
    fn function_then_inverse_returns(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let dec = eigendecompose(&a).unwrap();
        let exp_a = certify_hermitian(&apply_function(&dec, |x| Complex64::new(x.exp(), 0.0)).unwrap(), 1e-9).unwrap();
        let back = apply_function(&eigendecompose(&exp_a).unwrap(), |y| Complex64::new(y.ln(), 0.0)).unwrap();
        prop_assert!(back.max_diff(&a) <= 1e-8);
    }

    #[test]
    fn evolution_conserves_norm_and_energy(seed in any::<u64>(), points in 8usize..48, t in 0.0f64..5.0) {
        let mut r = rng(seed);
        let grid = GridMeta::new(1.0, points, 1.0, 1.0).unwrap();
        let model = build_grid_model(&grid, Potential::InfiniteWell).unwrap();
        let psi0 = random_grid_state(&grid, &mut r);
        let psi = evolve_state(&model, &psi0, t).unwrap();
        let e0 = expect_c(model.hamiltonian(), &psi0).unwrap();
        let e1 = expect_c(model.hamiltonian(), &psi).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() <= 1e-8);
        prop_assert!((e1 - e0).abs() <= 1e-8 * (1.0 + e0.abs()));
    }

    #[test]
    fn heisenberg_rhs_is_hermitian(seed in any::<u64>(), dim in 2usize..=8, hbar in 0.1f64..10.0) {
        let mut r = rng(seed);
        let h = random_hermitian(dim, &mut r);
        let a = random_hermitian(dim, &mut r);
        prop_assert!(heisenberg_rhs(&h, &a, hbar).is_ok());
    }

    #[test]
    fn quadratic_hamiltonian_bracket_is_exact(
        seed in any::<u64>(),
        dim in 10usize..=16,
        mass in 0.5f64..2.0,
        omega in 0.5f64..2.0,
        c20 in -2.0f64..2.0, c02 in -2.0f64..2.0, c11 in -2.0f64..2.0, c10 in -2.0f64..2.0, c01 in -2.0f64..2.0,
    ) {
        let mut r = rng(seed);
        let model = build_oscillator_ladder(dim, mass, omega, 1.0).unwrap();
        let h = PolynomialObservable::oscillator_hamiltonian(mass, omega);
        let a = PolynomialObservable::from_terms([((2, 0), c20), ((0, 2), c02), ((1, 1), c11), ((1, 0), c10), ((0, 1), c01)]).unwrap();
        let levels: Vec<StateVector> = (0..4).map(|k| StateVector::basis(dim, k)).collect();
        let weights: Vec<TraceScalar> = (0..4).map(|_| random_scalar(1.0, &mut r)).collect();
        let psi = normalize(&superpose(&levels, &weights).unwrap()).unwrap();
        prop_assert!(eq3_check(&a, &h, &model, &psi).unwrap().gap <= 1e-9);
    }
}

#[test]
fn well_error_drops_fourfold_when_spacing_halves() {
    for (coarse, fine) in [(31usize, 63usize), (63, 127), (127, 255)] {
        let err = |points: usize| {
            let grid = GridMeta::new(1.0, points, 1.0, 1.0).unwrap();
            let model = build_grid_model(&grid, Potential::InfiniteWell).unwrap();
            let exact = PI * PI / 2.0;
            (model.spectrum().unwrap().eigenvalues()[0] - exact).abs() / exact
        };
        let ratio = err(coarse) / err(fine);
        assert!((3.5..4.5).contains(&ratio), "{coarse} -> {fine}: ratio {ratio}");
    }
}

/// Empirical mean and population variance against 3σ bands built from the
/// Born distribution's own central moments.
#[test]
fn ensemble_moments_converge() {
    for (case, n) in [(0u64, 100u64), (1, 100), (2, 10_000), (3, 10_000)] {
        let mut r = rng(100 + case);
        let dim = r.random_range(2..=6);
        let a = random_hermitian(dim, &mut r);
        let psi = random_state(dim, &mut r);
        let dec = eigendecompose(&a).unwrap();
        let probs = born_probabilities(&dec, &psi).unwrap();
        let mu: f64 = probs.iter().map(|(v, p)| v * p).sum();
        let var: f64 = probs.iter().map(|(v, p)| (v - mu).powi(2) * p).sum();
        let mu4: f64 = probs.iter().map(|(v, p)| (v - mu).powi(4) * p).sum();
        assert!((mu - expect_c(&a, &psi).unwrap()).abs() < 1e-10);
        assert!((var - dispersion(&a, &psi).unwrap().powi(2)).abs() < 1e-10);

        let report = repeat_experiment(|| Ok(psi.clone()), &a, n, 7 + case).unwrap();
        let nf = n as f64;
        let mean_band = 3.0 * (var / nf).sqrt();
        let var_band = 3.0 * ((mu4 - var * var) / nf).sqrt() + var / nf;
        assert!((report.empirical_mean - mu).abs() <= mean_band, "case {case}: mean {} vs {mu}", report.empirical_mean);
        let emp_var = report.empirical_std.powi(2);
        assert!((emp_var - var).abs() <= var_band, "case {case}: variance {emp_var} vs {var}");
    }
}

#[test]
fn ensembles_are_deterministic_under_seed() {
    let mut r = rng(11);
    let a = random_hermitian(5, &mut r);
    let psi = random_state(5, &mut r);
    let first = repeat_experiment(|| Ok(psi.clone()), &a, 2000, 3).unwrap();
    let second = repeat_experiment(|| Ok(psi.clone()), &a, 2000, 3).unwrap();
    assert_eq!(first, second);
    let other = repeat_experiment(|| Ok(psi.clone()), &a, 2000, 4).unwrap();
    assert_ne!(first.counts, other.counts);
}

#[test]
fn two_point_outcomes_never_fall_between() {
    let a = certify_hermitian(&hilbert_workbench::Operator::diagonal(&[2.5, -0.5]), HERMITIAN_TOL).unwrap();
    let mut r = rng(12);
    for _ in 0..20 {
        let psi = random_state(2, &mut r);
        let report = repeat_experiment(|| Ok(psi.clone()), &a, 500, r.random()).unwrap();
        assert!(report.observed().all(|(v, _)| v == 2.5 || v == -0.5));
        assert_eq!(report.counts.iter().sum::<u64>(), 500);
    }
}
