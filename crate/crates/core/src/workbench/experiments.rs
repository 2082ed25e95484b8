//! The canned experiments behind each `workbench` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    build_grid_model, build_oscillator_ladder, eq3_check, evolve_state, well_level, Potential,
};
use crate::error::Result;
use crate::measurement::{cat_experiment, reconstruct_density, repeat_experiment, two_point_bands};
use crate::operator::{
    av_decompose, certify_hermitian, dispersion, expect_c, sym_antisym_split, trace_form_expectation,
    HermitianOperator, Operator, HERMITIAN_TOL,
};
use crate::polynomial::PolynomialObservable;
use crate::random::{random_commuting_family, random_hermitian, random_scalar, random_state};
use crate::spectral::{eigendecompose, verify_dispersion_free, vn_generator, SpectralDecomposition};
use crate::state::{grid_sample, normalize, superpose, GridMeta, StateVector};
use crate::trace_algebra::{minimal_poly_residual, norm_form, trace};

use super::config::{Experiment, ExperimentConfig};
use super::output::{Check, ResultDoc, ResultTable};

/// Largest boundary amplitude `|ψ(x)|` at which a free-packet row is still
/// treated as uncontaminated by the walls.
pub const BOUNDARY_AMPLITUDE_TOL: f64 = 1e-6;

/// Number of levels compared by `well-spectrum`.
pub const WELL_LEVELS: usize = 5;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultDoc> {
    let (table, checks) = match cfg.experiment {
        Experiment::Cat => cat(cfg)?,
        Experiment::WellSpectrum => well_spectrum(cfg)?,
        Experiment::Spread => spread(cfg)?,
        Experiment::Eq3 => eq3(cfg)?,
        Experiment::VnGenerator => generator(cfg)?,
        Experiment::EnsembleDensity => ensemble_density(cfg)?,
        Experiment::Claims => claims(cfg)?,
    };
    Ok(ResultDoc { config: cfg.clone(), table, checks })
}

type Outcome = Result<(ResultTable, Vec<Check>)>;

fn grid_of(cfg: &ExperimentConfig, points: usize) -> Result<GridMeta> {
    GridMeta::new(cfg.length, points, cfg.mass, cfg.hbar)
}

fn cat(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let report = cat_experiment(cfg.a1, cfg.a2, cfg.n, cfg.seed)?;
    let mut table = ResultTable::new(&["sample", "outcome"]);
    for (i, &v) in report.outcomes.iter().enumerate() {
        table.push(vec![i.into(), v.into()]);
    }
    let off_spectrum = report.outcomes.iter().filter(|&&v| v != cfg.a1 && v != cfg.a2).count();
    let (mean_tol, std_tol) = two_point_bands(cfg.a1, cfg.a2, cfg.n, tol.sigma);
    let scale = 1.0 + cfg.a1.abs().max(cfg.a2.abs());
    let rerun = cat_experiment(cfg.a1, cfg.a2, cfg.n, cfg.seed)?;
    let checks = vec![
        Check::at_most("outcomes_off_spectrum", off_spectrum as f64, 0.0),
        Check::at_most("alpha_vs_midpoint", (report.alpha - 0.5 * (cfg.a1 + cfg.a2)).abs(), tol.av * scale),
        Check::at_most("beta_vs_half_gap", (report.beta - 0.5 * (cfg.a1 - cfg.a2).abs()).abs(), tol.av * scale),
        Check::at_most("empirical_mean_vs_alpha", (report.report.empirical_mean - report.alpha).abs(), mean_tol),
        Check::at_most("empirical_std_vs_beta", (report.report.empirical_std - report.beta).abs(), std_tol),
        Check::holds("collapse_idempotent", report.idempotent),
        Check::holds("seed_reproducible", rerun.outcomes == report.outcomes),
    ];
    Ok((table, checks))
}

/// Relative errors of the lowest levels of the grid well against the box levels.
pub fn well_level_errors(grid: &GridMeta, levels: usize) -> Result<Vec<(f64, f64)>> {
    let model = build_grid_model(grid, Potential::InfiniteWell)?;
    let dec = model.spectrum()?;
    Ok((0..levels)
        .map(|k| {
            let exact = well_level(k + 1, grid.mass(), grid.length(), grid.hbar());
            (dec.eigenvalues()[k], exact)
        })
        .collect())
}

fn decomposition_checks(label: &str, dec: &SpectralDecomposition, a: &HermitianOperator, cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let norm = dec.spectral_norm();
    let disp = verify_dispersion_free(dec, a)?;
    let residual = dec.eigen_residual(a)?;
    Ok(vec![
        Check::at_most(format!("{label}_eigenvector_dispersion"), disp / (1.0 + norm * norm).sqrt(), cfg.tolerances.disp),
        Check::at_most(format!("{label}_eigen_residual"), residual / (1.0 + norm), cfg.tolerances.eig),
        Check::at_most(format!("{label}_orthonormality"), dec.orthonormality_error(), cfg.tolerances.eig),
    ])
}

fn well_spectrum(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let grid = grid_of(cfg, cfg.grid_n)?;
    let model = build_grid_model(&grid, Potential::InfiniteWell)?;
    let dec = model.spectrum()?;
    let mut table = ResultTable::new(&["n", "numeric", "analytic", "rel_err"]);
    let mut checks = Vec::new();
    for k in 0..WELL_LEVELS.min(grid.points()) {
        let numeric = dec.eigenvalues()[k];
        let analytic = well_level(k + 1, cfg.mass, cfg.length, cfg.hbar);
        let rel = (numeric - analytic).abs() / analytic;
        table.push(vec![(k + 1).into(), numeric.into(), analytic.into(), rel.into()]);
        checks.push(Check::at_most(format!("level_{}_rel_err", k + 1), rel, tol.spectrum));
    }
    checks.extend(decomposition_checks("hamiltonian", dec, model.hamiltonian(), cfg)?);

    // coarse grid with (close to) twice the spacing
    let coarse_points = (cfg.grid_n + 1) / 2 - 1;
    if coarse_points >= crate::state::MIN_GRID_POINTS {
        let coarse = grid_of(cfg, coarse_points)?;
        let (num_c, exact) = well_level_errors(&coarse, 1)?[0];
        let err_coarse = (num_c - exact).abs();
        let err_fine = (dec.eigenvalues()[0] - exact).abs();
        checks.push(Check::at_least("ground_error_reduction_on_refinement", err_coarse / err_fine, tol.refine));
    }
    Ok((table, checks))
}

/// Normalized Gaussian `exp(−(x − x0)²/(4σ²))` sampled on the grid.
pub fn gaussian_packet(grid: &GridMeta, center: f64, sigma: f64) -> Result<StateVector> {
    normalize(&grid_sample(|x| (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp(), grid)?)
}

/// Largest `|ψ|` at the two wall-adjacent grid points.
pub fn boundary_amplitude(psi: &StateVector) -> f64 {
    psi.coeff(0).norm().max(psi.coeff(psi.dim() - 1).norm())
}

fn spread(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let grid = grid_of(cfg, cfg.grid_n)?;
    let free = build_grid_model(&grid, Potential::Free)?;
    let sigma0 = cfg.packet_sigma();
    let psi0 = gaussian_packet(&grid, 0.5 * cfg.length, sigma0)?;
    let h = free.hamiltonian();
    let energy0 = expect_c(h, &psi0)?;

    let mut table = ResultTable::new(&["t", "dx", "dx_free", "rel_err", "boundary_amplitude"]);
    let mut checks = Vec::new();
    let mut energy_drift: f64 = 0.0;
    for (i, &t) in cfg.times.iter().enumerate() {
        let psi = evolve_state(&free, &psi0, t)?;
        let dx = dispersion(free.position(), &psi)?;
        let predicted = cfg.predicted_width(t);
        let rel = (dx - predicted).abs() / predicted;
        let edge = boundary_amplitude(&psi);
        table.push(vec![t.into(), dx.into(), predicted.into(), rel.into(), edge.into()]);
        if edge < BOUNDARY_AMPLITUDE_TOL {
            checks.push(Check::at_most(format!("width_rel_err_t{i}"), rel, tol.spread));
        }
        energy_drift = energy_drift.max((expect_c(h, &psi)? - energy0).abs() / energy0.abs());
    }
    checks.push(Check::at_most("energy_drift", energy_drift, tol.eig));

    let t_double = cfg.doubling_time();
    let doubled = dispersion(free.position(), &evolve_state(&free, &psi0, t_double)?)?;
    checks.push(Check::at_most("width_at_doubling_time", (doubled / (2.0 * sigma0) - 1.0).abs(), tol.doubling));

    let well = build_grid_model(&grid, Potential::InfiniteWell)?;
    let ground = well.spectrum()?.eigenvector(0);
    let width0 = dispersion(well.position(), &ground)?;
    let mut drift: f64 = 0.0;
    for &t in cfg.times.iter().chain(std::iter::once(&t_double)) {
        let psi = evolve_state(&well, &ground, t)?;
        drift = drift.max((dispersion(well.position(), &psi)? - width0).abs());
    }
    checks.push(Check::at_most("stationary_width_drift", drift, tol.stationary));
    Ok((table, checks))
}

/// Observables used by the `eq3` experiment, with their row labels.
pub fn eq3_observables() -> Vec<(&'static str, PolynomialObservable)> {
    let m = |a, b| PolynomialObservable::monomial(a, b, 1.0).expect("low degree");
    vec![
        ("q", m(1, 0)),
        ("p", m(0, 1)),
        ("q^2", m(2, 0)),
        ("p^2", m(0, 2)),
        ("qp", m(1, 1)),
        ("q^3", m(3, 0)),
        ("q^2p", m(2, 1)),
    ]
}

fn eq3(cfg: &ExperimentConfig) -> Outcome {
    let model = build_oscillator_ladder(cfg.dim, cfg.mass, cfg.omega, cfg.hbar)?;
    let h = PolynomialObservable::oscillator_hamiltonian(cfg.mass, cfg.omega);
    // random superposition of the four lowest ladder levels
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let levels: Vec<StateVector> = (0..4).map(|k| StateVector::basis(cfg.dim, k)).collect();
    let weights: Vec<Complex64> = (0..4).map(|_| random_scalar(1.0, &mut rng)).collect();
    let psi = normalize(&superpose(&levels, &weights)?)?;

    let mut table = ResultTable::new(&["observable", "lhs", "rhs", "gap"]);
    let mut checks = Vec::new();
    let mut observables = eq3_observables();
    observables.push(("H", h.clone()));
    for (name, a) in observables {
        let r = eq3_check(&a, &h, &model, &psi)?;
        table.push(vec![name.into(), r.lhs.into(), r.rhs.into(), r.gap.into()]);
        checks.push(Check::at_most(format!("gap_{name}"), r.gap, cfg.tolerances.eq3));
    }
    Ok((table, checks))
}

/// Worst errors over `families` random commuting families:
/// `(max |f_i(R) − A_i|, max |[R, A_i]|, smallest gap between labels of R)`.
pub fn generator_trials(families: u64, seed: u64) -> Result<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reconstruction: f64 = 0.0;
    let mut commutator: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..families {
        let dim = rng.random_range(2..=8);
        let size = rng.random_range(2..=3);
        let family = random_commuting_family(dim, size, &mut rng);
        let result = vn_generator(&family)?;
        for (i, a) in family.iter().enumerate() {
            reconstruction = reconstruction.max(result.function_of_generator(i)?.max_diff(a));
            commutator = commutator.max(result.r.commutator(a)?.max_abs());
        }
        let spectrum = eigendecompose(&result.r)?;
        for g in 1..spectrum.groups().len() {
            min_gap = min_gap.min(spectrum.group_value(g) - spectrum.group_value(g - 1));
        }
    }
    Ok((reconstruction, commutator, min_gap))
}

fn generator(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let herm = |v: &[f64]| certify_hermitian(&Operator::diagonal(v), HERMITIAN_TOL);
    let family = vec![herm(&[1.0, 1.0, 2.0])?, herm(&[3.0, 4.0, 4.0])?];
    let result = vn_generator(&family)?;
    let mut table = ResultTable::new(&["label", "a", "b"]);
    for (l, _) in result.labels.iter().enumerate() {
        table.push(vec![l.into(), result.tables[0][l].into(), result.tables[1][l].into()]);
    }
    let expected_r = Operator::diagonal(&[0.0, 1.0, 2.0]);
    let mut checks = vec![Check::at_most("example_generator", result.r.max_diff(&expected_r), tol.generator)];
    for (i, a) in family.iter().enumerate() {
        checks.push(Check::at_most(
            format!("example_reconstruction_{i}"),
            result.function_of_generator(i)?.max_diff(a),
            tol.generator,
        ));
    }
    let (reconstruction, commutator, gap) = generator_trials(cfg.n, cfg.seed)?;
    checks.push(Check::at_most("random_reconstruction", reconstruction, tol.generator));
    checks.push(Check::at_most("random_generator_commutator", commutator, tol.generator));
    checks.push(Check::at_least("random_generator_label_gap", gap, 1.0 - tol.generator));
    Ok((table, checks))
}

/// Box ground-state density `(2h/L)·sin²(πx_j/L)` per grid cell. On the
/// Dirichlet grid these sum to exactly one.
pub fn ground_state_density(grid: &GridMeta) -> Vec<f64> {
    let l = grid.length();
    let k = std::f64::consts::PI / l;
    grid.positions().map(|x| 2.0 * grid.spacing() / l * (k * x).sin().powi(2)).collect()
}

fn ensemble_density(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let grid = grid_of(cfg, cfg.grid_n)?;
    let model = build_grid_model(&grid, Potential::InfiniteWell)?;
    let psi = model.spectrum()?.eigenvector(0);
    let expected = ground_state_density(&grid);
    let report = repeat_experiment(|| Ok(psi.clone()), model.position(), cfg.n, cfg.seed)?;
    let density = reconstruct_density(&report, &grid)?;

    let n = cfg.n as f64;
    let mut table = ResultTable::new(&["x", "frequency", "expected", "envelope"]);
    let mut outside = 0usize;
    let mut worst: f64 = 0.0;
    let mut max_deviation: f64 = 0.0;
    for (j, &(x, freq)) in density.iter().enumerate() {
        let p = expected[j];
        let envelope = tol.sigma * (p * (1.0 - p) / n).sqrt();
        if (freq - p).abs() > envelope {
            outside += 1;
        }
        let sd = (p * (1.0 - p) / n).sqrt();
        let deviation = (freq - p).abs();
        max_deviation = max_deviation.max(deviation);
        worst = worst.max(if sd > 0.0 { deviation / sd } else if deviation > 0.0 { f64::INFINITY } else { 0.0 });
        table.push(vec![x.into(), freq.into(), p.into(), envelope.into()]);
    }
    let total: f64 = report.counts.iter().sum::<u64>() as f64 / n;

    // a state confined to one cell lands there
    let cell = grid.points() / 2;
    let mut spike = vec![Complex64::new(0.0, 0.0); grid.points()];
    spike[cell] = Complex64::new(1.0 / grid.spacing().sqrt(), 0.0);
    let spike = StateVector::on_grid(spike, grid.clone())?;
    let spike_n = cfg.n.min(1000);
    let spike_report = repeat_experiment(|| Ok(spike.clone()), model.position(), spike_n, cfg.seed)?;
    let concentration = spike_report.counts[cell] as f64 / spike_n as f64;

    let checks = vec![
        Check::at_most("cells_outside_envelope", outside as f64, 0.0),
        Check::at_most("worst_cell_deviation_in_sigmas", worst, tol.sigma),
        Check::at_most("max_cell_deviation", max_deviation, 5.0 / n.sqrt()),
        Check::at_most("total_frequency_error", (total - 1.0).abs(), 1e-12),
        Check::at_least("single_cell_concentration", concentration, tol.concentration),
    ];
    Ok((table, checks))
}

fn claims(cfg: &ExperimentConfig) -> Outcome {
    let tol = &cfg.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = ResultTable::new(&["claim", "trials", "worst", "threshold"]);
    let mut checks = Vec::new();
    let mut record = |name: &str, trials: u64, check: Check| {
        table.push(vec![name.into(), (trials as usize).into(), check.value.into(), check.threshold.into()]);
        checks.push(check);
    };

    let trials = 1000;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let dim = rng.random_range(2..=8);
        let a = random_hermitian(dim, &mut rng);
        let b = random_hermitian(dim, &mut rng);
        let psi = random_state(dim, &mut rng);
        worst = worst.max(trace_form_expectation(&a.commutator(&b)?, &psi)?.abs());
    }
    record("weak-commutativity", trials, Check::at_most("weak_commutativity", worst, tol.comm));

    let trials = 500;
    let (mut residual, mut overlap, mut beta_gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let dim = rng.random_range(2..=8);
        let a = random_hermitian(dim, &mut rng);
        let psi = random_state(dim, &mut rng);
        let av = av_decompose(&a, &psi)?;
        let a_psi = a.apply(&psi)?;
        let rebuilt = av.reconstruct(&psi);
        let diff: f64 = (0..dim).map(|j| (a_psi.coeff(j) - rebuilt.coeff(j)).norm_sqr()).sum::<f64>().sqrt();
        residual = residual.max(diff);
        if let Some(perp) = &av.orthogonal {
            overlap = overlap.max(crate::state::complex_inner(&psi, perp)?.norm());
        }
        beta_gap = beta_gap.max((av.beta - dispersion(&a, &psi)?).abs());
    }
    record("av-reconstruction", trials, Check::at_most("av_reconstruction", residual, tol.av));
    record("av-orthogonality", trials, Check::at_most("av_orthogonality", overlap, tol.ortho));
    record("av-beta-is-dispersion", trials, Check::at_most("av_beta_is_dispersion", beta_gap, tol.av));

    let trials = 100;
    let (mut disp, mut resid, mut ortho): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let dim = rng.random_range(2..=64);
        let a = random_hermitian(dim, &mut rng);
        let dec = eigendecompose(&a)?;
        let norm = dec.spectral_norm();
        disp = disp.max(verify_dispersion_free(&dec, &a)? / (1.0 + norm * norm).sqrt());
        resid = resid.max(dec.eigen_residual(&a)? / (1.0 + norm));
        ortho = ortho.max(dec.orthonormality_error());
    }
    record("eigenvector-dispersion", trials, Check::at_most("eigenvector_dispersion", disp, tol.disp));
    record("eigen-residual", trials, Check::at_most("eigen_residual", resid, tol.eig));
    record("eigen-orthonormality", trials, Check::at_most("eigen_orthonormality", ortho, tol.eig));

    let trials = 1000;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = random_scalar(10.0, &mut rng);
        worst = worst.max(minimal_poly_residual(x).norm() / (1.0 + norm_form(x)));
    }
    worst = worst.max(trace(Complex64::new(0.0, 1.0)).abs());
    record("minimal-polynomial", trials, Check::at_most("minimal_polynomial", worst, tol.minpoly));

    let trials = 200;
    let mut certified = 0u64;
    for _ in 0..trials {
        let dim = rng.random_range(2..=8);
        let a = random_hermitian(dim, &mut rng);
        let b = random_hermitian(dim, &mut rng);
        if sym_antisym_split(&a, &b).is_ok() {
            certified += 1;
        }
    }
    record(
        "product-split-hermitian",
        trials,
        Check::at_least("product_split_hermitian", certified as f64 / trials as f64, 1.0),
    );

    let trials = 100;
    let (reconstruction, _, _) = generator_trials(trials, cfg.seed.wrapping_add(1))?;
    record("generator-reconstruction", trials, Check::at_most("generator_reconstruction", reconstruction, tol.generator));
    Ok((table, checks))
}
