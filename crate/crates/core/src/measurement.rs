//! Projective measurement with collapse, and ensembles of independently
//! prepared systems.
//!
//! Each sample index draws from its own ChaCha8 stream derived from the
//! ensemble seed, so an ensemble's counts do not depend on how samples are
//! scheduled across threads.

use faer::Col;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, WorkbenchError};
use crate::operator::{certify_hermitian, HermitianOperator, Operator, HERMITIAN_TOL};
use crate::spectral::{eigendecompose, SpectralDecomposition};
use crate::state::{normalize, GridMeta, StateVector};

/// Probabilities this close to zero are clamped to zero.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// `measure_once` refuses states whose total probability is below this.
pub const MIN_TOTAL_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub eigenvalue: f64,
    pub group_index: usize,
    /// Normalized projection of the measured state onto the group's eigenspace.
    pub collapsed: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    /// Samples per degenerate group, indexed like `eigenvalues`.
    pub counts: Vec<u64>,
    /// Representative eigenvalue of each group.
    pub eigenvalues: Vec<f64>,
    pub n: u64,
    pub empirical_mean: f64,
    /// Population standard deviation of the sampled eigenvalues.
    pub empirical_std: f64,
    pub seed: u64,
}

impl EnsembleReport {
    fn from_counts(counts: Vec<u64>, eigenvalues: Vec<f64>, seed: u64) -> Self {
        let n: u64 = counts.iter().sum();
        let nf = n as f64;
        let mean = counts.iter().zip(&eigenvalues).map(|(&c, &v)| c as f64 * v).sum::<f64>() / nf;
        let var = counts.iter().zip(&eigenvalues).map(|(&c, &v)| c as f64 * (v - mean).powi(2)).sum::<f64>() / nf;
        Self { counts, eigenvalues, n, empirical_mean: mean, empirical_std: var.sqrt(), seed }
    }

    /// Groups that received at least one sample.
    pub fn observed(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.eigenvalues.iter().zip(&self.counts).filter(|(_, &c)| c > 0).map(|(&v, &c)| (v, c))
    }
}

/// Born probability of each degenerate group, as `(eigenvalue, probability)`.
pub fn born_probabilities(dec: &SpectralDecomposition, psi: &StateVector) -> Result<Vec<(f64, f64)>> {
    psi.ensure_normalized()?;
    group_probabilities(dec, &dec.amplitudes(psi)?)
}

fn group_probabilities(dec: &SpectralDecomposition, amplitudes: &[Complex64]) -> Result<Vec<(f64, f64)>> {
    Ok(dec
        .groups()
        .iter()
        .enumerate()
        .map(|(g, r)| {
            let p: f64 = amplitudes[r.clone()].iter().map(|a| a.norm_sqr()).sum();
            (dec.group_value(g), if p.abs() <= PROBABILITY_CLAMP { 0.0 } else { p })
        })
        .collect())
}

/// Draws one outcome with Born probabilities and collapses the state onto it.
pub fn measure_once<R: Rng + ?Sized>(
    dec: &SpectralDecomposition,
    psi: &StateVector,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let probabilities = born_probabilities(dec, psi)?;
    let total: f64 = probabilities.iter().map(|(_, p)| p).sum();
    if !(total >= MIN_TOTAL_PROBABILITY) {
        return Err(WorkbenchError::Numerical(format!("total outcome probability {total:e} is too small")));
    }
    let u = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (g, &(_, p)) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        chosen = Some(g);
        if u < cumulative {
            break;
        }
    }
    // the loop ends on the last nonzero group when rounding leaves u past the final sum
    let group_index = chosen.expect("some group has positive probability");

    let range = dec.groups()[group_index].clone();
    let v = dec.vectors();
    let raw: Col<Complex64> = v.adjoint() * psi.coeffs();
    let projected = Col::from_fn(dec.dim(), |j| range.clone().map(|k| v[(j, k)] * raw[k]).sum::<Complex64>());
    let collapsed = normalize(&StateVector::from_col(projected, psi.grid().cloned())?)?;
    Ok(MeasurementOutcome { eigenvalue: dec.group_value(group_index), group_index, collapsed })
}

/// Random stream dedicated to sample `index` of an ensemble.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub report: EnsembleReport,
    /// Group index of every sample, in sample order.
    pub outcomes: Vec<usize>,
    /// Whether every collapsed state reproduced its outcome when measured again.
    pub idempotent: bool,
}

/// Runs `n` prepare-measure-discard cycles. Every sample gets a fresh state
/// from `prepare`; no state is measured twice except for the idempotence
/// re-measurement of its own collapsed state.
pub fn run_ensemble<P>(prepare: P, dec: &SpectralDecomposition, n: u64, seed: u64) -> Result<Ensemble>
where
    P: Fn() -> Result<StateVector> + Sync,
{
    if n == 0 {
        return Err(WorkbenchError::Input("ensemble needs at least one sample".into()));
    }
    let samples: Vec<(usize, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_stream(seed, i);
            let psi = prepare()?;
            let first = measure_once(dec, &psi, &mut rng)?;
            let again = measure_once(dec, &first.collapsed, &mut rng)?;
            let certain = born_probabilities(dec, &first.collapsed)?[first.group_index].1 >= 1.0 - 1e-10;
            Ok((first.group_index, certain && again.group_index == first.group_index))
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![0u64; dec.groups().len()];
    for &(g, _) in &samples {
        counts[g] += 1;
    }
    let eigenvalues = (0..dec.groups().len()).map(|g| dec.group_value(g)).collect();
    Ok(Ensemble {
        report: EnsembleReport::from_counts(counts, eigenvalues, seed),
        idempotent: samples.iter().all(|&(_, ok)| ok),
        outcomes: samples.into_iter().map(|(g, _)| g).collect(),
    })
}

/// Measures `observable` on `n` freshly prepared systems.
pub fn repeat_experiment<P>(prepare: P, observable: &HermitianOperator, n: u64, seed: u64) -> Result<EnsembleReport>
where
    P: Fn() -> Result<StateVector> + Sync,
{
    let dec = eigendecompose(observable)?;
    Ok(run_ensemble(prepare, &dec, n, seed)?.report)
}

/// Relative frequency per grid cell from a position-measurement report.
pub fn reconstruct_density(report: &EnsembleReport, grid: &GridMeta) -> Result<Vec<(f64, f64)>> {
    let is_position = report.eigenvalues.len() == grid.points()
        && report.eigenvalues.iter().zip(grid.positions()).all(|(v, x)| (v - x).abs() <= 1e-9 * grid.length());
    if !is_position {
        return Err(WorkbenchError::Input("report does not come from a position measurement on this grid".into()));
    }
    let n = report.n as f64;
    Ok(grid.positions().zip(&report.counts).map(|(x, &c)| (x, c as f64 / n)).collect())
}

/// `(|alive> + |dead>)/√2` in a two-level space.
pub fn cat_state() -> StateVector {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_real(&[w, w])
}

#[derive(Debug, Clone)]
pub struct CatReport {
    pub report: EnsembleReport,
    /// Expectation of `diag(a1, a2)` in the cat state.
    pub alpha: f64,
    /// Dispersion of `diag(a1, a2)` in the cat state.
    pub beta: f64,
    /// Sampled eigenvalue per sample.
    pub outcomes: Vec<f64>,
    pub idempotent: bool,
}

/// Measures `diag(a1, a2)` on `n` freshly prepared cat states.
pub fn cat_experiment(a1: f64, a2: f64, n: u64, seed: u64) -> Result<CatReport> {
    if a1 == a2 {
        return Err(WorkbenchError::DegenerateSpectrum(format!("a1 = a2 = {a1}")));
    }
    let observable = certify_hermitian(&Operator::diagonal(&[a1, a2]), HERMITIAN_TOL)?;
    let av = crate::operator::av_decompose(&observable, &cat_state())?;
    let dec = eigendecompose(&observable)?;
    let ensemble = run_ensemble(|| Ok(cat_state()), &dec, n, seed)?;
    let outcomes = ensemble.outcomes.iter().map(|&g| dec.group_value(g)).collect();
    Ok(CatReport { report: ensemble.report, alpha: av.alpha, beta: av.beta, outcomes, idempotent: ensemble.idempotent })
}

/// `sigmas`-wide acceptance bands `(mean_tol, std_tol)` for an equal-weight
/// two-point spectrum `{a1, a2}` sampled `n` times.
///
/// The hit fraction `p̂` of `a1` is binomial with standard error `1/(2√n)`.
/// The mean is `a2 + (a1 − a2)·p̂` and the population std is
/// `|a1 − a2|·sqrt(p̂(1 − p̂))`, so a `sigmas`-wide band on `p̂` maps to the
/// returned bands.
pub fn two_point_bands(a1: f64, a2: f64, n: u64, sigmas: f64) -> (f64, f64) {
    let spread = (a1 - a2).abs();
    let dp = (sigmas * 0.5 / (n as f64).sqrt()).min(0.5);
    let mean_tol = spread * dp;
    let std_tol = spread * (0.5 - (0.25 - dp * dp).sqrt());
    (mean_tol, std_tol)
}
