//! Model Hamiltonians, Heisenberg and Schrödinger evolution, and the
//! Poisson-bracket/commutator equivalence check.
//!
//! Time evolution goes through the spectral decomposition of `H`, so
//! `U(t) = Σ exp(−iλt/ħ)|f_k><f_k|` is unitary to rounding for every `t`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::Col;
use num_complex::Complex64;

use crate::error::{Result, WorkbenchError};
use crate::operator::{adjoint, certify_hermitian, dispersion, expect_c, HermitianOperator, Operator, HERMITIAN_TOL};
use crate::polynomial::{poisson_rhs_classical, PolynomialObservable};
use crate::spectral::{apply_function, eigendecompose, SpectralDecomposition};
use crate::state::{GridMeta, StateVector};

/// Largest allowed occupancy of the truncation edge for `eq3_check`.
pub const EDGE_OCCUPANCY_TOL: f64 = 1e-6;

pub const MIN_LADDER_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    GridWell,
    GridFree,
    OscillatorLadder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    InfiniteWell,
    /// No potential inside the box. The Dirichlet walls remain, so results
    /// are only meaningful while the state stays away from them.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mass: f64,
    pub hbar: f64,
    pub omega: Option<f64>,
    pub length: Option<f64>,
}

#[derive(Debug)]
pub struct ModelSystem {
    kind: ModelKind,
    q: HermitianOperator,
    p: HermitianOperator,
    h: HermitianOperator,
    params: ModelParams,
    grid: Option<GridMeta>,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl ModelSystem {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn position(&self) -> &HermitianOperator {
        &self.q
    }

    pub fn momentum(&self) -> &HermitianOperator {
        &self.p
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.h
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Decomposition of `H`, computed on first use.
    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(dec) = self.spectrum.get() {
            return Ok(dec);
        }
        let dec = eigendecompose(&self.h)?;
        Ok(self.spectrum.get_or_init(|| dec))
    }
}

fn tridiagonal(dim: usize, diag: Complex64, upper: Complex64, lower: Complex64) -> Operator {
    Operator::from_fn(dim, |i, j| {
        if i == j {
            diag
        } else if j == i + 1 {
            upper
        } else if i == j + 1 {
            lower
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Finite-difference model on a Dirichlet grid.
///
/// `q = diag(x_j)`, `p = −iħ·(ψ_{j+1} − ψ_{j−1})/(2h)` and
/// `H = −ħ²/(2m)·(ψ_{j+1} − 2ψ_j + ψ_{j−1})/h²`.
pub fn build_grid_model(grid: &GridMeta, potential: Potential) -> Result<ModelSystem> {
    let n = grid.points();
    let h = grid.spacing();
    let hbar = grid.hbar();
    let mass = grid.mass();

    let positions: Vec<f64> = grid.positions().collect();
    let q = Operator::diagonal(&positions).with_grid(grid.clone())?;

    let hop = Complex64::new(0.0, -hbar / (2.0 * h));
    let p = tridiagonal(n, Complex64::new(0.0, 0.0), hop, -hop).with_grid(grid.clone())?;

    let kinetic = hbar * hbar / (2.0 * mass * h * h);
    let ham = tridiagonal(n, Complex64::new(2.0 * kinetic, 0.0), Complex64::new(-kinetic, 0.0), Complex64::new(-kinetic, 0.0))
        .with_grid(grid.clone())?;

    let kind = match potential {
        Potential::InfiniteWell => ModelKind::GridWell,
        Potential::Free => ModelKind::GridFree,
    };
    Ok(ModelSystem {
        kind,
        q: certify_hermitian(&q, HERMITIAN_TOL)?,
        p: certify_hermitian(&p, HERMITIAN_TOL)?,
        h: certify_hermitian(&ham, HERMITIAN_TOL)?,
        params: ModelParams { mass, hbar, omega: None, length: Some(grid.length()) },
        grid: Some(grid.clone()),
        spectrum: OnceLock::new(),
    })
}

/// Truncated harmonic oscillator built from ladder matrices, `a|n> = √n|n−1>`.
pub fn build_oscillator_ladder(dim: usize, mass: f64, omega: f64, hbar: f64) -> Result<ModelSystem> {
    if dim < MIN_LADDER_DIM {
        return Err(WorkbenchError::Input(format!("ladder dimension must be at least {MIN_LADDER_DIM}, got {dim}")));
    }
    for (name, v) in [("mass", mass), ("omega", omega), ("hbar", hbar)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(WorkbenchError::Input(format!("{name} must be positive, got {v}")));
        }
    }
    let lower = Operator::from_fn(dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let raise = adjoint(&lower);
    let q = lower.add(&raise)?.scale(Complex64::new((hbar / (2.0 * mass * omega)).sqrt(), 0.0));
    let p = raise.sub(&lower)?.scale(Complex64::new(0.0, (mass * omega * hbar / 2.0).sqrt()));
    let q = certify_hermitian(&q, HERMITIAN_TOL)?;
    let p = certify_hermitian(&p, HERMITIAN_TOL)?;
    let h = p.square()?.combine(0.5 / mass, &q.square()?, 0.5 * mass * omega * omega)?;
    Ok(ModelSystem {
        kind: ModelKind::OscillatorLadder,
        q,
        p,
        h,
        params: ModelParams { mass, hbar, omega: Some(omega), length: None },
        grid: None,
        spectrum: OnceLock::new(),
    })
}

/// Exact box levels `n²π²ħ²/(2mL²)`.
pub fn well_level(n: usize, mass: f64, length: f64, hbar: f64) -> f64 {
    let n = n as f64;
    n * n * PI * PI * hbar * hbar / (2.0 * mass * length * length)
}

/// Width of a free minimal-uncertainty packet: `σ0·sqrt(1 + (ħt/(2mσ0²))²)`.
pub fn free_packet_width(sigma0: f64, mass: f64, hbar: f64, t: f64) -> f64 {
    let r = hbar * t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + r * r).sqrt()
}

/// Weyl-ordered operator for `q^a p^b`.
///
/// `sym[a][b]` holds the sum over all words with `a` copies of `q` and `b`
/// of `p`; it satisfies `sym[a][b] = q·sym[a−1][b] + p·sym[a][b−1]`.
fn weyl_table(q: &Operator, p: &Operator, max_q: u32, max_p: u32) -> Result<Vec<Vec<Option<Operator>>>> {
    let (max_q, max_p) = (max_q as usize, max_p as usize);
    let mut sym: Vec<Vec<Option<Operator>>> = vec![vec![None; max_p + 1]; max_q + 1];
    let id = Operator::identity(q.dim());
    let id = match q.grid() {
        Some(g) => id.with_grid(g.clone())?,
        None => id,
    };
    sym[0][0] = Some(id);
    for total in 1..=(max_q + max_p) {
        for a in 0..=max_q.min(total) {
            let b = total - a;
            if b > max_p {
                continue;
            }
            let mut acc: Option<Operator> = None;
            if a > 0 {
                if let Some(prev) = &sym[a - 1][b] {
                    acc = Some(q.mul(prev)?);
                }
            }
            if b > 0 {
                if let Some(prev) = &sym[a][b - 1] {
                    let term = p.mul(prev)?;
                    acc = Some(match acc {
                        Some(x) => x.add(&term)?,
                        None => term,
                    });
                }
            }
            sym[a][b] = acc;
        }
    }
    Ok(sym)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weyl (fully symmetrized) quantization on the model's `q̂`, `p̂`.
pub fn quantize(a: &PolynomialObservable, model: &ModelSystem) -> Result<HermitianOperator> {
    let max_q = a.terms().map(|((x, _), _)| x).max().unwrap_or(0);
    let max_p = a.terms().map(|((_, y), _)| y).max().unwrap_or(0);
    let table = weyl_table(&model.q, &model.p, max_q, max_p)?;
    let zero = model.q.scale(Complex64::new(0.0, 0.0));
    let mut total = zero;
    for ((x, y), coeff) in a.terms() {
        let word_sum = table[x as usize][y as usize].as_ref().expect("entries up to the max powers are filled");
        let weight = coeff / binomial(x + y, x);
        total = total.add(&word_sum.scale(Complex64::new(weight, 0.0)))?;
    }
    certify_hermitian(&total, HERMITIAN_TOL)
}

/// `(i/ħ)(HA − AH)`.
pub fn heisenberg_rhs(h: &HermitianOperator, a: &HermitianOperator, hbar: f64) -> Result<HermitianOperator> {
    let comm = h.commutator(a)?;
    certify_hermitian(&comm.scale(Complex64::new(0.0, 1.0 / hbar)), HERMITIAN_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eq3Report {
    /// Expectation of the quantized Poisson bracket.
    pub lhs: f64,
    /// Expectation of `(i/ħ)[H, A]`.
    pub rhs: f64,
    pub gap: f64,
}

/// Occupancy of the model's truncation edge: the top ladder level, or the two
/// wall-adjacent grid cells.
pub fn edge_occupancy(model: &ModelSystem, psi: &StateVector) -> f64 {
    let n = psi.dim();
    match model.kind {
        ModelKind::OscillatorLadder => psi.coeff(n - 1).norm_sqr(),
        ModelKind::GridWell | ModelKind::GridFree => {
            psi.weight() * (psi.coeff(0).norm_sqr() + psi.coeff(n - 1).norm_sqr())
        }
    }
}

/// Compares `<{A, H}_Weyl>` against `<(i/ħ)[Ĥ, Â]>` on one state.
pub fn eq3_check(
    a: &PolynomialObservable,
    h: &PolynomialObservable,
    model: &ModelSystem,
    psi: &StateVector,
) -> Result<Eq3Report> {
    psi.ensure_normalized()?;
    if psi.dim() != model.dim() {
        return Err(WorkbenchError::Dimension { expected: model.dim(), found: psi.dim() });
    }
    let occupancy = edge_occupancy(model, psi);
    if occupancy > EDGE_OCCUPANCY_TOL {
        return Err(WorkbenchError::Truncation { occupancy });
    }
    let classical = quantize(&poisson_rhs_classical(a, h)?, model)?;
    let quantum = heisenberg_rhs(&quantize(h, model)?, &quantize(a, model)?, model.params.hbar)?;
    let lhs = expect_c(&classical, psi)?;
    let rhs = expect_c(&quantum, psi)?;
    Ok(Eq3Report { lhs, rhs, gap: (lhs - rhs).abs() })
}

/// `U(t)ψ0`, applied through the eigenbasis of `H` without forming `U`.
pub fn evolve_state(model: &ModelSystem, psi0: &StateVector, t: f64) -> Result<StateVector> {
    psi0.ensure_normalized()?;
    let dec = model.spectrum()?;
    if psi0.dim() != dec.dim() {
        return Err(WorkbenchError::Dimension { expected: dec.dim(), found: psi0.dim() });
    }
    let v = dec.vectors();
    let amplitudes: Col<Complex64> = v.adjoint() * psi0.coeffs();
    let hbar = model.params.hbar;
    let rotated = Col::from_fn(dec.dim(), |k| {
        amplitudes[k] * Complex64::from_polar(1.0, -dec.eigenvalues()[k] * t / hbar)
    });
    StateVector::from_col(v * &rotated, psi0.grid().cloned())
}

/// `U(t)` as an explicit operator.
pub fn propagator(model: &ModelSystem, t: f64) -> Result<Operator> {
    let hbar = model.params.hbar;
    apply_function(model.spectrum()?, |lambda| Complex64::from_polar(1.0, -lambda * t / hbar))
}

/// Heisenberg-picture operator `U†AU`.
pub fn evolve_operator(model: &ModelSystem, a: &HermitianOperator, t: f64) -> Result<HermitianOperator> {
    let u = propagator(model, t)?;
    let evolved = adjoint(&u).mul(a)?.mul(&u)?;
    certify_hermitian(&evolved, HERMITIAN_TOL)
}

/// `(t, Δx(t))` for each requested time.
pub fn spread_series(model: &ModelSystem, psi0: &StateVector, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(WorkbenchError::Input("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(WorkbenchError::Input("times must be ascending".into()));
    }
    times
        .iter()
        .map(|&t| {
            let psi = evolve_state(model, psi0, t)?;
            Ok((t, dispersion(&model.q, &psi)?))
        })
        .collect()
}
