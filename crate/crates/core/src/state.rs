//! State vectors and the two inner products.
//!
//! `complex_inner` is the usual sesquilinear form. `real_inner` applies the
//! trace form to it, so a complex-normalized vector has real self-product
//! [`REAL_FORM_UNIT`] rather than 1.
//!
//! Grid-bound states discretize a wave function on the interior points of a
//! Dirichlet box `[0, L]`; their inner products carry the spacing `h` as the
//! quadrature weight.

use faer::Col;
use num_complex::Complex64;

use crate::error::{Result, WorkbenchError};
use crate::trace_algebra::{TraceForm, TraceScalar};

/// `tr(1)`: the real self-product of any complex-normalized state.
pub const REAL_FORM_UNIT: f64 = 2.0;

/// Gram-Schmidt rejects vectors whose residual after projection is below this.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Allowed deviation of `<ψ|ψ>` from 1 for operations that need a normalized state.
pub const NORMALIZATION_TOL: f64 = 1e-8;

pub const MIN_GRID_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
}

/// Uniform 1D grid on `[0, L]` with `N` interior points `x_j = j·h`, `h = L/(N+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeta {
    length: f64,
    points: usize,
    mass: f64,
    hbar: f64,
    boundary: Boundary,
}

impl GridMeta {
    pub fn new(length: f64, points: usize, mass: f64, hbar: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(WorkbenchError::Input(format!("grid length must be positive, got {length}")));
        }
        if points < MIN_GRID_POINTS {
            return Err(WorkbenchError::Input(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {points}"
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(WorkbenchError::Input(format!("mass must be positive, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(WorkbenchError::Input(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { length, points, mass, hbar, boundary: Boundary::Dirichlet })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.points + 1) as f64
    }

    /// Position of the interior point with zero-based index `j`.
    pub fn position(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.spacing()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|j| self.position(j))
    }
}

/// Checks that two optional grid bindings agree.
pub(crate) fn same_grid(a: Option<&GridMeta>, b: Option<&GridMeta>) -> Result<()> {
    match (a, b) {
        (None, None) => Ok(()),
        (Some(x), Some(y)) if x == y => Ok(()),
        (Some(x), Some(y)) => Err(WorkbenchError::Grid(format!("{x:?} vs {y:?}"))),
        _ => Err(WorkbenchError::Grid("grid-bound and unbound objects mixed".into())),
    }
}

pub(crate) fn weight_of(grid: Option<&GridMeta>) -> f64 {
    grid.map_or(1.0, GridMeta::spacing)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coeffs: Col<Complex64>,
    grid: Option<GridMeta>,
}

impl StateVector {
    pub fn new(coeffs: Vec<TraceScalar>) -> Self {
        Self { coeffs: Col::from_fn(coeffs.len(), |k| coeffs[k]), grid: None }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_col(coeffs: Col<Complex64>, grid: Option<GridMeta>) -> Result<Self> {
        if let Some(g) = &grid {
            if g.points() != coeffs.nrows() {
                return Err(WorkbenchError::Dimension { expected: g.points(), found: coeffs.nrows() });
            }
        }
        Ok(Self { coeffs, grid })
    }

    /// Binds raw grid amplitudes without normalizing them.
    pub fn on_grid(coeffs: Vec<TraceScalar>, grid: GridMeta) -> Result<Self> {
        Self::from_col(Col::from_fn(coeffs.len(), |k| coeffs[k]), Some(grid))
    }

    /// Unit vector `e_k` (unweighted).
    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            coeffs: Col::from_fn(dim, |j| if j == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }),
            grid: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    pub fn coeffs(&self) -> &Col<Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> TraceScalar {
        self.coeffs[k]
    }

    pub fn to_vec(&self) -> Vec<TraceScalar> {
        self.coeffs.iter().copied().collect()
    }

    /// Quadrature weight: `h` on a grid, 1 otherwise.
    pub fn weight(&self) -> f64 {
        weight_of(self.grid.as_ref())
    }

    /// Complex norm, `sqrt(<ψ|ψ>)`.
    pub fn norm(&self) -> f64 {
        (self.norm_sq()).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.weight() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn scaled(&self, factor: TraceScalar) -> Self {
        Self { coeffs: Col::from_fn(self.dim(), |k| self.coeffs[k] * factor), grid: self.grid.clone() }
    }

    /// Multiplication by the imaginary unit.
    pub fn i_rotated(&self) -> Self {
        self.scaled(Complex64::i())
    }

    pub(crate) fn ensure_normalized(&self) -> Result<()> {
        let norm_sq = self.norm_sq();
        if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
            return Err(WorkbenchError::State { norm_sq });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(WorkbenchError::Dimension { expected: self.dim(), found: other.dim() });
        }
        same_grid(self.grid(), other.grid())
    }
}

/// `<f|g> = Σ f̄_k g_k`, times `h` for grid-bound states.
pub fn complex_inner(f: &StateVector, g: &StateVector) -> Result<TraceScalar> {
    f.check_compatible(g)?;
    let sum: Complex64 = f.coeffs.iter().zip(g.coeffs.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(sum * f.weight())
}

/// `<f|g>_R = tr <f|g>`.
pub fn real_inner(f: &StateVector, g: &StateVector) -> Result<f64> {
    Ok(complex_inner(f, g)?.trace())
}

pub fn normalize(f: &StateVector) -> Result<StateVector> {
    let norm = f.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(WorkbenchError::ZeroVector);
    }
    Ok(f.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// `Σ w_k·state_k`. The result is not normalized.
pub fn superpose(states: &[StateVector], weights: &[TraceScalar]) -> Result<StateVector> {
    if states.len() != weights.len() {
        return Err(WorkbenchError::Dimension { expected: states.len(), found: weights.len() });
    }
    let first = states.first().ok_or_else(|| WorkbenchError::Input("no states to superpose".into()))?;
    if weights.iter().all(|w| w.norm_sqr() == 0.0) {
        return Err(WorkbenchError::Input("all superposition weights are zero".into()));
    }
    for s in &states[1..] {
        first.check_compatible(s)?;
    }
    let coeffs = Col::from_fn(first.dim(), |j| states.iter().zip(weights).map(|(s, w)| s.coeffs[j] * w).sum());
    Ok(StateVector { coeffs, grid: first.grid.clone() })
}

/// Modified Gram-Schmidt in input order.
pub fn gram_schmidt(states: &[StateVector]) -> Result<Vec<StateVector>> {
    let mut basis: Vec<StateVector> = Vec::with_capacity(states.len());
    for (index, s) in states.iter().enumerate() {
        if let Some(first) = states.first() {
            first.check_compatible(s)?;
        }
        let mut v = s.clone();
        for b in &basis {
            let overlap = complex_inner(b, &v)?;
            for j in 0..v.dim() {
                v.coeffs[j] -= overlap * b.coeffs[j];
            }
        }
        let residual = v.norm();
        if residual < DEPENDENCE_TOL {
            return Err(WorkbenchError::DegenerateSet { index, residual });
        }
        basis.push(v.scaled(Complex64::new(1.0 / residual, 0.0)));
    }
    Ok(basis)
}

/// Samples `profile` at the interior grid points and normalizes with weight `h`.
pub fn grid_sample(profile: impl Fn(f64) -> f64, grid: &GridMeta) -> Result<StateVector> {
    grid_sample_complex(|x| Complex64::new(profile(x), 0.0), grid)
}

pub fn grid_sample_complex(profile: impl Fn(f64) -> TraceScalar, grid: &GridMeta) -> Result<StateVector> {
    let mut values = Vec::with_capacity(grid.points());
    for x in grid.positions() {
        let v = profile(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(WorkbenchError::Sampling { x });
        }
        values.push(v);
    }
    normalize(&StateVector::on_grid(values, grid.clone())?)
}
