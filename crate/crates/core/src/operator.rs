//! Operators, hermiticity certificates, expectations and dispersion.
//!
//! Expectations come in two flavors: `expect_c` is the usual real part of
//! `<ψ|Aψ>`, and `expect_r` applies the trace form, doubling it. The trace
//! form of a commutator expectation vanishes for every pair of hermitian
//! operators, which is the expectation-level sense in which hermitian
//! operators commute under the real scalar product.

use std::ops::Deref;

use faer::{Col, Mat};
use num_complex::Complex64;

use crate::error::{Result, WorkbenchError};
use crate::state::{complex_inner, same_grid, GridMeta, StateVector};
use crate::trace_algebra::{TraceForm, TraceScalar};

/// Default relative tolerance for hermiticity certificates.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `av_decompose` treats a state as dispersion-free below this β.
pub const DISPERSION_FREE_TOL: f64 = 1e-10;

/// Relative bound on the imaginary part of `<ψ|Aψ>` for hermitian `A`.
const IMAGINARY_PART_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: Mat<Complex64>,
    grid: Option<GridMeta>,
}

impl Operator {
    pub fn from_mat(matrix: Mat<Complex64>, grid: Option<GridMeta>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(WorkbenchError::Dimension { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if let Some(g) = &grid {
            if g.points() != matrix.nrows() {
                return Err(WorkbenchError::Dimension { expected: g.points(), found: matrix.nrows() });
            }
        }
        Ok(Self { matrix, grid })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> TraceScalar) -> Self {
        Self { matrix: Mat::from_fn(dim, dim, f), grid: None }
    }

    /// Builds a square operator from rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<TraceScalar>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "operator rows must form a square matrix");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "operator rows must form a square matrix");
        Self::from_fn(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn with_grid(mut self, grid: GridMeta) -> Result<Self> {
        if grid.points() != self.dim() {
            return Err(WorkbenchError::Dimension { expected: grid.points(), found: self.dim() });
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> TraceScalar {
        self.matrix[(i, j)]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                worst = worst.max(self.matrix[(i, j)].norm());
            }
        }
        worst
    }

    /// Largest entry modulus of `self − other`; `f64::INFINITY` if shapes differ.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }

    fn check_compatible(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(WorkbenchError::Dimension { expected: self.dim(), found: other.dim() });
        }
        same_grid(self.grid(), other.grid())
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_compatible(other)?;
        Ok(Operator { matrix: &self.matrix * &other.matrix, grid: self.grid.clone() })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_compatible(other)?;
        Ok(Operator { matrix: &self.matrix + &other.matrix, grid: self.grid.clone() })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_compatible(other)?;
        Ok(Operator { matrix: &self.matrix - &other.matrix, grid: self.grid.clone() })
    }

    pub fn scale(&self, factor: TraceScalar) -> Operator {
        Operator { matrix: faer::Scale(factor) * &self.matrix, grid: self.grid.clone() }
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.dim() != psi.dim() {
            return Err(WorkbenchError::Dimension { expected: self.dim(), found: psi.dim() });
        }
        same_grid(self.grid(), psi.grid())?;
        let out: Col<Complex64> = &self.matrix * psi.coeffs();
        StateVector::from_col(out, psi.grid().cloned())
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Operator {
        let adj = adjoint(self);
        Operator { matrix: faer::Scale(Complex64::new(0.5, 0.0)) * (&self.matrix + &adj.matrix), grid: self.grid.clone() }
    }
}

/// An operator carrying a certificate that `max |A − A†| ≤ tol·(1 + max|A|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    op: Operator,
    deviation: f64,
}

impl HermitianOperator {
    /// Max `|A_jk − conj(A_kj)|` recorded at certification.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    /// Certifies `A·A`, which is hermitian whenever `A` is.
    pub fn square(&self) -> Result<HermitianOperator> {
        certify_hermitian(&self.op.mul(&self.op)?, HERMITIAN_TOL)
    }

    /// Real linear combination of hermitian operators.
    pub fn combine(&self, a: f64, other: &HermitianOperator, b: f64) -> Result<HermitianOperator> {
        let sum = self.op.scale(Complex64::new(a, 0.0)).add(&other.op.scale(Complex64::new(b, 0.0)))?;
        certify_hermitian(&sum, HERMITIAN_TOL)
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        HermitianOperator { op: self.op.scale(Complex64::new(factor, 0.0)), deviation: self.deviation * factor.abs() }
    }
}

impl Deref for HermitianOperator {
    type Target = Operator;

    fn deref(&self) -> &Operator {
        &self.op
    }
}

/// Conjugate transpose.
pub fn adjoint(a: &Operator) -> Operator {
    Operator { matrix: a.matrix.adjoint().to_owned(), grid: a.grid.clone() }
}

pub fn certify_hermitian(a: &Operator, tol: f64) -> Result<HermitianOperator> {
    if !(tol > 0.0) {
        return Err(WorkbenchError::Input(format!("hermiticity tolerance must be positive, got {tol}")));
    }
    let n = a.dim();
    let mut deviation: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let d = (a.matrix[(i, j)] - a.matrix[(j, i)].conj()).norm();
            if !d.is_finite() {
                deviation = f64::INFINITY;
            }
            deviation = deviation.max(d);
        }
    }
    let bound = tol * (1.0 + a.max_abs());
    if !(deviation <= bound) {
        return Err(WorkbenchError::NotHermitian { deviation, bound });
    }
    Ok(HermitianOperator { op: a.clone(), deviation })
}

/// `AB = S + iD` with `S = (AB + BA)/2` and `D = (AB − BA)/(2i)`, both hermitian.
pub fn sym_antisym_split(a: &HermitianOperator, b: &HermitianOperator) -> Result<(HermitianOperator, HermitianOperator)> {
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    let s = ab.add(&ba)?.scale(Complex64::new(0.5, 0.0));
    // 1/(2i) = −i/2
    let d = ab.sub(&ba)?.scale(Complex64::new(0.0, -0.5));
    Ok((certify_hermitian(&s, HERMITIAN_TOL)?, certify_hermitian(&d, HERMITIAN_TOL)?))
}

fn raw_expectation(a: &Operator, psi: &StateVector) -> Result<(StateVector, TraceScalar)> {
    let a_psi = a.apply(psi)?;
    let raw = complex_inner(psi, &a_psi)?;
    Ok((a_psi, raw))
}

fn checked_expectation(a: &HermitianOperator, psi: &StateVector) -> Result<(StateVector, f64)> {
    psi.ensure_normalized()?;
    let (a_psi, raw) = raw_expectation(a, psi)?;
    let bound = IMAGINARY_PART_TOL * (1.0 + a.max_abs());
    assert!(
        raw.im.abs() <= bound,
        "<psi|A psi> has imaginary part {:e} (bound {bound:e}); operator is not hermitian",
        raw.im
    );
    Ok((a_psi, raw.re))
}

/// `Re <ψ|Aψ>` for a normalized `ψ`.
pub fn expect_c(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    checked_expectation(a, psi).map(|(_, value)| value)
}

/// `tr <ψ|Aψ>`, twice `expect_c`.
pub fn expect_r(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    psi.ensure_normalized()?;
    let (_, raw) = raw_expectation(a, psi)?;
    Ok(raw.trace())
}

/// Trace form of `<ψ|Xψ>` for an arbitrary operator.
pub fn trace_form_expectation(x: &Operator, psi: &StateVector) -> Result<f64> {
    psi.ensure_normalized()?;
    Ok(raw_expectation(x, psi)?.1.trace())
}

/// `ΔA = sqrt(<A²> − <A>²)`, evaluated in centered form as `‖(A − <A>)ψ‖`.
pub fn dispersion(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let (a_psi, mean) = checked_expectation(a, psi)?;
    let h = psi.weight();
    let second: f64 = a_psi
        .coeffs()
        .iter()
        .zip(psi.coeffs().iter())
        .map(|(ap, p)| (ap - p * mean).norm_sqr())
        .sum::<f64>()
        * h;
    Ok(second.max(0.0).sqrt())
}

/// Result of `Aψ = αψ + βψ⊥`.
#[derive(Debug, Clone)]
pub struct AvDecomposition {
    pub alpha: f64,
    pub beta: f64,
    /// Unit vector orthogonal to ψ; absent when ψ is dispersion-free.
    pub orthogonal: Option<StateVector>,
}

impl AvDecomposition {
    /// `αψ + βψ⊥`.
    pub fn reconstruct(&self, psi: &StateVector) -> StateVector {
        let mut out = psi.scaled(Complex64::new(self.alpha, 0.0));
        if let Some(perp) = &self.orthogonal {
            let coeffs = Col::from_fn(out.dim(), |j| out.coeff(j) + perp.coeff(j) * self.beta);
            out = StateVector::from_col(coeffs, psi.grid().cloned()).expect("dimensions agree");
        }
        out
    }
}

/// Splits `Aψ` into its component along ψ and a non-negative multiple of a
/// unit vector orthogonal to ψ.
pub fn av_decompose(a: &HermitianOperator, psi: &StateVector) -> Result<AvDecomposition> {
    let alpha = expect_c(a, psi)?;
    let a_psi = a.apply(psi)?;
    let along = complex_inner(psi, &a_psi)? / psi.norm_sq();
    let residual = Col::from_fn(psi.dim(), |j| a_psi.coeff(j) - psi.coeff(j) * along);
    let residual = StateVector::from_col(residual, psi.grid().cloned())?;
    let beta = residual.norm();
    let orthogonal = if beta > DISPERSION_FREE_TOL {
        Some(residual.scaled(Complex64::new(1.0 / beta, 0.0)))
    } else {
        None
    };
    Ok(AvDecomposition { alpha, beta, orthogonal })
}

/// Pauli matrices, used throughout tests and the CLI's canned experiments.
pub mod pauli {
    use super::*;

    pub fn x() -> HermitianOperator {
        certify_hermitian(&Operator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), HERMITIAN_TOL).unwrap()
    }

    pub fn y() -> HermitianOperator {
        let i = Complex64::i();
        certify_hermitian(&Operator::from_rows(&[vec![ZERO, -i], vec![i, ZERO]]), HERMITIAN_TOL).unwrap()
    }

    pub fn z() -> HermitianOperator {
        certify_hermitian(&Operator::diagonal(&[1.0, -1.0]), HERMITIAN_TOL).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_state};
    use crate::state::normalize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> TraceScalar {
        TraceScalar::new(re, im)
    }

    fn herm(op: Operator) -> HermitianOperator {
        certify_hermitian(&op, HERMITIAN_TOL).unwrap()
    }

    fn cat() -> StateVector {
        StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])
    }

    #[test]
    fn adjoint_examples() {
        let a = Operator::from_rows(&[vec![c(0.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        let expected = Operator::from_rows(&[vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, -1.0), c(0.0, 0.0)]]);
        assert_eq!(adjoint(&a), expected);
        assert_eq!(adjoint(&adjoint(&a)), a);
        let y = pauli::y();
        assert_eq!(&adjoint(&y), y.operator());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Operator::from_fn(3, |_, _| c(rand::Rng::random_range(&mut rng, -1.0..1.0), rand::Rng::random_range(&mut rng, -1.0..1.0)));
        let q = Operator::from_fn(3, |_, _| c(rand::Rng::random_range(&mut rng, -1.0..1.0), rand::Rng::random_range(&mut rng, -1.0..1.0)));
        let lhs = adjoint(&p.mul(&q).unwrap());
        let rhs = adjoint(&q).mul(&adjoint(&p)).unwrap();
        assert!(lhs.max_diff(&rhs) <= 1e-15);
    }

    #[test]
    fn certification_examples() {
        assert!(certify_hermitian(&Operator::diagonal(&[1.0, -2.0, 3.5]), 1e-12).is_ok());
        let y = certify_hermitian(pauli::y().operator(), 1e-12).unwrap();
        assert_eq!(y.deviation(), 0.0);
        let err = certify_hermitian(&Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]), 1e-12).unwrap_err();
        assert!(matches!(err, WorkbenchError::NotHermitian { deviation, .. } if deviation == 1.0));
        assert!(certify_hermitian(&Operator::identity(2), 0.0).is_err());
    }

    #[test]
    fn split_examples() {
        let a = herm(Operator::from_real_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]));
        let (s, d) = sym_antisym_split(&a, &a).unwrap();
        assert!(d.max_abs() <= 1e-15);
        assert!(s.max_diff(&a.mul(&a).unwrap()) <= 1e-15);

        let (s, d) = sym_antisym_split(&pauli::x(), &pauli::y()).unwrap();
        assert!(s.max_abs() <= 1e-15);
        assert!(d.max_diff(&pauli::z()) <= 1e-15);

        let (_, d) = sym_antisym_split(&herm(Operator::diagonal(&[1.0, 2.0])), &herm(Operator::diagonal(&[3.0, 5.0]))).unwrap();
        assert_eq!(d.max_abs(), 0.0);

        let short = herm(Operator::identity(3));
        assert!(matches!(sym_antisym_split(&a, &short), Err(WorkbenchError::Dimension { .. })));
    }

    #[test]
    fn split_reconstructs_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 2..7 {
            let a = random_hermitian(dim, &mut rng);
            let b = random_hermitian(dim, &mut rng);
            let (s, d) = sym_antisym_split(&a, &b).unwrap();
            let rebuilt = s.add(&d.scale(Complex64::i())).unwrap();
            assert!(rebuilt.max_diff(&a.mul(&b).unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn expectation_examples() {
        let psi = normalize(&StateVector::new(vec![c(0.3, 0.1), c(-0.2, 0.7)])).unwrap();
        let id = herm(Operator::identity(2));
        assert!((expect_c(&id, &psi).unwrap() - 1.0).abs() <= 1e-15);
        assert!((expect_r(&id, &psi).unwrap() - 2.0).abs() <= 1e-15);

        let z = pauli::z();
        assert!(expect_c(&z, &cat()).unwrap().abs() <= 1e-16);
        assert!(expect_r(&z, &cat()).unwrap().abs() <= 1e-16);

        let five = herm(Operator::diagonal(&[5.0, 5.0]));
        assert!((expect_r(&five, &psi).unwrap() - 10.0).abs() <= 1e-14);

        let unnormalized = StateVector::from_real(&[1.0, 1.0]);
        assert!(matches!(expect_c(&z, &unnormalized), Err(WorkbenchError::State { .. })));
        assert!(matches!(expect_c(&z, &StateVector::basis(3, 0)), Err(WorkbenchError::Dimension { .. })));
    }

    #[test]
    #[should_panic(expected = "not hermitian")]
    fn expectation_asserts_on_forged_certificate() {
        // bypass certification to simulate a hermiticity bug
        let forged = HermitianOperator {
            op: Operator::from_rows(&[vec![c(0.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]),
            deviation: 0.0,
        };
        let psi = normalize(&StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let _ = expect_c(&forged, &psi);
    }

    #[test]
    fn dispersion_examples() {
        let a = herm(Operator::diagonal(&[1.0, 2.0]));
        assert_eq!(dispersion(&a, &StateVector::basis(2, 0)).unwrap(), 0.0);
        assert!((dispersion(&pauli::z(), &cat()).unwrap() - 1.0).abs() <= 1e-15);
        for (a1, a2) in [(3.0, -1.5), (0.25, 7.0), (-4.0, -4.5)] {
            let d = dispersion(&herm(Operator::diagonal(&[a1, a2])), &cat()).unwrap();
            let expected: f64 = (a1 - a2) / 2.0;
            assert!((d - expected.abs()).abs() <= 1e-14);
        }
    }

    #[test]
    fn av_examples() {
        let a = herm(Operator::diagonal(&[1.0, 2.0]));
        let dec = av_decompose(&a, &StateVector::basis(2, 0)).unwrap();
        assert_eq!((dec.alpha, dec.beta), (1.0, 0.0));
        assert!(dec.orthogonal.is_none());

        let dec = av_decompose(&pauli::z(), &cat()).unwrap();
        assert!(dec.alpha.abs() <= 1e-16);
        assert!((dec.beta - 1.0).abs() <= 1e-15);
        let perp = dec.orthogonal.unwrap();
        assert!((perp.coeff(0) - c(FRAC_1_SQRT_2, 0.0)).norm() <= 1e-15);
        assert!((perp.coeff(1) - c(-FRAC_1_SQRT_2, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn av_reconstructs_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_hermitian(5, &mut rng);
            let psi = random_state(5, &mut rng);
            let dec = av_decompose(&a, &psi).unwrap();
            let direct = a.apply(&psi).unwrap();
            let rebuilt = dec.reconstruct(&psi);
            let err = (0..5).map(|j| (direct.coeff(j) - rebuilt.coeff(j)).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-9);
            assert!(dec.beta >= 0.0);
            assert!((dec.beta - dispersion(&a, &psi).unwrap()).abs() <= 1e-12);
            assert!(complex_inner(&psi, dec.orthogonal.as_ref().unwrap()).unwrap().norm() <= 1e-10);
        }
    }
}
