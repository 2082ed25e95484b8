//! Spectral decompositions of hermitian operators.
//!
//! Every decomposition is canonicalized so repeated runs agree bit for bit:
//! eigenvalues ascend, each degenerate eigenspace gets a pivot-selected basis
//! ordered by the pivot index, and each eigenvector's first component above
//! [`PHASE_FIX_THRESHOLD`] is made real and positive.
//!
//! On top of single decompositions this module builds common eigenbases of
//! commuting families and the single generator `R` that every member of such
//! a family is a function of.

use std::ops::Range;

use faer::{Col, Mat, Side};
use num_complex::Complex64;

use crate::error::{Result, WorkbenchError};
use crate::operator::{certify_hermitian, HermitianOperator, Operator, HERMITIAN_TOL};
use crate::state::{same_grid, weight_of, GridMeta, StateVector};
use crate::trace_algebra::TraceScalar;

pub const PHASE_FIX_THRESHOLD: f64 = 1e-8;

/// Relative factor for degeneracy grouping: `group_tol = 1e-8·max(1, range)`.
pub const GROUP_TOL_FACTOR: f64 = 1e-8;

/// Commutator bound used by `simultaneous_diagonalize` and `vn_generator`.
pub const COMMUTE_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn group_tolerance(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if values.is_empty() { 0.0 } else { hi - lo };
    GROUP_TOL_FACTOR * range.max(1.0)
}

/// Splits an ascending list into runs whose consecutive gaps are at most `tol`.
fn group_sorted(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > tol {
            groups.push(start..k);
            start = k;
        }
    }
    groups
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Columns are orthonormal in the unweighted (Euclidean) sense.
    vectors: Mat<Complex64>,
    grid: Option<GridMeta>,
    groups: Vec<Range<usize>>,
    group_tol: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    /// Degenerate clusters as contiguous index ranges.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn group_tol(&self) -> f64 {
        self.group_tol
    }

    /// Mean eigenvalue of a degenerate cluster.
    pub fn group_value(&self, group: usize) -> f64 {
        let r = self.groups[group].clone();
        let len = r.len() as f64;
        self.eigenvalues[r].iter().sum::<f64>() / len
    }

    pub fn group_of(&self, k: usize) -> usize {
        self.groups.partition_point(|r| r.end <= k)
    }

    /// Eigenvector `f_k`, normalized in the grid-weighted norm when grid-bound.
    pub fn eigenvector(&self, k: usize) -> StateVector {
        let scale = 1.0 / weight_of(self.grid.as_ref()).sqrt();
        let col = Col::from_fn(self.dim(), |j| self.vectors[(j, k)] * scale);
        StateVector::from_col(col, self.grid.clone()).expect("dimension fixed at construction")
    }

    pub fn eigenvectors(&self) -> impl Iterator<Item = StateVector> + '_ {
        (0..self.dim()).map(|k| self.eigenvector(k))
    }

    /// Unit-column eigenvector matrix.
    pub fn vectors(&self) -> &Mat<Complex64> {
        &self.vectors
    }

    /// Largest `|λ_k|`: the operator norm.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `<f_k|ψ>` for every k.
    pub fn amplitudes(&self, psi: &StateVector) -> Result<Vec<TraceScalar>> {
        if psi.dim() != self.dim() {
            return Err(WorkbenchError::Dimension { expected: self.dim(), found: psi.dim() });
        }
        same_grid(self.grid(), psi.grid())?;
        let sqrt_w = weight_of(self.grid.as_ref()).sqrt();
        let raw: Col<Complex64> = self.vectors.adjoint() * psi.coeffs();
        Ok(raw.iter().map(|a| a * sqrt_w).collect())
    }

    /// `Σ λ_k |f_k><f_k|`.
    pub fn reconstruct(&self) -> Operator {
        let values: Vec<TraceScalar> = self.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spectral_sum(&self.vectors, &values, self.grid.clone())
    }

    /// `max_k ‖A f_k − λ_k f_k‖`.
    pub fn eigen_residual(&self, a: &Operator) -> Result<f64> {
        self.check_operator(a)?;
        let av = a.matrix() * &self.vectors;
        let mut worst: f64 = 0.0;
        for k in 0..self.dim() {
            let lambda = self.eigenvalues[k];
            let r: f64 = (0..self.dim()).map(|j| (av[(j, k)] - self.vectors[(j, k)] * lambda).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        Ok(worst)
    }

    /// `max |<f_j|f_k> − δ_jk|`.
    pub fn orthonormality_error(&self) -> f64 {
        gram_error(&self.vectors)
    }

    fn check_operator(&self, a: &Operator) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(WorkbenchError::Input(format!(
                "decomposition has dimension {} but operator has {}",
                self.dim(),
                a.dim()
            )));
        }
        same_grid(self.grid(), a.grid()).map_err(|e| WorkbenchError::Input(e.to_string()))
    }
}

pub(crate) fn gram_error(vectors: &Mat<Complex64>) -> f64 {
    let gram = vectors.adjoint() * vectors;
    let mut worst: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// `V·diag(values)·V†`.
fn spectral_sum(vectors: &Mat<Complex64>, values: &[TraceScalar], grid: Option<GridMeta>) -> Operator {
    let n = vectors.nrows();
    let scaled = Mat::from_fn(n, values.len(), |i, k| vectors[(i, k)] * values[k]);
    let m = &scaled * vectors.adjoint();
    Operator::from_mat(m, grid).expect("square by construction")
}

fn is_diagonal(a: &Operator) -> bool {
    let m = a.matrix();
    (0..a.dim()).all(|j| (0..a.dim()).all(|i| i == j || m[(i, j)] == ZERO))
}

/// Raw ascending eigenpairs of a hermitian matrix.
fn raw_eigen(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let n = m.nrows();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| WorkbenchError::Convergence(format!("{e:?} (dimension {n})")))?;
    let values: Vec<f64> = evd.S().column_vector().iter().map(|v| v.re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let u = evd.U();
    let vectors = Mat::from_fn(n, n, |i, k| u[(i, order[k])]);
    Ok((order.iter().map(|&k| values[k]).collect(), vectors))
}

/// Makes the first component above the threshold real and positive.
fn fix_phase(vectors: &mut Mat<Complex64>, k: usize) {
    let n = vectors.nrows();
    if let Some(j) = (0..n).find(|&j| vectors[(j, k)].norm() > PHASE_FIX_THRESHOLD) {
        let v = vectors[(j, k)];
        let phase = v.conj() / v.norm();
        for i in 0..n {
            vectors[(i, k)] *= phase;
        }
        vectors[(j, k)] = Complex64::new(vectors[(j, k)].re, 0.0);
    }
}

/// Replaces the orthonormal columns `range` with a canonical basis of their span.
///
/// Pivots are chosen greedily by largest projector diagonal `P_ii`; the
/// projected unit vectors `P e_i` are then orthonormalized in ascending
/// pivot order.
fn canonicalize_block(vectors: &mut Mat<Complex64>, range: Range<usize>) {
    let n = vectors.nrows();
    let k = range.len();
    if k < 2 {
        return;
    }
    let block = Mat::from_fn(n, k, |i, c| vectors[(i, range.start + c)]);

    // Pivot selection on a shrinking orthonormal basis `w` of the remaining subspace.
    let mut w = block.clone();
    let mut pivots = Vec::with_capacity(k);
    for _ in 0..k {
        let r = w.ncols();
        let mut best = (0, -1.0);
        for i in 0..n {
            if pivots.contains(&i) {
                continue;
            }
            let weight: f64 = (0..r).map(|c| w[(i, c)].norm_sqr()).sum();
            if weight > best.1 {
                best = (i, weight);
            }
        }
        let (pivot, weight) = best;
        pivots.push(pivot);
        if r == 1 {
            break;
        }
        // c = conj(w[pivot, :]) / ‖·‖ is the coordinate of P e_pivot in `w`.
        let norm = weight.sqrt();
        let coord: Vec<Complex64> = (0..r).map(|c| w[(pivot, c)].conj() / norm).collect();
        let complement = householder_complement(&coord);
        w = &w * &complement;
    }
    pivots.sort_unstable();

    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for &p in &pivots {
        // P e_p = B·conj(B[p, :])
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| (0..k).map(|c| block[(i, c)] * block[(p, c)].conj()).sum())
            .collect();
        for _ in 0..2 {
            for u in &out {
                let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= overlap * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        out.push(v);
    }
    for (c, v) in out.into_iter().enumerate() {
        for (i, z) in v.into_iter().enumerate() {
            vectors[(i, range.start + c)] = z;
        }
    }
}

/// Orthonormal basis (r × (r−1)) of the complement of the unit vector `c`.
fn householder_complement(c: &[Complex64]) -> Mat<Complex64> {
    let r = c.len();
    let phase = if c[0].norm() > 0.0 { c[0] / c[0].norm() } else { Complex64::new(1.0, 0.0) };
    // w = c + phase·e0 avoids cancellation; H = I − 2ww†/‖w‖² maps c to −phase·e0.
    let mut w = c.to_vec();
    w[0] += phase;
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    Mat::from_fn(r, r - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { Complex64::new(1.0, 0.0) } else { ZERO };
        delta - w[i] * w[col].conj() * (2.0 / wn)
    })
}

fn finalize(
    eigenvalues: Vec<f64>,
    mut vectors: Mat<Complex64>,
    grid: Option<GridMeta>,
) -> SpectralDecomposition {
    let group_tol = group_tolerance(&eigenvalues);
    let groups = group_sorted(&eigenvalues, group_tol);
    for g in &groups {
        canonicalize_block(&mut vectors, g.clone());
    }
    for k in 0..eigenvalues.len() {
        fix_phase(&mut vectors, k);
    }
    SpectralDecomposition { eigenvalues, vectors, grid, groups, group_tol }
}

/// Ascending eigenvalues with a canonical orthonormal eigenbasis.
pub fn eigendecompose(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = a.dim();
    if n == 0 {
        return Err(WorkbenchError::Input("cannot decompose an empty operator".into()));
    }
    let (values, vectors) = if is_diagonal(a) {
        let diag: Vec<f64> = (0..n).map(|i| a.entry(i, i).re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
        let vectors = Mat::from_fn(n, n, |i, k| if i == order[k] { Complex64::new(1.0, 0.0) } else { ZERO });
        (order.iter().map(|&k| diag[k]).collect(), vectors)
    } else {
        raw_eigen(a.matrix())?
    };
    Ok(finalize(values, vectors, a.grid().cloned()))
}

/// Largest dispersion of `A` over the decomposition's basis.
///
/// Fails with `Input` when the decomposition does not belong to `A`, detected
/// by shape or by Rayleigh quotients disagreeing with the stored eigenvalues.
pub fn verify_dispersion_free(dec: &SpectralDecomposition, a: &HermitianOperator) -> Result<f64> {
    dec.check_operator(a)?;
    let n = dec.dim();
    let av = a.matrix() * &dec.vectors;
    let scale = 1.0 + dec.spectral_norm().max(a.max_abs());
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let mean: f64 = (0..n).map(|j| dec.vectors[(j, k)].conj() * av[(j, k)]).sum::<Complex64>().re;
        if (mean - dec.eigenvalues[k]).abs() > 1e-6 * scale {
            return Err(WorkbenchError::Input(format!(
                "eigenvalue {k} is {} but <f_k|A f_k> = {mean}; decomposition belongs to another operator",
                dec.eigenvalues[k]
            )));
        }
        let spread: f64 = (0..n).map(|j| (av[(j, k)] - dec.vectors[(j, k)] * mean).norm_sqr()).sum();
        worst = worst.max(spread.sqrt());
    }
    Ok(worst)
}

/// Contract bound for [`verify_dispersion_free`]: `1e-8·sqrt(1 + ‖A‖²)`.
pub fn dispersion_free_bound(norm: f64) -> f64 {
    1e-8 * (1.0 + norm * norm).sqrt()
}

/// Worst pairwise commutator `(i, j, max|[A_i, A_j]| / max(1, max|A_i|·max|A_j|))`.
pub fn worst_commutator(family: &[HermitianOperator]) -> Result<Option<(usize, usize, f64)>> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let comm = family[i].commutator(&family[j])?;
            let scale = (family[i].max_abs() * family[j].max_abs()).max(1.0);
            let rel = comm.max_abs() / scale;
            if worst.is_none_or(|(_, _, w)| rel > w) {
                worst = Some((i, j, rel));
            }
        }
    }
    Ok(worst)
}

/// True iff every pairwise commutator is within `tol` relative to the operand scales.
pub fn commute_check(family: &[HermitianOperator], tol: f64) -> bool {
    match worst_commutator(family) {
        Ok(None) => true,
        Ok(Some((_, _, w))) => w <= tol,
        Err(_) => false,
    }
}

/// A basis diagonalizing every member of a commuting family.
#[derive(Debug, Clone)]
pub struct CommonBasis {
    vectors: Mat<Complex64>,
    grid: Option<GridMeta>,
    eigenvalues: Vec<Vec<f64>>,
    blocks: Vec<Range<usize>>,
}

impl CommonBasis {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Eigenvalue of family member `op` on each basis vector.
    pub fn eigenvalues(&self, op: usize) -> &[f64] {
        &self.eigenvalues[op]
    }

    pub fn family_size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ranges of basis vectors that no family member separates.
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn vectors(&self) -> &Mat<Complex64> {
        &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        let scale = 1.0 / weight_of(self.grid.as_ref()).sqrt();
        let col = Col::from_fn(self.dim(), |j| self.vectors[(j, k)] * scale);
        StateVector::from_col(col, self.grid.clone()).expect("dimension fixed at construction")
    }

    pub fn orthonormality_error(&self) -> f64 {
        gram_error(&self.vectors)
    }

    /// `max_k ‖A f_k − λ_k f_k‖` for family member `op`.
    pub fn eigen_residual(&self, op: usize, a: &Operator) -> f64 {
        let av = a.matrix() * &self.vectors;
        let n = self.dim();
        (0..n)
            .map(|k| {
                let lambda = self.eigenvalues[op][k];
                (0..n).map(|j| (av[(j, k)] - self.vectors[(j, k)] * lambda).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn check_family(family: &[HermitianOperator]) -> Result<()> {
    let first = family.first().ok_or_else(|| WorkbenchError::Input("empty operator family".into()))?;
    for a in &family[1..] {
        if a.dim() != first.dim() {
            return Err(WorkbenchError::Dimension { expected: first.dim(), found: a.dim() });
        }
        same_grid(first.grid(), a.grid())?;
    }
    if let Some((first, second, norm)) = worst_commutator(family)? {
        if norm > COMMUTE_TOL {
            return Err(WorkbenchError::NotCommuting { first, second, norm });
        }
    }
    Ok(())
}

/// Common eigenbasis by sequential refinement: decompose the first member,
/// then re-diagonalize each later member inside every still-degenerate block.
pub fn simultaneous_diagonalize(family: &[HermitianOperator]) -> Result<CommonBasis> {
    check_family(family)?;
    let n = family[0].dim();
    let first = eigendecompose(&family[0])?;
    let mut vectors = first.vectors.clone();
    let mut blocks: Vec<Range<usize>> = first.groups.clone();

    for b in &family[1..] {
        let (spectrum, _) = if is_diagonal(b) {
            ((0..n).map(|i| b.entry(i, i).re).collect(), Mat::new())
        } else {
            raw_eigen(b.matrix())?
        };
        let tol = group_tolerance(&spectrum);
        let mut refined = Vec::with_capacity(blocks.len());
        for r in blocks {
            if r.len() == 1 {
                refined.push(r);
                continue;
            }
            let k = r.len();
            let vb = Mat::from_fn(n, k, |i, c| vectors[(i, r.start + c)]);
            let restricted = vb.adjoint() * (b.matrix() * &vb);
            let restricted = Mat::from_fn(k, k, |i, j| (restricted[(i, j)] + restricted[(j, i)].conj()) * 0.5);
            let (values, w) = raw_eigen(&restricted)?;
            let rotated = &vb * &w;
            for c in 0..k {
                for i in 0..n {
                    vectors[(i, r.start + c)] = rotated[(i, c)];
                }
            }
            refined.extend(group_sorted(&values, tol).into_iter().map(|g| r.start + g.start..r.start + g.end));
        }
        blocks = refined;
    }

    for r in &blocks {
        canonicalize_block(&mut vectors, r.clone());
    }
    for k in 0..n {
        fix_phase(&mut vectors, k);
    }
    let eigenvalues = family
        .iter()
        .map(|a| {
            let av = a.matrix() * &vectors;
            (0..n).map(|k| (0..n).map(|j| vectors[(j, k)].conj() * av[(j, k)]).sum::<Complex64>().re).collect()
        })
        .collect();
    Ok(CommonBasis { vectors, grid: family[0].grid().cloned(), eigenvalues, blocks })
}

/// A single hermitian `R` with every family member a function of it.
#[derive(Debug, Clone)]
pub struct GeneratorResult {
    pub r: HermitianOperator,
    /// Spectrum of `R`: the integers `0..labels.len()`.
    pub labels: Vec<f64>,
    /// `tables[op][label]`: eigenvalue of family member `op` on that joint eigenspace.
    pub tables: Vec<Vec<f64>>,
    pub basis: CommonBasis,
    /// Label of each common basis vector.
    pub label_of: Vec<usize>,
}

impl GeneratorResult {
    /// Family member `op` rebuilt as `table_op(R)` from a fresh decomposition of `R`.
    pub fn function_of_generator(&self, op: usize) -> Result<Operator> {
        let dec = eigendecompose(&self.r)?;
        let table = &self.tables[op];
        apply_function(&dec, |lambda| {
            let label = lambda.round();
            if label >= 0.0 && (label as usize) < table.len() && (lambda - label).abs() < 0.25 {
                Complex64::new(table[label as usize], 0.0)
            } else {
                Complex64::new(f64::NAN, 0.0)
            }
        })
    }
}

/// Clusters a value list; returns the ascending cluster index of each entry.
fn cluster_ids(values: &[f64]) -> Vec<usize> {
    let tol = group_tolerance(values);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut ids = vec![0; values.len()];
    for (cluster, g) in group_sorted(&sorted, tol).into_iter().enumerate() {
        for pos in g {
            ids[order[pos]] = cluster;
        }
    }
    ids
}

/// Builds `R = Σ label·P_label` over joint eigenspaces, labelled 0, 1, 2, …
/// in lexicographic order of their eigenvalue tuples.
pub fn vn_generator(family: &[HermitianOperator]) -> Result<GeneratorResult> {
    let basis = simultaneous_diagonalize(family)?;
    let n = basis.dim();
    let ids: Vec<Vec<usize>> = (0..family.len()).map(|op| cluster_ids(basis.eigenvalues(op))).collect();
    let tuples: Vec<Vec<usize>> = (0..n).map(|k| ids.iter().map(|col| col[k]).collect()).collect();
    let mut distinct = tuples.clone();
    distinct.sort();
    distinct.dedup();
    let label_of: Vec<usize> = tuples.iter().map(|t| distinct.binary_search(t).expect("tuple present")).collect();

    let labels: Vec<f64> = (0..distinct.len()).map(|l| l as f64).collect();
    let tables = (0..family.len())
        .map(|op| {
            let mut sums = vec![0.0; distinct.len()];
            let mut counts = vec![0usize; distinct.len()];
            for k in 0..n {
                sums[label_of[k]] += basis.eigenvalues(op)[k];
                counts[label_of[k]] += 1;
            }
            sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect()
        })
        .collect();

    let values: Vec<TraceScalar> = label_of.iter().map(|&l| Complex64::new(l as f64, 0.0)).collect();
    let r = spectral_sum(&basis.vectors, &values, basis.grid.clone());
    let r = certify_hermitian(&r.hermitian_part(), HERMITIAN_TOL)?;
    Ok(GeneratorResult { r, labels, tables, basis, label_of })
}

/// `g(A) = Σ g(λ_k)|f_k><f_k|`.
pub fn apply_function(dec: &SpectralDecomposition, g: impl Fn(f64) -> TraceScalar) -> Result<Operator> {
    let mut values = Vec::with_capacity(dec.dim());
    for &lambda in &dec.eigenvalues {
        let v = g(lambda);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(WorkbenchError::FunctionDomain { eigenvalue: lambda });
        }
        values.push(v);
    }
    Ok(spectral_sum(&dec.vectors, &values, dec.grid.clone()))
}
