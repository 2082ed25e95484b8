//! The two-dimensional numeric algebra underlying both Hilbert spaces.
//!
//! Every scalar is a complex number viewed as an element of a rank-two
//! algebra over the reals. Each element satisfies its own minimal polynomial
//!
//! ```text
//! x² − tr(x)·x + N(x)·1 = 0,   tr(x) = x + x̄,   N(x) = x·x̄
//! ```
//!
//! with real trace and norm forms. The 2×2 real-matrix embedding is kept only
//! as a verification view; arithmetic runs on the `(re, im)` pair.

use num_complex::Complex64;

/// A scalar of the numeric algebra, stored as an `(re, im)` pair.
pub type TraceScalar = Complex64;

/// Real 2×2 matrix in row-major order.
pub type RealMatrix2 = [[f64; 2]; 2];

/// Trace form, norm form and the matrix view of a [`TraceScalar`].
pub trait TraceForm: Copy {
    /// `x + x̄`, always real.
    fn trace(self) -> f64;

    /// `x·x̄`, always real and non-negative.
    fn norm_form(self) -> f64;

    /// `x² − tr(x)·x + N(x)`; vanishes up to rounding for every element.
    fn minimal_poly_residual(self) -> TraceScalar;

    /// Left-multiplication matrix `[[re, −im], [im, re]]`.
    fn embed_matrix(self) -> RealMatrix2;
}

impl TraceForm for TraceScalar {
    fn trace(self) -> f64 {
        2.0 * self.re
    }

    fn norm_form(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    fn minimal_poly_residual(self) -> TraceScalar {
        self * self - self * self.trace() + self.norm_form()
    }

    fn embed_matrix(self) -> RealMatrix2 {
        [[self.re, -self.im], [self.im, self.re]]
    }
}

pub fn trace(x: TraceScalar) -> f64 {
    x.trace()
}

pub fn norm_form(x: TraceScalar) -> f64 {
    x.norm_form()
}

pub fn minimal_poly_residual(x: TraceScalar) -> TraceScalar {
    x.minimal_poly_residual()
}

pub fn embed_matrix(x: TraceScalar) -> RealMatrix2 {
    x.embed_matrix()
}

/// Matrix trace of a real 2×2 matrix.
pub fn matrix_trace(m: &RealMatrix2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn matrix_mul(a: &RealMatrix2, b: &RealMatrix2) -> RealMatrix2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn matrix_add(a: &RealMatrix2, b: &RealMatrix2) -> RealMatrix2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}
