//! The manifold of real 2×2 involutions `A² = E`, `det A = -1`.

use std::f64::consts::PI;

use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AlgebraError;

pub type Matrix2 = nalgebra::Matrix2<f64>;
pub type ComplexMatrix2 = nalgebra::Matrix2<Complex64>;

/// Tolerance for algebraic matrix identities in double precision.
pub const TAU_ALG: f64 = 1e-9;

/// The swap matrix `Z = [[0, 1], [1, 0]]`.
pub fn swap_matrix() -> Matrix2 {
    Matrix2::new(0.0, 1.0, 1.0, 0.0)
}

/// An element `αE + βZ` of the commutant of `Z`.
pub fn commutant_element(alpha: f64, beta: f64) -> Matrix2 {
    Matrix2::identity() * alpha + swap_matrix() * beta
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix2) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Row-major entries.
pub fn row_major(m: &Matrix2) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// `A(a, b, c) = [[a, b], [c, -a]]` with `bc = 1 - a²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvolutionMatrix {
    a: f64,
    b: f64,
    c: f64,
}

impl InvolutionMatrix {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, AlgebraError> {
        Self::with_tolerance(a, b, c, TAU_ALG)
    }

    pub fn with_tolerance(a: f64, b: f64, c: f64, tol: f64) -> Result<Self, AlgebraError> {
        let residual = (a * a + b * c - 1.0).abs();
        if !residual.is_finite() || residual >= tol {
            return Err(AlgebraError::NotInvolution { residual });
        }
        Ok(Self { a, b, c })
    }

    /// Reads `[[a, b], [c, d]]`, requiring `d = -a` and `bc = 1 - a²` within `tol`.
    pub fn from_matrix(m: &Matrix2, tol: f64) -> Result<Self, AlgebraError> {
        let trace = m[(0, 0)] + m[(1, 1)];
        if trace.abs() >= tol {
            return Err(AlgebraError::NotInvolution { residual: trace.abs() });
        }
        Self::with_tolerance(m[(0, 0)], m[(0, 1)], m[(1, 0)], tol)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn matrix(&self) -> Matrix2 {
        Matrix2::new(self.a, self.b, self.c, -self.a)
    }

    pub fn residual(&self) -> f64 {
        (self.a * self.a + self.b * self.c - 1.0).abs()
    }

    /// Eigenvectors for eigenvalues `+1` and `-1`.
    ///
    /// Uses `(-b, a ∓ 1)` and falls back to `(a ± 1, c)` when the first form
    /// degenerates (`b = 0`).
    pub fn eigenvectors(&self) -> (Vector2<f64>, Vector2<f64>) {
        let pick = |u: Vector2<f64>, v: Vector2<f64>| if u.norm() >= v.norm() { u } else { v };
        let plus = pick(Vector2::new(-self.b, self.a - 1.0), Vector2::new(self.a + 1.0, self.c));
        let minus = pick(Vector2::new(-self.b, self.a + 1.0), Vector2::new(self.a - 1.0, self.c));
        (plus, minus)
    }
}

/// `A = G Z G⁻¹` from a nonsingular seed `G = [[a, b], [c, d]]`.
pub fn involution_from_seed(g: &Matrix2) -> Result<InvolutionMatrix, AlgebraError> {
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let det = a * d - b * c;
    if det.abs() <= TAU_ALG {
        return Err(AlgebraError::SingularSeed { det });
    }
    let m11 = (b * d - a * c) / det;
    let m12 = (a * a - b * b) / det;
    let m21 = (d * d - c * c) / det;
    // m22 = (ac - bd)/det = -m11 by construction
    let tol = TAU_ALG * (1.0 + m11 * m11 + (m12 * m21).abs());
    InvolutionMatrix::with_tolerance(m11, m12, m21, tol)
}

/// A seed `G = [v, Av]` with `G Z G⁻¹ = A`.
pub fn seed_from_involution(a: &InvolutionMatrix, v: Vector2<f64>) -> Result<Matrix2, AlgebraError> {
    if v.norm() <= TAU_ALG {
        return Err(AlgebraError::SingularSeed { det: 0.0 });
    }
    let av = a.matrix() * v;
    let g = Matrix2::from_columns(&[v, av]);
    let det = g.determinant();
    if det.abs() <= TAU_ALG {
        return Err(AlgebraError::EigenvectorSeed);
    }
    Ok(g)
}

/// Spectral projectors of an involution: `A = Z1 - Z2`, `Z1 + Z2 = E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProjectors {
    /// `Z1 = (A + E)/2`, projector onto the `+1` eigenspace.
    pub plus: Matrix2,
    /// `Z2 = -(A - E)/2`, projector onto the `-1` eigenspace.
    pub minus: Matrix2,
}

pub fn spectral_projectors(a: &InvolutionMatrix) -> SpectralProjectors {
    let m = a.matrix();
    let e = Matrix2::identity();
    SpectralProjectors { plus: (m + e) * 0.5, minus: -(m - e) * 0.5 }
}

impl SpectralProjectors {
    pub fn reconstruct(&self) -> Matrix2 {
        self.plus - self.minus
    }

    /// `πZ2`: the logarithm of `A` is `i·πZ2` on the principal branch.
    pub fn log_generator(&self) -> Matrix2 {
        self.minus * PI
    }

    /// `exp(i(2k+1)π Z2) = Z1 + e^{i(2k+1)π} Z2`, evaluated through the spectral calculus.
    pub fn exp_log(&self, branch: i64) -> ComplexMatrix2 {
        let phase = Complex64::from_polar(1.0, (2 * branch + 1) as f64 * PI);
        self.plus.map(Complex64::from) + self.minus.map(|x| phase * x)
    }
}
