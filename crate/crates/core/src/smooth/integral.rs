use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::field::{Curve, InvolutionField};
use super::SmoothError;

/// Step-count parity of a product integral: `Odd` is P₁, `Even` is P₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Determinant of a product of `n` involutions with det −1.
    pub fn determinant(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }

    /// Smallest step count `> n` with this parity obtained by doubling.
    pub fn refine(self, n: usize) -> usize {
        match self {
            Parity::Even => 2 * n,
            Parity::Odd => 2 * n + 1,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PIntegral<T: nalgebra::Scalar> {
    pub matrix: Matrix2<T>,
    pub determinant: T,
    pub steps: usize,
    pub parity: Parity,
}

/// Ordered product of the field at the midpoints of `n` equal parameter steps,
/// first point on the left.
pub fn p_integral<F: InvolutionField>(
    field: &F,
    curve: &Curve,
    n: usize,
    parity: Parity,
) -> Result<PIntegral<F::Scalar>, SmoothError> {
    if n == 0 {
        return Err(SmoothError::TooFewSteps(n));
    }
    if Parity::of(n) != parity {
        return Err(SmoothError::ParityMismatch { steps: n, parity });
    }
    let (s0, s1) = curve.interval();
    let ds = (s1 - s0) / n as f64;
    let mut m = Matrix2::<F::Scalar>::identity();
    for k in 0..n {
        let [x, y] = curve.point(s0 + (k as f64 + 0.5) * ds);
        m *= field.eval(x, y)?;
    }
    Ok(PIntegral { determinant: m.determinant(), matrix: m, steps: n, parity })
}

/// Three successive refinements of a product integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T: nalgebra::Scalar> {
    pub steps: [usize; 3],
    pub values: [Matrix2<T>; 3],
    /// `‖M(n) − M(2n)‖`, `‖M(2n) − M(4n)‖`.
    pub differences: [f64; 2],
    /// `log2` of the ratio of successive differences.
    pub order: f64,
    pub extrapolated: Matrix2<T>,
}

pub fn p_integral_convergence<F: InvolutionField>(
    field: &F,
    curve: &Curve,
    n: usize,
    parity: Parity,
) -> Result<ConvergenceReport<F::Scalar>, SmoothError> {
    let n1 = parity.refine(n);
    let n2 = parity.refine(n1);
    let v0 = p_integral(field, curve, n, parity)?.matrix;
    let v1 = p_integral(field, curve, n1, parity)?.matrix;
    let v2 = p_integral(field, curve, n2, parity)?.matrix;
    let d0 = (v0 - v1).norm();
    let d1 = (v1 - v2).norm();
    let order = (d0 / d1).log2();
    let p = if order.is_finite() && (0.5..=6.0).contains(&order) { order } else { 2.0 };
    let k = nalgebra::convert::<f64, F::Scalar>(1.0 / (2f64.powf(p) - 1.0));
    let extrapolated = v2 + (v2 - v1) * k;
    Ok(ConvergenceReport {
        steps: [n, n1, n2],
        values: [v0, v1, v2],
        differences: [d0, d1],
        order,
        extrapolated,
    })
}

/// Central-difference partial derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials<T: nalgebra::Scalar> {
    pub a: Matrix2<T>,
    pub a_x: Matrix2<T>,
    pub a_y: Matrix2<T>,
    pub a_xy: Matrix2<T>,
}

pub fn partials<F: InvolutionField>(
    field: &F,
    x: f64,
    y: f64,
    h: f64,
) -> Result<Partials<F::Scalar>, SmoothError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SmoothError::BadStep(h));
    }
    let e = |x, y| field.eval(x, y);
    let inv2h = nalgebra::convert::<f64, F::Scalar>(0.5 / h);
    let inv4h2 = nalgebra::convert::<f64, F::Scalar>(0.25 / (h * h));
    let a = e(x, y)?;
    let a_x = (e(x + h, y)? - e(x - h, y)?) * inv2h;
    let a_y = (e(x, y + h)? - e(x, y - h)?) * inv2h;
    let a_xy = (e(x + h, y + h)? - e(x + h, y - h)? - e(x - h, y + h)? + e(x - h, y - h)?) * inv4h2;
    Ok(Partials { a, a_x, a_y, a_xy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T: nalgebra::Scalar> {
    pub matrix: Matrix2<T>,
    pub norm: f64,
}

/// `A·A_xy + A_y·A_x` by central differences with step `h`.
pub fn infinitesimal_residual<F: InvolutionField>(
    field: &F,
    x: f64,
    y: f64,
    h: f64,
) -> Result<Residual<F::Scalar>, SmoothError> {
    let p = partials(field, x, y, h)?;
    let matrix = p.a * p.a_xy + p.a_y * p.a_x;
    Ok(Residual { norm: matrix.norm(), matrix })
}

/// Worst residual over the `grid × grid` cell centres of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualScan {
    pub max_norm: f64,
    pub at: [f64; 2],
    pub points: usize,
}

pub fn residual_scan<F: InvolutionField>(field: &F, grid: usize, h: f64) -> Result<ResidualScan, SmoothError> {
    let grid = grid.max(1);
    let mut scan = ResidualScan { max_norm: 0.0, at: [0.5, 0.5], points: 0 };
    for i in 0..grid {
        for j in 0..grid {
            let x = (i as f64 + 0.5) / grid as f64;
            let y = (j as f64 + 0.5) / grid as f64;
            let r = infinitesimal_residual(field, x, y, h)?;
            scan.points += 1;
            if r.norm > scan.max_norm || !r.norm.is_finite() {
                scan.max_norm = r.norm;
                scan.at = [x, y];
            }
        }
    }
    Ok(scan)
}

/// `‖A·(A·A_y) + (A·A_y)·A‖`.
pub fn anticommutator_defect<F: InvolutionField>(field: &F, x: f64, y: f64, h: f64) -> Result<f64, SmoothError> {
    let p = partials(field, x, y, h)?;
    let c = p.a * p.a_y;
    Ok((p.a * c + c * p.a).norm())
}
