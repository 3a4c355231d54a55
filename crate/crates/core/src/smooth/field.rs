use std::sync::Arc;

use nalgebra::{ComplexField, Matrix2};
use num_complex::Complex64;

use super::{in_domain, SmoothError, TAU_FLD};
use crate::algebra::InvolutionMatrix;

/// Real function of the plane.
pub type PlaneFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Real function of one variable.
pub type LineFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth map from the unit square into the involutions with determinant −1.
pub trait InvolutionField: Send + Sync {
    type Scalar: ComplexField<RealField = f64> + Copy;

    /// Evaluates the field, checking the domain and the involution invariant.
    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<Self::Scalar>, SmoothError>;
}

impl<F: InvolutionField + ?Sized> InvolutionField for &F {
    type Scalar = F::Scalar;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<Self::Scalar>, SmoothError> {
        (**self).eval(x, y)
    }
}

impl<F: InvolutionField + ?Sized> InvolutionField for Box<F> {
    type Scalar = F::Scalar;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<Self::Scalar>, SmoothError> {
        (**self).eval(x, y)
    }
}

impl<F: InvolutionField + ?Sized> InvolutionField for Arc<F> {
    type Scalar = F::Scalar;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<Self::Scalar>, SmoothError> {
        (**self).eval(x, y)
    }
}

fn check_domain(x: f64, y: f64) -> Result<(), SmoothError> {
    if in_domain(x, y) {
        Ok(())
    } else {
        Err(SmoothError::OutsideDomain { x, y })
    }
}

/// `A(f1, f2, f3) = [[f1, f2], [f3, -f1]]`.
#[derive(Clone)]
pub struct ComponentField {
    f1: PlaneFn,
    f2: PlaneFn,
    f3: PlaneFn,
    tolerance: f64,
}

impl ComponentField {
    pub fn new(f1: PlaneFn, f2: PlaneFn, f3: PlaneFn) -> Self {
        ComponentField { f1, f2, f3, tolerance: TAU_FLD }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn components(&self, x: f64, y: f64) -> [f64; 3] {
        [(self.f1)(x, y), (self.f2)(x, y), (self.f3)(x, y)]
    }
}

impl InvolutionField for ComponentField {
    type Scalar = f64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<f64>, SmoothError> {
        check_domain(x, y)?;
        let [a, b, c] = self.components(x, y);
        let residual = (a * a + b * c - 1.0).abs();
        if !residual.is_finite() || residual > self.tolerance * (1.0 + (b * c).abs()) {
            return Err(SmoothError::FieldInvariant { x, y, residual });
        }
        Ok(Matrix2::new(a, b, c, -a))
    }
}

/// The same involution everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub InvolutionMatrix);

impl InvolutionField for ConstantField {
    type Scalar = f64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<f64>, SmoothError> {
        check_domain(x, y)?;
        Ok(self.0.matrix())
    }
}

/// Field given by one complex function `z`:
/// `A(z) = [[√(1−|z|²), z], [z̄, −√(1−|z|²)]]`, principal root.
#[derive(Clone)]
pub struct ComplexPotentialField {
    z: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
}

impl ComplexPotentialField {
    pub fn new(z: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>) -> Self {
        ComplexPotentialField { z }
    }

    pub fn z(&self, x: f64, y: f64) -> Complex64 {
        (self.z)(x, y)
    }

    /// Grid points (on a `(grid+1)²` lattice) where `|z| = 1`, so `a = 0`.
    pub fn boundary_contacts(&self, grid: usize) -> Vec<[f64; 2]> {
        let grid = grid.max(1);
        let mut out = Vec::new();
        for i in 0..=grid {
            for j in 0..=grid {
                let (x, y) = (i as f64 / grid as f64, j as f64 / grid as f64);
                if ((self.z)(x, y).norm() - 1.0).abs() <= TAU_FLD {
                    out.push([x, y]);
                }
            }
        }
        out
    }
}

impl InvolutionField for ComplexPotentialField {
    type Scalar = Complex64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<Complex64>, SmoothError> {
        check_domain(x, y)?;
        let z = (self.z)(x, y);
        let modulus = z.norm();
        if !modulus.is_finite() || modulus > 1.0 + TAU_FLD {
            return Err(SmoothError::ModulusAboveOne { x, y, modulus });
        }
        let a = Complex64::new((1.0 - z.norm_sqr()).max(0.0).sqrt(), 0.0);
        Ok(Matrix2::new(a, z, z.conj(), -a))
    }
}

/// Piecewise smooth planar curve `s ↦ (x(s), y(s))` on `[s0, s1]`.
#[derive(Clone)]
pub struct Curve {
    kind: CurveKind,
    s0: f64,
    s1: f64,
}

#[derive(Clone)]
enum CurveKind {
    Segment([f64; 2], [f64; 2]),
    Polyline { points: Vec<[f64; 2]>, cumulative: Vec<f64> },
    Param { x: LineFn, y: LineFn },
    Reversed(Box<Curve>),
    Joined(Vec<Curve>),
}

impl std::fmt::Debug for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Curve")
            .field("start", &self.start())
            .field("end", &self.end())
            .field("s0", &self.s0)
            .field("s1", &self.s1)
            .finish()
    }
}

impl Curve {
    /// Straight segment, `s ∈ [0, 1]`.
    pub fn segment(from: [f64; 2], to: [f64; 2]) -> Result<Self, SmoothError> {
        Curve { kind: CurveKind::Segment(from, to), s0: 0.0, s1: 1.0 }.validated()
    }

    /// Polyline parameterized by normalized arc length, `s ∈ [0, 1]`.
    pub fn polyline(points: Vec<[f64; 2]>) -> Result<Self, SmoothError> {
        if points.len() < 2 {
            return Err(SmoothError::ShortPolyline(points.len()));
        }
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            cumulative.push(cumulative.last().unwrap() + d);
        }
        if *cumulative.last().unwrap() == 0.0 {
            return Err(SmoothError::DegenerateCurve);
        }
        Curve { kind: CurveKind::Polyline { points, cumulative }, s0: 0.0, s1: 1.0 }.validated()
    }

    pub fn param(x: LineFn, y: LineFn, s0: f64, s1: f64) -> Result<Self, SmoothError> {
        if !(s0.is_finite() && s1.is_finite()) || s0 == s1 {
            return Err(SmoothError::DegenerateCurve);
        }
        Curve { kind: CurveKind::Param { x, y }, s0, s1 }.validated()
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        Curve { kind: CurveKind::Reversed(Box::new(self.clone())), s0: self.s0, s1: self.s1 }
    }

    /// Curves traversed in order; piece `k` occupies `s ∈ [k, k+1]`.
    pub fn join(pieces: Vec<Curve>) -> Result<Self, SmoothError> {
        if pieces.is_empty() {
            return Err(SmoothError::DegenerateCurve);
        }
        for (k, w) in pieces.windows(2).enumerate() {
            let (a, b) = (w[0].end(), w[1].start());
            if (a[0] - b[0]).abs() > TAU_FLD || (a[1] - b[1]).abs() > TAU_FLD {
                return Err(SmoothError::Gap { piece: k + 1 });
            }
        }
        let n = pieces.len() as f64;
        Ok(Curve { kind: CurveKind::Joined(pieces), s0: 0.0, s1: n })
    }

    fn validated(self) -> Result<Self, SmoothError> {
        for p in [self.start(), self.end()] {
            check_domain(p[0], p[1])?;
        }
        Ok(self)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s0, self.s1)
    }

    pub fn start(&self) -> [f64; 2] {
        self.point(self.s0)
    }

    pub fn end(&self) -> [f64; 2] {
        self.point(self.s1)
    }

    /// Point at parameter `s`.
    pub fn point(&self, s: f64) -> [f64; 2] {
        match &self.kind {
            CurveKind::Segment(a, b) => [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            CurveKind::Polyline { points, cumulative } => {
                let target = s.clamp(0.0, 1.0) * cumulative.last().unwrap();
                let k = cumulative.partition_point(|&c| c <= target).clamp(1, points.len() - 1);
                let len = cumulative[k] - cumulative[k - 1];
                let u = if len == 0.0 { 0.0 } else { (target - cumulative[k - 1]) / len };
                let (a, b) = (points[k - 1], points[k]);
                [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
            }
            CurveKind::Param { x, y } => [x(s), y(s)],
            CurveKind::Reversed(inner) => inner.point(self.s0 + self.s1 - s),
            CurveKind::Joined(pieces) => {
                let k = (s.floor().max(0.0) as usize).min(pieces.len() - 1);
                let piece = &pieces[k];
                let (a, b) = piece.interval();
                piece.point(a + (s - k as f64) * (b - a))
            }
        }
    }

    /// Closed within the field tolerance.
    pub fn is_closed(&self) -> bool {
        let (a, b) = (self.start(), self.end());
        (a[0] - b[0]).abs() <= TAU_FLD && (a[1] - b[1]).abs() <= TAU_FLD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_field_checks_invariant() {
        let f = ComponentField::new(
            Arc::new(|x, _| x.cos()),
            Arc::new(|x, _| x.sin()),
            Arc::new(|x, _| x.sin()),
        );
        let m = f.eval(0.3, 0.2).unwrap();
        assert!((m * m - Matrix2::identity()).norm() < 1e-12);
        let bad = ComponentField::new(Arc::new(|_, _| 0.5), Arc::new(|_, _| 1.0), Arc::new(|_, _| 1.0));
        assert!(matches!(bad.eval(0.1, 0.1), Err(SmoothError::FieldInvariant { .. })));
        assert!(matches!(f.eval(1.5, 0.0), Err(SmoothError::OutsideDomain { .. })));
    }

    #[test]
    fn complex_field_is_involution() {
        let f = ComplexPotentialField::new(Arc::new(|x, y| Complex64::new(0.5 * x, 0.4 * y)));
        let m = f.eval(0.7, 0.9).unwrap();
        assert!((m * m - Matrix2::identity()).norm() < 1e-12);
        assert!((m.determinant() + Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(f.boundary_contacts(8).is_empty());

        let rim = ComplexPotentialField::new(Arc::new(|x, _| Complex64::from_polar(1.0, x)));
        assert_eq!(rim.boundary_contacts(4).len(), 25);
        let m = rim.eval(0.5, 0.5).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));

        let big = ComplexPotentialField::new(Arc::new(|_, _| Complex64::new(1.5, 0.0)));
        assert!(matches!(big.eval(0.5, 0.5), Err(SmoothError::ModulusAboveOne { .. })));
    }

    #[test]
    fn curves() {
        let s = Curve::segment([0.0, 0.0], [1.0, 0.5]).unwrap();
        assert_eq!(s.point(0.5), [0.5, 0.25]);
        let r = s.reversed();
        assert_eq!(r.start(), [1.0, 0.5]);
        assert_eq!(r.end(), [0.0, 0.0]);

        let p = Curve::polyline(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(p.point(0.5), [1.0, 0.0]);
        assert_eq!(p.point(0.75), [1.0, 0.5]);
        assert_eq!(p.end(), [1.0, 1.0]);

        let c = Curve::param(Arc::new(f64::sin), Arc::new(|_| 0.0), 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((c.end()[0] - 1.0).abs() < 1e-15);

        let loop_ = Curve::join(vec![c.clone(), Curve::segment([1.0, 0.0], [0.0, 0.0]).unwrap()]).unwrap();
        assert!(loop_.is_closed());
        assert_eq!(loop_.interval(), (0.0, 2.0));
        assert_eq!(loop_.point(1.5), [0.5, 0.0]);

        assert!(matches!(Curve::segment([0.0, 0.0], [2.0, 0.0]), Err(SmoothError::OutsideDomain { .. })));
        assert!(matches!(Curve::join(vec![s.clone(), s]), Err(SmoothError::Gap { piece: 1 })));
    }
}
