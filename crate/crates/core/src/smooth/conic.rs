use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::field::{InvolutionField, LineFn, PlaneFn};
use super::{SmoothError, TAU_FLD};
use crate::algebra::TAU_ALG;

/// Coefficients of the plane `2a·C1 + c·C2 + b·C3 = 0` in `(a, b, c)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl PlaneCoefficients {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self, SmoothError> {
        if ![c1, c2, c3].iter().all(|c| c.is_finite()) || (c1 == 0.0 && c2 == 0.0 && c3 == 0.0) {
            return Err(SmoothError::DegeneratePlane);
        }
        Ok(PlaneCoefficients { c1, c2, c3 })
    }

    /// Normal vector in `(a, b, c)` coordinates.
    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(2.0 * self.c1, self.c3, self.c2)
    }

    pub fn plane_residual(&self, [a, b, c]: [f64; 3]) -> f64 {
        2.0 * a * self.c1 + c * self.c2 + b * self.c3
    }
}

/// `a² + bc − 1`.
pub fn quadric_residual([a, b, c]: [f64; 3]) -> f64 {
    a * a + b * c - 1.0
}

/// Shape of the section and the parameterization used by [`PlaneSection::point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectionForm {
    /// `C1 = 0`, `C2·C3 > 0`: `(cosh t, ρ sinh t, −sinh t / ρ)`, `ρ = √(C2/C3)`.
    Hyperbolic { rho: f64 },
    /// `C1 = 0`, `C2·C3 < 0`: `(cos t, ρ sin t, sin t / ρ)`, `ρ = √(−C2/C3)`.
    Elliptic { rho: f64 },
    /// `C1 ≠ 0`, `C2 = 0`, `C3 ≠ 0`: `(−e^{−t}, e^{−t}/L, 2L sinh t)`, `L = C3/(2C1)`.
    Exponential { l: f64 },
    /// Remaining planes, parameterized in the principal axes of the section.
    Ellipse,
    Hyperbola,
    LinePair,
}

/// Intersection of `{a² + bc = 1}` with a plane; `−v` lies on it with `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSection {
    plane: PlaneCoefficients,
    form: SectionForm,
    axes: [Vector3<f64>; 2],
    lambdas: [f64; 2],
}

impl PlaneSection {
    pub fn new(plane: PlaneCoefficients) -> Result<Self, SmoothError> {
        let n = plane.normal().normalize();
        let k = n.iamin();
        let helper = Vector3::ith(k, 1.0);
        let e1 = (helper - n * n.dot(&helper)).normalize();
        let e2 = n.cross(&e1);
        let q = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0);
        let s = Matrix2::new(
            e1.dot(&(q * e1)),
            e1.dot(&(q * e2)),
            e2.dot(&(q * e1)),
            e2.dot(&(q * e2)),
        );
        let eig = SymmetricEigen::new(s);
        let (i, j) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let axis = |k: usize| e1 * eig.eigenvectors[(0, k)] + e2 * eig.eigenvectors[(1, k)];
        let lambdas = [eig.eigenvalues[i], eig.eigenvalues[j]];
        if lambdas[0] <= TAU_ALG {
            return Err(SmoothError::EmptyConic);
        }
        let PlaneCoefficients { c1, c2, c3 } = plane;
        let form = if c1 == 0.0 && c2 * c3 > 0.0 {
            SectionForm::Hyperbolic { rho: (c2 / c3).sqrt() }
        } else if c1 == 0.0 && c2 * c3 < 0.0 {
            SectionForm::Elliptic { rho: (-c2 / c3).sqrt() }
        } else if c1 != 0.0 && c2 == 0.0 && c3 != 0.0 {
            SectionForm::Exponential { l: c3 / (2.0 * c1) }
        } else if lambdas[1] > TAU_ALG {
            SectionForm::Ellipse
        } else if lambdas[1] < -TAU_ALG {
            SectionForm::Hyperbola
        } else {
            SectionForm::LinePair
        };
        Ok(PlaneSection { plane, form, axes: [axis(i), axis(j)], lambdas })
    }

    pub fn plane(&self) -> PlaneCoefficients {
        self.plane
    }

    pub fn form(&self) -> SectionForm {
        self.form
    }

    /// Whether the section is bounded.
    pub fn is_closed(&self) -> bool {
        matches!(self.form, SectionForm::Elliptic { .. } | SectionForm::Ellipse)
    }

    /// `(a(t), b(t), c(t))`; `negate` selects the opposite point `−v`.
    pub fn point(&self, t: f64, negate: bool) -> [f64; 3] {
        let v = match self.form {
            SectionForm::Hyperbolic { rho } => [t.cosh(), rho * t.sinh(), -t.sinh() / rho],
            SectionForm::Elliptic { rho } => [t.cos(), rho * t.sin(), t.sin() / rho],
            SectionForm::Exponential { l } => {
                let u = (-t).exp();
                [-u, u / l, 2.0 * l * t.sinh()]
            }
            _ => {
                let [l1, l2] = self.lambdas;
                let w = match self.form {
                    SectionForm::Ellipse => [t.cos() / l1.sqrt(), t.sin() / l2.sqrt()],
                    SectionForm::Hyperbola => [t.cosh() / l1.sqrt(), t.sinh() / (-l2).sqrt()],
                    _ => [1.0 / l1.sqrt(), t],
                };
                let v = self.axes[0] * w[0] + self.axes[1] * w[1];
                [v[0], v[1], v[2]]
            }
        };
        if negate {
            v.map(|x| -x)
        } else {
            v
        }
    }

    pub fn matrix(&self, t: f64, negate: bool) -> Matrix2<f64> {
        let [a, b, c] = self.point(t, negate);
        Matrix2::new(a, b, c, -a)
    }

    /// Euclidean nearest point of the section to `p`.
    pub fn nearest(&self, p: [f64; 3]) -> [f64; 3] {
        let pv = Vector3::from(p);
        let q = Vector2::new(self.axes[0].dot(&pv), self.axes[1].dot(&pv));
        let l = self.lambdas;
        let constraint = |w: &Vector2<f64>| l[0] * w[0] * w[0] + l[1] * w[1] * w[1] - 1.0;
        let mut candidates: Vec<Vector2<f64>> = Vec::new();

        for mu in secular_roots(l, [q[0], q[1]]) {
            let mu = polish(mu, l, [q[0], q[1]]);
            let d = [1.0 - mu * l[0], 1.0 - mu * l[1]];
            if d.iter().all(|d| d.abs() > 1e-14) {
                candidates.push(Vector2::new(q[0] / d[0], q[1] / d[1]));
            }
        }
        for k in 0..2 {
            let j = 1 - k;
            let denom = 1.0 - l[j] / l[k];
            if l[k].abs() <= TAU_ALG || denom.abs() <= 1e-14 {
                continue;
            }
            let wj = q[j] / denom;
            let sq = (1.0 - l[j] * wj * wj) / l[k];
            if sq >= 0.0 {
                for sign in [1.0, -1.0] {
                    let mut w = Vector2::zeros();
                    w[j] = wj;
                    w[k] = sign * sq.sqrt();
                    candidates.push(w);
                }
            }
        }

        let best = candidates
            .into_iter()
            .filter(|w| w.iter().all(|x| x.is_finite()))
            .map(|w| {
                let s = constraint(&w) + 1.0;
                if s > 0.0 {
                    w / s.sqrt()
                } else {
                    w
                }
            })
            .filter(|w| constraint(w).abs() <= 1e-8)
            .min_by(|a, b| (a - q).norm().total_cmp(&(b - q).norm()))
            .unwrap_or_else(|| Vector2::new(1.0 / l[0].sqrt(), 0.0));
        let v = self.axes[0] * best[0] + self.axes[1] * best[1];
        [v[0], v[1], v[2]]
    }
}

/// Real roots of `Σ λk qk² / (1 − μλk)² = 1`, cleared of denominators.
fn secular_roots(l: [f64; 2], q: [f64; 2]) -> Vec<f64> {
    let mul = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let d1 = [1.0, -l[0]];
    let d2 = [1.0, -l[1]];
    let u = mul(&d1, &d2);
    let mut p = mul(&u, &u);
    let t1 = mul(&d2, &d2);
    let t2 = mul(&d1, &d1);
    for i in 0..3 {
        p[i] -= l[0] * q[0] * q[0] * t1[i] + l[1] * q[1] * q[1] * t2[i];
    }
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    while p.len() > 1 && p.last().unwrap().abs() <= 1e-13 * scale {
        p.pop();
    }
    let d = p.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = p[d];
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -p[i] / lead;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

fn polish(mut mu: f64, l: [f64; 2], q: [f64; 2]) -> f64 {
    for _ in 0..8 {
        let mut g = -1.0;
        let mut dg = 0.0;
        for k in 0..2 {
            let d = 1.0 - mu * l[k];
            if d.abs() < 1e-14 {
                return mu;
            }
            g += l[k] * q[k] * q[k] / (d * d);
            dg += 2.0 * l[k] * l[k] * q[k] * q[k] / (d * d * d);
        }
        if dg == 0.0 || !dg.is_finite() {
            break;
        }
        let step = g / dg;
        mu -= step;
        if step.abs() <= 1e-16 * (1.0 + mu.abs()) {
            break;
        }
    }
    mu
}

/// Plane section composed with a scalar parameter field `t(x, y)`.
#[derive(Clone)]
pub struct SectionField {
    section: PlaneSection,
    t: PlaneFn,
    negate: bool,
}

impl SectionField {
    pub fn new(section: PlaneSection, t: PlaneFn, negate: bool) -> Self {
        SectionField { section, t, negate }
    }

    /// `A(t) = [[cos t, sin t], [sin t, −cos t]]`.
    pub fn rotation(t: PlaneFn) -> Self {
        let section = PlaneSection::new(PlaneCoefficients { c1: 0.0, c2: 1.0, c3: -1.0 }).unwrap();
        SectionField::new(section, t, false)
    }

    pub fn section(&self) -> &PlaneSection {
        &self.section
    }

    pub fn parameter(&self, x: f64, y: f64) -> f64 {
        (self.t)(x, y)
    }
}

impl InvolutionField for SectionField {
    type Scalar = f64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<f64>, SmoothError> {
        if !super::in_domain(x, y) {
            return Err(SmoothError::OutsideDomain { x, y });
        }
        let t = (self.t)(x, y);
        if !t.is_finite() {
            return Err(SmoothError::FieldInvariant { x, y, residual: f64::NAN });
        }
        Ok(self.section.matrix(t, self.negate))
    }
}

const ODE_SAMPLES: usize = 256;

/// Field with `A·A_y = [[0, C2(y)], [C3(y), 0]]` and `t = ∫₀^y ±√|C2C3| + R(x)`.
#[derive(Clone)]
pub struct OdeField {
    c2: LineFn,
    c3: LineFn,
    r: LineFn,
    sign: f64,
    section: PlaneSection,
}

impl std::fmt::Debug for OdeField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeField").field("form", &self.section.form()).finish()
    }
}

pub fn solve_ode_field(c2: LineFn, c3: LineFn, r: LineFn) -> Result<OdeField, SmoothError> {
    let (c20, c30) = (c2(0.0), c3(0.0));
    let p0 = c20 * c30;
    if !p0.is_finite() || p0 == 0.0 {
        return Err(SmoothError::SignChange { y: 0.0 });
    }
    let ratio0 = c20 / c30;
    let ys = (1..=ODE_SAMPLES).map(|k| k as f64 / ODE_SAMPLES as f64);
    for y in ys.clone() {
        let p = c2(y) * c3(y);
        if !p.is_finite() || p == 0.0 || p.signum() != p0.signum() {
            return Err(SmoothError::SignChange { y });
        }
    }
    for y in ys {
        if ((c2(y) / c3(y)) - ratio0).abs() > TAU_FLD * (1.0 + ratio0.abs()) {
            return Err(SmoothError::VaryingRatio { y });
        }
    }
    let section = PlaneSection::new(PlaneCoefficients::new(0.0, c20, c30)?)?;
    Ok(OdeField { c2, c3, r, sign: c20.signum(), section })
}

impl OdeField {
    pub fn section(&self) -> &PlaneSection {
        &self.section
    }

    /// `C(y) = [[0, C2(y)], [C3(y), 0]]`.
    pub fn c_matrix(&self, y: f64) -> Matrix2<f64> {
        Matrix2::new(0.0, (self.c2)(y), (self.c3)(y), 0.0)
    }

    pub fn parameter(&self, x: f64, y: f64) -> Result<f64, SmoothError> {
        let integral = if y == 0.0 {
            0.0
        } else {
            let (c2, c3) = (&self.c2, &self.c3);
            let out = quadrature::integrate(|s| (c2(s) * c3(s)).abs().sqrt(), 0.0, y, 1e-13);
            if !out.integral.is_finite() || out.error_estimate > 1e-9 {
                return Err(SmoothError::Quadrature { y });
            }
            out.integral
        };
        Ok(self.sign * integral + (self.r)(x))
    }
}

impl InvolutionField for OdeField {
    type Scalar = f64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<f64>, SmoothError> {
        if !super::in_domain(x, y) {
            return Err(SmoothError::OutsideDomain { x, y });
        }
        Ok(self.section.matrix(self.parameter(x, y)?, false))
    }
}

type TripleFn = Arc<dyn Fn(f64, f64) -> Result<[f64; 3], SmoothError> + Send + Sync>;

/// Pointwise nearest-point projection of a field onto a plane section.
#[derive(Clone)]
pub struct ProjectedField {
    source: TripleFn,
    section: PlaneSection,
}

impl ProjectedField {
    /// Projects an arbitrary triple `(f1, f2, f3)`, not necessarily on the quadric.
    pub fn from_components(f1: PlaneFn, f2: PlaneFn, f3: PlaneFn, plane: PlaneCoefficients) -> Result<Self, SmoothError> {
        let source: TripleFn = Arc::new(move |x, y| Ok([f1(x, y), f2(x, y), f3(x, y)]));
        Ok(ProjectedField { source, section: PlaneSection::new(plane)? })
    }

    pub fn section(&self) -> &PlaneSection {
        &self.section
    }

    pub fn source(&self, x: f64, y: f64) -> Result<[f64; 3], SmoothError> {
        (self.source)(x, y)
    }
}

pub fn project_to_plane<F>(field: F, plane: PlaneCoefficients) -> Result<ProjectedField, SmoothError>
where
    F: InvolutionField<Scalar = f64> + 'static,
{
    let source: TripleFn = Arc::new(move |x, y| {
        let m = field.eval(x, y)?;
        Ok([m[(0, 0)], m[(0, 1)], m[(1, 0)]])
    });
    Ok(ProjectedField { source, section: PlaneSection::new(plane)? })
}

impl InvolutionField for ProjectedField {
    type Scalar = f64;

    fn eval(&self, x: f64, y: f64) -> Result<Matrix2<f64>, SmoothError> {
        if !super::in_domain(x, y) {
            return Err(SmoothError::OutsideDomain { x, y });
        }
        let [a, b, c] = self.section.nearest((self.source)(x, y)?);
        Ok(Matrix2::new(a, b, c, -a))
    }
}
