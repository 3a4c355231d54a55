//! Smooth involution fields on the unit square, product integrals along curves,
//! plane-section solutions and discretization onto embedded graphs.

mod conic;
mod discretize;
mod field;
mod integral;

pub use conic::{
    project_to_plane, quadric_residual, solve_ode_field, OdeField, PlaneCoefficients, PlaneSection,
    ProjectedField, SectionField, SectionForm,
};
pub use discretize::{
    discretize, parity_rule_holds, EdgeQuadratureRule, EdgeRules, Embedding, MatrixMarking, RESIDUAL_CHECK,
};
pub use field::{ComplexPotentialField, ComponentField, ConstantField, Curve, InvolutionField, LineFn, PlaneFn};
pub use integral::{
    anticommutator_defect, infinitesimal_residual, p_integral, p_integral_convergence, partials, residual_scan,
    ConvergenceReport, PIntegral, Parity, Partials, Residual, ResidualScan,
};

pub use nalgebra::Matrix2;
pub use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on `a² + bc = 1` at sampled field points.
pub const TAU_FLD: f64 = 1e-9;
/// Reference tolerance for product integrals at `2¹⁰` steps.
pub const TAU_NUM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothError {
    #[error("point ({x}, {y}) is outside the unit square")]
    OutsideDomain { x: f64, y: f64 },
    #[error("field is not an involution at ({x}, {y}): |a² + bc − 1| = {residual}")]
    FieldInvariant { x: f64, y: f64, residual: f64 },
    #[error("|z| = {modulus} > 1 at ({x}, {y})")]
    ModulusAboveOne { x: f64, y: f64, modulus: f64 },
    #[error("{steps} steps do not have {parity} parity")]
    ParityMismatch { steps: usize, parity: Parity },
    #[error("too few steps: {0}")]
    TooFewSteps(usize),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("polyline needs at least two points, got {0}")]
    ShortPolyline(usize),
    #[error("curve has zero length or an empty parameter interval")]
    DegenerateCurve,
    #[error("curve piece {piece} does not start where the previous one ends")]
    Gap { piece: usize },
    #[error("plane coefficients are all zero or not finite")]
    DegeneratePlane,
    #[error("plane misses the quadric a² + bc = 1")]
    EmptyConic,
    #[error("C2·C3 vanishes or changes sign at y = {y}")]
    SignChange { y: f64 },
    #[error("C2/C3 is not constant (differs at y = {y})")]
    VaryingRatio { y: f64 },
    #[error("quadrature did not converge at y = {y}")]
    Quadrature { y: f64 },
    #[error("some closed path has an odd number of odd-parity edges")]
    ParityRule,
    #[error("field fails the potential residual test at ({x}, {y}): residual {residual}")]
    NonPotentialField { x: f64, y: f64, residual: f64 },
    #[error("embedding has {points} points for {nodes} nodes")]
    EmbeddingSize { nodes: usize, points: usize },
    #[error("node {0} has no position")]
    MissingNode(usize),
    #[error("curve for edge {from} -> {to} does not join the node positions")]
    CurveEndpoints { from: usize, to: usize },
}

pub(crate) fn in_domain(x: f64, y: f64) -> bool {
    (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)
}
