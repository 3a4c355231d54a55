//! JSON descriptions of scalar functions, fields, curves and embeddings.

use std::sync::Arc;

use balance_nets::algebra::InvolutionMatrix;
use balance_nets::smooth::{
    solve_ode_field, ComplexPotentialField, Complex64, ComponentField, ConstantField, Curve, EdgeQuadratureRule,
    EdgeRules, Embedding, InvolutionField, Parity, PlaneCoefficients, PlaneSection, ProjectedField, SectionField,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Expression tree: a number, a variable name (`pi` is the constant), or one call.
///
/// `{"add": [..]}`, `{"mul": [..]}`, `{"sub": [a, b]}`, `{"div": [a, b]}`,
/// `{"pow": [a, b]}`, and unary `neg sin cos tan exp ln sqrt abs sinh cosh tanh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Number(f64),
    Var(String),
    Call(Box<Call>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Call {
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Sub(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Tan(Expr),
    Exp(Expr),
    Ln(Expr),
    Sqrt(Expr),
    Abs(Expr),
    Sinh(Expr),
    Cosh(Expr),
    Tanh(Expr),
}

#[derive(Debug, Clone)]
enum Compiled {
    Const(f64),
    Var(usize),
    Nary(fn(f64, f64) -> f64, f64, Vec<Compiled>),
    Binary(fn(f64, f64) -> f64, Box<Compiled>, Box<Compiled>),
    Unary(fn(f64) -> f64, Box<Compiled>),
}

impl Compiled {
    fn eval(&self, env: &[f64]) -> f64 {
        match self {
            Compiled::Const(c) => *c,
            Compiled::Var(i) => env[*i],
            Compiled::Nary(op, unit, args) => args.iter().fold(*unit, |acc, a| op(acc, a.eval(env))),
            Compiled::Binary(op, a, b) => op(a.eval(env), b.eval(env)),
            Compiled::Unary(op, a) => op(a.eval(env)),
        }
    }
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_owned())
    }

    fn compile(&self, vars: &[&str]) -> Result<Compiled, CliError> {
        Ok(match self {
            Expr::Number(c) => Compiled::Const(*c),
            Expr::Var(name) if name == "pi" => Compiled::Const(std::f64::consts::PI),
            Expr::Var(name) => Compiled::Var(vars.iter().position(|v| v == name).ok_or_else(|| {
                CliError::Spec(format!("unknown variable `{name}` (expected one of {vars:?})"))
            })?),
            Expr::Call(call) => {
                let un = |f: fn(f64) -> f64, a: &Expr| Ok::<_, CliError>(Compiled::Unary(f, Box::new(a.compile(vars)?)));
                let bin = |f: fn(f64, f64) -> f64, a: &Expr, b: &Expr| {
                    Ok::<_, CliError>(Compiled::Binary(f, Box::new(a.compile(vars)?), Box::new(b.compile(vars)?)))
                };
                let nary = |f: fn(f64, f64) -> f64, unit: f64, args: &[Expr]| {
                    Ok::<_, CliError>(Compiled::Nary(
                        f,
                        unit,
                        args.iter().map(|a| a.compile(vars)).collect::<Result<_, _>>()?,
                    ))
                };
                match call.as_ref() {
                    Call::Add(args) => nary(|a, b| a + b, 0.0, args)?,
                    Call::Mul(args) => nary(|a, b| a * b, 1.0, args)?,
                    Call::Sub(a, b) => bin(|a, b| a - b, a, b)?,
                    Call::Div(a, b) => bin(|a, b| a / b, a, b)?,
                    Call::Pow(a, b) => bin(f64::powf, a, b)?,
                    Call::Neg(a) => un(|a| -a, a)?,
                    Call::Sin(a) => un(f64::sin, a)?,
                    Call::Cos(a) => un(f64::cos, a)?,
                    Call::Tan(a) => un(f64::tan, a)?,
                    Call::Exp(a) => un(f64::exp, a)?,
                    Call::Ln(a) => un(f64::ln, a)?,
                    Call::Sqrt(a) => un(f64::sqrt, a)?,
                    Call::Abs(a) => un(f64::abs, a)?,
                    Call::Sinh(a) => un(f64::sinh, a)?,
                    Call::Cosh(a) => un(f64::cosh, a)?,
                    Call::Tanh(a) => un(f64::tanh, a)?,
                }
            }
        })
    }

    /// Function of `x` and `y`.
    pub fn plane_fn(&self) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, CliError> {
        let c = self.compile(&["x", "y"])?;
        Ok(Arc::new(move |x, y| c.eval(&[x, y])))
    }

    /// Function of the single variable `var`.
    pub fn line_fn(&self, var: &str) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>, CliError> {
        let c = self.compile(&[var])?;
        Ok(Arc::new(move |s| c.eval(&[s])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { a: f64, b: f64, c: f64 },
    /// `[[a, b], [c, -a]]` from expressions in `x`, `y`.
    Components { a: Expr, b: Expr, c: Expr },
    /// `z = re + i·im` in `x`, `y`.
    Complex { re: Expr, im: Expr },
    /// `[[cos t, sin t], [sin t, −cos t]]`.
    Rotation { t: Expr },
    Section {
        plane: PlaneCoefficients,
        t: Expr,
        #[serde(default)]
        negate: bool,
    },
    /// `c2`, `c3` in `y`, `r` in `x`.
    Ode { c2: Expr, c3: Expr, r: Expr },
    /// Nearest point on the plane section of the triple `(a, b, c)`.
    Projected { plane: PlaneCoefficients, a: Expr, b: Expr, c: Expr },
}

pub enum BuiltField {
    Real(Box<dyn InvolutionField<Scalar = f64>>),
    Complex(ComplexPotentialField),
}

impl FieldSpec {
    pub fn build(&self) -> Result<BuiltField, CliError> {
        let real = |f: Box<dyn InvolutionField<Scalar = f64>>| Ok(BuiltField::Real(f));
        match self {
            FieldSpec::Constant { a, b, c } => real(Box::new(ConstantField(
                InvolutionMatrix::new(*a, *b, *c).map_err(|e| CliError::Spec(e.to_string()))?,
            ))),
            FieldSpec::Components { a, b, c } => {
                real(Box::new(ComponentField::new(a.plane_fn()?, b.plane_fn()?, c.plane_fn()?)))
            }
            FieldSpec::Complex { re, im } => {
                let (re, im) = (re.plane_fn()?, im.plane_fn()?);
                Ok(BuiltField::Complex(ComplexPotentialField::new(Arc::new(move |x, y| {
                    Complex64::new(re(x, y), im(x, y))
                }))))
            }
            FieldSpec::Rotation { t } => real(Box::new(SectionField::rotation(t.plane_fn()?))),
            FieldSpec::Section { plane, t, negate } => {
                let plane = PlaneCoefficients::new(plane.c1, plane.c2, plane.c3)?;
                real(Box::new(SectionField::new(PlaneSection::new(plane)?, t.plane_fn()?, *negate)))
            }
            FieldSpec::Ode { c2, c3, r } => {
                real(Box::new(solve_ode_field(c2.line_fn("y")?, c3.line_fn("y")?, r.line_fn("x")?)?))
            }
            FieldSpec::Projected { plane, a, b, c } => {
                let plane = PlaneCoefficients::new(plane.c1, plane.c2, plane.c3)?;
                real(Box::new(ProjectedField::from_components(a.plane_fn()?, b.plane_fn()?, c.plane_fn()?, plane)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Segment { from: [f64; 2], to: [f64; 2] },
    Polyline { points: Vec<[f64; 2]> },
    /// `x(s)`, `y(s)` for `s ∈ [s0, s1]`.
    Param { x: Expr, y: Expr, s0: f64, s1: f64 },
    Reversed { curve: Box<CurveSpec> },
    Join { pieces: Vec<CurveSpec> },
}

impl CurveSpec {
    pub fn build(&self) -> Result<Curve, CliError> {
        Ok(match self {
            CurveSpec::Segment { from, to } => Curve::segment(*from, *to)?,
            CurveSpec::Polyline { points } => Curve::polyline(points.clone())?,
            CurveSpec::Param { x, y, s0, s1 } => Curve::param(x.line_fn("s")?, y.line_fn("s")?, *s0, *s1)?,
            CurveSpec::Reversed { curve } => curve.build()?.reversed(),
            CurveSpec::Join { pieces } => Curve::join(pieces.iter().map(|p| p.build()).collect::<Result<_, _>>()?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeCurve {
    pub from: usize,
    pub to: usize,
    pub curve: CurveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRuleSpec {
    pub from: usize,
    pub to: usize,
    pub parity: Parity,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesSpec {
    pub default: EdgeQuadratureRule,
    pub edges: Vec<EdgeRuleSpec>,
}

impl Default for RulesSpec {
    fn default() -> Self {
        RulesSpec { default: EdgeQuadratureRule::even(1024), edges: Vec::new() }
    }
}

/// Node positions, optional edge curves and per-edge quadrature rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingFile {
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub curves: Vec<EdgeCurve>,
    #[serde(default)]
    pub rules: RulesSpec,
}

impl EmbeddingFile {
    pub fn build(&self) -> Result<(Embedding, EdgeRules), CliError> {
        let mut embedding = Embedding::new(self.points.clone())?;
        for c in &self.curves {
            embedding.set_curve(c.from, c.to, c.curve.build()?)?;
        }
        let default = EdgeQuadratureRule::new(self.rules.default.parity, self.rules.default.steps)?;
        let mut rules = EdgeRules::uniform(default);
        for r in &self.rules.edges {
            rules.set(r.from, r.to, EdgeQuadratureRule::new(r.parity, r.steps)?);
        }
        Ok((embedding, rules))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        let e: Expr = serde_json::from_str(r#"{"add": ["y", {"div": [{"pow": ["y", 2]}, 2]}, {"sin": "x"}]}"#).unwrap();
        let f = e.plane_fn().unwrap();
        assert!((f(0.3, 0.5) - (0.5 + 0.125 + 0.3f64.sin())).abs() < 1e-15);
        let g: Expr = serde_json::from_str(r#"{"mul": ["pi", "s"]}"#).unwrap();
        assert!((g.line_fn("s").unwrap()(0.5) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(Expr::var("z").plane_fn(), Err(CliError::Spec(_))));
        assert!(serde_json::from_str::<Expr>(r#"{"frob": 1}"#).is_err());
    }

    #[test]
    fn field_and_curve_specs() {
        let spec: FieldSpec = serde_json::from_str(r#"{"kind": "rotation", "t": {"add": ["x", "y"]}}"#).unwrap();
        let BuiltField::Real(f) = spec.build().unwrap() else { panic!() };
        let m = f.eval(0.2, 0.3).unwrap();
        assert!((m[(0, 0)] - 0.5f64.cos()).abs() < 1e-15);
        let c: CurveSpec =
            serde_json::from_str(r#"{"kind": "param", "x": {"sin": "s"}, "y": 0, "s0": 0, "s1": 1.5707963267948966}"#)
                .unwrap();
        let c = c.build().unwrap();
        assert!((c.end()[0] - 1.0).abs() < 1e-15);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<FieldSpec>(&json).unwrap(), spec);
    }
}
