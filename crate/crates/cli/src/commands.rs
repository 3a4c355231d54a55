//! One function per subcommand; each returns a serializable record.

use std::path::Path;
use std::sync::Arc;

use balance_nets::algebra::{GroupElement, ReactionGroup};
use balance_nets::dynamics::{build_markov, build_markov_exact, core_set, ChoiceDistribution, StateSpace};
use balance_nets::io::{self, EdgeSpec, NodeRef};
use balance_nets::network::Marking;
use balance_nets::potential::{
    a1_violation, a2_failure, balance_partition, generate_potential_fields, identity_signs, is_potential,
    PotentialVerdict,
};
use balance_nets::semigroup::{absorption_statistics, enumerate_ideals, IdealForm, IdealReport};
use balance_nets::smooth::{
    discretize, infinitesimal_residual, p_integral, p_integral_convergence, residual_scan, Complex64, InvolutionField,
    Matrix2, Parity, RESIDUAL_CHECK,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::spec::{BuiltField, CurveSpec, EmbeddingFile, FieldSpec};
use crate::CliError;

/// Loads a network file and applies the group-order bound.
pub fn load(path: &Path, config: &RunConfig) -> Result<Marking, CliError> {
    let marking = io::load_network(path)?;
    let order = marking.group().order();
    if order > config.bounds.bound_grp {
        return Err(CliError::Bound { what: "group order", value: order as u128, bound: config.bounds.bound_grp });
    }
    Ok(marking)
}

pub fn state_labels(group: &ReactionGroup, x: &[usize]) -> Vec<String> {
    x.iter().map(|&s| group.states().label(s).to_owned()).collect()
}

fn node_labels(marking: &Marking, nodes: &[usize]) -> Vec<String> {
    nodes.iter().map(|&v| marking.graph().label(v).to_owned()).collect()
}

fn names(group: &ReactionGroup, values: &[GroupElement]) -> Vec<String> {
    values.iter().map(|&g| group.name(g).to_owned()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleWitness {
    pub nodes: Vec<String>,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarWitness {
    /// `(i, k, j)` label triples of a closed two-step path.
    pub steps: Vec<[String; 3]>,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckPotentialOutput {
    pub potential: bool,
    pub a1: bool,
    pub a2: bool,
    pub violation: Option<CycleWitness>,
    /// `u(k)` for every node, rooted at the first node.
    pub potential_function: Option<Vec<String>>,
    pub a1_violation: Option<StarWitness>,
    /// `(i, j1, j2)` with `g(i,j1)g(j1,i) ≠ g(i,j2)g(j2,i)`.
    pub a2_failure: Option<[String; 3]>,
}

pub fn check_potential(marking: &Marking) -> CheckPotentialOutput {
    let group = marking.group();
    let label = |v: usize| marking.graph().label(v).to_owned();
    let (violation, potential_function) = match is_potential(marking) {
        PotentialVerdict::Potential(u) => (None, Some(names(group, &u.values))),
        PotentialVerdict::Violated { cycle, product } => (
            Some(CycleWitness { nodes: node_labels(marking, cycle.nodes()), product: group.name(product).to_owned() }),
            None,
        ),
    };
    let a1_violation = a1_violation(marking).map(|(path, product)| StarWitness {
        steps: path.steps().iter().map(|&(i, k, j)| [label(i), label(k), label(j)]).collect(),
        product: group.name(product).to_owned(),
    });
    let a2 = a2_failure(marking);
    CheckPotentialOutput {
        potential: violation.is_none(),
        a1: a1_violation.is_none(),
        a2: a2.is_none(),
        violation,
        potential_function,
        a1_violation,
        a2_failure: a2.map(|(i, j1, j2)| [label(i), label(j1), label(j2)]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenFieldsOutput {
    pub nodes: usize,
    pub group_order: usize,
    pub total: usize,
    pub emitted: usize,
    /// Edges of each complete-graph marking, in edge-index order.
    pub fields: Vec<Vec<EdgeSpec>>,
}

pub fn gen_fields(group: ReactionGroup, nodes: usize, limit: Option<usize>) -> Result<GenFieldsOutput, CliError> {
    let group = Arc::new(group);
    let stream = generate_potential_fields(group.clone(), nodes)?;
    let total = stream.total();
    let fields: Vec<Vec<EdgeSpec>> = stream
        .take(limit.unwrap_or(usize::MAX))
        .map(|m| {
            m.graph()
                .edges()
                .iter()
                .zip(m.marks())
                .map(|(&(i, j), &g)| EdgeSpec {
                    from: NodeRef::Index(i),
                    to: NodeRef::Index(j),
                    reaction: group.name(g).to_owned(),
                })
                .collect()
        })
        .collect();
    Ok(GenFieldsOutput { nodes, group_order: group.order(), total, emitted: fields.len(), fields })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovOutput {
    pub states: usize,
    pub stationary_count: usize,
    pub limit_exists: bool,
    #[serde(rename = "W0")]
    pub w0: Vec<Vec<String>>,
    pub exact: bool,
    /// Rows sum to one (exactly, or within `tau_dyn`).
    pub stochastic: bool,
}

pub fn markov(marking: &Marking, exact: bool, config: &RunConfig) -> Result<MarkovOutput, CliError> {
    let bound = config.bounds.bound_states;
    let (states, classes, stochastic) = if exact {
        let model = build_markov_exact(marking, bound)?;
        (model.space().len(), model.classes(), model.rows_sum_to_one())
    } else {
        let model = build_markov(marking, &ChoiceDistribution::uniform(marking.graph()), bound)?;
        (model.len(), model.classes(), model.max_row_defect() <= config.tolerances.tau_dyn)
    };
    let space = StateSpace::for_marking(marking, bound)?;
    let core = core_set(marking, bound)?;
    let group = marking.group();
    Ok(MarkovOutput {
        states,
        stationary_count: classes.stationary_count(),
        limit_exists: classes.limit_exists(),
        w0: core.states.iter().map(|&i| state_labels(group, &space.decode(i))).collect(),
        exact,
        stochastic,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorForm {
    Constant,
    Pair,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealSummary {
    pub form: GeneratorForm,
    /// `k` for `{I_k}`; `i, j` for `{S(i,j), S⁻(i,j)}`.
    pub nodes: Vec<String>,
    pub size: usize,
    /// Column of the single 1 in each row, per element.
    pub elements: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealsOutput {
    pub ideal_count: usize,
    pub generators: Vec<IdealSummary>,
    pub theorem1_expected: usize,
    #[serde(rename = "match")]
    pub matches: bool,
    pub minimal_rank: usize,
    pub minimal: bool,
}

pub fn summarize_ideals(marking: &Marking, report: &IdealReport) -> IdealsOutput {
    let label = |v: usize| marking.graph().label(v).to_owned();
    let generators = report
        .ideals
        .iter()
        .map(|ideal| {
            let (form, nodes) = match ideal.form {
                IdealForm::Constant(k) => (GeneratorForm::Constant, vec![label(k)]),
                IdealForm::Pair(i, j) => (GeneratorForm::Pair, vec![label(i), label(j)]),
                IdealForm::Other => (GeneratorForm::Other, Vec::new()),
            };
            IdealSummary {
                form,
                nodes,
                size: ideal.elements.len(),
                elements: ideal.elements.iter().map(|w| w.columns()).collect(),
            }
        })
        .collect();
    IdealsOutput {
        ideal_count: report.count(),
        generators,
        theorem1_expected: report.theorem1_expected,
        matches: report.matches_theorem1(),
        minimal_rank: report.minimal_rank,
        minimal: report.minimal,
    }
}

pub fn ideals(marking: &Marking, config: &RunConfig) -> Result<IdealsOutput, CliError> {
    let report = enumerate_ideals(marking.graph(), config.bounds.bound_semigroup)?;
    Ok(summarize_ideals(marking, &report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbOutput {
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub ideal_count: usize,
    pub absorbed: usize,
    /// Absorptions per ideal, in the order of `ideals`.
    pub counts: Vec<usize>,
    pub mean_steps: f64,
    pub max_steps: usize,
}

pub fn absorb(marking: &Marking, steps: usize, runs: usize, seed: u64, config: &RunConfig) -> Result<AbsorbOutput, CliError> {
    let report = enumerate_ideals(marking.graph(), config.bounds.bound_semigroup)?;
    let stats = absorption_statistics(marking.graph(), &report, steps, runs, seed);
    Ok(AbsorbOutput {
        steps,
        runs,
        seed,
        ideal_count: report.count(),
        absorbed: stats.absorbed,
        counts: stats.counts,
        mean_steps: stats.mean_steps,
        max_steps: stats.max_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedEdge {
    pub from: String,
    pub to: String,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceOutput {
    /// Edges marked `e` are friendly (+1), all others hostile (−1).
    pub signs: Vec<SignedEdge>,
    pub balanced: bool,
    pub first: Vec<String>,
    pub second: Vec<String>,
}

pub fn balance(marking: &Marking) -> BalanceOutput {
    let graph = marking.graph();
    let signs = identity_signs(marking);
    let partition = balance_partition(graph, &signs);
    BalanceOutput {
        signs: graph
            .edges()
            .iter()
            .zip(&signs)
            .map(|(&(i, j), &sign)| SignedEdge { from: graph.label(i).to_owned(), to: graph.label(j).to_owned(), sign })
            .collect(),
        balanced: partition.is_some(),
        first: partition.as_ref().map(|p| node_labels(marking, &p.first)).unwrap_or_default(),
        second: partition.as_ref().map(|p| node_labels(marking, &p.second)).unwrap_or_default(),
    }
}

/// Row-major 2×2 matrix; complex entries as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Real([[f64; 2]; 2]),
    Complex([[[f64; 2]; 2]; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarJson {
    Real(f64),
    Complex([f64; 2]),
}

pub trait JsonScalar: Copy {
    fn to_json(self) -> ScalarJson;
    fn matrix_json(m: &Matrix2<Self>) -> MatrixJson;
    fn distance(self, target: f64) -> f64;
}

impl JsonScalar for f64 {
    fn to_json(self) -> ScalarJson {
        ScalarJson::Real(self)
    }

    fn matrix_json(m: &Matrix2<f64>) -> MatrixJson {
        MatrixJson::Real([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
    }

    fn distance(self, target: f64) -> f64 {
        (self - target).abs()
    }
}

impl JsonScalar for Complex64 {
    fn to_json(self) -> ScalarJson {
        ScalarJson::Complex([self.re, self.im])
    }

    fn matrix_json(m: &Matrix2<Complex64>) -> MatrixJson {
        let c = |z: Complex64| [z.re, z.im];
        MatrixJson::Complex([[c(m[(0, 0)]), c(m[(0, 1)])], [c(m[(1, 0)]), c(m[(1, 1)])]])
    }

    fn distance(self, target: f64) -> f64 {
        (self - Complex64::new(target, 0.0)).norm()
    }
}

/// Reads inline JSON (starting with `{`) or a file.
pub fn read_spec<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    if arg.trim_start().starts_with('{') {
        Ok(io::parse(arg, "<inline>")?)
    } else {
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::Spec(format!("{arg}: {e}")))?;
        Ok(io::parse(&text, arg)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualOutput {
    pub grid: usize,
    pub h: f64,
    pub points: usize,
    pub max_norm: f64,
    pub at: [f64; 2],
    /// Residual at `at` with step `h/2`.
    pub max_norm_half_h: f64,
    /// `log2` of the residual ratio between `h` and `h/2` at `at`.
    pub order: f64,
    /// `max_norm` is within the potential threshold.
    pub potential: bool,
}

fn residual_of<F: InvolutionField>(field: &F, grid: usize, h: f64) -> Result<ResidualOutput, CliError> {
    let scan = residual_scan(field, grid, h)?;
    let [x, y] = scan.at;
    let half = infinitesimal_residual(field, x, y, h / 2.0)?.norm;
    Ok(ResidualOutput {
        grid,
        h,
        points: scan.points,
        max_norm: scan.max_norm,
        at: scan.at,
        max_norm_half_h: half,
        order: (scan.max_norm / half).log2(),
        potential: scan.max_norm <= RESIDUAL_CHECK.0,
    })
}

pub fn check_residual(field: &FieldSpec, grid: usize, h: f64) -> Result<ResidualOutput, CliError> {
    match field.build()? {
        BuiltField::Real(f) => residual_of(&f, grid, h),
        BuiltField::Complex(f) => residual_of(&f, grid, h),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceJson {
    pub steps: [usize; 3],
    pub differences: [f64; 2],
    pub order: f64,
    pub extrapolated: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PIntegralOutput {
    pub steps: usize,
    pub parity: Parity,
    pub matrix: MatrixJson,
    pub determinant: ScalarJson,
    /// `|det − (±1)| ≤ tau_num` for the parity.
    pub parity_law: bool,
    pub closed: bool,
    /// `‖M − E‖` for closed curves.
    pub identity_defect: Option<f64>,
    pub convergence: ConvergenceJson,
}

fn p_integral_of<F>(field: &F, curve: &CurveSpec, n: usize, parity: Parity, config: &RunConfig) -> Result<PIntegralOutput, CliError>
where
    F: InvolutionField,
    F::Scalar: JsonScalar,
{
    let curve = curve.build()?;
    let p = p_integral(field, &curve, n, parity)?;
    let conv = p_integral_convergence(field, &curve, n, parity)?;
    let closed = curve.is_closed();
    Ok(PIntegralOutput {
        steps: n,
        parity,
        matrix: F::Scalar::matrix_json(&p.matrix),
        determinant: p.determinant.to_json(),
        parity_law: p.determinant.distance(parity.determinant()) <= config.tolerances.tau_num,
        closed,
        identity_defect: closed.then(|| (p.matrix - Matrix2::identity()).norm()),
        convergence: ConvergenceJson {
            steps: conv.steps,
            differences: conv.differences,
            order: conv.order,
            extrapolated: F::Scalar::matrix_json(&conv.extrapolated),
        },
    })
}

pub fn smooth_p_integral(
    field: &FieldSpec,
    curve: &CurveSpec,
    n: usize,
    parity: Parity,
    config: &RunConfig,
) -> Result<PIntegralOutput, CliError> {
    match field.build()? {
        BuiltField::Real(f) => p_integral_of(&f, curve, n, parity, config),
        BuiltField::Complex(f) => p_integral_of(&f, curve, n, parity, config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMark {
    pub from: String,
    pub to: String,
    pub parity: Parity,
    pub matrix: MatrixJson,
    /// `det` of the mark as a relation sign.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeOutput {
    pub edges: Vec<EdgeMark>,
    pub max_gauge_defect: f64,
    /// `max_gauge_defect ≤ tau_num`.
    pub potential: bool,
}

pub fn smooth_discretize(
    field: &FieldSpec,
    marking: &Marking,
    embedding: &EmbeddingFile,
    config: &RunConfig,
) -> Result<DiscretizeOutput, CliError> {
    let BuiltField::Real(f) = field.build()? else {
        return Err(CliError::Spec("discretize needs a real field".into()));
    };
    let (embedding, rules) = embedding.build()?;
    let graph = marking.graph();
    let m = discretize(&f, graph, &embedding, &rules)?;
    let signs = m.relation_signs();
    let defect = m.max_gauge_defect();
    Ok(DiscretizeOutput {
        edges: graph
            .edges()
            .iter()
            .enumerate()
            .map(|(id, &(i, j))| EdgeMark {
                from: graph.label(i).to_owned(),
                to: graph.label(j).to_owned(),
                parity: m.parities()[id],
                matrix: f64::matrix_json(&m.marks()[id]),
                sign: signs[id],
            })
            .collect(),
        max_gauge_defect: defect,
        potential: defect <= config.tolerances.tau_num,
    })
}

