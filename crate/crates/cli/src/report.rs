//! Full pipeline over one network file.

use std::path::Path;
use std::time::Instant;

use balance_nets::dynamics::{build_markov, core_set, ChoiceDistribution, StateSpace};
use balance_nets::semigroup::{absorption_statistics, enumerate_ideals, final_states};
use balance_nets::ReactionMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{self, state_labels, AbsorbOutput, CycleWitness, IdealsOutput, StarWitness};
use crate::config::RunConfig;
use crate::CliError;

/// Steps and runs of the absorption sample folded into every report.
pub const ABSORB_STEPS: usize = 64;
pub const ABSORB_RUNS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossCheck {
    Pass,
    Fail,
    /// Not potential, or bipartite (period-two classes split the count).
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub nodes: Vec<String>,
    pub edges: usize,
    pub group_order: usize,
    pub states: Vec<String>,
    pub bipartite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub potential: bool,
    pub a1: bool,
    pub a2: bool,
    pub limit_exists: bool,
    pub cross_check: CrossCheck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub states: usize,
    pub stationary_count: usize,
    pub w0: usize,
    pub ideal_count: usize,
    pub theorem1_expected: usize,
    /// Only for potential markings.
    pub final_states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    pub violation: Option<CycleWitness>,
    pub potential_function: Option<Vec<String>>,
    pub a1_violation: Option<StarWitness>,
    pub a2_failure: Option<[String; 3]>,
    #[serde(rename = "W0")]
    pub w0: Vec<Vec<String>>,
    pub final_states: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// SHA-256 of the network file bytes, hex.
    pub input_digest: String,
    pub seed: u64,
    pub network: NetworkSummary,
    pub verdicts: Verdicts,
    pub counts: Counts,
    pub witnesses: Witnesses,
    pub ideals: IdealsOutput,
    pub absorption: AbsorbOutput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run_full_analysis(path: &Path, config: &RunConfig) -> Result<AnalysisReport, CliError> {
    let started = Instant::now();
    let bytes = std::fs::read(path).map_err(|e| balance_nets::IoError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let marking = commands::load(path, config)?;
    let graph = marking.graph();
    let group = marking.group();
    let bounds = config.bounds;

    let check = commands::check_potential(&marking);
    let model = build_markov(&marking, &ChoiceDistribution::uniform(graph), bounds.bound_states)?;
    if model.max_row_defect() > config.tolerances.tau_dyn {
        return Err(CliError::Spec(format!("transition rows deviate from 1 by {}", model.max_row_defect())));
    }
    let classes = model.classes();
    let space = StateSpace::for_marking(&marking, bounds.bound_states)?;
    let core = core_set(&marking, bounds.bound_states)?;
    let w0: Vec<Vec<String>> = core.states.iter().map(|&i| state_labels(group, &space.decode(i))).collect();

    let report = enumerate_ideals(graph, bounds.bound_semigroup)?;
    let finals = if check.potential {
        let rg = ReactionMatrix::from_marking(&marking)?;
        Some(final_states(&report, &rg, bounds.bound_states)?)
    } else {
        None
    };
    let stationary_count = classes.stationary_count();
    let bipartite = graph.is_bipartite();
    let cross_check = match &finals {
        Some(f) if !bipartite => {
            if f.len() == stationary_count {
                CrossCheck::Pass
            } else {
                CrossCheck::Fail
            }
        }
        _ => CrossCheck::Skipped,
    };
    let stats = absorption_statistics(graph, &report, ABSORB_STEPS, ABSORB_RUNS, config.seed);

    Ok(AnalysisReport {
        input_digest: digest(&bytes),
        seed: config.seed,
        network: NetworkSummary {
            nodes: graph.labels().to_vec(),
            edges: graph.edge_count() / 2,
            group_order: group.order(),
            states: group.states().labels().to_vec(),
            bipartite,
        },
        verdicts: Verdicts {
            potential: check.potential,
            a1: check.a1,
            a2: check.a2,
            limit_exists: classes.limit_exists(),
            cross_check,
        },
        counts: Counts {
            states: space.len(),
            stationary_count,
            w0: w0.len(),
            ideal_count: report.count(),
            theorem1_expected: report.theorem1_expected,
            final_states: finals.as_ref().map(Vec::len),
        },
        witnesses: Witnesses {
            violation: check.violation,
            potential_function: check.potential_function,
            a1_violation: check.a1_violation,
            a2_failure: check.a2_failure,
            w0,
            final_states: finals.map(|f| f.iter().map(|x| state_labels(group, x)).collect()),
        },
        ideals: commands::summarize_ideals(&marking, &report),
        absorption: AbsorbOutput {
            steps: ABSORB_STEPS,
            runs: ABSORB_RUNS,
            seed: config.seed,
            ideal_count: report.count(),
            absorbed: stats.absorbed,
            counts: stats.counts,
            mean_steps: stats.mean_steps,
            max_steps: stats.max_steps,
        },
        timing: config.timing.then(|| Timing { total_ms: started.elapsed().as_secs_f64() * 1e3 }),
    })
}
