use std::path::{Path, PathBuf};

use balance_nets::algebra::{MAX_GROUP_ORDER, TAU_ALG};
use balance_nets::dynamics::{DEFAULT_BOUND_STATES, TAU_DYN};
use balance_nets::semigroup::DEFAULT_BOUND_SEMIGROUP;
use balance_nets::smooth::TAU_NUM;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Smallest bounds that still admit the three-node sign-group fixtures.
pub const MIN_BOUNDS: Bounds = Bounds { bound_states: 8, bound_semigroup: 3, bound_grp: 2 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    /// Largest state space `|E|^n`.
    pub bound_states: usize,
    /// Largest node count for semigroup work.
    pub bound_semigroup: usize,
    /// Largest reaction-group order.
    pub bound_grp: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            bound_states: DEFAULT_BOUND_STATES,
            bound_semigroup: DEFAULT_BOUND_SEMIGROUP,
            bound_grp: MAX_GROUP_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tau_alg: f64,
    pub tau_dyn: f64,
    pub tau_num: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tau_alg: TAU_ALG, tau_dyn: TAU_DYN, tau_num: TAU_NUM }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bounds: Bounds,
    pub tolerances: Tolerances,
    /// Root of every random stream; run `i` of a Monte-Carlo batch uses `seed + i`.
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Adds wall-clock timings to reports, which makes them non-reproducible.
    pub timing: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = balance_nets::io::parse(&text, &path.display().to_string())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = self.tolerances;
        for (name, v) in [("tau_alg", t.tau_alg), ("tau_dyn", t.tau_dyn), ("tau_num", t.tau_num)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let b = self.bounds;
        for (name, v, min) in [
            ("bound_states", b.bound_states, MIN_BOUNDS.bound_states),
            ("bound_semigroup", b.bound_semigroup, MIN_BOUNDS.bound_semigroup),
            ("bound_grp", b.bound_grp, MIN_BOUNDS.bound_grp),
        ] {
            if v < min {
                return Err(CliError::Config(format!("{name} must be at least {min}, got {v}")));
            }
        }
        Ok(())
    }
}
