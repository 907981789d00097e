//! One enum over the four searchers so callers can dispatch on configuration.

use serde::{Deserialize, Serialize};

use crate::baselines::{run_grid, run_nsga2, run_random, Nsga2Config};
use crate::error::Result;
use crate::objectives::ObjectiveFn;
use crate::pabo::{run_pabo, PaboConfig};
use crate::run::RunResult;
use crate::space::SearchSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum AlgorithmConfig {
    Pabo(PaboConfig),
    Nsga2(Nsga2Config),
    Random(RandomConfig),
    Grid,
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Pabo(_) => "pabo",
            AlgorithmConfig::Nsga2(_) => "nsga2",
            AlgorithmConfig::Random(_) => "random",
            AlgorithmConfig::Grid => "grid",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            AlgorithmConfig::Pabo(c) => Some(c.seed),
            AlgorithmConfig::Nsga2(c) => Some(c.seed),
            AlgorithmConfig::Random(c) => Some(c.seed),
            AlgorithmConfig::Grid => None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            AlgorithmConfig::Pabo(c) => c.seed = seed,
            AlgorithmConfig::Nsga2(c) => c.seed = seed,
            AlgorithmConfig::Random(c) => c.seed = seed,
            AlgorithmConfig::Grid => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmConfig::Pabo(c) => c.validate(),
            AlgorithmConfig::Nsga2(c) => c.validate(),
            AlgorithmConfig::Random(_) | AlgorithmConfig::Grid => Ok(()),
        }
    }

    pub fn run(&self, space: &SearchSpace, objective: &ObjectiveFn) -> Result<RunResult> {
        match self {
            AlgorithmConfig::Pabo(c) => run_pabo(space, objective, c),
            AlgorithmConfig::Nsga2(c) => run_nsga2(space, objective, c),
            AlgorithmConfig::Random(c) => run_random(space, objective, c.budget, c.seed),
            AlgorithmConfig::Grid => run_grid(space, objective),
        }
    }
}
