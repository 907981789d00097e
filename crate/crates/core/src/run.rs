//! Outcome of an optimizer run and the memoized evaluation ledger shared by
//! every optimizer.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::objectives::ObjectiveFn;
use crate::pareto::{ObjectivePair, Observation, ParetoArchive};
use crate::space::{HpVector, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    AcquisitionVanished,
    SpaceExhausted,
    /// A surrogate could not be fitted; the result is partial.
    Aborted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Budget => "budget",
            StopReason::AcquisitionVanished => "acquisition-vanished",
            StopReason::SpaceExhausted => "space-exhausted",
            StopReason::Aborted => "aborted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub front: ParetoArchive,
    pub history: Vec<Observation>,
    pub evals_used: usize,
    pub stop_reason: StopReason,
    /// Seconds.
    pub wall_time: f64,
    /// Seconds since the start of the run at which each history entry was evaluated.
    pub eval_times: Vec<f64>,
    /// Set when the run aborted early.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn front_pairs(&self) -> Vec<ObjectivePair> {
        self.front.pairs()
    }

    pub fn history_pairs(&self) -> Vec<ObjectivePair> {
        self.history.iter().map(|o| o.objectives).collect()
    }
}

/// Every distinct evaluation of a run, in evaluation order.
pub struct Ledger<'a> {
    objective: &'a ObjectiveFn,
    history: Vec<Observation>,
    seen: HashMap<HpVector, usize>,
    start: Instant,
    times: Vec<f64>,
}

impl<'a> Ledger<'a> {
    pub fn new(objective: &'a ObjectiveFn) -> Self {
        Ledger {
            objective,
            history: Vec::new(),
            seen: HashMap::new(),
            start: Instant::now(),
            times: Vec::new(),
        }
    }

    /// Returns the observation for `hp`, evaluating it on first request only.
    pub fn observe(&mut self, hp: &HpVector) -> Result<&Observation> {
        if let Some(&i) = self.seen.get(hp) {
            return Ok(&self.history[i]);
        }
        let objectives = self.objective.evaluate(hp)?;
        let eval_index = self.history.len();
        self.seen.insert(hp.clone(), eval_index);
        self.history.push(Observation {
            hp: hp.clone(),
            objectives,
            eval_index,
        });
        self.times.push(self.start.elapsed().as_secs_f64());
        Ok(&self.history[eval_index])
    }

    pub fn get(&self, hp: &HpVector) -> Option<&Observation> {
        self.seen.get(hp).map(|&i| &self.history[i])
    }

    pub fn contains(&self, hp: &HpVector) -> bool {
        self.seen.contains_key(hp)
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    pub fn evaluated(&self) -> HashSet<HpVector> {
        self.seen.keys().cloned().collect()
    }

    pub fn exhausted(&self, space: &SearchSpace) -> bool {
        self.history.len() as u64 >= space.cardinality()
    }

    pub fn finish(self, algorithm: &str, stop_reason: StopReason, failure: Option<String>) -> RunResult {
        RunResult {
            algorithm: algorithm.to_string(),
            front: ParetoArchive::from_observations(&self.history),
            evals_used: self.history.len(),
            history: self.history,
            stop_reason,
            wall_time: self.start.elapsed().as_secs_f64(),
            eval_times: self.times,
            failure,
        }
    }
}
