//! Dual Bayesian optimization with a dominance-checking supervisor.
//!
//! Two Gaussian-process optimizers run side by side, one minimizing `err`
//! and one minimizing `eng`. Each iteration:
//!
//! 1. the err-GP is fitted on `d_err` and the eng-GP on `d_eng`;
//! 2. each picks its expected-improvement argmax among unevaluated grid
//!    points (`theta` for err, `gamma` for eng);
//! 3. both points are evaluated (once if they coincide) and join their own
//!    training set;
//! 4. the supervisor adds `gamma` to `d_err` iff its objective pair is not
//!    dominated by any other observation, and symmetrically `theta` to
//!    `d_eng`.
//!
//! The run stops when both acquisitions fall below `stop_epsilon` (in
//! standardized units), the evaluation budget is spent, or the grid is
//! exhausted. The estimated front is the non-dominated subset of everything
//! evaluated.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{select_next, AcquisitionResult};
use crate::error::{Error, Result};
use crate::gp::{fit_kernel_hyperparams, refine_length_scales, GpModel, KernelConfig, KernelFamily, PER_DIM_SCALES};
use crate::objectives::ObjectiveFn;
use crate::pareto::{dominates, Observation, ParetoArchive};
use crate::run::{Ledger, RunResult, StopReason};
use crate::space::{HpVector, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaboConfig {
    pub n_init: usize,
    /// Threshold on the larger of the two standardized EI maxima.
    pub stop_epsilon: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Iterations between kernel-hyperparameter refits.
    pub gp_refit_every: usize,
    pub kernel_family: KernelFamily,
    /// Cross-feeding of non-dominated points between the two training sets.
    pub supervisor: bool,
    /// Refine the shared length scale into one scale per dimension, so a GP
    /// can learn that some hyperparameters do not affect its objective.
    pub per_dim_length_scale: bool,
}

impl Default for PaboConfig {
    fn default() -> Self {
        PaboConfig {
            n_init: 2,
            stop_epsilon: 1e-6,
            max_evals: 40,
            seed: 0,
            gp_refit_every: 1,
            kernel_family: KernelFamily::Matern52,
            supervisor: true,
            per_dim_length_scale: true,
        }
    }
}

impl PaboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 {
            return Err(Error::Config("n_init must be at least 2".into()));
        }
        if self.max_evals < self.n_init {
            return Err(Error::Config("max_evals must be at least n_init".into()));
        }
        if !(self.stop_epsilon >= 0.0) {
            return Err(Error::Config("stop_epsilon must be non-negative".into()));
        }
        if self.gp_refit_every == 0 {
            return Err(Error::Config("gp_refit_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ordered set of grid points used as GP training inputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    points: Vec<HpVector>,
    members: HashSet<HpVector>,
}

impl TrainingSet {
    /// Returns false when `hp` was already present.
    pub fn insert(&mut self, hp: &HpVector) -> bool {
        if self.members.insert(hp.clone()) {
            self.points.push(hp.clone());
            true
        } else {
            false
        }
    }

    pub fn contains(&self, hp: &HpVector) -> bool {
        self.members.contains(hp)
    }

    pub fn points(&self) -> &[HpVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PaboState {
    pub d_err: TrainingSet,
    pub d_eng: TrainingSet,
    pub history: Vec<Observation>,
    pub archive: ParetoArchive,
    pub iteration: usize,
}

/// What the supervisor decided for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CrossFeed {
    pub theta_to_eng: bool,
    pub gamma_to_err: bool,
}

impl PaboState {
    fn dominated_by_history(&self, obs: &Observation) -> bool {
        self.history
            .iter()
            .any(|o| o.eval_index != obs.eval_index && dominates(&o.objectives, &obs.objectives))
    }

    fn archive_has(&self, obs: &Observation) -> bool {
        self.archive
            .members()
            .iter()
            .any(|m| m.eval_index == obs.eval_index)
    }

    /// Cross-feeds `gamma` into `d_err` and `theta` into `d_eng` when their
    /// objective pairs are non-dominated among the history, and keeps the
    /// archive in sync. Both must already be in the history.
    pub fn supervisor_step(&mut self, theta: &Observation, gamma: &Observation) -> CrossFeed {
        let mut feed = CrossFeed::default();
        if !self.dominated_by_history(gamma) {
            feed.gamma_to_err = self.d_err.insert(&gamma.hp);
        }
        if !self.dominated_by_history(theta) {
            feed.theta_to_eng = self.d_eng.insert(&theta.hp);
        }
        for obs in [theta, gamma] {
            if !self.archive_has(obs) {
                self.archive.insert(obs.clone());
            }
        }
        feed
    }

    fn record(&mut self, obs: &Observation) {
        if self.history.iter().all(|o| o.eval_index != obs.eval_index) {
            self.history.push(obs.clone());
            self.archive.insert(obs.clone());
        }
    }
}

/// Decides whether the run is over. `last_*_acq` are standardized EI maxima
/// (pass infinity before the first selection).
pub fn should_stop(
    state: &PaboState,
    space: &SearchSpace,
    last_err_acq: f64,
    last_eng_acq: f64,
    cfg: &PaboConfig,
) -> Option<StopReason> {
    if state.history.len() as u64 >= space.cardinality() {
        Some(StopReason::SpaceExhausted)
    } else if state.history.len() >= cfg.max_evals {
        Some(StopReason::Budget)
    } else if last_err_acq.max(last_eng_acq) < cfg.stop_epsilon {
        Some(StopReason::AcquisitionVanished)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// History positions of the selected points.
    pub theta: usize,
    pub gamma: usize,
    /// Set when the budget had room for θ only; `gamma` then repeats `theta`
    /// and was not added to `d_eng` as a selection.
    pub gamma_dropped: bool,
    /// Standardized EI maxima of the two selections.
    pub err_acq: f64,
    pub eng_acq: f64,
    pub feed: CrossFeed,
    pub d_err_len: usize,
    pub d_eng_len: usize,
}

#[derive(Debug, Clone)]
pub struct PaboRun {
    pub result: RunResult,
    pub state: PaboState,
    pub iterations: Vec<IterationRecord>,
    /// Number of initial shared random points.
    pub n_init: usize,
}

fn training_data(
    space: &SearchSpace,
    set: &TrainingSet,
    values: &HashMap<HpVector, f64>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    set.points()
        .iter()
        .map(|hp| (space.to_numeric(hp), values[hp]))
        .unzip()
}

struct Surrogate {
    kernel: Option<KernelConfig>,
}

impl Surrogate {
    fn select(
        &mut self,
        space: &SearchSpace,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        evaluated: &HashSet<HpVector>,
        refit: bool,
        cfg: &PaboConfig,
    ) -> Result<AcquisitionResult> {
        if refit || self.kernel.is_none() {
            let grid = KernelConfig::default_grid(cfg.kernel_family);
            let mut kernel = fit_kernel_hyperparams(&inputs, &targets, &grid)?;
            if cfg.per_dim_length_scale {
                kernel = refine_length_scales(&inputs, &targets, &kernel, &PER_DIM_SCALES, 2)?;
            }
            self.kernel = Some(kernel);
        }
        let best = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let model = GpModel::fit(inputs, &targets, self.kernel.clone().expect("kernel set"))?;
        select_next(&model, space, evaluated, best)
    }
}

pub fn run_pabo(space: &SearchSpace, objective: &ObjectiveFn, cfg: &PaboConfig) -> Result<RunResult> {
    run_pabo_traced(space, objective, cfg).map(|r| r.result)
}

/// Runs PABO and returns the training-set trace along with the result.
pub fn run_pabo_traced(space: &SearchSpace, objective: &ObjectiveFn, cfg: &PaboConfig) -> Result<PaboRun> {
    cfg.validate()?;
    if space.cardinality() < cfg.n_init as u64 {
        return Err(Error::InsufficientPoints {
            requested: cfg.n_init as u64,
            available: space.cardinality(),
        });
    }
    // candidate scans enumerate the grid
    space.enumerate().map(|_| ())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ledger = Ledger::new(objective);
    let mut state = PaboState::default();
    let mut errs: HashMap<HpVector, f64> = HashMap::new();
    let mut engs: HashMap<HpVector, f64> = HashMap::new();
    let mut iterations = Vec::new();

    let init = space.sample_distinct(&mut rng, cfg.n_init, &HashSet::new())?;
    for hp in &init {
        let obs = ledger.observe(hp)?.clone();
        errs.insert(hp.clone(), obs.objectives.err);
        engs.insert(hp.clone(), obs.objectives.eng);
        state.record(&obs);
        state.d_err.insert(hp);
        state.d_eng.insert(hp);
    }

    let mut err_model = Surrogate { kernel: None };
    let mut eng_model = Surrogate { kernel: None };
    let (mut err_acq, mut eng_acq) = (f64::INFINITY, f64::INFINITY);

    let stop_reason = loop {
        if let Some(reason) = should_stop(&state, space, err_acq, eng_acq, cfg) {
            break reason;
        }
        let refit = state.iteration % cfg.gp_refit_every == 0;
        let evaluated = ledger.evaluated();
        let (err_in, err_y) = training_data(space, &state.d_err, &errs);
        let (eng_in, eng_y) = training_data(space, &state.d_eng, &engs);

        // the two fits are independent; results are joined before use
        let (theta_sel, gamma_sel) = std::thread::scope(|s| {
            let err_task = s.spawn(|| {
                err_model.select(space, err_in, err_y, &evaluated, refit, cfg)
            });
            let gamma = eng_model.select(space, eng_in, eng_y, &evaluated, refit, cfg);
            (err_task.join().expect("err surrogate thread panicked"), gamma)
        });
        let (theta_sel, gamma_sel) = match (theta_sel, gamma_sel) {
            (Ok(t), Ok(g)) => (t, g),
            (Err(e), _) | (_, Err(e)) => {
                let result = ledger.finish("pabo", StopReason::Aborted, Some(e.to_string()));
                return Ok(PaboRun {
                    result,
                    state,
                    iterations,
                    n_init: cfg.n_init,
                });
            }
        };
        err_acq = theta_sel.best_standardized;
        eng_acq = gamma_sel.best_standardized;
        if let Some(StopReason::AcquisitionVanished) = should_stop(&state, space, err_acq, eng_acq, cfg) {
            break StopReason::AcquisitionVanished;
        }

        let theta = ledger.observe(&theta_sel.best_point)?.clone();
        errs.insert(theta.hp.clone(), theta.objectives.err);
        engs.insert(theta.hp.clone(), theta.objectives.eng);
        state.record(&theta);
        state.d_err.insert(&theta.hp);

        // with one evaluation left, gamma is dropped unless it coincides with theta
        let gamma_dropped = gamma_sel.best_point != theta.hp && ledger.len() >= cfg.max_evals;
        let gamma = if !gamma_dropped {
            let gamma = ledger.observe(&gamma_sel.best_point)?.clone();
            errs.insert(gamma.hp.clone(), gamma.objectives.err);
            engs.insert(gamma.hp.clone(), gamma.objectives.eng);
            state.record(&gamma);
            state.d_eng.insert(&gamma.hp);
            gamma
        } else {
            theta.clone()
        };

        let feed = if cfg.supervisor {
            state.supervisor_step(&theta, &gamma)
        } else {
            CrossFeed::default()
        };
        iterations.push(IterationRecord {
            iteration: state.iteration,
            theta: theta.eval_index,
            gamma: gamma.eval_index,
            gamma_dropped,
            err_acq,
            eng_acq,
            feed,
            d_err_len: state.d_err.len(),
            d_eng_len: state.d_eng.len(),
        });
        state.iteration += 1;
    };

    let result = ledger.finish("pabo", stop_reason, None);
    debug_assert_eq!(result.front.len(), state.archive.len());
    Ok(PaboRun {
        result,
        state,
        iterations,
        n_init: cfg.n_init,
    })
}
