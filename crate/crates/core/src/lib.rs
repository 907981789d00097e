//! Pareto-aware dual Bayesian optimization (PABO) over discrete
//! hyperparameter grids.
//!
//! Two Gaussian-process optimizers minimize classification error and
//! inference energy separately; after each iteration a supervisor hands each
//! optimizer the other's newest point when that point is non-dominated. The
//! crate also ships the crossbar energy model, objective adapters, grid /
//! random / NSGA-II baselines and reproducible case-study bundles.

pub mod acquisition;
pub mod algorithm;
pub mod baselines;
pub mod cases;
pub mod energy;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod objectives;
pub mod pabo;
pub mod pareto;
pub mod run;
pub mod space;

pub use acquisition::{expected_improvement, select_next, AcquisitionResult};
pub use algorithm::{AlgorithmConfig, RandomConfig};
pub use baselines::{run_grid, run_nsga2, run_random, Nsga2Config};
pub use cases::{generate_case_bundle, CaseStudy, CaseStudyBundle, ExpectedMetrics, ExpectedRun};
pub use energy::{ArchitectureTemplate, HardwareConfig, LayerSpec};
pub use error::{Error, Result};
pub use gp::{GpModel, KernelConfig, KernelFamily, LengthScale};
pub use objectives::{ComposedObjective, ComposedSpec, Evaluator, ObjectiveFn, TabulatedObjective};
pub use pabo::{run_pabo, PaboConfig};
pub use pareto::{dominates, hypervolume_2d, reference_point, ObjectivePair, Observation, ParetoArchive};
pub use run::{RunResult, StopReason};
pub use space::{HpVector, ParamDef, ParamKind, ParamValue, SearchSpace};
