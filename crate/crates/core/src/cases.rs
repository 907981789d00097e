//! Desk-scale case-study bundles.
//!
//! Each bundle pairs a search space shaped like one of the AlexNet / VGG19
//! hyperparameter grids with a composed objective: `eng` is computed exactly
//! by the crossbar energy model from the architecture template, `err` comes
//! from the [`ErrSurrogate`](crate::objectives::ErrSurrogate) formula with
//! the coefficients below. The surrogate is a smooth stand-in, not a record
//! of trained accuracy.
//!
//! Log-spaced value lists (learning rate, decays, the wide dropout and
//! momentum ranges) are declared categorical so that their coordinates are
//! equispaced in the index, i.e. uniform in log scale.
//!
//! Error directions encoded by the surrogates:
//! * AlexNet / Flower17: dropout 0.5 and momentum 0.95 train best; two fc
//!   layers beat three on a dataset this small; the lowest error comes with
//!   five conv layers and kernels 7 / 3 / 5 on layers 1-3. Learning rates
//!   far from 1e-3 degrade error sharply (1e-6 barely trains).
//! * VGG19 / CIFAR-10: weight decay 0.05 is far too strong; wider late
//!   blocks help more than wider early ones; kernels above 3 on the 8×8 and
//!   4×4 maps add cost without improving error.
//!
//! Geometry pins (not searched):
//! * AlexNet / Flower17: 227×227×3 input, 17 classes. conv1 stride 4 with no
//!   padding, 3×3/2 max-pool after conv1 and conv2 and after the last
//!   active convolution; conv2..conv5 stride 1 with `same` padding; channel
//!   widths 96/256/384/384/256; hidden fc widths 4096/4096.
//! * VGG19 / CIFAR-10: 32×32×3 input, 10 classes, sixteen stride-1 `same`
//!   convolutions in blocks of 2/2/4/4/4 with a 2×2/2 max-pool after each
//!   block; block widths 64/128/256/512/512 unless searched; fc
//!   512→512→512→10.

use serde::{Deserialize, Serialize};

use crate::algorithm::{AlgorithmConfig, RandomConfig};
use crate::baselines::{run_grid, Nsga2Config};
use crate::error::{Error, Result};
use crate::objectives::{write_table, ComposedObjective, ComposedSpec, ObjectiveFn};
use crate::pabo::PaboConfig;
use crate::pareto::{hypervolume_2d, reference_point, ObjectivePair};
use crate::space::SearchSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseStudy {
    Cs1Analogue,
    Cs2Analogue,
    Cs3Analogue,
}

impl CaseStudy {
    pub const ALL: [CaseStudy; 3] = [CaseStudy::Cs1Analogue, CaseStudy::Cs2Analogue, CaseStudy::Cs3Analogue];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cs1-analogue" => Ok(CaseStudy::Cs1Analogue),
            "cs2-analogue" => Ok(CaseStudy::Cs2Analogue),
            "cs3-analogue" => Ok(CaseStudy::Cs3Analogue),
            other => Err(Error::Config(format!("unknown case study `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseStudy::Cs1Analogue => "cs1-analogue",
            CaseStudy::Cs2Analogue => "cs2-analogue",
            CaseStudy::Cs3Analogue => "cs3-analogue",
        }
    }

    fn space_doc(&self) -> &'static str {
        match self {
            CaseStudy::Cs1Analogue => CS1_SPACE,
            CaseStudy::Cs2Analogue => CS2_SPACE,
            CaseStudy::Cs3Analogue => CS3_SPACE,
        }
    }

    fn template_doc(&self) -> &'static str {
        match self {
            CaseStudy::Cs1Analogue => CS1_TEMPLATE,
            CaseStudy::Cs2Analogue => CS2_TEMPLATE,
            CaseStudy::Cs3Analogue => CS3_TEMPLATE,
        }
    }

    pub fn space(&self) -> SearchSpace {
        SearchSpace::parse(self.space_doc()).expect("shipped space parses")
    }

    /// Composed-objective template; `seed` feeds the surrogate's jitter term.
    pub fn spec(&self, seed: u64) -> ComposedSpec {
        let mut spec = ComposedSpec::parse(self.template_doc()).expect("shipped template parses");
        spec.surrogate.seed = seed;
        spec
    }

    pub fn objective(&self, seed: u64) -> ObjectiveFn {
        let composed = ComposedObjective::new(self.space(), self.spec(seed)).expect("shipped bindings resolve");
        ObjectiveFn::new(self.name(), composed)
    }

    /// The four comparison runs: PABO defaults, random search with 40
    /// evaluations, NSGA-II (10×50 on the small grid, 20×100 otherwise) and
    /// the exhaustive grid.
    pub fn algorithms(&self, seed: u64) -> Vec<AlgorithmConfig> {
        let (pop_size, max_generations) = match self {
            CaseStudy::Cs1Analogue => (10, 50),
            CaseStudy::Cs2Analogue | CaseStudy::Cs3Analogue => (20, 100),
        };
        vec![
            AlgorithmConfig::Pabo(PaboConfig {
                seed,
                ..PaboConfig::default()
            }),
            AlgorithmConfig::Random(RandomConfig { budget: 40, seed }),
            AlgorithmConfig::Nsga2(Nsga2Config {
                pop_size,
                max_generations,
                seed,
                ..Nsga2Config::default()
            }),
            AlgorithmConfig::Grid,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRun {
    pub algorithm: String,
    pub evals_used: usize,
    /// Hypervolume of the run's front over the grid-truth hypervolume.
    pub hypervolume_ratio: f64,
}

/// Metrics a bundle's manifests reproduce when rerun.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedMetrics {
    pub case: String,
    pub seed: u64,
    pub cardinality: u64,
    pub true_front_size: usize,
    pub reference: ObjectivePair,
    pub grid_hypervolume: f64,
    /// Relative tolerance on hypervolumes and ratios.
    pub rel_tol: f64,
    pub runs: Vec<ExpectedRun>,
}

impl ExpectedMetrics {
    /// Checks a rerun against the recorded value; `Err` names the mismatch.
    pub fn check_run(&self, algorithm: &str, evals_used: usize, hypervolume_ratio: f64) -> std::result::Result<(), String> {
        let expected = self
            .runs
            .iter()
            .find(|r| r.algorithm == algorithm)
            .ok_or_else(|| format!("no expected entry for `{algorithm}`"))?;
        if expected.evals_used != evals_used {
            return Err(format!(
                "{algorithm}: evals_used {evals_used}, expected {}",
                expected.evals_used
            ));
        }
        let tol = self.rel_tol * expected.hypervolume_ratio.abs().max(1e-300);
        if (expected.hypervolume_ratio - hypervolume_ratio).abs() > tol {
            return Err(format!(
                "{algorithm}: hypervolume ratio {hypervolume_ratio}, expected {}",
                expected.hypervolume_ratio
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CaseStudyBundle {
    pub case: CaseStudy,
    pub space: SearchSpace,
    pub spec: ComposedSpec,
    /// Full-grid objective table as CSV.
    pub table: String,
    pub algorithms: Vec<AlgorithmConfig>,
    pub expected: ExpectedMetrics,
}

/// Builds a bundle and records the metrics of every shipped algorithm run.
/// `seed` drives both the surrogate jitter and the algorithms.
pub fn generate_case_bundle(case: CaseStudy, seed: u64) -> Result<CaseStudyBundle> {
    let space = case.space();
    let spec = case.spec(seed);
    let composed = ComposedObjective::new(space.clone(), spec.clone())?;
    let table = write_table(&space, &composed)?;
    let objective = ObjectiveFn::new(case.name(), composed);
    let grid = run_grid(&space, &objective)?;
    let reference = reference_point(grid.history_pairs().iter()).expect("grid is non-empty");
    let grid_hypervolume = hypervolume_2d(&grid.front_pairs(), &reference)?;

    let algorithms = case.algorithms(seed);
    let mut runs = Vec::with_capacity(algorithms.len());
    for algo in &algorithms {
        let result = algo.run(&space, &objective)?;
        let hv = hypervolume_2d(&result.front_pairs(), &reference)?;
        runs.push(ExpectedRun {
            algorithm: algo.name().to_string(),
            evals_used: result.evals_used,
            hypervolume_ratio: hv / grid_hypervolume,
        });
    }
    Ok(CaseStudyBundle {
        case,
        expected: ExpectedMetrics {
            case: case.name().to_string(),
            seed,
            cardinality: space.cardinality(),
            true_front_size: grid.front.len(),
            reference,
            grid_hypervolume,
            rel_tol: 1e-9,
            runs,
        },
        space,
        spec,
        table,
        algorithms,
    })
}

const CS1_SPACE: &str = r#"# AlexNet on Flower17, small grid (192 points)
[[param]]
name = "dropout"
kind = "numeric"
values = [0.4, 0.5]

[[param]]
name = "learning_rate"
kind = "numeric"
values = [0.001]

[[param]]
name = "momentum"
kind = "numeric"
values = [0.85, 0.9, 0.95]

[[param]]
name = "num_fc_layers"
kind = "numeric"
values = [2, 3]

[[param]]
name = "num_conv_layers"
kind = "numeric"
values = [4, 5]

[[param]]
name = "kernel_1"
kind = "numeric"
values = [7, 5]

[[param]]
name = "kernel_2"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_3"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_4"
kind = "numeric"
values = [3]
"#;

const CS1_TEMPLATE: &str = r#"name = "alexnet-flower17"
input_size = 227
input_channels = 3
classes = 17
conv_count = "num_conv_layers"
fc_count = "num_fc_layers"
final_pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 96
kernel = "kernel_1"
stride = 4
padding = 0
pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 256
kernel = "kernel_2"
padding = "same"
pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 384
kernel = "kernel_3"
padding = "same"

[[conv]]
out_channels = 384
kernel = "kernel_4"
padding = "same"

[[conv]]
out_channels = 256
kernel = 3
padding = "same"

[fc]
hidden = [4096, 4096]

[hardware]
xs = 128
epx = 4.4e-8

[surrogate]
base = 0.14
capacity_amp = 0.10
capacity_power = 1.0
jitter = 0.003
quadratic = [
    { param = "dropout", weight = 0.04, optimum = 1.0 },
    { param = "momentum", weight = 0.06, optimum = 1.0 },
    { param = "num_fc_layers", weight = 0.03, optimum = 0.0 },
    { param = "kernel_1", weight = 0.03, optimum = 1.0 },
    { param = "kernel_2", weight = 0.02, optimum = 0.0 },
]
capacity = [
    { param = "num_conv_layers", weight = 1.0 },
    { param = "kernel_3", weight = 0.6 },
]
"#;

const CS2_SPACE: &str = r#"# AlexNet on Flower17, realistic grid (6912 points)
[[param]]
name = "dropout"
kind = "categorical"
values = ["0.005", "0.05", "0.5"]

[[param]]
name = "learning_rate"
kind = "categorical"
values = ["1e-6", "1e-5", "1e-4", "1e-3", "1e-2", "1e-1"]

[[param]]
name = "momentum"
kind = "categorical"
values = ["0.007", "0.07", "0.7"]

[[param]]
name = "num_fc_layers"
kind = "numeric"
values = [2, 3]

[[param]]
name = "num_conv_layers"
kind = "numeric"
values = [4, 5]

[[param]]
name = "kernel_1"
kind = "numeric"
values = [3, 5, 7, 11]

[[param]]
name = "kernel_2"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_3"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_4"
kind = "numeric"
values = [3, 5]
"#;

const CS2_TEMPLATE: &str = r#"name = "alexnet-flower17-wide"
input_size = 227
input_channels = 3
classes = 17
conv_count = "num_conv_layers"
fc_count = "num_fc_layers"
final_pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 96
kernel = "kernel_1"
stride = 4
padding = 0
pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 256
kernel = "kernel_2"
padding = "same"
pool = { size = 3, stride = 2 }

[[conv]]
out_channels = 384
kernel = "kernel_3"
padding = "same"

[[conv]]
out_channels = 384
kernel = "kernel_4"
padding = "same"

[[conv]]
out_channels = 256
kernel = 3
padding = "same"

[fc]
hidden = [4096, 4096]

[hardware]
xs = 128
epx = 4.4e-8

[surrogate]
base = 0.14
capacity_amp = 0.10
capacity_power = 1.0
jitter = 0.003
quadratic = [
    { param = "learning_rate", weight = 1.5, optimum = 0.6 },
    { param = "dropout", weight = 0.04, optimum = 1.0 },
    { param = "momentum", weight = 0.10, optimum = 1.0 },
    { param = "num_fc_layers", weight = 0.03, optimum = 0.0 },
    { param = "kernel_1", weight = 0.12, optimum = 0.5 },
    { param = "kernel_2", weight = 0.02, optimum = 0.0 },
]
capacity = [
    { param = "num_conv_layers", weight = 1.0 },
    { param = "kernel_3", weight = 0.6 },
    { param = "kernel_4", weight = 0.3 },
]
"#;

const CS3_SPACE: &str = r#"# VGG19 on CIFAR-10 (3072 points)
[[param]]
name = "learning_rate"
kind = "categorical"
values = ["0.01", "0.1"]

[[param]]
name = "dropout_1"
kind = "numeric"
values = [0.3, 0.4]

[[param]]
name = "learning_rate_decay"
kind = "categorical"
values = ["1e-6", "1e-4"]

[[param]]
name = "weight_decay"
kind = "categorical"
values = ["0.05", "0.0005"]

[[param]]
name = "kernel_6"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_7"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_8"
kind = "numeric"
values = [3, 5]

[[param]]
name = "kernel_9"
kind = "numeric"
values = [3, 5, 7]

[[param]]
name = "features_1"
kind = "numeric"
values = [64, 128]

[[param]]
name = "features_2"
kind = "numeric"
values = [128, 256]

[[param]]
name = "features_4"
kind = "numeric"
values = [256, 512]
"#;

const CS3_TEMPLATE: &str = r#"name = "vgg19-cifar10"
input_size = 32
input_channels = 3
classes = 10

[[conv]]
out_channels = "features_1"
kernel = 3
padding = "same"

[[conv]]
out_channels = "features_1"
kernel = 3
padding = "same"
pool = { size = 2, stride = 2 }

[[conv]]
out_channels = "features_2"
kernel = 3
padding = "same"

[[conv]]
out_channels = "features_2"
kernel = 3
padding = "same"
pool = { size = 2, stride = 2 }

[[conv]]
out_channels = 256
kernel = 3
padding = "same"

[[conv]]
out_channels = 256
kernel = "kernel_6"
padding = "same"

[[conv]]
out_channels = 256
kernel = "kernel_7"
padding = "same"

[[conv]]
out_channels = 256
kernel = "kernel_8"
padding = "same"
pool = { size = 2, stride = 2 }

[[conv]]
out_channels = "features_4"
kernel = "kernel_9"
padding = "same"

[[conv]]
out_channels = "features_4"
kernel = 3
padding = "same"

[[conv]]
out_channels = "features_4"
kernel = 3
padding = "same"

[[conv]]
out_channels = "features_4"
kernel = 3
padding = "same"
pool = { size = 2, stride = 2 }

[[conv]]
out_channels = 512
kernel = 3
padding = "same"

[[conv]]
out_channels = 512
kernel = 3
padding = "same"

[[conv]]
out_channels = 512
kernel = 3
padding = "same"

[[conv]]
out_channels = 512
kernel = 3
padding = "same"
pool = { size = 2, stride = 2 }

[fc]
hidden = [512, 512]

[hardware]
xs = 128
epx = 4.4e-8

[surrogate]
base = 0.07
capacity_amp = 0.06
capacity_power = 1.0
jitter = 0.002
quadratic = [
    { param = "weight_decay", weight = 0.10, optimum = 1.0 },
    { param = "learning_rate", weight = 0.02, optimum = 0.0 },
    { param = "dropout_1", weight = 0.01, optimum = 1.0 },
    { param = "learning_rate_decay", weight = 0.005, optimum = 1.0 },
    { param = "kernel_6", weight = 0.003, optimum = 0.0 },
    { param = "kernel_7", weight = 0.003, optimum = 0.0 },
    { param = "kernel_8", weight = 0.003, optimum = 0.0 },
    { param = "kernel_9", weight = 0.005, optimum = 0.0 },
]
capacity = [
    { param = "features_1", weight = 0.2 },
    { param = "features_2", weight = 0.5 },
    { param = "features_4", weight = 1.0 },
]
"#;
