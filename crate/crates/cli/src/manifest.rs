//! Run manifests: which space, objective and algorithm a run uses, read from
//! TOML and overridable from the command line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use pabo_core::objectives::make_synthetic;
use pabo_core::{
    AlgorithmConfig, ComposedObjective, ComposedSpec, Error, Nsga2Config, ObjectiveFn, PaboConfig,
    RandomConfig, SearchSpace, TabulatedObjective,
};
use serde::{Deserialize, Serialize};

use crate::error::{line_of, CliError, ErrorKind};

/// Where objective values come from: `table:<csv>`, `synthetic:<name>` or
/// `template:<toml>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ObjectiveSpec {
    Table(PathBuf),
    Synthetic(String),
    Template(PathBuf),
}

impl FromStr for ObjectiveSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::new(
                ErrorKind::Usage,
                format!("objective `{s}` must be table:<file>, synthetic:<name> or template:<file>"),
            )
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        if rest.is_empty() {
            return Err(bad());
        }
        match kind {
            "table" => Ok(ObjectiveSpec::Table(rest.into())),
            "synthetic" => Ok(ObjectiveSpec::Synthetic(rest.into())),
            "template" => Ok(ObjectiveSpec::Template(rest.into())),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for ObjectiveSpec {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<ObjectiveSpec> for String {
    fn from(spec: ObjectiveSpec) -> String {
        spec.to_string()
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveSpec::Table(p) => write!(f, "table:{}", p.display()),
            ObjectiveSpec::Synthetic(n) => write!(f, "synthetic:{n}"),
            ObjectiveSpec::Template(p) => write!(f, "template:{}", p.display()),
        }
    }
}

impl ObjectiveSpec {
    /// Resolves a relative file path against `base`.
    pub fn resolve(&self, base: &Path) -> Self {
        match self {
            ObjectiveSpec::Table(p) => ObjectiveSpec::Table(base.join(p)),
            ObjectiveSpec::Template(p) => ObjectiveSpec::Template(base.join(p)),
            ObjectiveSpec::Synthetic(n) => ObjectiveSpec::Synthetic(n.clone()),
        }
    }

    /// Reads and cross-checks the objective against `space`.
    pub fn load(&self, space: &SearchSpace) -> Result<ObjectiveFn, CliError> {
        match self {
            ObjectiveSpec::Synthetic(name) => make_synthetic(name, space)
                .map_err(|e| CliError::new(ErrorKind::Objective, e.to_string())),
            ObjectiveSpec::Table(path) => {
                let text = read(path)?;
                let table = TabulatedObjective::load(&text, space).map_err(|e| {
                    let line = match &e {
                        Error::Table { line, .. } => Some(*line),
                        _ => None,
                    };
                    CliError::in_file(ErrorKind::Objective, path, line, e.to_string())
                })?;
                Ok(ObjectiveFn::new(path.display().to_string(), table))
            }
            ObjectiveSpec::Template(path) => {
                let text = read(path)?;
                let located = |e: Error| {
                    let line = match &e {
                        Error::UnknownHyperparameter(name) => line_of(&text, &format!("\"{name}\"")),
                        _ => None,
                    };
                    CliError::in_file(ErrorKind::Objective, path, line, e.to_string())
                };
                let spec = ComposedSpec::parse(&text).map_err(located)?;
                let composed = ComposedObjective::new(space.clone(), spec).map_err(located)?;
                Ok(ObjectiveFn::new(path.display().to_string(), composed))
            }
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_space(path: &Path) -> Result<SearchSpace, CliError> {
    let text = read(path)?;
    SearchSpace::parse(&text).map_err(|e| CliError::in_file(ErrorKind::Space, path, None, e.to_string()))
}

/// Everything one run needs. Relative paths in a manifest file are relative
/// to the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub space: PathBuf,
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Row name in comparisons; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Hypervolume reference `[err, eng]`; defaults to 1.01 × the history maxima.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<[f64; 2]>,
    #[serde(flatten)]
    pub algorithm: AlgorithmConfig,
}

impl RunManifest {
    pub fn new(space: PathBuf, objective: ObjectiveSpec, algorithm: AlgorithmConfig) -> Self {
        RunManifest {
            space,
            objective,
            out: None,
            label: None,
            reference: None,
            algorithm,
        }
    }

    /// Parses a manifest document, resolving its paths against `base`.
    pub fn parse(document: &str, base: &Path) -> Result<Self, toml::de::Error> {
        let mut m: RunManifest = toml::from_str(document)?;
        m.space = base.join(&m.space);
        m.objective = m.objective.resolve(base);
        m.out = m.out.map(|o| base.join(o));
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let manifest = RunManifest::parse(&text, base)
            .map_err(|e| CliError::in_file(ErrorKind::Config, path, None, e.to_string()))?;
        manifest
            .algorithm
            .validate()
            .map_err(|e| CliError::in_file(ErrorKind::Config, path, None, e.to_string()))?;
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.algorithm.name().to_string())
    }
}

pub fn algorithm_by_name(name: &str) -> Result<AlgorithmConfig, CliError> {
    match name {
        "pabo" => Ok(AlgorithmConfig::Pabo(PaboConfig::default())),
        "nsga2" => Ok(AlgorithmConfig::Nsga2(Nsga2Config::default())),
        "random" => Ok(AlgorithmConfig::Random(RandomConfig { budget: 40, seed: 0 })),
        "grid" => Ok(AlgorithmConfig::Grid),
        other => Err(CliError::new(
            ErrorKind::Usage,
            format!("unknown algorithm `{other}` (expected pabo, nsga2, random or grid)"),
        )),
    }
}

/// Command-line settings; each one present replaces the manifest's value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Manifest file (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Search-space file (TOML)
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Objective: table:<csv>, synthetic:<name> or template:<toml>
    #[arg(long)]
    pub objective: Option<String>,
    /// Algorithm: pabo, nsga2, random or grid
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation cap for pabo, budget for random
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pabo_stop_eps: Option<f64>,
    /// Disable cross-feeding between the two surrogates
    #[arg(long)]
    pub pabo_no_supervisor: bool,
    #[arg(long)]
    pub nsga2_pop: Option<usize>,
    #[arg(long)]
    pub nsga2_gens: Option<usize>,
}

impl Overrides {
    /// Loads `--config` if given and applies every flag on top.
    pub fn manifest(&self) -> Result<RunManifest, CliError> {
        let base = match &self.config {
            Some(path) => Some(RunManifest::load(path)?),
            None => None,
        };
        self.apply(base)
    }

    pub fn apply(&self, base: Option<RunManifest>) -> Result<RunManifest, CliError> {
        let objective = self.objective.as_deref().map(str::parse).transpose()?;
        let mut m = match base {
            Some(m) => m,
            None => {
                let missing = |flag: &str| CliError::new(ErrorKind::Usage, format!("{flag} is required without --config"));
                let space = self.space.clone().ok_or_else(|| missing("--space"))?;
                let objective = objective.clone().ok_or_else(|| missing("--objective"))?;
                let algo = algorithm_by_name(self.algo.as_deref().unwrap_or("pabo"))?;
                RunManifest::new(space, objective, algo)
            }
        };
        if let Some(space) = &self.space {
            m.space = space.clone();
        }
        if let Some(objective) = objective {
            m.objective = objective;
        }
        if let Some(out) = &self.out {
            m.out = Some(out.clone());
        }
        if let Some(name) = &self.algo {
            if name != m.algorithm.name() {
                let seed = m.algorithm.seed().unwrap_or(0);
                m.algorithm = algorithm_by_name(name)?.with_seed(seed);
            }
        }
        if let Some(seed) = self.seed {
            m.algorithm = m.algorithm.with_seed(seed);
        }
        let wrong = |flag: &str, algo: &str| {
            CliError::new(ErrorKind::Usage, format!("{flag} does not apply to algorithm `{algo}`"))
        };
        let algo_name = m.algorithm.name();
        match &mut m.algorithm {
            AlgorithmConfig::Pabo(c) => {
                if let Some(n) = self.max_evals {
                    c.max_evals = n;
                }
                if let Some(eps) = self.pabo_stop_eps {
                    c.stop_epsilon = eps;
                }
                if self.pabo_no_supervisor {
                    c.supervisor = false;
                }
                if self.nsga2_pop.is_some() || self.nsga2_gens.is_some() {
                    return Err(wrong("--nsga2-*", algo_name));
                }
            }
            AlgorithmConfig::Nsga2(c) => {
                if let Some(n) = self.nsga2_pop {
                    c.pop_size = n;
                }
                if let Some(n) = self.nsga2_gens {
                    c.max_generations = n;
                }
                if self.max_evals.is_some() {
                    return Err(wrong("--max-evals", algo_name));
                }
                if self.pabo_stop_eps.is_some() || self.pabo_no_supervisor {
                    return Err(wrong("--pabo-*", algo_name));
                }
            }
            AlgorithmConfig::Random(c) => {
                if let Some(n) = self.max_evals {
                    c.budget = n;
                }
                if self.pabo_stop_eps.is_some() || self.pabo_no_supervisor {
                    return Err(wrong("--pabo-*", algo_name));
                }
                if self.nsga2_pop.is_some() || self.nsga2_gens.is_some() {
                    return Err(wrong("--nsga2-*", algo_name));
                }
            }
            AlgorithmConfig::Grid => {
                if self.max_evals.is_some() || self.pabo_stop_eps.is_some() || self.pabo_no_supervisor {
                    return Err(wrong("--max-evals/--pabo-*", algo_name));
                }
                if self.nsga2_pop.is_some() || self.nsga2_gens.is_some() {
                    return Err(wrong("--nsga2-*", algo_name));
                }
            }
        }
        m.algorithm
            .validate()
            .map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
        Ok(m)
    }
}
