//! Black-box bi-objective functions over a search space.
//!
//! Three families are provided: full-grid lookup tables, analytic synthetic
//! problems with known fronts, and a composition of the crossbar energy
//! model with a smooth error surrogate.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{total_energy, ArchitectureTemplate, HardwareConfig};
use crate::error::{Error, Result};
use crate::pareto::ObjectivePair;
use crate::space::{format_number, HpVector, SearchSpace};

pub trait Evaluator: Send + Sync {
    fn evaluate(&self, hp: &HpVector) -> Result<ObjectivePair>;
}

/// A named objective that counts its evaluations.
pub struct ObjectiveFn {
    name: String,
    evaluator: Box<dyn Evaluator>,
    count: AtomicU64,
}

impl fmt::Debug for ObjectiveFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFn")
            .field("name", &self.name)
            .field("eval_count", &self.eval_count())
            .finish()
    }
}

impl ObjectiveFn {
    pub fn new(name: impl Into<String>, evaluator: impl Evaluator + 'static) -> Self {
        ObjectiveFn {
            name: name.into(),
            evaluator: Box::new(evaluator),
            count: AtomicU64::new(0),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, hp: &HpVector) -> Result<ObjectivePair> {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.evaluator.evaluate(hp)
    }

    pub fn eval_count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }

    pub fn reset_count(&self) {
        self.count.store(0, Ordering::SeqCst);
    }
}

/// Objective values for every grid point, read from a delimited table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedObjective {
    table: HashMap<HpVector, ObjectivePair>,
}

impl TabulatedObjective {
    /// Parses a CSV document whose header names every parameter plus `err` and `eng`.
    pub fn load(document: &str, space: &SearchSpace) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(document.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Table {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let column = |name: &str| header.iter().position(|h| h == name);
        let err_col = column("err").ok_or(Error::Table {
            line: 1,
            message: "missing `err` column".into(),
        })?;
        let eng_col = column("eng").ok_or(Error::Table {
            line: 1,
            message: "missing `eng` column".into(),
        })?;
        let mut param_cols = Vec::with_capacity(space.dims());
        for p in space.params() {
            param_cols.push(column(p.name()).ok_or_else(|| Error::Table {
                line: 1,
                message: format!("missing column for parameter `{}`", p.name()),
            })?);
        }
        for h in header.iter() {
            if h != "err" && h != "eng" && space.param_index(h).is_none() {
                return Err(Error::Table {
                    line: 1,
                    message: format!("unknown column `{h}`"),
                });
            }
        }

        let mut table = HashMap::with_capacity(space.cardinality() as usize);
        for record in reader.records() {
            let record = record.map_err(|e| Error::Table {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let table_err = |message: String| Error::Table { line, message };
            let mut indices = Vec::with_capacity(space.dims());
            for (p, &col) in space.params().iter().zip(&param_cols) {
                let cell = record.get(col).unwrap_or("");
                let idx = p.position(cell).ok_or_else(|| {
                    table_err(format!("`{cell}` is not a value of parameter `{}`", p.name()))
                })?;
                indices.push(idx);
            }
            let number = |col: usize, what: &str| -> Result<f64> {
                let cell = record.get(col).unwrap_or("");
                cell.parse::<f64>()
                    .map_err(|_| table_err(format!("`{what}` value `{cell}` is not a number")))
            };
            let pair = ObjectivePair::new(number(err_col, "err")?, number(eng_col, "eng")?);
            pair.validate().map_err(|e| table_err(e.to_string()))?;
            let hp = HpVector::new(indices);
            if table.insert(hp.clone(), pair).is_some() {
                return Err(table_err(format!("duplicate row for {}", space.describe(&hp))));
            }
        }
        if table.len() as u64 != space.cardinality() {
            let missing = (0..space.cardinality())
                .map(|i| space.point_at(i))
                .find(|hp| !table.contains_key(hp))
                .expect("a grid point is missing");
            return Err(Error::MissingRow(space.describe(&missing)));
        }
        Ok(TabulatedObjective { table })
    }

    pub fn get(&self, hp: &HpVector) -> Option<ObjectivePair> {
        self.table.get(hp).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Evaluator for TabulatedObjective {
    fn evaluate(&self, hp: &HpVector) -> Result<ObjectivePair> {
        self.get(hp).ok_or_else(|| Error::MissingRow(hp.to_string()))
    }
}

/// Writes every grid point of `space` with its objective pair as CSV.
pub fn write_table(space: &SearchSpace, objective: &dyn Evaluator) -> Result<String> {
    let mut out = String::new();
    let mut header: Vec<&str> = space.params().iter().map(|p| p.name()).collect();
    header.extend(["err", "eng"]);
    out.push_str(&header.join(","));
    out.push('\n');
    for hp in space.enumerate()? {
        let pair = objective.evaluate(&hp)?;
        let mut row: Vec<String> = (0..space.dims())
            .map(|i| space.value(&hp, i).canonical())
            .collect();
        row.push(format_number(pair.err));
        row.push(format_number(pair.eng));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Analytic bi-objective problems over numeric coordinates `u ∈ [0,1]^n`.
///
/// * `sphere-pair`: `err = |u|²`, `eng = |u|² + Σu`. Both are minimized at
///   the all-zero corner, so the Pareto set is that single point.
/// * `conflicting-quadratics`: `err = |u|²`, `eng = |u − 1|²`. On symmetric
///   grids the Pareto set is the diagonal.
/// * `zdt1-grid`: `err = u₀`, `g = 1 + 9·mean(u₁..)`, `eng = g·(1 − √(u₀/g))`
///   (`g = 1` for a single parameter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    SpherePair,
    ConflictingQuadratics,
    Zdt1Grid,
}

impl SyntheticKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sphere-pair" => Ok(SyntheticKind::SpherePair),
            "conflicting-quadratics" => Ok(SyntheticKind::ConflictingQuadratics),
            "zdt1-grid" => Ok(SyntheticKind::Zdt1Grid),
            other => Err(Error::UnknownObjective(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::SpherePair => "sphere-pair",
            SyntheticKind::ConflictingQuadratics => "conflicting-quadratics",
            SyntheticKind::Zdt1Grid => "zdt1-grid",
        }
    }

    pub fn apply(&self, u: &[f64]) -> ObjectivePair {
        match self {
            SyntheticKind::SpherePair => {
                let sq: f64 = u.iter().map(|x| x * x).sum();
                ObjectivePair::new(sq, sq + u.iter().sum::<f64>())
            }
            SyntheticKind::ConflictingQuadratics => ObjectivePair::new(
                u.iter().map(|x| x * x).sum(),
                u.iter().map(|x| (x - 1.0) * (x - 1.0)).sum(),
            ),
            SyntheticKind::Zdt1Grid => {
                let f1 = u[0];
                let g = if u.len() > 1 {
                    1.0 + 9.0 * u[1..].iter().sum::<f64>() / (u.len() - 1) as f64
                } else {
                    1.0
                };
                ObjectivePair::new(f1, (g * (1.0 - (f1 / g).sqrt())).max(0.0))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticObjective {
    kind: SyntheticKind,
    space: SearchSpace,
}

impl Evaluator for SyntheticObjective {
    fn evaluate(&self, hp: &HpVector) -> Result<ObjectivePair> {
        if !self.space.contains(hp) {
            return Err(Error::InvalidObjective(format!("{hp} is not in the search space")));
        }
        Ok(self.kind.apply(&self.space.to_numeric(hp)))
    }
}

pub fn make_synthetic(name: &str, space: &SearchSpace) -> Result<ObjectiveFn> {
    let kind = SyntheticKind::parse(name)?;
    Ok(ObjectiveFn::new(
        kind.name(),
        SyntheticObjective {
            kind,
            space: space.clone(),
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticTerm {
    pub param: String,
    pub weight: f64,
    /// Best coordinate in [0, 1].
    pub optimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityTerm {
    pub param: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionTerm {
    pub params: [String; 2],
    pub weight: f64,
}

/// Deterministic stand-in for trained-network classification error.
///
/// With `u` the numeric coordinates of a grid point:
///
/// ```text
/// c   = Σ_h w_h·u_h / Σ_h w_h                     (capacity terms)
/// err = base
///     + Σ_q w_q·(u_q − opt_q)²                    (quadratic terms)
///     + capacity_amp·(1 − c)^capacity_power
///     + Σ_i w_i·u_a·u_b                           (interaction terms)
///     + jitter·ξ(seed, grid index)
/// ```
///
/// clamped to [0, 1]. `ξ` is the first `f64` in `[-1, 1)` drawn from a
/// ChaCha8 generator seeded with `seed ^ (grid_index · 0x9E3779B97F4A7C15)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrSurrogate {
    pub base: f64,
    #[serde(default)]
    pub capacity_amp: f64,
    #[serde(default = "default_power")]
    pub capacity_power: f64,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quadratic: Vec<QuadraticTerm>,
    #[serde(default)]
    pub capacity: Vec<CapacityTerm>,
    #[serde(default)]
    pub interaction: Vec<InteractionTerm>,
}

fn default_power() -> f64 {
    1.0
}

impl ErrSurrogate {
    pub fn referenced_params(&self) -> Vec<&str> {
        self.quadratic
            .iter()
            .map(|q| q.param.as_str())
            .chain(self.capacity.iter().map(|c| c.param.as_str()))
            .chain(self.interaction.iter().flat_map(|i| i.params.iter().map(String::as_str)))
            .collect()
    }

    pub fn check_bindings(&self, space: &SearchSpace) -> Result<()> {
        for name in self.referenced_params() {
            if space.param_index(name).is_none() {
                return Err(Error::UnknownHyperparameter(name.to_string()));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, space: &SearchSpace, hp: &HpVector) -> Result<f64> {
        let u = space.to_numeric(hp);
        let coord = |name: &str| -> Result<f64> {
            space
                .param_index(name)
                .map(|i| u[i])
                .ok_or_else(|| Error::UnknownHyperparameter(name.to_string()))
        };
        let mut err = self.base;
        for q in &self.quadratic {
            let d = coord(&q.param)? - q.optimum;
            err += q.weight * d * d;
        }
        let total_w: f64 = self.capacity.iter().map(|c| c.weight).sum();
        if total_w > 0.0 {
            let mut c = 0.0;
            for term in &self.capacity {
                c += term.weight * coord(&term.param)?;
            }
            err += self.capacity_amp * (1.0 - c / total_w).max(0.0).powf(self.capacity_power);
        }
        for i in &self.interaction {
            err += i.weight * coord(&i.params[0])? * coord(&i.params[1])?;
        }
        if self.jitter != 0.0 {
            let key = self.seed ^ space.linear_index(hp).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let xi: f64 = ChaCha8Rng::seed_from_u64(key).random_range(-1.0..1.0);
            err += self.jitter * xi;
        }
        Ok(err.clamp(0.0, 1.0))
    }
}

/// Template document for a composed objective: architecture geometry,
/// optional hardware overrides and the error surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedSpec {
    #[serde(flatten)]
    pub architecture: ArchitectureTemplate,
    #[serde(default)]
    pub hardware: HardwareConfig,
    pub surrogate: ErrSurrogate,
}

impl ComposedSpec {
    pub fn parse(document: &str) -> Result<Self> {
        toml::from_str(document).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("composed spec serializes")
    }

    pub fn check_bindings(&self, space: &SearchSpace) -> Result<()> {
        self.hardware.validate()?;
        self.architecture.check_bindings(space)?;
        self.surrogate.check_bindings(space)
    }
}

/// `eng` from the energy model, `err` from the surrogate.
#[derive(Debug, Clone)]
pub struct ComposedObjective {
    space: SearchSpace,
    spec: ComposedSpec,
}

impl ComposedObjective {
    pub fn new(space: SearchSpace, spec: ComposedSpec) -> Result<Self> {
        spec.check_bindings(&space)?;
        Ok(ComposedObjective { space, spec })
    }

    pub fn energy(&self, hp: &HpVector) -> Result<f64> {
        let layers = self.spec.architecture.layers(&self.space, hp)?;
        Ok(total_energy(&layers, &self.spec.hardware))
    }

    pub fn spec(&self) -> &ComposedSpec {
        &self.spec
    }
}

impl Evaluator for ComposedObjective {
    fn evaluate(&self, hp: &HpVector) -> Result<ObjectivePair> {
        if !self.space.contains(hp) {
            return Err(Error::InvalidObjective(format!("{hp} is not in the search space")));
        }
        let pair = ObjectivePair::new(self.spec.surrogate.evaluate(&self.space, hp)?, self.energy(hp)?);
        pair.validate()?;
        Ok(pair)
    }
}
