//! Discrete hyperparameter grids.
//!
//! A [`SearchSpace`] is an ordered list of [`ParamDef`]s, each with a finite
//! list of admissible values. Points in the grid are [`HpVector`]s holding one
//! value index per parameter. Grid order is lexicographic with the last
//! parameter varying fastest.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest grid that may be materialized in memory.
pub const ENUMERATION_GUARD: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Label(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            ParamValue::Label(_) => None,
        }
    }

    /// Canonical text form, used when matching table cells against the grid.
    pub fn canonical(&self) -> String {
        match self {
            ParamValue::Number(v) => format_number(*v),
            ParamValue::Label(s) => s.clone(),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Shortest round-trip decimal form; integral values print without a fraction.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // folds -0 into 0
        return "0".to_string();
    }
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDef {
    name: String,
    kind: ParamKind,
    values: Vec<ParamValue>,
    // cached affine bounds for numeric params
    min: f64,
    max: f64,
}

impl ParamDef {
    pub fn numeric(name: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(
            name,
            ParamKind::Numeric,
            values.into_iter().map(ParamValue::Number).collect(),
        )
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        Self::new(
            name,
            ParamKind::Categorical,
            labels.into_iter().map(|s| ParamValue::Label(s.into())).collect(),
        )
    }

    pub fn new(name: impl Into<String>, kind: ParamKind, values: Vec<ParamValue>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptyValues(name));
        }
        let mut seen = HashSet::new();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for value in &values {
            match (kind, value) {
                (ParamKind::Numeric, ParamValue::Number(v)) => {
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue { name, value: *v });
                    }
                    min = min.min(*v);
                    max = max.max(*v);
                }
                (ParamKind::Numeric, ParamValue::Label(s)) => {
                    return Err(Error::Config(format!(
                        "numeric parameter `{name}` has non-numeric value `{s}`"
                    )))
                }
                (ParamKind::Categorical, ParamValue::Number(v)) if !v.is_finite() => {
                    return Err(Error::NonFiniteValue { name, value: *v });
                }
                (ParamKind::Categorical, _) => {}
            }
            if !seen.insert(value.canonical()) {
                return Err(Error::DuplicateValue {
                    name,
                    value: value.canonical(),
                });
            }
        }
        Ok(ParamDef {
            name,
            kind,
            values,
            min,
            max,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn values(&self) -> &[ParamValue] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maps the value at `index` into [0, 1].
    pub fn encode(&self, index: usize) -> f64 {
        match self.kind {
            ParamKind::Numeric => {
                let span = self.max - self.min;
                if span > 0.0 {
                    let v = self.values[index].as_f64().expect("numeric param");
                    (v - self.min) / span
                } else {
                    0.5
                }
            }
            ParamKind::Categorical => {
                if self.values.len() > 1 {
                    index as f64 / (self.values.len() - 1) as f64
                } else {
                    0.5
                }
            }
        }
    }

    /// Index of the value whose canonical form equals `text`.
    pub fn position(&self, text: &str) -> Option<usize> {
        let wanted = match self.kind {
            ParamKind::Numeric => match text.trim().parse::<f64>() {
                Ok(v) => format_number(v),
                Err(_) => return None,
            },
            ParamKind::Categorical => text.trim().to_string(),
        };
        self.values.iter().position(|v| v.canonical() == wanted)
    }
}

/// One grid point: a value index per parameter, in space order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HpVector(Vec<usize>);

impl HpVector {
    pub fn new(indices: Vec<usize>) -> Self {
        HpVector(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for HpVector {
    fn from(v: Vec<usize>) -> Self {
        HpVector(v)
    }
}

impl fmt::Display for HpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    params: Vec<ParamDef>,
    cardinality: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    #[serde(default)]
    param: Vec<RawParam>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    kind: ParamKind,
    values: Vec<toml::Value>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut names = HashSet::new();
        let mut cardinality: u64 = 1;
        for p in &params {
            if !names.insert(p.name.as_str()) {
                return Err(Error::DuplicateParam(p.name.clone()));
            }
            cardinality = cardinality
                .checked_mul(p.len() as u64)
                .ok_or(Error::CardinalityOverflow)?;
        }
        Ok(SearchSpace {
            params,
            cardinality,
        })
    }

    /// Parses a TOML space document:
    ///
    /// ```toml
    /// [[param]]
    /// name = "dropout"
    /// kind = "numeric"
    /// values = [0.4, 0.5]
    /// ```
    pub fn parse(document: &str) -> Result<Self> {
        let raw: RawSpace = toml::from_str(document).map_err(|e| Error::Config(e.to_string()))?;
        let mut params = Vec::with_capacity(raw.param.len());
        for p in raw.param {
            let mut values = Vec::with_capacity(p.values.len());
            for v in p.values {
                let value = match (&p.kind, v) {
                    (_, toml::Value::Float(f)) => ParamValue::Number(f),
                    (_, toml::Value::Integer(i)) => ParamValue::Number(i as f64),
                    (ParamKind::Categorical, toml::Value::String(s)) => ParamValue::Label(s),
                    (ParamKind::Categorical, toml::Value::Boolean(b)) => {
                        ParamValue::Label(b.to_string())
                    }
                    (_, other) => {
                        return Err(Error::Config(format!(
                            "parameter `{}`: unsupported value `{other}`",
                            p.name
                        )))
                    }
                };
                values.push(value);
            }
            if p.kind == ParamKind::Categorical {
                // categorical numbers are labels too
                values = values
                    .into_iter()
                    .map(|v| match v {
                        ParamValue::Number(f) if f.is_finite() => ParamValue::Label(format_number(f)),
                        other => other,
                    })
                    .collect();
            }
            params.push(ParamDef::new(p.name, p.kind, values)?);
        }
        SearchSpace::new(params)
    }

    /// Inverse of [`SearchSpace::parse`].
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for p in &self.params {
            let kind = match p.kind {
                ParamKind::Numeric => "numeric",
                ParamKind::Categorical => "categorical",
            };
            let values: Vec<String> = p
                .values
                .iter()
                .map(|v| match v {
                    ParamValue::Number(f) => toml::Value::Float(*f).to_string(),
                    ParamValue::Label(s) => toml::Value::String(s.clone()).to_string(),
                })
                .collect();
            out.push_str(&format!(
                "[[param]]\nname = {}\nkind = \"{kind}\"\nvalues = [{}]\n\n",
                toml::Value::String(p.name.clone()),
                values.join(", ")
            ));
        }
        out
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn dims(&self) -> usize {
        self.params.len()
    }

    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn contains(&self, hp: &HpVector) -> bool {
        hp.len() == self.params.len()
            && hp.0.iter().zip(&self.params).all(|(&i, p)| i < p.len())
    }

    pub fn value(&self, hp: &HpVector, param: usize) -> &ParamValue {
        &self.params[param].values[hp.0[param]]
    }

    pub fn value_by_name(&self, hp: &HpVector, name: &str) -> Option<&ParamValue> {
        self.param_index(name).map(|i| self.value(hp, i))
    }

    /// Position of `hp` in grid order.
    pub fn linear_index(&self, hp: &HpVector) -> u64 {
        hp.0.iter()
            .zip(&self.params)
            .fold(0u64, |acc, (&i, p)| acc * p.len() as u64 + i as u64)
    }

    /// The grid point at position `index` in grid order.
    pub fn point_at(&self, mut index: u64) -> HpVector {
        debug_assert!(index < self.cardinality);
        let mut out = vec![0; self.params.len()];
        for (slot, p) in out.iter_mut().zip(&self.params).rev() {
            let n = p.len() as u64;
            *slot = (index % n) as usize;
            index /= n;
        }
        HpVector(out)
    }

    fn guard(&self) -> Result<()> {
        if self.cardinality > ENUMERATION_GUARD {
            Err(Error::CardinalityGuard {
                cardinality: self.cardinality,
                guard: ENUMERATION_GUARD,
            })
        } else {
            Ok(())
        }
    }

    /// Every grid point exactly once, last parameter fastest.
    pub fn enumerate(&self) -> Result<Vec<HpVector>> {
        self.guard()?;
        Ok((0..self.cardinality).map(|i| self.point_at(i)).collect())
    }

    /// `n` distinct points not in `exclude`, reproducible for a given RNG state.
    pub fn sample_distinct<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        exclude: &HashSet<HpVector>,
    ) -> Result<Vec<HpVector>> {
        let excluded = exclude.iter().filter(|hp| self.contains(hp)).count() as u64;
        let available = self.cardinality - excluded;
        if n as u64 > available {
            return Err(Error::InsufficientPoints {
                requested: n as u64,
                available,
            });
        }
        if self.cardinality <= ENUMERATION_GUARD {
            let remaining: Vec<u64> = (0..self.cardinality)
                .filter(|&i| exclude.is_empty() || !exclude.contains(&self.point_at(i)))
                .collect();
            Ok(index::sample(rng, remaining.len(), n)
                .into_iter()
                .map(|i| self.point_at(remaining[i]))
                .collect())
        } else {
            let mut chosen = HashSet::with_capacity(n);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let hp = self.point_at(rng.random_range(0..self.cardinality));
                if !exclude.contains(&hp) && chosen.insert(hp.clone()) {
                    out.push(hp);
                }
            }
            Ok(out)
        }
    }

    /// One coordinate in [0, 1] per parameter.
    pub fn to_numeric(&self, hp: &HpVector) -> Vec<f64> {
        debug_assert!(self.contains(hp));
        hp.0.iter()
            .zip(&self.params)
            .map(|(&i, p)| p.encode(i))
            .collect()
    }

    /// `name=value` pairs, for error messages and logs.
    pub fn describe(&self, hp: &HpVector) -> String {
        self.params
            .iter()
            .zip(&hp.0)
            .map(|(p, &i)| format!("{}={}", p.name, p.values[i]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn assignments(&self, hp: &HpVector) -> HashMap<&str, &ParamValue> {
        self.params
            .iter()
            .zip(&hp.0)
            .map(|(p, &i)| (p.name.as_str(), &p.values[i]))
            .collect()
    }
}
