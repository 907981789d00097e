//! Dominance, non-dominated filtering, the Pareto archive and 2-D hypervolume.
//!
//! Both objectives are minimized. Only two objectives are supported.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::HpVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    /// Classification error fraction.
    pub err: f64,
    /// Energy in joules.
    pub eng: f64,
}

impl ObjectivePair {
    pub fn new(err: f64, eng: f64) -> Self {
        ObjectivePair { err, eng }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.err.is_finite() || !self.eng.is_finite() || self.err < 0.0 || self.eng < 0.0 {
            return Err(Error::InvalidObjective(format!(
                "err={}, eng={} (both must be finite and non-negative)",
                self.err, self.eng
            )));
        }
        Ok(())
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then(self.eng.total_cmp(&other.eng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub hp: HpVector,
    pub objectives: ObjectivePair,
    pub eval_index: usize,
}

impl AsRef<ObjectivePair> for ObjectivePair {
    fn as_ref(&self) -> &ObjectivePair {
        self
    }
}

impl AsRef<ObjectivePair> for Observation {
    fn as_ref(&self) -> &ObjectivePair {
        &self.objectives
    }
}

/// Strict Pareto dominance: no worse in both objectives, better in at least one.
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    a.err <= b.err && a.eng <= b.eng && (a.err < b.err || a.eng < b.eng)
}

/// Positions of the points not dominated by any other point, in input order.
pub fn non_dominated_indices<T: AsRef<ObjectivePair>>(points: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].as_ref().lex_cmp(points[b].as_ref()));

    let mut keep = vec![false; points.len()];
    // smallest eng among points with strictly smaller err
    let mut best_prev = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let err = points[order[i]].as_ref().err;
        let group_min = points[order[i]].as_ref().eng;
        let mut j = i;
        while j < order.len() && points[order[j]].as_ref().err == err {
            let p = points[order[j]].as_ref();
            keep[order[j]] = p.eng == group_min && group_min < best_prev;
            j += 1;
        }
        best_prev = best_prev.min(group_min);
        i = j;
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

/// The subset not dominated by any input point; equal pairs are all kept.
pub fn non_dominated_filter<T: AsRef<ObjectivePair> + Clone>(points: &[T]) -> Vec<T> {
    non_dominated_indices(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

/// Mutually non-dominated observations, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    members: Vec<Observation>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(observations: &[Observation]) -> Self {
        ParetoArchive {
            members: non_dominated_filter(observations),
        }
    }

    pub fn members(&self) -> &[Observation] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_dominated(&self, pair: &ObjectivePair) -> bool {
        self.members.iter().any(|m| dominates(&m.objectives, pair))
    }

    /// Inserts `obs` unless a member dominates it; evicts members it dominates.
    pub fn insert(&mut self, obs: Observation) -> (bool, Vec<Observation>) {
        if self.is_dominated(&obs.objectives) {
            return (false, Vec::new());
        }
        let (evicted, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.members)
            .into_iter()
            .partition(|m| dominates(&obs.objectives, &m.objectives));
        self.members = kept;
        self.members.push(obs);
        (true, evicted)
    }

    pub fn pairs(&self) -> Vec<ObjectivePair> {
        self.members.iter().map(|m| m.objectives).collect()
    }
}

/// Area dominated by `front` inside the box bounded above by `reference`.
pub fn hypervolume_2d(front: &[ObjectivePair], reference: &ObjectivePair) -> Result<f64> {
    for p in front {
        if !(p.err <= reference.err && p.eng <= reference.eng) {
            return Err(Error::OutsideReference {
                err: p.err,
                eng: p.eng,
                ref_err: reference.err,
                ref_eng: reference.eng,
            });
        }
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    let mut area = 0.0;
    let mut ceiling = reference.eng;
    for p in pts {
        if p.eng < ceiling {
            area += (reference.err - p.err) * (ceiling - p.eng);
            ceiling = p.eng;
        }
    }
    Ok(area)
}

/// Componentwise maximum over `points`, scaled by 1.01.
pub fn reference_point<'a, I>(points: I) -> Option<ObjectivePair>
where
    I: IntoIterator<Item = &'a ObjectivePair>,
{
    points
        .into_iter()
        .fold(None, |acc: Option<ObjectivePair>, p| {
            Some(match acc {
                None => *p,
                Some(a) => ObjectivePair::new(a.err.max(p.err), a.eng.max(p.eng)),
            })
        })
        .map(|m| ObjectivePair::new(m.err * 1.01, m.eng * 1.01))
}
