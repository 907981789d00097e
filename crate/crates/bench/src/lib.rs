//! Fixtures shared by the benchmarks.

use pabo_core::{CaseStudy, HpVector, ObjectivePair, SearchSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points scattered around a convex front, so a useful share is non-dominated.
pub fn random_pairs(n: usize, seed: u64) -> Vec<ObjectivePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e: f64 = rng.random();
            ObjectivePair::new(e, 1.0 - e.sqrt() + 0.2 * rng.random::<f64>())
        })
        .collect()
}

pub struct TrainingSet {
    pub space: SearchSpace,
    pub points: Vec<HpVector>,
    pub inputs: Vec<Vec<f64>>,
    pub errs: Vec<f64>,
}

/// `n` evenly strided grid points of a case study, as encoded inputs, with
/// the case's err values.
pub fn case_training_set(case: CaseStudy, n: usize) -> TrainingSet {
    let space = case.space();
    let objective = case.objective(0);
    let stride = space.cardinality() / n as u64;
    let points: Vec<HpVector> = (0..n as u64).map(|i| space.point_at(i * stride)).collect();
    let inputs = points.iter().map(|hp| space.to_numeric(hp)).collect();
    let errs = points.iter().map(|hp| objective.evaluate(hp).unwrap().err).collect();
    TrainingSet { space, points, inputs, errs }
}
