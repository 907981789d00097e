//! Grid search, random search and NSGA-II over the discrete grid.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveFn;
use crate::pareto::{dominates, ObjectivePair};
use crate::run::{Ledger, RunResult, StopReason};
use crate::space::{HpVector, SearchSpace};

const RANGE_FLOOR: f64 = 1e-12;

/// Evaluates every grid point.
pub fn run_grid(space: &SearchSpace, objective: &ObjectiveFn) -> Result<RunResult> {
    let points = space.enumerate()?;
    let mut ledger = Ledger::new(objective);
    for hp in &points {
        ledger.observe(hp)?;
    }
    Ok(ledger.finish("grid", StopReason::SpaceExhausted, None))
}

/// Evaluates `budget` distinct uniformly sampled grid points.
pub fn run_random(space: &SearchSpace, objective: &ObjectiveFn, budget: usize, seed: u64) -> Result<RunResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = space.sample_distinct(&mut rng, budget, &HashSet::new())?;
    let mut ledger = Ledger::new(objective);
    for hp in &points {
        ledger.observe(hp)?;
    }
    let reason = if ledger.exhausted(space) {
        StopReason::SpaceExhausted
    } else {
        StopReason::Budget
    };
    Ok(ledger.finish("random", reason, None))
}

/// Ranked non-dominated fronts as index lists; front 0 is the non-dominated set.
///
/// Points are swept in lexicographic order and each is placed, by binary
/// search, in the first front whose most recent member does not dominate it.
/// With two objectives that member is the only candidate dominator within
/// its front, so the result equals the classic pairwise-count procedure.
pub fn fast_nondominated_sort(points: &[ObjectivePair]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .err
            .total_cmp(&points[b].err)
            .then(points[a].eng.total_cmp(&points[b].eng))
    });
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let p = &points[i];
        let (mut lo, mut hi) = (0, fronts.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let last = &points[*fronts[mid].last().expect("fronts are non-empty")];
            if dominates(last, p) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == fronts.len() {
            fronts.push(vec![i]);
        } else {
            fronts[lo].push(i);
        }
    }
    for f in &mut fronts {
        f.sort_unstable();
    }
    fronts
}

/// Crowding distance of each member of one front. Boundary points are infinite.
pub fn crowding_distance(front: &[ObjectivePair]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0; n];
    let objectives: [fn(&ObjectivePair) -> f64; 2] = [|p| p.err, |p| p.eng];
    for value in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(&front[a]).total_cmp(&value(&front[b])));
        let lo = value(&front[order[0]]);
        let hi = value(&front[order[n - 1]]);
        let range = (hi - lo).max(RANGE_FLOOR);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (value(&front[order[w + 1]]) - value(&front[order[w - 1]])) / range;
            }
        }
    }
    dist
}

/// Rank and crowding distance of every point.
fn rank_and_crowding(points: &[ObjectivePair]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in fast_nondominated_sort(points).iter().enumerate() {
        let pairs: Vec<ObjectivePair> = front.iter().map(|&i| points[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&pairs)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

fn better(rank: &[usize], crowd: &[f64], a: usize, b: usize) -> Ordering {
    rank[a]
        .cmp(&rank[b])
        .then(crowd[b].total_cmp(&crowd[a]))
}

/// Picks `n` survivors by rank, then by descending crowding distance within
/// the last admitted front. Ties keep the lower index.
pub fn environmental_selection(points: &[ObjectivePair], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in fast_nondominated_sort(points) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
        } else {
            let pairs: Vec<ObjectivePair> = front.iter().map(|&i| points[i]).collect();
            let crowd = crowding_distance(&pairs);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            chosen.extend(order.into_iter().take(n - chosen.len()).map(|k| front[k]));
        }
        if chosen.len() == n {
            break;
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga2Config {
    pub pop_size: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `1 / num_params` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_prob: Option<f64>,
    pub seed: u64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            pop_size: 10,
            max_generations: 50,
            crossover_prob: 0.9,
            mutation_prob: None,
            seed: 0,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 || !self.pop_size.is_multiple_of(2) {
            return Err(Error::Config("pop_size must be even and at least 4".into()));
        }
        if self.max_generations == 0 {
            return Err(Error::Config("max_generations must be at least 1".into()));
        }
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.crossover_prob) || !self.mutation_prob.is_none_or(prob_ok) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Nsga2Run {
    pub result: RunResult,
    pub final_population: Vec<HpVector>,
}

pub fn run_nsga2(space: &SearchSpace, objective: &ObjectiveFn, cfg: &Nsga2Config) -> Result<RunResult> {
    run_nsga2_detailed(space, objective, cfg).map(|r| r.result)
}

pub fn run_nsga2_detailed(space: &SearchSpace, objective: &ObjectiveFn, cfg: &Nsga2Config) -> Result<Nsga2Run> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let genes = space.dims();
    let mutation_prob = cfg.mutation_prob.unwrap_or(1.0 / genes as f64);
    let sizes: Vec<usize> = space.params().iter().map(|p| p.len()).collect();

    let mut ledger = Ledger::new(objective);
    let mut population = space.sample_distinct(&mut rng, cfg.pop_size, &HashSet::new())?;
    let mut fitness = Vec::with_capacity(cfg.pop_size);
    for hp in &population {
        fitness.push(ledger.observe(hp)?.objectives);
    }

    for _ in 0..cfg.max_generations {
        let (rank, crowd) = rank_and_crowding(&fitness);
        let indices: Vec<usize> = (0..population.len()).collect();
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = *indices.choose(rng).expect("population is non-empty");
            let b = *indices.choose(rng).expect("population is non-empty");
            if better(&rank, &crowd, b, a) == Ordering::Less {
                b
            } else {
                a
            }
        };

        let mut offspring = Vec::with_capacity(cfg.pop_size);
        while offspring.len() < cfg.pop_size {
            let mut c1 = population[tournament(&mut rng)].indices().to_vec();
            let mut c2 = population[tournament(&mut rng)].indices().to_vec();
            if genes > 1 && rng.random_bool(cfg.crossover_prob) {
                let cut = rng.random_range(1..genes);
                for g in cut..genes {
                    std::mem::swap(&mut c1[g], &mut c2[g]);
                }
            }
            for child in [&mut c1, &mut c2] {
                for (g, gene) in child.iter_mut().enumerate() {
                    if mutation_prob > 0.0 && rng.random_bool(mutation_prob) {
                        *gene = rng.random_range(0..sizes[g]);
                    }
                }
            }
            offspring.push(HpVector::new(c1));
            offspring.push(HpVector::new(c2));
        }

        let mut combined = population;
        let mut combined_fit = fitness;
        for hp in offspring {
            combined_fit.push(ledger.observe(&hp)?.objectives);
            combined.push(hp);
        }
        let survivors = environmental_selection(&combined_fit, cfg.pop_size);
        population = survivors.iter().map(|&i| combined[i].clone()).collect();
        fitness = survivors.iter().map(|&i| combined_fit[i]).collect();
    }

    let reason = if ledger.exhausted(space) {
        StopReason::SpaceExhausted
    } else {
        StopReason::Budget
    };
    Ok(Nsga2Run {
        result: ledger.finish("nsga2", reason, None),
        final_population: population,
    })
}
