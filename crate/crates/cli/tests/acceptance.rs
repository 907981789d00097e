//! Acceptance suite: one PASS/FAIL line per criterion, with its measured
//! values, pinned thresholds and runtime.
//!
//! Exactness criteria (1, 2, 3, 8 and the replay half of 7) fail the process.
//! Statistical criteria (4, 5, 6 and the ablation half of 7) are reported and
//! only fail the process when `PABO_ACCEPTANCE_STRICT=1` is set.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pabo_cli::output::mask_timestamps;
use pabo_core::baselines::{fast_nondominated_sort, run_nsga2, Nsga2Config};
use pabo_core::energy::{layer_crossbars, total_energy, HardwareConfig, LayerSpec, DEFAULT_EPX};
use pabo_core::gp::{GpModel, KernelConfig, KernelFamily, LengthScale};
use pabo_core::pabo::{run_pabo_traced, PaboRun};
use pabo_core::pareto::non_dominated_indices;
use pabo_core::{
    dominates, hypervolume_2d, reference_point, run_grid, CaseStudy, HpVector, ObjectiveFn, ObjectivePair,
    Observation, PaboConfig, ParetoArchive, SearchSpace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 0..10;

struct Outcome {
    pass: bool,
    /// Exactness failures always fail the process.
    hard: bool,
    detail: String,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// A case objective with its grid truth.
struct Truth {
    space: SearchSpace,
    objective: ObjectiveFn,
    reference: ObjectivePair,
    hypervolume: f64,
}

impl Truth {
    fn new(case: CaseStudy) -> Truth {
        let space = case.space();
        let objective = case.objective(0);
        let grid = run_grid(&space, &objective).unwrap();
        let reference = reference_point(grid.history_pairs().iter()).unwrap();
        let hypervolume = hypervolume_2d(&grid.front_pairs(), &reference).unwrap();
        Truth {
            space,
            objective,
            reference,
            hypervolume,
        }
    }

    fn ratio(&self, front: &[ObjectivePair]) -> f64 {
        hypervolume_2d(front, &self.reference).unwrap() / self.hypervolume
    }

    fn pabo(&self, seed: u64, supervisor: bool) -> PaboRun {
        let cfg = PaboConfig {
            seed,
            supervisor,
            ..PaboConfig::default()
        };
        run_pabo_traced(&self.space, &self.objective, &cfg).unwrap()
    }
}

// ---- 1: energy model -------------------------------------------------------

fn tile_walk(rows: u64, cols: u64, xs: u64) -> u64 {
    let mut count = 0;
    let mut r = 0;
    while r < rows {
        let mut c = 0;
        while c < cols {
            count += 1;
            c += xs;
        }
        r += xs;
    }
    count
}

fn tiling_oracle(layer: &LayerSpec, xs: u64) -> u64 {
    match *layer {
        LayerSpec::Conv { d, nc_in, k, nc_out } => {
            // the unrolled kernel matrix is mapped once per output position
            let per_position = tile_walk(nc_in * k * k, nc_out, xs);
            (0..d * d).map(|_| per_position).sum()
        }
        LayerSpec::Fc { nf_in, nf_out } => tile_walk(nf_in, nf_out, xs),
    }
}

fn criterion_energy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for i in 0..1000 {
        let layer = if i % 2 == 0 {
            LayerSpec::conv(
                rng.random_range(1..=1024),
                rng.random_range(1..=1024),
                rng.random_range(1..=11),
                rng.random_range(1..=1024),
            )
        } else {
            LayerSpec::fc(rng.random_range(1..=1024), rng.random_range(1..=1024))
        };
        let xs = [32, 64, 128, 256][rng.random_range(0..4)];
        let hw = HardwareConfig { xs, epx: DEFAULT_EPX };
        let count = layer_crossbars(&layer, &hw);
        if count != tiling_oracle(&layer, xs) || total_energy(&[layer], &hw) != count as f64 * DEFAULT_EPX {
            mismatches += 1;
        }
    }
    let e = total_energy(&[LayerSpec::fc(128, 128)], &HardwareConfig::default());
    Outcome {
        pass: mismatches == 0 && e == 44e-9,
        hard: true,
        detail: format!("1000 layers, {mismatches} mismatches (tolerance 0); fc 128->128 = {e:e} J (need 4.4e-8)"),
    }
}

// ---- 2: GP posterior -------------------------------------------------------

fn kernel_value(k: &KernelConfig, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(d, (x, y))| {
            let l = match &k.length_scale {
                LengthScale::Shared(l) => *l,
                LengthScale::PerDim(v) => v[d],
            };
            ((x - y) / l).powi(2)
        })
        .sum();
    match k.family {
        KernelFamily::SquaredExponential => k.signal_variance * (-0.5 * r2).exp(),
        KernelFamily::Matern52 => {
            let r = (5.0 * r2).sqrt();
            k.signal_variance * (1.0 + r + r * r / 3.0) * (-r).exp()
        }
    }
}

/// Largest scaled deviation between the model and a dense LU solve over 10
/// query points. Means are scaled by max(|value|, target std), variances by
/// max(|value|, prior variance).
fn gp_problem_error(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(1..=64);
    let dims = rng.random_range(1..=8);
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..dims).map(|_| rng.random::<f64>()).collect()).collect();
    let targets: Vec<f64> = inputs
        .iter()
        .map(|x| x.iter().map(|v| (4.0 * v).sin()).sum::<f64>() + 0.1 * rng.random::<f64>())
        .collect();
    let family = if rng.random::<bool>() {
        KernelFamily::Matern52
    } else {
        KernelFamily::SquaredExponential
    };
    let length = if rng.random::<bool>() {
        LengthScale::Shared(10f64.powf(rng.random_range(-1.3..0.3)))
    } else {
        LengthScale::PerDim((0..dims).map(|_| 10f64.powf(rng.random_range(-1.3..0.3))).collect())
    };
    let kernel = KernelConfig {
        family,
        length_scale: length,
        signal_variance: 10f64.powf(rng.random_range(-1.0..1.0)),
        noise_variance: 10f64.powf(rng.random_range(-6.0..-2.0)),
    };
    let model = GpModel::fit(inputs.clone(), &targets, kernel.clone()).unwrap();

    let mean = targets.iter().sum::<f64>() / n as f64;
    let std = (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64)
        .sqrt()
        .max(1e-12);
    let y = DVector::from_iterator(n, targets.iter().map(|t| (t - mean) / std));
    let noise = kernel.noise_variance + model.jitter();
    let km = DMatrix::from_fn(n, n, |i, j| {
        kernel_value(&kernel, &inputs[i], &inputs[j]) + if i == j { noise } else { 0.0 }
    });
    let lu = km.lu();
    let alpha = lu.solve(&y).unwrap();

    let mut worst: f64 = 0.0;
    for q in 0..10 {
        // half the queries sit on training inputs, where variance cancels hardest
        let x: Vec<f64> = if q % 2 == 0 {
            inputs[rng.random_range(0..n)].clone()
        } else {
            (0..dims).map(|_| rng.random::<f64>()).collect()
        };
        let ks = DVector::from_iterator(n, inputs.iter().map(|p| kernel_value(&kernel, p, &x)));
        let mu = mean + std * ks.dot(&alpha);
        let var = ((kernel_value(&kernel, &x, &x) - ks.dot(&lu.solve(&ks).unwrap())) * std * std).max(0.0);
        let (m, v) = model.posterior(&x).unwrap();
        worst = worst.max((m - mu).abs() / mu.abs().max(std));
        worst = worst.max((v - var).abs() / var.abs().max(kernel.signal_variance * std * std));
    }
    worst
}

fn criterion_gp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = (0..200).map(|_| gp_problem_error(&mut rng)).fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-8,
        hard: true,
        detail: format!("200 problems (n <= 64, dims <= 8), worst scaled deviation {worst:.2e} (need <= 1e-8)"),
    }
}

// ---- 3: fronts -------------------------------------------------------------

fn pairwise_front(points: &[ObjectivePair]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect()
}

fn criterion_fronts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut largest = 0;
    for set in 0..100 {
        let n = if set < 10 { 10_000 } else { rng.random_range(1..=10_000) };
        largest = largest.max(n);
        // every third set sits on a coarse integer grid to force ties
        let coarse = set % 3 == 0;
        let points: Vec<ObjectivePair> = (0..n)
            .map(|_| {
                if coarse {
                    ObjectivePair::new(rng.random_range(0..50) as f64, rng.random_range(0..50) as f64)
                } else {
                    let e: f64 = rng.random();
                    ObjectivePair::new(e, (1.0 - e.sqrt()) + 0.3 * rng.random::<f64>())
                }
            })
            .collect();
        let oracle = pairwise_front(&points);

        let mut filter = non_dominated_indices(&points);
        filter.sort_unstable();

        let mut archive = ParetoArchive::new();
        for (i, p) in points.iter().enumerate() {
            archive.insert(Observation {
                hp: HpVector::new(vec![i]),
                objectives: *p,
                eval_index: i,
            });
        }
        let mut streamed: Vec<usize> = archive.members().iter().map(|o| o.eval_index).collect();
        streamed.sort_unstable();

        let mut rank0 = fast_nondominated_sort(&points).into_iter().next().unwrap_or_default();
        rank0.sort_unstable();

        for (name, got) in [("filter", &filter), ("archive", &streamed), ("nsga2 rank 0", &rank0)] {
            if got != &oracle {
                failures.push(format!("set {set} ({n} points): {name}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        hard: true,
        detail: if failures.is_empty() {
            format!("100 sets up to {largest} points: filter, archive and NSGA-II rank 0 equal the O(n^2) oracle")
        } else {
            format!("disagreements: {}", failures.join(", "))
        },
    }
}

// ---- 4: cs1 recovery -------------------------------------------------------

fn criterion_cs1(cs1: &Truth, runs: &[PaboRun]) -> Outcome {
    let ratios: Vec<f64> = runs.iter().map(|r| cs1.ratio(&r.result.front_pairs())).collect();
    let hits = ratios.iter().filter(|&&r| r >= 0.98).count();
    let max_evals = runs.iter().map(|r| r.result.evals_used).max().unwrap();
    let listed: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    Outcome {
        pass: hits >= 8 && max_evals <= 40,
        hard: false,
        detail: format!(
            "{hits}/10 seeds >= 0.98 hypervolume ratio (need >= 8), max evals {max_evals} (need <= 40); ratios [{}]",
            listed.join(" ")
        ),
    }
}

// ---- 5: evaluation-count advantage ----------------------------------------

/// Distinct evaluations NSGA-II needed before its front reached `target`.
fn evals_to_reach(truth: &Truth, history: &[Observation], target: f64) -> Option<usize> {
    let mut archive = ParetoArchive::new();
    for (i, o) in history.iter().enumerate() {
        archive.insert(o.clone());
        if truth.ratio(&archive.pairs()) >= target {
            return Some(i + 1);
        }
    }
    None
}

struct AdvantageCase {
    line: String,
    pass: bool,
}

fn advantage(name: &str, truth: &Truth, pabo: &[PaboRun], nsga: Nsga2Config) -> AdvantageCase {
    let pabo_evals: Vec<f64> = pabo.iter().map(|r| r.result.evals_used as f64).collect();
    let pabo_ratio: Vec<f64> = pabo.iter().map(|r| truth.ratio(&r.result.front_pairs())).collect();
    let mut ga_evals = Vec::new();
    let mut ga_ratio = Vec::new();
    let mut to_match = Vec::new();
    let target = median(&pabo_ratio);
    for seed in SEEDS {
        let cfg = Nsga2Config { seed, ..nsga.clone() };
        let r = run_nsga2(&truth.space, &truth.objective, &cfg).unwrap();
        ga_evals.push(r.evals_used as f64);
        ga_ratio.push(truth.ratio(&r.front_pairs()));
        to_match.push(evals_to_reach(truth, &r.history, target).map_or(f64::INFINITY, |k| k as f64));
    }
    let (pe, ge) = (median(&pabo_evals), median(&ga_evals));
    let (pr, gr) = (median(&pabo_ratio), median(&ga_ratio));
    let pass = pe <= 0.25 * ge && pr >= gr;
    AdvantageCase {
        pass,
        line: format!(
            "{name}: pabo {pe} evals / ratio {pr:.4}, nsga2({}x{}) {ge} evals / ratio {gr:.4}, eval share {:.2} (need <= 0.25 and ratio >= nsga2's); nsga2 reaches pabo's median ratio after {} evals",
            nsga.pop_size,
            nsga.max_generations,
            pe / ge,
            median(&to_match)
        ),
    }
}

fn criterion_advantage(cs1: &Truth, cs1_runs: &[PaboRun], cs2: &Truth, cs2_runs: &[PaboRun]) -> Outcome {
    let nsga = |pop_size, max_generations| Nsga2Config {
        pop_size,
        max_generations,
        ..Nsga2Config::default()
    };
    let a = advantage("cs1", cs1, cs1_runs, nsga(10, 50));
    let b = advantage("cs2", cs2, cs2_runs, nsga(20, 100));
    Outcome {
        pass: a.pass && b.pass,
        hard: false,
        detail: format!("{}; {}", a.line, b.line),
    }
}

// ---- 6: cs3 feasibility ----------------------------------------------------

fn criterion_cs3(cs3: &Truth, runs: &[PaboRun]) -> Outcome {
    let ratios: Vec<f64> = runs.iter().map(|r| cs3.ratio(&r.result.front_pairs())).collect();
    let evals: Vec<f64> = runs.iter().map(|r| r.result.evals_used as f64).collect();
    let max_evals = evals.iter().copied().fold(0.0, f64::max);
    let m = median(&ratios);
    Outcome {
        pass: max_evals <= 60.0 && m >= 0.95,
        hard: false,
        detail: format!(
            "median ratio {m:.4} (need >= 0.95), evals median {} max {max_evals} (need <= 60)",
            median(&evals)
        ),
    }
}

// ---- 7: supervisor ---------------------------------------------------------

/// Recomputes every cross-feed decision from the history alone; returns the
/// first disagreement.
fn replay(run: &PaboRun) -> Result<(), String> {
    let h = &run.result.history;
    let mut d_err: HashSet<usize> = (0..run.n_init).collect();
    let mut d_eng: HashSet<usize> = (0..run.n_init).collect();
    for it in &run.iterations {
        let upto = it.theta.max(it.gamma) + 1;
        let nondominated =
            |i: usize| !h[..upto].iter().any(|o| o.eval_index != i && dominates(&o.objectives, &h[i].objectives));
        d_err.insert(it.theta);
        if !it.gamma_dropped {
            d_eng.insert(it.gamma);
        }
        let gamma_fed = nondominated(it.gamma) && d_err.insert(it.gamma);
        let theta_fed = nondominated(it.theta) && d_eng.insert(it.theta);
        if it.feed.gamma_to_err != gamma_fed
            || it.feed.theta_to_eng != theta_fed
            || it.d_err_len != d_err.len()
            || it.d_eng_len != d_eng.len()
        {
            return Err(format!("iteration {}", it.iteration));
        }
    }
    let index = |hp: &HpVector| h.iter().position(|o| &o.hp == hp).unwrap();
    let final_err: HashSet<usize> = run.state.d_err.points().iter().map(index).collect();
    let final_eng: HashSet<usize> = run.state.d_eng.points().iter().map(index).collect();
    if final_err != d_err || final_eng != d_eng {
        return Err("final training sets".into());
    }
    Ok(())
}

fn criterion_supervisor(all_runs: &[&[PaboRun]], cs2: &Truth, cs2_runs: &[PaboRun]) -> (Outcome, bool) {
    let mut replayed = 0;
    let mut replay_errors = Vec::new();
    for runs in all_runs {
        for run in *runs {
            replayed += 1;
            if let Err(e) = replay(run) {
                replay_errors.push(e);
            }
        }
    }
    let with: Vec<f64> = cs2_runs.iter().map(|r| cs2.ratio(&r.result.front_pairs())).collect();
    let without: Vec<f64> = SEEDS
        .map(|seed| cs2.ratio(&cs2.pabo(seed, false).result.front_pairs()))
        .collect();
    let (mw, mo) = (median(&with), median(&without));
    let replay_ok = replay_errors.is_empty();
    let ablation_ok = mo < mw;
    let detail = format!(
        "replay of {replayed} runs: {}; cs2 median ratio with supervisor {mw:.4}, without {mo:.4} (need strictly lower without), budget 40 both",
        if replay_ok { "all decisions match".to_string() } else { format!("mismatch at {}", replay_errors.join(", ")) }
    );
    (
        Outcome {
            pass: replay_ok && ablation_ok,
            hard: !replay_ok,
            detail,
        },
        replay_ok,
    )
}

// ---- 8: determinism --------------------------------------------------------

fn criterion_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_pabo");
    let cases = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases/v1");
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for case in ["cs1-analogue", "cs2-analogue"] {
        for algo in ["pabo", "nsga2", "random", "grid"] {
            let manifest: PathBuf = cases.join(case).join("manifests").join(format!("{algo}.toml"));
            let mut files = Vec::new();
            for k in 0..2 {
                let out = tmp.path().join(format!("{case}-{algo}-{k}"));
                let status = Command::new(bin)
                    .args(["run", "--config"])
                    .arg(&manifest)
                    .arg("--out")
                    .arg(&out)
                    .output()
                    .unwrap()
                    .status;
                assert!(status.success(), "{case}/{algo} run failed");
                let history = fs::read_to_string(out.join("history.jsonl")).unwrap();
                files.push((mask_timestamps(&history), fs::read(out.join("front.csv")).unwrap()));
            }
            compared += 1;
            if files[0] != files[1] {
                differing.push(format!("{case}/{algo}"));
            }
        }
    }
    Outcome {
        pass: differing.is_empty(),
        hard: true,
        detail: format!(
            "{compared} manifest pairs via the CLI, {} with differing history/front bytes (timestamps masked)",
            differing.len()
        ),
    }
}

fn report(
    id: u32,
    title: &str,
    limit_s: Option<f64>,
    started: Instant,
    outcome: Outcome,
    results: &mut Vec<(u32, Outcome)>,
) {
    let elapsed = started.elapsed().as_secs_f64();
    let in_time = limit_s.is_none_or(|l| elapsed < l);
    let pass = outcome.pass && in_time;
    let limit = limit_s.map_or("no limit".to_string(), |l| format!("limit {l} s"));
    println!(
        "[{}] {id}. {title}: {}; runtime {elapsed:.1} s ({limit})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    results.push((id, Outcome { pass, ..outcome }));
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` and `--list` pass arguments; only run on a full invocation
    if std::env::args().skip(1).any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let strict = std::env::var("PABO_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut results = Vec::new();
    println!("acceptance suite");

    let t = Instant::now();
    let o = criterion_energy();
    report(1, "energy model exactness", Some(5.0), t, o, &mut results);

    let t = Instant::now();
    let o = criterion_gp();
    report(2, "GP oracle equivalence", Some(30.0), t, o, &mut results);

    let t = Instant::now();
    let o = criterion_fronts();
    report(3, "dominance and front correctness", Some(60.0), t, o, &mut results);

    let t = Instant::now();
    let cs1 = Truth::new(CaseStudy::Cs1Analogue);
    let cs1_runs: Vec<PaboRun> = SEEDS.map(|s| cs1.pabo(s, true)).collect();
    let o = criterion_cs1(&cs1, &cs1_runs);
    report(4, "cs1-analogue Pareto recovery", Some(120.0), t, o, &mut results);

    let t = Instant::now();
    let cs2 = Truth::new(CaseStudy::Cs2Analogue);
    let cs2_runs: Vec<PaboRun> = SEEDS.map(|s| cs2.pabo(s, true)).collect();
    let o = criterion_advantage(&cs1, &cs1_runs, &cs2, &cs2_runs);
    report(5, "evaluation-count advantage over NSGA-II", Some(600.0), t, o, &mut results);

    let t = Instant::now();
    let cs3 = Truth::new(CaseStudy::Cs3Analogue);
    let cs3_runs: Vec<PaboRun> = SEEDS.map(|s| cs3.pabo(s, true)).collect();
    let o = criterion_cs3(&cs3, &cs3_runs);
    report(6, "cs3-analogue feasibility", Some(300.0), t, o, &mut results);

    let t = Instant::now();
    let (o, _) = criterion_supervisor(&[&cs1_runs, &cs2_runs, &cs3_runs], &cs2, &cs2_runs);
    report(7, "supervisor replay and ablation", None, t, o, &mut results);

    let t = Instant::now();
    let o = criterion_determinism();
    report(8, "determinism", Some(60.0), t, o, &mut results);

    let passed = results.iter().filter(|(_, o)| o.pass).count();
    let failed: Vec<String> = results.iter().filter(|(_, o)| !o.pass).map(|(id, _)| id.to_string()).collect();
    println!(
        "acceptance: {passed}/{} criteria pass{}",
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    let hard_failure = results.iter().any(|(_, o)| !o.pass && o.hard);
    if hard_failure || (strict && !failed.is_empty()) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
