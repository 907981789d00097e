//! The `run`, `compare`, `validate` and `gen-case` commands.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use pabo_core::{
    hypervolume_2d, reference_point, AlgorithmConfig, CaseStudy, CaseStudyBundle, ObjectiveFn, ObjectivePair,
    RunResult, SearchSpace, StopReason,
};
use serde::Serialize;

use crate::bundle::write_bundle;
use crate::error::{CliError, ErrorKind};
use crate::manifest::{load_space, ObjectiveSpec, RunManifest};
use crate::output::{
    front_csv, history_jsonl, summary_json, write_files, Summary, FRONT_FILE, HISTORY_FILE, SUMMARY_FILE,
};

pub const COMPARE_FILE: &str = "compare.csv";
pub const POINTS_FILE: &str = "points.csv";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: RunResult,
    pub hypervolume: f64,
    pub reference: ObjectivePair,
    pub out: PathBuf,
}

fn run_algorithm(m: &RunManifest, space: &SearchSpace, objective: &ObjectiveFn) -> Result<RunResult, CliError> {
    m.algorithm
        .run(space, objective)
        .map_err(|e| CliError::new(ErrorKind::Run, format!("{}: {e}", m.label())))
}

fn hypervolume(result: &RunResult, reference: &ObjectivePair) -> Result<f64, CliError> {
    hypervolume_2d(&result.front_pairs(), reference).map_err(|e| {
        CliError::new(
            ErrorKind::Config,
            format!("reference point does not bound the front: {e}"),
        )
    })
}

/// Runs one manifest and writes its three output files. Inputs are checked
/// and the run completes before anything is written.
pub fn cmd_run(m: &RunManifest) -> Result<RunReport, CliError> {
    let out = m
        .out
        .clone()
        .ok_or_else(|| CliError::new(ErrorKind::Usage, "no output directory (--out or `out` in the manifest)"))?;
    let space = load_space(&m.space)?;
    let objective = m.objective.load(&space)?;
    let started = Utc::now();
    let result = run_algorithm(m, &space, &objective)?;
    let reference = match m.reference {
        Some([err, eng]) => ObjectivePair::new(err, eng),
        None => reference_point(result.history_pairs().iter()).unwrap_or(ObjectivePair::new(0.0, 0.0)),
    };
    let hv = hypervolume(&result, &reference)?;
    let history = history_jsonl(&space, &result, started);
    let front = front_csv(&space, &result);
    let summary = summary_json(&Summary {
        manifest: m,
        result: &result,
        hypervolume: hv,
        reference,
        reference_source: if m.reference.is_some() { "declared" } else { "history-max-x1.01" },
        started,
    });
    write_files(
        &out,
        &[(HISTORY_FILE, &history), (FRONT_FILE, &front), (SUMMARY_FILE, &summary)],
    )?;
    Ok(RunReport {
        result,
        hypervolume: hv,
        reference,
        out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub algorithm: String,
    pub seed: Option<u64>,
    pub evals_used: usize,
    pub stop_reason: StopReason,
    pub front_size: usize,
    pub hypervolume: f64,
    /// Present only when a grid run is part of the comparison.
    pub hypervolume_ratio: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub results: Vec<RunResult>,
    pub reference: ObjectivePair,
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn same_objective(a: &ObjectiveSpec, b: &ObjectiveSpec) -> bool {
    match (a, b) {
        (ObjectiveSpec::Table(x), ObjectiveSpec::Table(y)) | (ObjectiveSpec::Template(x), ObjectiveSpec::Template(y)) => {
            same_file(x, y)
        }
        (ObjectiveSpec::Synthetic(x), ObjectiveSpec::Synthetic(y)) => x == y,
        _ => false,
    }
}

fn unique_labels(manifests: &[RunManifest]) -> Vec<String> {
    let mut seen = HashSet::new();
    manifests
        .iter()
        .map(|m| {
            let base = m.label();
            let mut label = base.clone();
            let mut k = 2;
            while !seen.insert(label.clone()) {
                label = format!("{base}-{k}");
                k += 1;
            }
            label
        })
        .collect()
}

/// Runs every manifest on one shared space and objective. Writes
/// `compare.csv`, `points.csv` and each run's files under `runs/<label>/`.
/// Hypervolumes use one reference: 1.01 × the componentwise maximum over
/// all evaluations of all runs.
pub fn cmd_compare(manifests: &[RunManifest], out: &Path) -> Result<CompareReport, CliError> {
    let first = manifests
        .first()
        .ok_or_else(|| CliError::new(ErrorKind::Usage, "compare needs at least one manifest"))?;
    let space = load_space(&first.space)?;
    for m in &manifests[1..] {
        if !same_file(&m.space, &first.space) && load_space(&m.space)? != space {
            return Err(CliError::new(
                ErrorKind::Mismatch,
                format!("{} and {} define different spaces", m.space.display(), first.space.display()),
            ));
        }
        if !same_objective(&m.objective, &first.objective) {
            return Err(CliError::new(
                ErrorKind::Mismatch,
                format!("objectives differ: {} vs {}", m.objective, first.objective),
            ));
        }
    }
    let objective = first.objective.load(&space)?;
    let labels = unique_labels(manifests);

    let mut results = Vec::with_capacity(manifests.len());
    let mut starts = Vec::with_capacity(manifests.len());
    for m in manifests {
        starts.push(Utc::now());
        results.push(run_algorithm(m, &space, &objective)?);
    }
    let reference = reference_point(results.iter().flat_map(|r| r.history.iter().map(|o| &o.objectives)))
        .unwrap_or(ObjectivePair::new(0.0, 0.0));
    let mut hvs = Vec::with_capacity(results.len());
    for r in &results {
        hvs.push(hypervolume(r, &reference)?);
    }
    let truth = manifests
        .iter()
        .position(|m| m.algorithm == AlgorithmConfig::Grid)
        .map(|i| hvs[i]);

    let rows: Vec<CompareRow> = manifests
        .iter()
        .zip(&results)
        .zip(&hvs)
        .zip(&labels)
        .map(|(((m, r), &hv), label)| CompareRow {
            label: label.clone(),
            algorithm: r.algorithm.clone(),
            seed: m.algorithm.seed(),
            evals_used: r.evals_used,
            stop_reason: r.stop_reason,
            front_size: r.front.len(),
            hypervolume: hv,
            hypervolume_ratio: truth.map(|t| if t > 0.0 { hv / t } else { 1.0 }),
            wall_time: r.wall_time,
        })
        .collect();

    let compare = compare_csv(&rows, &reference);
    let points = points_csv(&labels, &results);
    let mut per_run = Vec::with_capacity(results.len());
    for (((m, r), (&hv, label)), &started) in manifests.iter().zip(&results).zip(hvs.iter().zip(&labels)).zip(&starts) {
        let summary = summary_json(&Summary {
            manifest: m,
            result: r,
            hypervolume: hv,
            reference,
            reference_source: "shared-max-x1.01",
            started,
        });
        per_run.push((
            out.join("runs").join(label),
            history_jsonl(&space, r, started),
            front_csv(&space, r),
            summary,
        ));
    }
    write_files(out, &[(COMPARE_FILE, &compare), (POINTS_FILE, &points)])?;
    for (dir, history, front, summary) in &per_run {
        write_files(dir, &[(HISTORY_FILE, history), (FRONT_FILE, front), (SUMMARY_FILE, summary)])?;
    }
    Ok(CompareReport {
        rows,
        results,
        reference,
    })
}

fn csv_string(records: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}

fn compare_csv(rows: &[CompareRow], reference: &ObjectivePair) -> String {
    let with_ratio = rows.iter().any(|r| r.hypervolume_ratio.is_some());
    let mut header: Vec<String> = [
        "label", "algorithm", "seed", "evals_used", "stop_reason", "front_size", "hypervolume",
    ]
    .map(String::from)
    .to_vec();
    if with_ratio {
        header.push("hypervolume_ratio".into());
    }
    header.extend(["reference_err", "reference_eng", "wall_time"].map(String::from));
    let mut records = vec![header];
    for r in rows {
        let mut rec = vec![
            r.label.clone(),
            r.algorithm.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.evals_used.to_string(),
            r.stop_reason.to_string(),
            r.front_size.to_string(),
            r.hypervolume.to_string(),
        ];
        if with_ratio {
            rec.push(r.hypervolume_ratio.map(|x| x.to_string()).unwrap_or_default());
        }
        rec.extend([reference.err.to_string(), reference.eng.to_string(), r.wall_time.to_string()]);
        records.push(rec);
    }
    csv_string(records)
}

fn points_csv(labels: &[String], results: &[RunResult]) -> String {
    let mut records = vec![["label", "eval_index", "err", "eng", "on_front"].map(String::from).to_vec()];
    for (label, r) in labels.iter().zip(results) {
        let front: HashSet<usize> = r.front.members().iter().map(|m| m.eval_index).collect();
        for o in &r.history {
            records.push(vec![
                label.clone(),
                o.eval_index.to_string(),
                o.objectives.err.to_string(),
                o.objectives.eng.to_string(),
                front.contains(&o.eval_index).to_string(),
            ]);
        }
    }
    csv_string(records)
}

/// Parses and cross-checks a space and an optional objective; returns the
/// space cardinality. A template objective is evaluated at every grid point.
pub fn cmd_validate(space_path: &Path, objective: Option<&ObjectiveSpec>) -> Result<u64, CliError> {
    let space = load_space(space_path)?;
    if let Some(spec) = objective {
        let f = spec.load(&space)?;
        if let ObjectiveSpec::Template(path) = spec {
            let points = space
                .enumerate()
                .map_err(|e| CliError::new(ErrorKind::Space, e.to_string()))?;
            for hp in points {
                f.evaluate(&hp).map_err(|e| {
                    CliError::in_file(
                        ErrorKind::Objective,
                        path,
                        None,
                        format!("at {}: {e}", space.describe(&hp)),
                    )
                })?;
            }
        }
    }
    Ok(space.cardinality())
}

/// Generates a case bundle and writes it under `out`.
pub fn cmd_gen_case(case: &str, seed: u64, out: &Path) -> Result<CaseStudyBundle, CliError> {
    let case = CaseStudy::parse(case).map_err(|e| CliError::new(ErrorKind::Usage, e.to_string()))?;
    let bundle =
        pabo_core::generate_case_bundle(case, seed).map_err(|e| CliError::new(ErrorKind::Run, e.to_string()))?;
    write_bundle(&bundle, out)?;
    Ok(bundle)
}
