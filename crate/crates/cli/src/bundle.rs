//! On-disk layout of a case bundle:
//!
//! ```text
//! space.toml  template.toml  table.csv  expected.json
//! manifests/{pabo,random,nsga2,grid}.toml
//! ```
//!
//! Manifests point at `../space.toml` and `table:../table.csv`, so a bundle
//! can be moved as a directory.

use std::fs;
use std::path::{Path, PathBuf};

use pabo_core::{hypervolume_2d, CaseStudyBundle, ExpectedMetrics};

use crate::error::{CliError, ErrorKind};
use crate::manifest::{load_space, read, ObjectiveSpec, RunManifest};
use crate::output::write_files;

pub const MANIFEST_DIR: &str = "manifests";
pub const EXPECTED_FILE: &str = "expected.json";

pub fn bundle_manifests(bundle: &CaseStudyBundle) -> Vec<(String, RunManifest)> {
    bundle
        .algorithms
        .iter()
        .map(|algo| {
            let m = RunManifest::new(
                PathBuf::from("../space.toml"),
                ObjectiveSpec::Table(PathBuf::from("../table.csv")),
                algo.clone(),
            );
            (format!("{}.toml", algo.name()), m)
        })
        .collect()
}

pub fn write_bundle(bundle: &CaseStudyBundle, dir: &Path) -> Result<(), CliError> {
    let space = bundle.space.to_toml();
    let template = format!(
        "# Energy comes from the crossbar model; err is a synthetic surrogate,\n# not measured accuracy.\n{}",
        bundle.spec.to_toml()
    );
    let mut expected = serde_json::to_string_pretty(&bundle.expected).expect("metrics serialize");
    expected.push('\n');
    write_files(
        dir,
        &[
            ("space.toml", &space),
            ("template.toml", &template),
            ("table.csv", &bundle.table),
            (EXPECTED_FILE, &expected),
        ],
    )?;
    let manifests: Vec<(String, String)> = bundle_manifests(bundle)
        .into_iter()
        .map(|(name, m)| (name, m.to_toml()))
        .collect();
    let refs: Vec<(&str, &str)> = manifests.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    write_files(&dir.join(MANIFEST_DIR), &refs)
}

/// Outcome of rerunning one bundle manifest.
#[derive(Debug, Clone)]
pub struct BundleCheck {
    pub manifest: PathBuf,
    pub algorithm: String,
    pub evals_used: usize,
    pub hypervolume_ratio: f64,
    pub verdict: Result<(), String>,
}

/// Reruns every manifest of the bundle in `dir` against `expected.json`.
pub fn check_bundle(dir: &Path) -> Result<Vec<BundleCheck>, CliError> {
    let expected_path = dir.join(EXPECTED_FILE);
    let expected: ExpectedMetrics = serde_json::from_str(&read(&expected_path)?)
        .map_err(|e| CliError::in_file(ErrorKind::Config, &expected_path, Some(e.line() as u64), e.to_string()))?;
    let manifest_dir = dir.join(MANIFEST_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&manifest_dir)
        .map_err(|e| CliError::io(&manifest_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();

    let mut checks = Vec::with_capacity(paths.len());
    for path in paths {
        let m = RunManifest::load(&path)?;
        let space = load_space(&m.space)?;
        if space.cardinality() != expected.cardinality {
            return Err(CliError::new(
                ErrorKind::Mismatch,
                format!("space has {} points, expected {}", space.cardinality(), expected.cardinality),
            ));
        }
        let objective = m.objective.load(&space)?;
        let result = m
            .algorithm
            .run(&space, &objective)
            .map_err(|e| CliError::new(ErrorKind::Run, e.to_string()))?;
        let hv = hypervolume_2d(&result.front_pairs(), &expected.reference)
            .map_err(|e| CliError::new(ErrorKind::Mismatch, e.to_string()))?;
        let ratio = hv / expected.grid_hypervolume;
        let algorithm = m.algorithm.name().to_string();
        checks.push(BundleCheck {
            verdict: expected.check_run(&algorithm, result.evals_used, ratio),
            manifest: path,
            algorithm,
            evals_used: result.evals_used,
            hypervolume_ratio: ratio,
        });
    }
    Ok(checks)
}
