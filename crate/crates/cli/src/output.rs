//! Run output files: `history.jsonl`, `front.csv`, `summary.json`.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use pabo_core::space::format_number;
use pabo_core::{Observation, ObjectivePair, ParamValue, RunResult, SearchSpace};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::manifest::RunManifest;

pub const HISTORY_FILE: &str = "history.jsonl";
pub const FRONT_FILE: &str = "front.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn value_json(v: &ParamValue) -> Value {
    match v {
        // integral values print without a fraction, like the space file
        ParamValue::Number(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => json!(*x as i64),
        ParamValue::Number(x) => json!(x),
        ParamValue::Label(s) => json!(s),
    }
}

/// Hyperparameter assignments by name, in declaration order.
pub fn assignments_json(space: &SearchSpace, obs: &Observation) -> Value {
    let mut map = Map::new();
    for (i, p) in space.params().iter().enumerate() {
        map.insert(p.name().to_string(), value_json(space.value(&obs.hp, i)));
    }
    Value::Object(map)
}

/// One JSON object per evaluation. Timestamps are the run start plus the
/// offset at which each point was evaluated.
pub fn history_jsonl(space: &SearchSpace, result: &RunResult, started: DateTime<Utc>) -> String {
    let mut out = String::new();
    for (obs, &offset) in result.history.iter().zip(&result.eval_times) {
        let at = started + Duration::nanoseconds((offset * 1e9) as i64);
        let record = json!({
            "eval_index": obs.eval_index,
            "hp": assignments_json(space, obs),
            "err": obs.objectives.err,
            "eng": obs.objectives.eng,
            "timestamp": at.to_rfc3339_opts(SecondsFormat::Micros, true),
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Drops the `timestamp` field from every history line, for comparisons.
pub fn mask_timestamps(history: &str) -> String {
    let mut out = String::new();
    for line in history.lines() {
        let mut v: Value = serde_json::from_str(line).expect("history line is JSON");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timestamp");
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Front members sorted by error, one row each.
pub fn front_csv(space: &SearchSpace, result: &RunResult) -> String {
    let mut members: Vec<&Observation> = result.front.members().iter().collect();
    members.sort_by(|a, b| {
        a.objectives
            .err
            .total_cmp(&b.objectives.err)
            .then(a.objectives.eng.total_cmp(&b.objectives.eng))
            .then(a.eval_index.cmp(&b.eval_index))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["eval_index".to_string()];
    header.extend(space.params().iter().map(|p| p.name().to_string()));
    header.extend(["err".to_string(), "eng".to_string()]);
    w.write_record(&header).expect("in-memory write");
    for m in members {
        let mut row = vec![m.eval_index.to_string()];
        row.extend((0..space.dims()).map(|i| space.value(&m.hp, i).canonical()));
        row.push(format_number(m.objectives.err));
        row.push(format_number(m.objectives.eng));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}

pub struct Summary<'a> {
    pub manifest: &'a RunManifest,
    pub result: &'a RunResult,
    pub hypervolume: f64,
    pub reference: ObjectivePair,
    pub reference_source: &'a str,
    pub started: DateTime<Utc>,
}

pub fn summary_json(s: &Summary<'_>) -> String {
    let v = json!({
        "algorithm": s.result.algorithm,
        "label": s.manifest.label(),
        "evals_used": s.result.evals_used,
        "stop_reason": s.result.stop_reason,
        "failure": s.result.failure,
        "front_size": s.result.front.len(),
        "hypervolume": s.hypervolume,
        "reference": s.reference,
        "reference_source": s.reference_source,
        "started": s.started.to_rfc3339_opts(SecondsFormat::Micros, true),
        "wall_time": s.result.wall_time,
        "config": s.manifest,
    });
    let mut text = serde_json::to_string_pretty(&v).expect("summary serializes");
    text.push('\n');
    text
}

/// Writes every file or none: a failed write removes the files already written.
pub fn write_files(dir: &Path, files: &[(&str, &str)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(CliError::io(&path, e));
        }
        written.push(path);
    }
    Ok(())
}
