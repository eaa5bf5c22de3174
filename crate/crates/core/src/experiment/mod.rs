//! Config-driven experiment runner: one TOML file describes one run or a
//! sweep; artifacts land in an output directory with a hashed manifest.

mod config;
mod manifest;
mod scenarios;

pub use config::{
    AlphaConfig, AuditConfig, ClassifyConfig, CoeffEntry, ExperimentConfig, InitialData, OdeRateConfig, PdeConfig,
    PhiSeriesConfig, ProfileChoice, ProfileConfig, Scenario, SweepConfig, WRunConfig,
};
pub use manifest::{hash_file, Manifest, ManifestEntry, FAILED_MARKER, MANIFEST_NAME};
pub use scenarios::{profile_spec, run_scenario, Summary};

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub manifest: Manifest,
}

/// Validates, runs and writes `config.toml`, artifacts, `summary.json` and
/// the manifest into `out`. On a runtime failure the partial artifacts stay,
/// a FAILED marker is added and the error is returned.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let params = config.validate()?;
    fs::create_dir_all(out)?;
    let _ = fs::remove_file(out.join(FAILED_MARKER));
    fs::write(out.join("config.toml"), config.to_toml()?)?;
    let result = match config.scenario {
        Scenario::Sweep => sweep(config, out),
        _ => run_scenario(config, &params, out),
    };
    match result {
        Ok(summary) => {
            let manifest = Manifest::collect(out, "ok", None)?;
            manifest.write(out)?;
            Ok(RunOutcome { summary, manifest })
        }
        Err(e) => {
            fs::write(out.join(FAILED_MARKER), format!("{e}\n"))?;
            let manifest = Manifest::collect(out, "failed", Some(e.to_string()))?;
            manifest.write(out)?;
            Err(e)
        }
    }
}

fn cell_value(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), crate::csv::num),
        Value::String(s) => s.clone(),
        Value::Bool(b) => (*b as u8).to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn axis_value(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => crate::csv::num(*f),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every cell concurrently (bounded by `sweep.workers`) into
/// `out/cell_NNN`, isolating failures, and writes `sweep_summary.csv`.
pub fn sweep(config: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let cells = config.sweep_cells()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.sweep.workers > 0 {
        builder = builder.num_threads(config.sweep.workers);
    }
    let pool = builder.build().map_err(|e| Error::Unsupported(e.to_string()))?;
    let results: Vec<std::result::Result<Summary, String>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, cell)| {
                let dir = out.join(format!("cell_{i:03}"));
                let res = fs::create_dir_all(&dir)
                    .map_err(Error::from)
                    .and_then(|_| cell.validate())
                    .and_then(|p| run_scenario(cell, &p, &dir));
                res.map_err(|e| {
                    let _ = fs::write(dir.join(FAILED_MARKER), format!("{e}\n"));
                    e.to_string()
                })
            })
            .collect()
    });
    let axes: Vec<&String> = config.sweep.axes.keys().collect();
    let mut keys: Vec<String> = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .flat_map(|s| s.keys().cloned())
        .filter(|k| k != "scenario")
        .collect();
    keys.sort();
    keys.dedup();
    let mut body = String::from("cell");
    for a in &axes {
        body.push(',');
        body.push_str(a);
    }
    body.push_str(",status");
    for k in &keys {
        body.push(',');
        body.push_str(k);
    }
    body.push('\n');
    let mut failed = 0usize;
    for (i, r) in results.iter().enumerate() {
        body.push_str(&i.to_string());
        for a in &axes {
            let vals = &config.sweep.axes[*a];
            let pick = pick_index(&config.sweep.axes, a, i);
            body.push(',');
            body.push_str(&axis_value(&vals[pick]));
        }
        match r {
            Ok(s) => {
                body.push_str(",ok");
                for k in &keys {
                    body.push(',');
                    body.push_str(&s.get(k).map(cell_value).unwrap_or_default());
                }
            }
            Err(_) => {
                failed += 1;
                body.push_str(",failed");
                for _ in &keys {
                    body.push(',');
                }
            }
        }
        body.push('\n');
    }
    fs::write(out.join("sweep_summary.csv"), body)?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("sweep"));
    summary.insert("cells".into(), json!(results.len()));
    summary.insert("failed".into(), json!(failed));
    fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))? + "\n",
    )?;
    Ok(summary)
}

fn pick_index(axes: &std::collections::BTreeMap<String, Vec<toml::Value>>, name: &str, mut idx: usize) -> usize {
    let list: Vec<(&String, usize)> = axes.iter().map(|(k, v)| (k, v.len())).collect();
    let mut pick = 0;
    for (k, len) in list.iter().rev() {
        if k.as_str() == name {
            pick = idx % len;
        }
        idx /= len;
    }
    pick
}
