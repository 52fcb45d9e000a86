//! Report emission: one CSV of per-feature records plus one JSON summary
//! side-car. JSON floats carry 17 significant digits so reports round-trip
//! losslessly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FeatureRecord {
    /// 1-based feature index in input order.
    pub index: usize,
    pub name: String,
    pub score: f64,
    pub restricted_score: Option<f64>,
    pub psi: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    /// 1-based indices, i < j.
    pub i: usize,
    pub j: usize,
    #[serde(serialize_with = "ser_f64_17")]
    pub score: f64,
    #[serde(serialize_with = "ser_f64_17")]
    pub u1: f64,
    #[serde(serialize_with = "ser_f64_17")]
    pub u2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub n: usize,
    pub p: usize,
    #[serde(serialize_with = "ser_opt_f64_17")]
    pub alpha0_used: Option<f64>,
    /// 1-based selected feature indices, ascending.
    pub selected: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_d: Option<usize>,
    #[serde(serialize_with = "ser_opt_f64_17")]
    pub alpha0_hat: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64_17")]
    pub pi0: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64_17")]
    pub tau: Option<f64>,
    pub threads: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairRecord>>,
    /// Timing metadata; the only field that varies across identical runs.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub records: Vec<FeatureRecord>,
    pub summary: Summary,
}

/// Serializes a float as a raw JSON number with 17 significant digits.
fn ser_f64_17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return s.serialize_none();
    }
    let text = format!("{v:.16e}");
    let raw = serde_json::value::RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn ser_opt_f64_17<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64_17(x, s),
        None => s.serialize_none(),
    }
}

/// `<base>.csv` / `<base>.json`, appending rather than replacing any
/// existing extension the user gave.
pub fn report_paths(base: &Path) -> (PathBuf, PathBuf) {
    match base.extension() {
        Some(ext) if ext == "csv" => (base.to_path_buf(), base.with_extension("json")),
        _ => {
            let mut csv = base.as_os_str().to_owned();
            csv.push(".csv");
            let mut json = base.as_os_str().to_owned();
            json.push(".json");
            (PathBuf::from(csv), PathBuf::from(json))
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl ScoreReport {
    /// Writes the records CSV and the summary JSON. Nothing is written until
    /// the whole report is materialized in memory.
    pub fn write(&self, base: &Path) -> Result<(PathBuf, PathBuf)> {
        let (csv_path, json_path) = report_paths(base);

        let mut body = String::with_capacity(self.records.len() * 48 + 64);
        body.push_str("index,name,score,restricted_score,psi,t\n");
        for r in &self.records {
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.index,
                r.name,
                r.score,
                fmt_opt(r.restricted_score),
                fmt_opt(r.psi),
                fmt_opt(r.t)
            ));
        }
        std::fs::write(&csv_path, body).map_err(CliError::io(&csv_path))?;

        let mut file = std::fs::File::create(&json_path).map_err(CliError::io(&json_path))?;
        serde_json::to_writer_pretty(&mut file, &self.summary)
            .map_err(|e| CliError::input(format!("summary serialization: {e}")))?;
        file.write_all(b"\n").map_err(CliError::io(&json_path))?;
        Ok((csv_path, json_path))
    }
}
