//! Benchmark replication: regenerate a design, run the selected pipeline,
//! and average FN / FP (and optionally per-signal CER) over repetitions.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use cosci_core::fdr::{data_driven_alpha, DataDrivenConfig};
use cosci_core::interactions::{apply_pair_rule, pairwise_scores, PairScore};
use cosci_core::merge::{score_feature, FeatureScore};
use cosci_core::metrics::{cer, confusion_counts, kmeans_lloyd};
use cosci_core::screening::{screen_fixed, DEFAULT_GRID};
use cosci_core::simgen::{sample_experiment, ExperimentDesign};
use cosci_core::DatasetMatrix;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Distinct projection lines used for the pairwise designs: the benchmark's
/// twenty grid points span the full circle, which is ten distinct lines.
pub const PAIR_DESIGN_LINES: usize = 10;

#[derive(Debug, Clone)]
pub enum EvalMode {
    /// One row per threshold.
    FixedGrid(Vec<f64>),
    DataDriven { truncation_q: f64 },
}

#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub threshold: String,
    pub avg_fn: f64,
    pub se_fn: f64,
    pub avg_fp: f64,
    pub se_fp: f64,
    pub avg_cer: Option<f64>,
    pub se_cer: Option<f64>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn standardized(column: &[f64]) -> Vec<f64> {
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt().max(1e-300);
    column.iter().map(|v| (v - mean) / sd).collect()
}

/// Per-signal CER of k-means run on the selected features, with the true
/// per-signal component count as the cluster count.
fn selection_cer(matrix: &DatasetMatrix, selected: &BTreeSet<usize>, seed: u64) -> Result<f64> {
    let labels = matrix
        .labels
        .as_ref()
        .ok_or_else(|| CliError::input("design carries no ground-truth labels for CER"))?;
    let n = matrix.n;
    let mut total = 0.0;
    for sig in labels {
        let k = sig.labels.iter().collect::<BTreeSet<_>>().len();
        let predicted = if selected.is_empty() {
            vec![0u32; n]
        } else {
            let dims = selected.len();
            let cols: Vec<Vec<f64>> = selected
                .iter()
                .map(|&j| standardized(&matrix.columns[j]))
                .collect();
            let mut flat = vec![0.0; n * dims];
            for (d, col) in cols.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    flat[i * dims + d] = *v;
                }
            }
            kmeans_lloyd(&flat, n, dims, k, 5, seed)?
        };
        total += cer(&predicted, &sig.labels)?;
    }
    Ok(total / labels.len() as f64)
}

struct RepOutcome {
    false_negatives: f64,
    false_positives: f64,
    cer: Option<f64>,
}

fn evaluate_selection(
    matrix: &DatasetMatrix,
    selected: &BTreeSet<usize>,
    with_cer: bool,
    seed: u64,
) -> Result<RepOutcome> {
    let truth = matrix
        .signal_set
        .as_ref()
        .ok_or_else(|| CliError::input("design carries no ground truth"))?;
    let counts = confusion_counts(selected, truth, matrix.p())?;
    let cer_value = if with_cer {
        Some(selection_cer(matrix, selected, seed)?)
    } else {
        None
    };
    Ok(RepOutcome {
        false_negatives: counts.false_negatives as f64,
        false_positives: counts.false_positives as f64,
        cer: cer_value,
    })
}

/// Scores and pair scores for one replicate; pair scores only for the
/// pairwise designs.
struct RepScores {
    matrix: DatasetMatrix,
    scores: Vec<FeatureScore>,
    pairs: Option<Vec<PairScore>>,
}

fn score_replicate(
    design: &ExperimentDesign,
    n: usize,
    seed: u64,
    lines: usize,
) -> Result<RepScores> {
    let matrix = sample_experiment(design, n, seed)?;
    let scores: Vec<FeatureScore> = matrix
        .columns
        .par_iter()
        .map(|c| score_feature(c))
        .collect::<cosci_core::Result<_>>()?;
    let pairs = if design.joint_pair().is_some() && matrix.p() >= 2 {
        Some(pairwise_scores(&matrix.columns, lines)?)
    } else {
        None
    };
    Ok(RepScores {
        matrix,
        scores,
        pairs,
    })
}

fn select_at(rep: &RepScores, alpha0: f64) -> Result<BTreeSet<usize>> {
    match &rep.pairs {
        Some(pairs) => {
            let marginal: Vec<f64> = rep.scores.iter().map(|s| s.score).collect();
            Ok(apply_pair_rule(&marginal, pairs, alpha0)?)
        }
        None => Ok(screen_fixed(&rep.scores, alpha0)?
            .selected
            .into_iter()
            .collect()),
    }
}

fn select_data_driven(rep: &RepScores, truncation_q: f64) -> Result<BTreeSet<usize>> {
    match &rep.pairs {
        Some(pairs) => {
            // estimate the threshold from marginal and pair scores jointly,
            // then apply the usual pair rule at that threshold
            let mut combined: Vec<FeatureScore> = rep.scores.clone();
            combined.extend(pairs.iter().map(|p| FeatureScore::new(p.score)));
            let selection = data_driven_alpha(&combined, truncation_q, &DataDrivenConfig::default())?;
            match selection.alpha0_hat {
                Some(alpha0) => select_at(rep, alpha0.clamp(f64::MIN_POSITIVE, 0.5)),
                None => Ok(BTreeSet::new()),
            }
        }
        None => {
            let selection =
                data_driven_alpha(&rep.scores, truncation_q, &DataDrivenConfig::default())?;
            Ok(selection.selected.into_iter().collect())
        }
    }
}

/// Runs `reps` replicates of a design and aggregates the metrics.
pub fn run_experiment(
    design: &ExperimentDesign,
    n: usize,
    reps: u64,
    mode: &EvalMode,
    seed: u64,
    with_cer: bool,
    lines_override: Option<usize>,
) -> Result<Vec<MetricsRow>> {
    if reps == 0 {
        return Err(CliError::input("--reps must be positive"));
    }
    let lines = lines_override.unwrap_or(PAIR_DESIGN_LINES);
    let thresholds: Vec<String> = match mode {
        EvalMode::FixedGrid(grid) => grid.iter().map(|a| a.to_string()).collect(),
        EvalMode::DataDriven { .. } => vec!["data-driven".to_string()],
    };
    let mut per_threshold: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> =
        vec![(Vec::new(), Vec::new(), Vec::new()); thresholds.len()];

    for rep in 0..reps {
        let rep_seed = seed.wrapping_add(rep);
        let scored = score_replicate(design, n, rep_seed, lines)?;
        let selections: Vec<BTreeSet<usize>> = match mode {
            EvalMode::FixedGrid(grid) => grid
                .iter()
                .map(|&alpha| select_at(&scored, alpha))
                .collect::<Result<_>>()?,
            EvalMode::DataDriven { truncation_q } => {
                vec![select_data_driven(&scored, *truncation_q)?]
            }
        };
        for (slot, selected) in per_threshold.iter_mut().zip(&selections) {
            let outcome = evaluate_selection(&scored.matrix, selected, with_cer, rep_seed)?;
            slot.0.push(outcome.false_negatives);
            slot.1.push(outcome.false_positives);
            if let Some(c) = outcome.cer {
                slot.2.push(c);
            }
        }
    }

    Ok(thresholds
        .into_iter()
        .zip(per_threshold)
        .map(|(threshold, (fns, fps, cers))| {
            let (avg_fn, se_fn) = mean_se(&fns);
            let (avg_fp, se_fp) = mean_se(&fps);
            let (avg_cer, se_cer) = if cers.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_se(&cers);
                (Some(m), Some(s))
            };
            MetricsRow {
                threshold,
                avg_fn,
                se_fn,
                avg_fp,
                se_fp,
                avg_cer,
                se_cer,
            }
        })
        .collect())
}

/// The default threshold grid used when `eval --mode fixed` gets no alpha.
pub fn default_eval_grid() -> Vec<f64> {
    DEFAULT_GRID.to_vec()
}

pub fn metrics_table_csv(rows: &[MetricsRow]) -> String {
    let with_cer = rows.iter().any(|r| r.avg_cer.is_some());
    let mut out = String::from(if with_cer {
        "threshold,avg_fn,se_fn,avg_fp,se_fp,avg_cer,se_cer\n"
    } else {
        "threshold,avg_fn,se_fn,avg_fp,se_fp\n"
    });
    for r in rows {
        if with_cer {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.threshold,
                r.avg_fn,
                r.se_fn,
                r.avg_fp,
                r.se_fp,
                r.avg_cer.map_or_else(String::new, |v| v.to_string()),
                r.se_cer.map_or_else(String::new, |v| v.to_string()),
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.threshold, r.avg_fn, r.se_fn, r.avg_fp, r.se_fp
            ));
        }
    }
    out
}

/// Writes a simulated design matrix as CSV next to a JSON side-car carrying
/// the ground truth and the column-block layout.
pub fn write_design(matrix: &DatasetMatrix, path: &Path, header: bool) -> Result<()> {
    let mut body = String::new();
    if header {
        body.push_str(&matrix.names.join(","));
        body.push('\n');
    }
    for i in 0..matrix.n {
        let mut first = true;
        for column in &matrix.columns {
            if !first {
                body.push(',');
            }
            first = false;
            body.push_str(&column[i].to_string());
        }
        body.push('\n');
    }
    std::fs::write(path, body).map_err(CliError::io(path))?;

    let sidecar = path.with_extension("json");
    let truth: Vec<usize> = matrix
        .signal_set
        .as_ref()
        .map(|s| s.iter().map(|j| j + 1).collect())
        .unwrap_or_default();
    let json = serde_json::json!({
        "n": matrix.n,
        "p": matrix.p(),
        "seed": matrix.seed,
        "signal_set": truth,
        "blocks": matrix.blocks.iter().map(|(name, count)| {
            serde_json::json!({"family": name, "columns": count})
        }).collect::<Vec<_>>(),
    });
    let mut file = std::fs::File::create(&sidecar).map_err(CliError::io(&sidecar))?;
    serde_json::to_writer_pretty(&mut file, &json)
        .map_err(|e| CliError::input(format!("side-car serialization: {e}")))?;
    file.write_all(b"\n").map_err(CliError::io(&sidecar))?;
    Ok(())
}
