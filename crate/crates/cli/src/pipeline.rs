//! Pipeline orchestration: parallel per-feature scoring, threshold
//! application, report assembly.
//!
//! Workers are stateless; per-feature results are aggregated in feature
//! order after the parallel map completes, so reports do not depend on
//! thread scheduling.

use std::time::Instant;

use cosci_core::fdr::{data_driven_alpha_detailed, DataDrivenConfig};
use cosci_core::interactions::{apply_pair_rule, pairwise_scores};
use cosci_core::merge::{score_feature, score_feature_restricted, FeatureScore};
use cosci_core::screening::{calibrate_threshold, screen_fixed, ThresholdSpec};
use cosci_core::DatasetMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::report::{FeatureRecord, PairRecord, ScoreReport, Summary};

/// How the pipeline turns scores into a selection.
#[derive(Debug, Clone)]
pub enum SelectionMode {
    /// Scores only, no selection.
    ScoreOnly,
    Fixed(f64),
    /// Calibrate against simulated noise at this data's sample size.
    Simulated(ThresholdSpec),
    DataDriven {
        truncation_q: f64,
        config: DataDrivenConfig,
    },
    /// Pairwise projection screen with this many half-circle lines.
    Pairwise { alpha0: f64, m: usize },
}

impl SelectionMode {
    fn label(&self) -> Option<String> {
        match self {
            SelectionMode::ScoreOnly => None,
            SelectionMode::Fixed(_) => Some("fixed".into()),
            SelectionMode::Simulated(_) => Some("simulated".into()),
            SelectionMode::DataDriven { .. } => Some("data-driven".into()),
            SelectionMode::Pairwise { .. } => Some("pairs".into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub command: String,
    pub mode: SelectionMode,
    pub tau: Option<f64>,
    pub threads: usize,
    pub seed: u64,
}

/// Scores every column and applies the configured threshold mode.
pub fn run_pipeline(matrix: &DatasetMatrix, config: &PipelineConfig) -> Result<ScoreReport> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| crate::error::CliError::input(format!("thread pool: {e}")))?;
    pool.install(|| run_inside_pool(matrix, config, started))
}

fn run_inside_pool(
    matrix: &DatasetMatrix,
    config: &PipelineConfig,
    started: Instant,
) -> Result<ScoreReport> {
    let tau = config.tau;
    let scores: Vec<FeatureScore> = matrix
        .columns
        .par_iter()
        .map(|column| match tau {
            Some(t) => score_feature_restricted(column, t),
            None => score_feature(column),
        })
        .collect::<cosci_core::Result<_>>()?;

    let mut records: Vec<FeatureRecord> = scores
        .iter()
        .enumerate()
        .map(|(j, s)| FeatureRecord {
            index: j + 1,
            name: matrix.names[j].clone(),
            score: s.score,
            restricted_score: s.restricted_score,
            psi: None,
            t: None,
        })
        .collect();

    let mut summary = Summary {
        command: config.command.clone(),
        mode: config.mode.label(),
        n: matrix.n,
        p: matrix.p(),
        alpha0_used: None,
        selected: Vec::new(),
        k_s: None,
        k_d: None,
        alpha0_hat: None,
        pi0: None,
        tau,
        threads: config.threads,
        seed: config.seed,
        pairs: None,
        wall_seconds: 0.0,
    };

    match &config.mode {
        SelectionMode::ScoreOnly => {}
        SelectionMode::Fixed(alpha0) => {
            let result = screen_fixed(&scores, *alpha0)?;
            summary.alpha0_used = Some(result.alpha0_used);
            summary.selected = result.selected.iter().map(|j| j + 1).collect();
        }
        SelectionMode::Simulated(spec) => {
            let alpha0 = calibrate_threshold(matrix.n, spec, config.seed)?;
            let result = screen_fixed(&scores, alpha0)?;
            summary.alpha0_used = Some(alpha0);
            summary.selected = result.selected.iter().map(|j| j + 1).collect();
        }
        SelectionMode::DataDriven {
            truncation_q,
            config: dd,
        } => {
            let (selection, null) = data_driven_alpha_detailed(&scores, *truncation_q, dd)?;
            for (record, s) in records.iter_mut().zip(&scores) {
                record.psi = Some(2.0 * s.score);
            }
            for (record, t) in records.iter_mut().zip(&selection.t_values) {
                record.t = Some(*t);
            }
            summary.alpha0_used = selection.alpha0_hat;
            summary.alpha0_hat = selection.alpha0_hat;
            summary.selected = selection.selected.iter().map(|j| j + 1).collect();
            summary.k_s = Some(selection.k_s);
            summary.k_d = Some(selection.k_d);
            summary.pi0 = Some(null.pi0);
        }
        SelectionMode::Pairwise { alpha0, m } => {
            let marginal: Vec<f64> = scores.iter().map(|s| s.score).collect();
            let pairs = if matrix.p() >= 2 {
                pairwise_scores(&matrix.columns, *m)?
            } else {
                Vec::new()
            };
            let selected = apply_pair_rule(&marginal, &pairs, *alpha0)?;
            summary.alpha0_used = Some(*alpha0);
            summary.selected = selected.iter().map(|j| j + 1).collect();
            summary.pairs = Some(
                pairs
                    .iter()
                    .filter(|p| p.score >= *alpha0)
                    .map(|p| PairRecord {
                        i: p.i + 1,
                        j: p.j + 1,
                        score: p.score,
                        u1: p.u_star[0],
                        u2: p.u_star[1],
                    })
                    .collect(),
            );
        }
    }

    summary.wall_seconds = started.elapsed().as_secs_f64();
    Ok(ScoreReport { records, summary })
}
