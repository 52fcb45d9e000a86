//! Threshold screening: fixed cutoffs and simulation-calibrated cutoffs.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::merge::{score_feature, FeatureScore};
use crate::simgen::{substream_rng, DistributionSpec};

/// The grid of candidate thresholds used throughout the calibration tables.
pub const DEFAULT_GRID: [f64; 7] = [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25];

/// How the screening threshold is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdMode {
    /// Use the given threshold as-is.
    Fixed(f64),
    /// Calibrate against simulated noise of the configured family.
    Simulated,
    /// Estimate from the scores via the local-fdr selector.
    DataDriven,
}

/// Threshold selection configuration.
#[derive(Debug, Clone)]
pub struct ThresholdSpec {
    pub mode: ThresholdMode,
    /// Noise family simulated during calibration. Gaussian by default: the
    /// recommended reference when the true noise law is unknown.
    pub noise_family: DistributionSpec,
    /// Candidate thresholds, strictly increasing, all in (0, 0.5].
    pub grid: Vec<f64>,
    /// Simulated replicates per calibration.
    pub reps: usize,
    /// A grid value is accepted once its detection fraction drops to this
    /// level; exact zero would be brittle under finite replication.
    pub detect_tolerance: f64,
}

impl ThresholdSpec {
    pub fn fixed(alpha0: f64) -> Self {
        ThresholdSpec {
            mode: ThresholdMode::Fixed(alpha0),
            ..ThresholdSpec::simulated()
        }
    }

    pub fn simulated() -> Self {
        ThresholdSpec {
            mode: ThresholdMode::Simulated,
            noise_family: DistributionSpec::standard_gaussian(),
            grid: DEFAULT_GRID.to_vec(),
            reps: 100,
            detect_tolerance: 0.01,
        }
    }

    pub fn data_driven() -> Self {
        ThresholdSpec {
            mode: ThresholdMode::DataDriven,
            ..ThresholdSpec::simulated()
        }
    }

    fn validate_grid(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(CoreError::input("calibration grid is empty"));
        }
        for pair in self.grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(CoreError::input("grid must be strictly increasing"));
            }
        }
        if self.grid.iter().any(|&a| a <= 0.0 || a > 0.5) {
            return Err(CoreError::input("grid values must lie in (0, 0.5]"));
        }
        if !(0.0..1.0).contains(&self.detect_tolerance) {
            return Err(CoreError::input(format!(
                "detection tolerance {} must lie in [0, 1)",
                self.detect_tolerance
            )));
        }
        Ok(())
    }
}

/// Features selected by a threshold, together with the inputs that produced
/// the decision.
#[derive(Debug, Clone)]
pub struct ScreenResult {
    /// 0-based indices with `score >= alpha0_used`, ascending.
    pub selected: Vec<usize>,
    pub alpha0_used: f64,
    pub scores: Vec<FeatureScore>,
}

/// Selects exactly the features whose score reaches `alpha0` (inclusive).
pub fn screen_fixed(scores: &[FeatureScore], alpha0: f64) -> Result<ScreenResult> {
    if !(alpha0 > 0.0 && alpha0 <= 0.5) {
        return Err(CoreError::input(format!(
            "alpha0 must be in (0, 0.5], got {alpha0}"
        )));
    }
    let selected = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.score >= alpha0)
        .map(|(j, _)| j)
        .collect();
    Ok(ScreenResult {
        selected,
        alpha0_used: alpha0,
        scores: scores.to_vec(),
    })
}

/// Detection fraction per grid threshold for `reps` simulated noise columns
/// of length `n`. A replicate "detects clusters" at threshold `alpha` when
/// its clustering score reaches `alpha`.
pub fn detection_table(
    n: usize,
    spec: &ThresholdSpec,
    rng_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    spec.validate_grid()?;
    spec.noise_family.validate()?;
    if spec.reps < 50 {
        return Err(CoreError::input(format!(
            "calibration needs at least 50 replicates, got {}",
            spec.reps
        )));
    }
    if n < 2 {
        return Err(CoreError::Size { min: 2, got: n });
    }
    // one score per replicate, reused across the whole grid
    let scores: Vec<f64> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream_rng(rng_seed, rep as u64);
            let column: Vec<f64> = (0..n).map(|_| spec.noise_family.sample_one(&mut rng)).collect();
            score_feature(&column).map(|s| s.score)
        })
        .collect::<Result<_>>()?;
    Ok(spec
        .grid
        .iter()
        .map(|&alpha| {
            let detected = scores.iter().filter(|&&s| s >= alpha).count();
            (alpha, detected as f64 / spec.reps as f64)
        })
        .collect())
}

/// Smallest grid threshold whose simulated detection fraction is at most
/// `detect_tolerance`. Fails with the full detection table when no grid
/// value qualifies.
pub fn calibrate_threshold(n: usize, spec: &ThresholdSpec, rng_seed: u64) -> Result<f64> {
    let table = detection_table(n, spec, rng_seed)?;
    table
        .iter()
        .find(|(_, frac)| *frac <= spec.detect_tolerance)
        .map(|(alpha, _)| *alpha)
        .ok_or(CoreError::CalibrationFailed {
            tolerance: spec.detect_tolerance,
            table,
        })
}
