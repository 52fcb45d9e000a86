//! Column-major dataset container shared by the generators, the pairwise
//! screen, and the batch front-end.

use std::collections::BTreeSet;

/// Ground-truth component labels for one signal feature (simulation only).
#[derive(Debug, Clone)]
pub struct SignalLabels {
    /// 0-based feature index the labeling belongs to.
    pub feature: usize,
    /// Component membership per observation.
    pub labels: Vec<u32>,
}

/// An `n x p` observation matrix stored column-major, optionally carrying
/// the generating ground truth.
#[derive(Debug, Clone)]
pub struct DatasetMatrix {
    /// `p` columns of length `n` each.
    pub columns: Vec<Vec<f64>>,
    pub n: usize,
    /// One name per feature; generated names are `f1..fp`.
    pub names: Vec<String>,
    /// 0-based indices of the true signal features, when known.
    pub signal_set: Option<BTreeSet<usize>>,
    /// Per-signal component labels, when the design defines them.
    pub labels: Option<Vec<SignalLabels>>,
    /// Column layout by generating family, in column order (simulation
    /// metadata; empty for ingested data).
    pub blocks: Vec<(String, usize)>,
    pub seed: u64,
}

impl DatasetMatrix {
    /// Wraps raw columns, generating `f1..fp` names.
    pub fn from_columns(columns: Vec<Vec<f64>>, seed: u64) -> Self {
        let n = columns.first().map_or(0, Vec::len);
        debug_assert!(columns.iter().all(|c| c.len() == n));
        let names = (1..=columns.len()).map(|j| format!("f{j}")).collect();
        DatasetMatrix {
            columns,
            n,
            names,
            signal_set: None,
            labels: None,
            blocks: Vec::new(),
            seed,
        }
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }
}
