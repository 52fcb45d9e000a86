/*!
Feature screening for large-scale cluster analysis.

Every feature column gets a clustering score in `(0, 0.5]`: the largest
merge size observed along the exact solution path of its one-dimensional
fusion-penalized clustering criterion. Noise features (unimodal marginals)
produce uniformly small merges, so thresholding the scores screens them out
while keeping the features that carry cluster structure.

The crate is organized around that pipeline:

* [`merge`] — the merge-path engine: sorts a column, traces the exact
  sequence of cluster fusions in `O(n log n)`, and reduces the trace to a
  score (plus an optional quantile-restricted variant).
* [`screening`] — fixed thresholds and simulation-calibrated thresholds.
* [`fdr`] — the data-driven threshold: empirical Beta null, Poisson-regression
  mixture density, local false discovery rates, and two-stage selection.
* [`interactions`] — pairwise projection screening for feature pairs that
  carry cluster information only jointly.
* [`simgen`] — reproducible generators for the benchmark designs (noise
  families, mixture signals, copula-correlated blocks).
* [`metrics`] — confusion counts, Rand-index error rates, and a minimal
  k-means used for evaluation.

Scoring of different features is embarrassingly parallel; every operation
here is side-effect free and safe to fan out across threads.
*/

pub mod data;
pub mod error;
pub mod fdr;
pub mod interactions;
pub mod merge;
pub mod metrics;
pub mod screening;
pub mod simgen;

pub use data::DatasetMatrix;
pub use error::{CoreError, Result};
pub use merge::{clustering_score, merge_path, score_feature, sort_feature, FeatureScore};
