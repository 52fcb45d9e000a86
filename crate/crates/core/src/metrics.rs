//! Screening and clustering quality metrics, plus a minimal k-means used
//! only to evaluate downstream clustering.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::simgen::substream_rng;

/// Selection quality against a known truth set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_positives: usize,
    pub true_negatives: usize,
}

/// Set-difference counts of `selected` against `truth` over features
/// `0..p`.
pub fn confusion_counts(
    selected: &BTreeSet<usize>,
    truth: &BTreeSet<usize>,
    p: usize,
) -> Result<ConfusionCounts> {
    for &j in selected.iter().chain(truth.iter()) {
        if j >= p {
            return Err(CoreError::input(format!(
                "feature index {j} out of range for p = {p}"
            )));
        }
    }
    let true_positives = selected.intersection(truth).count();
    let false_positives = selected.len() - true_positives;
    let false_negatives = truth.len() - true_positives;
    let true_negatives = p - truth.len() - false_positives;
    Ok(ConfusionCounts {
        false_negatives,
        false_positives,
        true_positives,
        true_negatives,
    })
}

/// Classification error rate between two labelings: one minus the Rand
/// index. Label alphabets are arbitrary; only the induced partitions matter.
///
/// Computed via the pair-count contingency formula in `O(n + c^2)`.
pub fn cer(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CoreError::input(format!(
            "labelings disagree in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(CoreError::Size { min: 2, got: n });
    }
    let mut cont: HashMap<(u32, u32), u64> = HashMap::new();
    let mut row: HashMap<u32, u64> = HashMap::new();
    let mut col: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cont.entry((x, y)).or_default() += 1;
        *row.entry(x).or_default() += 1;
        *col.entry(y).or_default() += 1;
    }
    let choose2 = |k: u64| (k * (k - 1) / 2) as f64;
    let pairs = choose2(n as u64);
    let same_a: f64 = row.values().map(|&k| choose2(k)).sum();
    let same_b: f64 = col.values().map(|&k| choose2(k)).sum();
    let same_both: f64 = cont.values().map(|&k| choose2(k)).sum();
    // pairs co-clustered in exactly one labeling disagree
    let rand_index = 1.0 - (same_a + same_b - 2.0 * same_both) / pairs;
    Ok(1.0 - rand_index)
}

/// Mean CER of one predicted labeling against each per-signal truth.
pub fn per_signal_cer(predicted: &[u32], truth_per_signal: &[Vec<u32>]) -> Result<f64> {
    if truth_per_signal.is_empty() {
        return Err(CoreError::input("no signal labelings supplied"));
    }
    let mut total = 0.0;
    for truth in truth_per_signal {
        total += cer(predicted, truth)?;
    }
    Ok(total / truth_per_signal.len() as f64)
}

/// Lloyd k-means over row-major data, best of `restarts` seeded runs.
/// Seeding is k-means++-style; iteration stops when the within-cluster sum
/// of squares changes by less than 1e-8 relatively, or after 100 rounds.
pub fn kmeans_lloyd(
    data: &[f64],
    n: usize,
    dims: usize,
    clusters: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<u32>> {
    if clusters == 0 {
        return Err(CoreError::input("cluster count must be positive"));
    }
    if n * dims != data.len() {
        return Err(CoreError::input(format!(
            "data length {} does not match {n} x {dims}",
            data.len()
        )));
    }
    if clusters > n {
        return Err(CoreError::input(format!(
            "cannot form {clusters} clusters from {n} points"
        )));
    }
    if clusters == 1 {
        return Ok(vec![0; n]);
    }
    let restarts = restarts.max(1);
    let runs: Vec<(f64, Vec<u32>)> = (0..restarts)
        .into_par_iter()
        .map(|r| kmeans_single(data, n, dims, clusters, seed, r as u64))
        .collect();
    // best objective wins; ties go to the earliest restart for determinism
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, (wa, _)), (j, (wb, _))| wa.total_cmp(wb).then(i.cmp(j)))
        .map(|(_, (_, labels))| labels)
        .expect("at least one restart");
    Ok(best)
}

fn kmeans_single(
    data: &[f64],
    n: usize,
    dims: usize,
    k: usize,
    seed: u64,
    restart: u64,
) -> (f64, Vec<u32>) {
    let mut rng = substream_rng(seed, restart);
    let point = |i: usize| &data[i * dims..(i + 1) * dims];
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rand::Rng::random_range(&mut rng, 0..n);
    centers.push(point(first).to_vec());
    let mut best_d2: Vec<f64> = (0..n).map(|i| dist2(point(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rand::Rng::random::<f64>(&mut rng) * total;
            let mut chosen = n - 1;
            for (i, &d) in best_d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rand::Rng::random_range(&mut rng, 0..n)
        };
        centers.push(point(next).to_vec());
        let c = centers.last().unwrap();
        for i in 0..n {
            let d = dist2(point(i), c);
            if d < best_d2[i] {
                best_d2[i] = d;
            }
        }
    }

    let mut labels = vec![0u32; n];
    let mut wss = f64::INFINITY;
    for _ in 0..100 {
        // assignment
        let mut new_wss = 0.0;
        for i in 0..n {
            let p = point(i);
            let (mut best_c, mut best) = (0u32, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(p, center);
                if d < best {
                    best = d;
                    best_c = c as u32;
                }
            }
            labels[i] = best_c;
            new_wss += best;
        }
        debug_assert!(new_wss <= wss * (1.0 + 1e-9) || !wss.is_finite());

        // update
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i] as usize] += 1;
            for (s, v) in sums[labels[i] as usize].iter_mut().zip(point(i)) {
                *s += v;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            if counts[c] > 0 {
                centers[c] = sum.into_iter().map(|s| s / counts[c] as f64).collect();
            }
        }

        let done = wss.is_finite() && (wss - new_wss).abs() < 1e-8 * wss.max(1e-300);
        wss = new_wss;
        if done {
            break;
        }
    }
    (wss, labels)
}
