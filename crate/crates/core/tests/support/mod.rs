//! Test-only oracles, independent of the library's implementation paths.
//!
//! * A direct minimizer of the fusion-penalized objective
//!   `sum_i (x_i - c_i)^2 + lambda * sum_{k<l} |c_k - c_l|`, evaluated over an
//!   adaptively refined lambda grid to extract the exact fusion path.
//! * An ADMM solver for the same objective, used to cross-validate the
//!   direct minimizer.
//! * An `O(n^2)` pair-enumeration Rand index.
//! * A direct transcription of the two-stage selection formulas.

#![allow(dead_code)]

/// Partition of `0..n` encoded as a boundary bitmask: bit `i` is set when
/// positions `i` and `i + 1` belong to different clusters.
pub type Boundaries = u32;

/// Exact minimizer of the fusion objective for sorted input, by enumerating
/// all contiguous ordered partitions. Each partition yields its stationary
/// centroid vector; the objective is evaluated honestly at every candidate
/// and the smallest wins. The true minimizer is the candidate of its own
/// level-set partition, so the search is exact.
pub fn minimize_fusion_objective(x_sorted: &[f64], lambda: f64) -> Vec<f64> {
    let n = x_sorted.len();
    assert!((1..=20).contains(&n), "enumeration oracle is for tiny n");
    let mut best_value = f64::INFINITY;
    let mut best: Vec<f64> = x_sorted.to_vec();
    for mask in 0u32..(1 << (n - 1)) {
        let mut candidate = vec![0.0; n];
        let mut start = 0usize;
        // groups are maximal runs without a boundary bit
        for end in 0..n {
            let is_last = end == n - 1 || mask & (1 << end) != 0;
            if !is_last {
                continue;
            }
            let size = end - start + 1;
            let mean: f64 = x_sorted[start..=end].iter().sum::<f64>() / size as f64;
            let below = start as f64;
            let above = (n - 1 - end) as f64;
            // stationary value of the group's common centroid
            let value = mean + 0.5 * lambda * (above - below);
            for c in candidate[start..=end].iter_mut() {
                *c = value;
            }
            start = end + 1;
        }
        let objective = fusion_objective(x_sorted, &candidate, lambda);
        if objective < best_value {
            best_value = objective;
            best = candidate;
        }
    }
    best
}

pub fn fusion_objective(x: &[f64], c: &[f64], lambda: f64) -> f64 {
    let n = x.len();
    let mut value: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    for k in 0..n {
        for l in (k + 1)..n {
            value += lambda * (c[k] - c[l]).abs();
        }
    }
    value
}

/// Level-set partition of a centroid vector (sorted input, so clusters are
/// contiguous runs of nearly equal centroids).
pub fn partition_of(c: &[f64], tol: f64) -> Boundaries {
    let mut b = 0u32;
    for i in 0..c.len() - 1 {
        if c[i + 1] - c[i] > tol {
            b |= 1 << i;
        }
    }
    b
}

fn clusters_in(b: Boundaries) -> usize {
    b.count_ones() as usize + 1
}

/// One fusion event observed along the lambda grid: between `lambda_lo` and
/// `lambda_hi` the partition coarsened from `before` to `after` (usually one
/// merge; simultaneous merges at tied lambda stay in one event).
#[derive(Debug, Clone, Copy)]
pub struct OracleFusion {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub before: Boundaries,
    pub after: Boundaries,
}

/// Full fusion path of the objective by direct minimization over an
/// adaptively refined lambda grid: brackets are bisected until each one
/// holds either no change or an irreducibly simultaneous set of fusions.
pub fn fusion_path(x_sorted: &[f64]) -> (Boundaries, Vec<OracleFusion>) {
    let n = x_sorted.len();
    let scale = (x_sorted[n - 1] - x_sorted[0]).max(1.0);
    let tol = 1e-7 * scale;

    let solve = |lambda: f64| partition_of(&minimize_fusion_objective(x_sorted, lambda), tol);
    let initial = solve(0.0);
    if clusters_in(initial) == 1 {
        return (initial, Vec::new());
    }

    let mut lambda_hi = scale;
    while clusters_in(solve(lambda_hi)) > 1 {
        lambda_hi *= 2.0;
        assert!(lambda_hi.is_finite(), "no single-cluster lambda found");
    }

    let mut events = Vec::new();
    refine(&solve, 0.0, initial, lambda_hi, solve(lambda_hi), &mut events);
    (initial, events)
}

fn refine<F: Fn(f64) -> Boundaries>(
    solve: &F,
    lo: f64,
    p_lo: Boundaries,
    hi: f64,
    p_hi: Boundaries,
    out: &mut Vec<OracleFusion>,
) {
    if p_lo == p_hi {
        return;
    }
    // partitions along the path only coarsen: boundaries can only disappear
    assert_eq!(p_hi & !p_lo, 0, "partition refined as lambda grew");
    if hi - lo <= 1e-9 * hi.max(1.0) {
        out.push(OracleFusion {
            lambda_lo: lo,
            lambda_hi: hi,
            before: p_lo,
            after: p_hi,
        });
        return;
    }
    let mid = 0.5 * (lo + hi);
    let p_mid = solve(mid);
    refine(solve, lo, p_lo, mid, p_mid, out);
    refine(solve, mid, p_mid, hi, p_hi, out);
}

/// ADMM for the same objective; used to cross-validate the enumeration
/// minimizer through an unrelated algorithm.
pub fn admm_fusion(x: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let n = x.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| ((k + 1)..n).map(move |l| (k, l)))
        .collect();
    let rho = 1.0;
    let mut c: Vec<f64> = x.to_vec();
    let mut z: Vec<f64> = pairs.iter().map(|&(k, l)| c[k] - c[l]).collect();
    let mut u = vec![0.0; pairs.len()];

    // (2I + rho D^T D) c = 2x + rho D^T (z - u), with D^T D = n I - 11^T;
    // by Sherman-Morrison the inverse is I/alpha + (rho / (2 alpha)) 11^T
    let alpha = 2.0 + rho * n as f64;
    for _ in 0..iterations {
        let mut rhs: Vec<f64> = x.iter().map(|&v| 2.0 * v).collect();
        for (idx, &(k, l)) in pairs.iter().enumerate() {
            let w = rho * (z[idx] - u[idx]);
            rhs[k] += w;
            rhs[l] -= w;
        }
        let total: f64 = rhs.iter().sum();
        let shift = rho * total / (2.0 * alpha);
        for (ci, ri) in c.iter_mut().zip(&rhs) {
            *ci = ri / alpha + shift;
        }
        for (idx, &(k, l)) in pairs.iter().enumerate() {
            let v = c[k] - c[l] + u[idx];
            let threshold = lambda / rho;
            z[idx] = if v > threshold {
                v - threshold
            } else if v < -threshold {
                v + threshold
            } else {
                0.0
            };
            u[idx] += c[k] - c[l] - z[idx];
        }
    }
    c
}

/// Rand index by exhaustive pair enumeration.
pub fn rand_index_pairs(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 1;
            let same_a = a[i] == a[j];
            let same_b = b[i] == b[j];
            if same_a == same_b {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// Direct transcription of the two-stage selection formulas, kept separate
/// from the library implementation.
pub struct TwoStageOracle {
    pub k_s: usize,
    pub k_d: usize,
    pub selected: Vec<usize>,
    pub alpha0_hat: Option<f64>,
}

pub fn two_stage_oracle(t: &[f64], pi0: f64, scores: &[f64]) -> TwoStageOracle {
    let p = t.len();
    let mut sorted = t.to_vec();
    sorted.sort_by(f64::total_cmp);
    let delta = (p as f64).min(1.0 / (p as f64).ln());
    let bound = p as f64 * (1.0 - pi0) * delta;

    // suffix sums of (1 - T_(i)) for i = j..p, 1-based j
    let mut suffix = vec![0.0; p + 2];
    for j in (1..=p).rev() {
        suffix[j] = suffix[j + 1] + (1.0 - sorted[j - 1]);
    }
    let k_s = (1..=p).find(|&j| suffix[j] <= bound).unwrap_or(p);

    let mut prefix = 0.0;
    let mut k_d = 0;
    for j in 1..=k_s {
        prefix += sorted[j - 1];
        if prefix / j as f64 <= delta {
            k_d = j;
        }
    }

    let (selected, alpha0_hat) = if k_d == 0 {
        (Vec::new(), None)
    } else {
        let t_ks = sorted[k_s - 1];
        let t_kd = sorted[k_d - 1];
        let sel: Vec<usize> = (0..p).filter(|&j| t[j] <= t_ks && t[j] <= t_kd).collect();
        let a0 = sel
            .iter()
            .map(|&j| scores[j])
            .fold(f64::INFINITY, f64::min);
        (sel, Some(a0))
    };
    TwoStageOracle {
        k_s,
        k_d,
        selected,
        alpha0_hat,
    }
}
