//! Data-driven threshold selection.
//!
//! The doubled scores `psi = 2 S` are modeled as a two-group mixture
//! `f = pi0 f0 + (1 - pi0) f1`. An empirical Beta null `(pi0, f0)` is fitted
//! by truncated maximum likelihood on the lower bulk of the sample, the
//! mixture density `f` is estimated by Poisson regression on histogram bin
//! counts, and each feature gets a local false discovery rate
//! `T_j = pi0 f0(psi_j) / f(psi_j)`. A two-stage rule (missed-discovery
//! screening, then false-positive discovery) turns the `T_j` into a selected
//! set, and the data-driven threshold is the smallest selected score.

use statrs::distribution::{Continuous, ContinuousCDF};

use crate::error::{CoreError, Result};
use crate::merge::FeatureScore;

/// Doubled scores with their ascending sort order.
#[derive(Debug, Clone)]
pub struct PsiStats {
    /// `psi[j] = 2 * score[j]`, in (0, 1].
    pub psi: Vec<f64>,
    /// Stable permutation sorting `psi` ascending.
    pub order: Vec<usize>,
}

/// Empirical null: mixing proportion and Beta null density parameters.
#[derive(Debug, Clone, Copy)]
pub struct NullModel {
    pub pi0: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub truncation_q: f64,
    /// Upper end of the truncated fitting window, `psi_([q p])`.
    pub cutoff: f64,
}

impl NullModel {
    /// Null density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let x = x.clamp(1e-12, 1.0 - 1e-12);
        statrs::distribution::Beta::new(self.beta_a, self.beta_b)
            .expect("positive shapes")
            .pdf(x)
    }
}

/// Histogram-based mixture density estimate over [0, 1].
#[derive(Debug, Clone)]
pub struct MixtureDensity {
    pub bin_edges: Vec<f64>,
    pub bin_centers: Vec<f64>,
    /// Strictly positive; Riemann sum over the bins is one.
    pub fitted_density: Vec<f64>,
    pub basis_degree: usize,
}

impl MixtureDensity {
    /// Density at `x`: piecewise-linear interpolation between bin centers,
    /// constant extrapolation beyond the outermost centers.
    pub fn density(&self, x: f64) -> f64 {
        let centers = &self.bin_centers;
        let d = &self.fitted_density;
        if x <= centers[0] {
            return d[0];
        }
        if x >= *centers.last().unwrap() {
            return *d.last().unwrap();
        }
        // centers are equally spaced
        let width = centers[1] - centers[0];
        let idx = (((x - centers[0]) / width).floor() as usize).min(centers.len() - 2);
        let frac = (x - centers[idx]) / width;
        d[idx] + frac * (d[idx + 1] - d[idx])
    }
}

/// Output of the two-stage selection.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Local fdr per feature, in input order, clamped to [0, 1].
    pub t_values: Vec<f64>,
    /// Stage-1 screening cutoff rank (1-based).
    pub k_s: usize,
    /// Stage-2 discovery cutoff rank (1-based), zero when nothing survives.
    pub k_d: usize,
    /// 0-based selected feature indices, ascending.
    pub selected: Vec<usize>,
    /// Smallest selected score; `None` when the selection is empty.
    pub alpha0_hat: Option<f64>,
    pub delta_p: f64,
}

/// Knobs for the composed pipeline.
#[derive(Debug, Clone)]
pub struct DataDrivenConfig {
    pub bins: usize,
    pub degree: usize,
    /// Lower clamp on the estimated null proportion. `None` applies the
    /// default rule: floor 0.9 when `truncation_q` is 0.9, no floor
    /// otherwise.
    pub pi0_floor: Option<f64>,
}

impl Default for DataDrivenConfig {
    fn default() -> Self {
        DataDrivenConfig {
            bins: 60,
            degree: 5,
            pi0_floor: None,
        }
    }
}

fn argsort_stable(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Doubles the scores into test statistics and records their sort order.
pub fn compute_psi(scores: &[FeatureScore]) -> Result<PsiStats> {
    if scores.len() < 2 {
        return Err(CoreError::Size {
            min: 2,
            got: scores.len(),
        });
    }
    let psi: Vec<f64> = scores.iter().map(|s| 2.0 * s.score).collect();
    let order = argsort_stable(&psi);
    Ok(PsiStats { psi, order })
}

/// Negative profile log-likelihood of the truncated Beta null. The binomial
/// factor for the truncation count is profiled out; when the Beta mass below
/// the cutoff cannot reach the observed fraction, the boundary term applies.
fn null_nll(ln_a: f64, ln_b: f64, trunc: &[f64], cutoff: f64, p: usize) -> f64 {
    if !(-7.0..=16.0).contains(&ln_a) || !(-7.0..=16.0).contains(&ln_b) {
        return f64::INFINITY;
    }
    let (a, b) = (ln_a.exp(), ln_b.exp());
    let beta = match statrs::distribution::Beta::new(a, b) {
        Ok(d) => d,
        Err(_) => return f64::INFINITY,
    };
    let n0 = trunc.len() as f64;
    let h = beta.cdf(cutoff).clamp(1e-300, 1.0);
    let frac = n0 / p as f64;
    let mut ll: f64 = trunc
        .iter()
        .map(|&x| beta.ln_pdf(x.clamp(1e-12, 1.0 - 1e-12)))
        .sum();
    if h >= frac {
        ll += -n0 * h.ln() + n0 * frac.ln() + (p as f64 - n0) * (1.0 - frac).ln();
    } else {
        let tail = (1.0 - h).max(1e-300);
        ll += (p as f64 - n0) * tail.ln();
    }
    if ll.is_finite() {
        -ll
    } else {
        f64::INFINITY
    }
}

/// Two-dimensional Nelder-Mead minimization.
fn nelder_mead_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    start: (f64, f64),
    step: f64,
    max_iter: usize,
) -> Result<(f64, f64, f64)> {
    let mut simplex = [
        (start.0, start.1),
        (start.0 + step, start.1),
        (start.0, start.1 + step),
    ];
    let mut values = [
        f(simplex[0].0, simplex[0].1),
        f(simplex[1].0, simplex[1].1),
        f(simplex[2].0, simplex[2].1),
    ];
    for _ in 0..max_iter {
        // order best..worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, mid, worst) = (idx[0], idx[1], idx[2]);

        let spread = values[worst] - values[best];
        let size = (simplex[0].0 - simplex[2].0).abs()
            + (simplex[0].1 - simplex[2].1).abs()
            + (simplex[1].0 - simplex[0].0).abs()
            + (simplex[1].1 - simplex[0].1).abs();
        if spread.abs() < 1e-12 && size < 1e-9 {
            return Ok((simplex[best].0, simplex[best].1, values[best]));
        }

        let centroid = (
            0.5 * (simplex[best].0 + simplex[mid].0),
            0.5 * (simplex[best].1 + simplex[mid].1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - simplex[worst].0),
            centroid.1 + (centroid.1 - simplex[worst].1),
        );
        let fr = f(reflect.0, reflect.1);
        if fr < values[best] {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - simplex[worst].0),
                centroid.1 + 2.0 * (centroid.1 - simplex[worst].1),
            );
            let fe = f(expand.0, expand.1);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract = (
                centroid.0 + 0.5 * (simplex[worst].0 - centroid.0),
                centroid.1 + 0.5 * (simplex[worst].1 - centroid.1),
            );
            let fc = f(contract.0, contract.1);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                for i in [mid, worst] {
                    simplex[i] = (
                        0.5 * (simplex[i].0 + simplex[best].0),
                        0.5 * (simplex[i].1 + simplex[best].1),
                    );
                    values[i] = f(simplex[i].0, simplex[i].1);
                }
            }
        }
    }
    // accept the best point if the simplex is at least numerically tight
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let best = idx[0];
    if (values[idx[2]] - values[best]).abs() < 1e-6 {
        return Ok((simplex[best].0, simplex[best].1, values[best]));
    }
    Err(CoreError::fit(
        "empirical-null",
        format!(
            "likelihood maximization did not converge: spread {:.3e} after {max_iter} iterations",
            values[idx[2]] - values[best]
        ),
    ))
}

/// Fits the empirical Beta null on the lowest `[q p]` order statistics by
/// truncated maximum likelihood, then reads off the null proportion from the
/// truncation count. `pi0_floor > 0` clamps the estimate from below.
pub fn fit_empirical_null(psi: &PsiStats, truncation_q: f64, pi0_floor: f64) -> Result<NullModel> {
    if !(0.5..1.0).contains(&truncation_q) {
        return Err(CoreError::input(format!(
            "truncation quantile must be in [0.5, 1), got {truncation_q}"
        )));
    }
    let p = psi.psi.len();
    let n0 = (truncation_q * p as f64).floor() as usize;
    if n0 < 10 {
        return Err(CoreError::input(format!(
            "truncated sample holds only {n0} observations; need at least 10"
        )));
    }
    let trunc: Vec<f64> = psi.order[..n0].iter().map(|&j| psi.psi[j]).collect();
    let cutoff = trunc[n0 - 1];
    if cutoff - trunc[0] < 1e-14 {
        return Err(CoreError::fit(
            "empirical-null",
            "degenerate truncated sample: all values equal",
        ));
    }

    // method-of-moments start, ignoring the truncation
    let mean = trunc.iter().sum::<f64>() / n0 as f64;
    let var = trunc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n0 - 1) as f64;
    let (a0, b0) = if var > 1e-12 && mean > 0.0 && mean < 1.0 {
        let common = (mean * (1.0 - mean) / var - 1.0).max(0.1);
        (
            (mean * common).clamp(1e-2, 1e4),
            ((1.0 - mean) * common).clamp(1e-2, 1e4),
        )
    } else {
        (1.0, 5.0)
    };

    let (ln_a, ln_b, _) = nelder_mead_2d(
        |la, lb| null_nll(la, lb, &trunc, cutoff, p),
        (a0.ln(), b0.ln()),
        0.5,
        600,
    )?;
    let (beta_a, beta_b) = (ln_a.exp(), ln_b.exp());

    let h = statrs::distribution::Beta::new(beta_a, beta_b)
        .map_err(|e| CoreError::fit("empirical-null", e.to_string()))?
        .cdf(cutoff);
    let mut pi0 = (n0 as f64 / (p as f64 * h)).min(1.0);
    if pi0_floor > 0.0 {
        pi0 = pi0.max(pi0_floor);
    }
    Ok(NullModel {
        pi0,
        beta_a,
        beta_b,
        truncation_q,
        cutoff,
    })
}

/// Solves the symmetric positive definite system `A x = b` by Cholesky.
fn solve_spd(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for m in 0..j {
                s -= a[i][m] * a[j][m];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                a[i][i] = s.sqrt();
            } else {
                a[i][j] = s / a[j][j];
            }
        }
    }
    // forward then backward substitution
    for i in 0..n {
        let mut s = b[i];
        for m in 0..i {
            s -= a[i][m] * b[m];
        }
        b[i] = s / a[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for m in (i + 1)..n {
            s -= a[m][i] * x[m];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Chebyshev polynomial basis row at `t` in [-1, 1].
fn chebyshev_row(t: f64, degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(degree + 1);
    row.push(1.0);
    if degree >= 1 {
        row.push(t);
    }
    for k in 2..=degree {
        let v = 2.0 * t * row[k - 1] - row[k - 2];
        row.push(v);
    }
    row
}

fn poisson_deviance(counts: &[f64], mu: &[f64]) -> f64 {
    counts
        .iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let term = if y > 0.0 { y * (y / m).ln() - (y - m) } else { m };
            2.0 * term
        })
        .sum()
}

/// Estimates the mixture density of `psi` over [0, 1] by Poisson regression
/// of histogram bin counts on a polynomial in the bin centers (log link),
/// normalized so the Riemann sum over the bins is one.
pub fn lindsey_density(psi: &PsiStats, bins: usize, degree: usize) -> Result<MixtureDensity> {
    if bins < 20 {
        return Err(CoreError::input(format!("need at least 20 bins, got {bins}")));
    }
    if degree < 2 {
        return Err(CoreError::input(format!(
            "polynomial degree must be at least 2, got {degree}"
        )));
    }
    if psi.psi.is_empty() {
        return Err(CoreError::input("empty histogram: no statistics supplied"));
    }
    let width = 1.0 / bins as f64;
    let mut counts = vec![0.0f64; bins];
    for &x in &psi.psi {
        let idx = ((x / width).floor() as usize).min(bins - 1);
        counts[idx] += 1.0;
    }

    let centers: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) * width).collect();
    let design: Vec<Vec<f64>> = centers
        .iter()
        .map(|&c| chebyshev_row(2.0 * c - 1.0, degree))
        .collect();
    let k = degree + 1;

    let mean_count = psi.psi.len() as f64 / bins as f64;
    let mut beta = vec![0.0; k];
    beta[0] = mean_count.max(1e-3).ln();
    let eta_mu = |beta: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let eta: Vec<f64> = design
            .iter()
            .map(|row| row.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>())
            .collect();
        let mu: Vec<f64> = eta.iter().map(|e| e.clamp(-30.0, 30.0).exp()).collect();
        (eta, mu)
    };

    let (_, mut mu) = eta_mu(&beta);
    let mut deviance = poisson_deviance(&counts, &mu);
    let mut converged = false;
    for _ in 0..100 {
        // Newton step on the Poisson log-likelihood
        let mut hess = vec![vec![0.0; k]; k];
        let mut grad = vec![0.0; k];
        for (b, row) in design.iter().enumerate() {
            let w = mu[b];
            let r = counts[b] - mu[b];
            for i in 0..k {
                grad[i] += row[i] * r;
                for j in 0..=i {
                    hess[i][j] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..k {
            hess[i][i] += 1e-10;
            for j in 0..i {
                hess[j][i] = hess[i][j];
            }
        }
        let mut rhs = grad.clone();
        let delta = solve_spd(&mut hess, &mut rhs)
            .ok_or_else(|| CoreError::fit("mixture-density", "singular normal equations"))?;

        // step halving on the deviance
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = beta
                .iter()
                .zip(&delta)
                .map(|(b, d)| b + scale * d)
                .collect();
            let (_, trial_mu) = eta_mu(&trial);
            let trial_dev = poisson_deviance(&counts, &trial_mu);
            if trial_dev.is_finite() && trial_dev <= deviance + 1e-12 {
                let improved = deviance - trial_dev;
                beta = trial;
                mu = trial_mu;
                deviance = trial_dev;
                accepted = true;
                if improved < 1e-10 * (1.0 + deviance.abs()) {
                    converged = true;
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            converged = true; // no direction improves: stationary point
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(CoreError::fit(
            "mixture-density",
            format!("Poisson regression did not converge; deviance {deviance:.6}"),
        ));
    }

    let total: f64 = mu.iter().map(|m| m * width).sum();
    let fitted_density: Vec<f64> = mu.iter().map(|m| m / total).collect();
    let bin_edges = (0..=bins).map(|b| b as f64 * width).collect();
    Ok(MixtureDensity {
        bin_edges,
        bin_centers: centers,
        fitted_density,
        basis_degree: degree,
    })
}

/// Local false discovery rate per feature:
/// `T_j = pi0 f0(psi_j) / f(psi_j)`, clamped to [0, 1]; a vanishing mixture
/// density clamps to 1.
pub fn local_fdr(null: &NullModel, mix: &MixtureDensity, psi: &PsiStats) -> Vec<f64> {
    psi.psi
        .iter()
        .map(|&x| {
            let f = mix.density(x);
            if f <= 0.0 || !f.is_finite() {
                return 1.0;
            }
            let t = null.pi0 * null.density(x) / f;
            if t.is_nan() {
                1.0
            } else {
                t.clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Two-stage selection on local fdr values.
///
/// Stage 1 finds the smallest rank `k_s` whose upper-tail sum of `1 - T`
/// drops to `p (1 - pi0) delta_p`; stage 2 keeps the largest prefix of the
/// screened set whose running mean fdr stays within `delta_p`, with
/// `delta_p = min(p, 1 / ln p)`. Boundary ties are kept (the set rules use
/// inclusive comparisons).
pub fn two_stage_select(
    t_values: &[f64],
    pi0_hat: f64,
    scores: &[FeatureScore],
) -> Result<SelectionResult> {
    let p = t_values.len();
    if p < 3 {
        return Err(CoreError::Size { min: 3, got: p });
    }
    if scores.len() != p {
        return Err(CoreError::input(format!(
            "{} fdr values but {} scores",
            p,
            scores.len()
        )));
    }
    let order = argsort_stable(t_values);
    let sorted: Vec<f64> = order.iter().map(|&j| t_values[j]).collect();
    let delta_p = (p as f64).min(1.0 / (p as f64).ln());
    let bound = p as f64 * (1.0 - pi0_hat) * delta_p;

    // stage 1: smallest rank whose upper-tail sum of (1 - T) fits the bound
    let mut k_s = p;
    let mut tail = 0.0;
    for j in (1..=p).rev() {
        tail += 1.0 - sorted[j - 1];
        if tail <= bound {
            k_s = j;
        } else {
            break;
        }
    }

    // stage 2: largest prefix of the screened ranks with mean fdr <= delta_p
    let mut k_d = 0;
    let mut prefix = 0.0;
    for j in 1..=k_s {
        prefix += sorted[j - 1];
        if prefix / j as f64 <= delta_p {
            k_d = j;
        }
    }

    let (selected, alpha0_hat) = if k_d == 0 {
        (Vec::new(), None)
    } else {
        let t_kd = sorted[k_d - 1];
        let selected: Vec<usize> = (0..p).filter(|&j| t_values[j] <= t_kd).collect();
        let alpha0 = selected
            .iter()
            .map(|&j| scores[j].score)
            .fold(f64::INFINITY, f64::min);
        (selected, Some(alpha0))
    };

    Ok(SelectionResult {
        t_values: t_values.to_vec(),
        k_s,
        k_d,
        selected,
        alpha0_hat,
        delta_p,
    })
}

/// Full data-driven pipeline: psi statistics, empirical null, mixture
/// density, local fdr, two-stage selection.
///
/// Works down to a few dozen features, but the null fit and the histogram
/// density stabilize from a couple hundred features up.
pub fn data_driven_alpha(
    scores: &[FeatureScore],
    truncation_q: f64,
    config: &DataDrivenConfig,
) -> Result<SelectionResult> {
    data_driven_alpha_detailed(scores, truncation_q, config).map(|(sel, _)| sel)
}

/// Like [`data_driven_alpha`], also handing back the fitted null model.
pub fn data_driven_alpha_detailed(
    scores: &[FeatureScore],
    truncation_q: f64,
    config: &DataDrivenConfig,
) -> Result<(SelectionResult, NullModel)> {
    let psi = compute_psi(scores)?;
    let floor = config
        .pi0_floor
        .unwrap_or(if (truncation_q - 0.9).abs() < 1e-12 { 0.9 } else { 0.0 });
    let null = fit_empirical_null(&psi, truncation_q, floor)?;
    let mix = lindsey_density(&psi, config.bins, config.degree)?;
    let t = local_fdr(&null, &mix, &psi);
    let selection = two_stage_select(&t, null.pi0, scores)?;
    Ok((selection, null))
}
