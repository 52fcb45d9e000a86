//! Gaussian and Student-t copula sampling with arbitrary marginals.

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

use crate::error::{CoreError, Result};
use crate::simgen::dist::DistributionSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum CopulaKind {
    Gaussian,
    StudentT { dof: f64 },
}

/// Elliptical copula: a correlation matrix plus the family.
#[derive(Debug, Clone)]
pub struct CopulaSpec {
    pub kind: CopulaKind,
    /// Symmetric, unit-diagonal, positive definite (checked by Cholesky).
    pub correlation: Vec<Vec<f64>>,
}

impl CopulaSpec {
    /// Equicorrelation matrix with `rho` off the diagonal.
    pub fn equicorrelated(kind: CopulaKind, k: usize, rho: f64) -> Self {
        let correlation = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        CopulaSpec { kind, correlation }
    }
}

/// Lower-triangular Cholesky factor; fails on non-positive-definite input.
fn cholesky(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = matrix.len();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(CoreError::input("correlation matrix must be square"));
        }
        if (row[i] - 1.0).abs() > 1e-12 {
            return Err(CoreError::input("correlation matrix must have unit diagonal"));
        }
        for j in 0..k {
            if (row[j] - matrix[j][i]).abs() > 1e-12 {
                return Err(CoreError::input("correlation matrix must be symmetric"));
            }
        }
    }
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = matrix[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(CoreError::input(
                        "correlation matrix is not positive definite",
                    ));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Draws `n` rows from the copula and maps each coordinate through its
/// marginal quantile function. Returns `k` columns of length `n`.
pub fn sample_copula<R: Rng>(
    spec: &CopulaSpec,
    marginals: &[DistributionSpec],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let k = marginals.len();
    if spec.correlation.len() != k {
        return Err(CoreError::input(format!(
            "correlation is {}x{} but {k} marginals were given",
            spec.correlation.len(),
            spec.correlation.len()
        )));
    }
    for m in marginals {
        m.validate()?;
    }
    let l = cholesky(&spec.correlation)?;
    let normal = rand_distr::StandardNormal;
    let std_normal = statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal");

    let mut columns = vec![Vec::with_capacity(n); k];
    let mut z = vec![0.0; k];
    for _ in 0..n {
        let g: Vec<f64> = (0..k).map(|_| normal.sample(rng)).collect();
        for i in 0..k {
            z[i] = (0..=i).map(|m| l[i][m] * g[m]).sum();
        }
        match spec.kind {
            CopulaKind::Gaussian => {
                for i in 0..k {
                    let u = clamp_unit(std_normal.cdf(z[i]));
                    columns[i].push(marginals[i].quantile(u)?);
                }
            }
            CopulaKind::StudentT { dof } => {
                let chi2: f64 = rand_distr::ChiSquared::new(dof)
                    .map_err(|e| CoreError::input(format!("t copula dof: {e}")))?
                    .sample(rng);
                let scale = (dof / chi2).sqrt();
                let t_dist = statrs::distribution::StudentsT::new(0.0, 1.0, dof)
                    .map_err(|e| CoreError::input(format!("t copula dof: {e}")))?;
                for i in 0..k {
                    let u = clamp_unit(t_dist.cdf(z[i] * scale));
                    columns[i].push(marginals[i].quantile(u)?);
                }
            }
        }
    }
    Ok(columns)
}

#[inline]
fn clamp_unit(u: f64) -> f64 {
    u.clamp(1e-15, 1.0 - 1e-15)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::substream_rng;

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        cov / (va * vb).sqrt()
    }

    #[test]
    fn identity_correlation_gives_independent_columns() {
        let spec = CopulaSpec::equicorrelated(CopulaKind::Gaussian, 3, 0.0);
        let marginals = vec![DistributionSpec::standard_gaussian(); 3];
        let mut rng = substream_rng(10, 0);
        let cols = sample_copula(&spec, &marginals, 10_000, &mut rng).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let r = correlation(&cols[i], &cols[j]);
                assert!(r.abs() < 3.0 / 100.0, "corr({i},{j}) = {r}");
            }
        }
    }

    #[test]
    fn gaussian_copula_recovers_target_correlation() {
        let spec = CopulaSpec::equicorrelated(CopulaKind::Gaussian, 2, 0.9);
        let marginals = vec![DistributionSpec::standard_gaussian(); 2];
        let mut rng = substream_rng(11, 0);
        let cols = sample_copula(&spec, &marginals, 10_000, &mut rng).unwrap();
        let r = correlation(&cols[0], &cols[1]);
        assert!((r - 0.9).abs() < 0.03, "corr = {r}");
    }

    #[test]
    fn t_copula_kendall_tau_matches_closed_form() {
        let rho = 0.8;
        let spec = CopulaSpec::equicorrelated(CopulaKind::StudentT { dof: 2.0 }, 2, rho);
        let marginals = vec![DistributionSpec::standard_gaussian(); 2];
        let mut rng = substream_rng(12, 0);
        let n = 4000;
        let cols = sample_copula(&spec, &marginals, n, &mut rng).unwrap();
        // Kendall's tau of an elliptical copula: (2/pi) arcsin(rho)
        let mut concordant = 0i64;
        let mut discordant = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                let s = (cols[0][i] - cols[0][j]) * (cols[1][i] - cols[1][j]);
                if s > 0.0 {
                    concordant += 1;
                } else if s < 0.0 {
                    discordant += 1;
                }
            }
        }
        let tau = (concordant - discordant) as f64 / (concordant + discordant) as f64;
        let expect = 2.0 / std::f64::consts::PI * rho.asin();
        assert!((tau - expect).abs() < 0.05, "tau = {tau}, expected {expect}");
    }

    #[test]
    fn non_psd_matrix_rejected() {
        let spec = CopulaSpec {
            kind: CopulaKind::Gaussian,
            correlation: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        };
        let marginals = vec![DistributionSpec::standard_gaussian(); 2];
        let mut rng = substream_rng(13, 0);
        assert!(sample_copula(&spec, &marginals, 10, &mut rng).is_err());
    }
}
