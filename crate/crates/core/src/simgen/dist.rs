//! Univariate distribution specs: sampling, CDFs, and quantile functions.

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

use crate::error::{CoreError, Result};

/// A marginal law. Mixtures nest arbitrary component specs with positive
/// weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Gaussian { mean: f64, sd: f64 },
    StudentT { dof: f64 },
    /// Standard Cauchy, sampled by the tangent transform.
    Cauchy,
    Exponential { rate: f64 },
    /// Sampled as the difference of two unit exponentials.
    Laplace { location: f64, scale: f64 },
    LogNormal { log_mean: f64, log_sd: f64 },
    Beta { a: f64, b: f64 },
    /// Generalized extreme value with location 0 and scale 1, sampled by
    /// inverse CDF.
    Gev { shape: f64 },
    /// Sampled by inverse CDF.
    Triangular { min: f64, mode: f64, max: f64 },
    Mixture(Vec<(f64, DistributionSpec)>),
}

impl DistributionSpec {
    pub fn standard_gaussian() -> Self {
        DistributionSpec::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn mixture(components: Vec<(f64, DistributionSpec)>) -> Self {
        DistributionSpec::Mixture(components)
    }

    /// Parses a short family id as used by the calibration front-end.
    pub fn from_id(id: &str) -> Result<Self> {
        use DistributionSpec::*;
        Ok(match id {
            "gaussian" | "normal" => Gaussian { mean: 0.0, sd: 1.0 },
            "t1" | "student_t1" => StudentT { dof: 1.0 },
            "t5" | "student_t5" => StudentT { dof: 5.0 },
            "cauchy" => Cauchy,
            "exponential" | "exp" => Exponential { rate: 1.0 },
            "laplace" => Laplace {
                location: 0.0,
                scale: 1.0,
            },
            "lognormal" => LogNormal {
                log_mean: 0.0,
                log_sd: 1.0,
            },
            "beta13" | "beta" => Beta { a: 1.0, b: 3.0 },
            "gev" => Gev { shape: 0.8 },
            "triangular" => Triangular {
                min: 0.0,
                mode: 0.8,
                max: 1.0,
            },
            other => {
                return Err(CoreError::input(format!(
                    "unknown distribution id '{other}'"
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        let bad = |msg: String| Err(CoreError::Input(msg));
        match self {
            Gaussian { sd, .. } if *sd <= 0.0 => bad(format!("gaussian sd {sd} must be > 0")),
            StudentT { dof } if *dof <= 0.0 => bad(format!("t dof {dof} must be > 0")),
            Exponential { rate } if *rate <= 0.0 => bad(format!("rate {rate} must be > 0")),
            Laplace { scale, .. } if *scale <= 0.0 => bad(format!("scale {scale} must be > 0")),
            LogNormal { log_sd, .. } if *log_sd <= 0.0 => {
                bad(format!("lognormal sd {log_sd} must be > 0"))
            }
            Beta { a, b } if *a <= 0.0 || *b <= 0.0 => {
                bad(format!("beta shapes ({a}, {b}) must be > 0"))
            }
            Gev { shape } if *shape <= 0.0 => bad(format!("gev shape {shape} must be > 0")),
            Triangular { min, mode, max } if !(min <= mode && mode <= max && min < max) => {
                bad(format!("triangular ({min}, {mode}, {max}) out of order"))
            }
            Mixture(components) => {
                if components.is_empty() {
                    return bad("mixture needs at least one component".into());
                }
                let mut total = 0.0;
                for (w, spec) in components {
                    if *w <= 0.0 {
                        return bad(format!("mixture weight {w} must be positive"));
                    }
                    total += w;
                    spec.validate()?;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("mixture weights sum to {total}, expected 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Draws one value.
    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> f64 {
        self.sample_labeled(rng).0
    }

    /// Draws one value; for mixtures the second element is the top-level
    /// component index, zero otherwise.
    pub fn sample_labeled<R: Rng>(&self, rng: &mut R) -> (f64, u32) {
        use DistributionSpec::*;
        match self {
            Gaussian { mean, sd } => {
                let d = rand_distr::Normal::new(*mean, *sd).expect("validated");
                (d.sample(rng), 0)
            }
            StudentT { dof } => {
                let d = rand_distr::StudentT::new(*dof).expect("validated");
                (d.sample(rng), 0)
            }
            Cauchy => {
                let u: f64 = rng.random();
                ((std::f64::consts::PI * (u - 0.5)).tan(), 0)
            }
            Exponential { rate } => {
                let d = rand_distr::Exp::new(*rate).expect("validated");
                (d.sample(rng), 0)
            }
            Laplace { location, scale } => {
                let e1: f64 = rand_distr::Exp1.sample(rng);
                let e2: f64 = rand_distr::Exp1.sample(rng);
                (location + scale * (e1 - e2), 0)
            }
            LogNormal { log_mean, log_sd } => {
                let d = rand_distr::LogNormal::new(*log_mean, *log_sd).expect("validated");
                (d.sample(rng), 0)
            }
            Beta { a, b } => {
                let d = rand_distr::Beta::new(*a, *b).expect("validated");
                (d.sample(rng), 0)
            }
            Gev { shape } => {
                let u: f64 = rng.random();
                (((-u.ln()).powf(-shape) - 1.0) / shape, 0)
            }
            Triangular { min, mode, max } => {
                let u: f64 = rng.random();
                let span = max - min;
                let cut = (mode - min) / span;
                let x = if u < cut {
                    min + (u * span * (mode - min)).sqrt()
                } else {
                    max - ((1.0 - u) * span * (max - mode)).sqrt()
                };
                (x, 0)
            }
            Mixture(components) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let last = components.len() - 1;
                for (idx, (w, spec)) in components.iter().enumerate() {
                    acc += w;
                    if u < acc || idx == last {
                        return (spec.sample_one(rng), idx as u32);
                    }
                }
                unreachable!()
            }
        }
    }

    /// CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        match self {
            Gaussian { mean, sd } => statrs::distribution::Normal::new(*mean, *sd)
                .expect("validated")
                .cdf(x),
            StudentT { dof } => statrs::distribution::StudentsT::new(0.0, 1.0, *dof)
                .expect("validated")
                .cdf(x),
            Cauchy => 0.5 + x.atan() / std::f64::consts::PI,
            Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
            Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            LogNormal { log_mean, log_sd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::distribution::Normal::new(*log_mean, *log_sd)
                        .expect("validated")
                        .cdf(x.ln())
                }
            }
            Beta { a, b } => statrs::distribution::Beta::new(*a, *b)
                .expect("validated")
                .cdf(x),
            Gev { shape } => {
                let t = 1.0 + shape * x;
                if t <= 0.0 {
                    0.0
                } else {
                    (-t.powf(-1.0 / shape)).exp()
                }
            }
            Triangular { min, mode, max } => {
                if x <= *min {
                    0.0
                } else if x >= *max {
                    1.0
                } else if x <= *mode {
                    (x - min).powi(2) / ((max - min) * (mode - min))
                } else {
                    1.0 - (max - x).powi(2) / ((max - min) * (max - mode))
                }
            }
            Mixture(components) => components.iter().map(|(w, s)| w * s.cdf(x)).sum(),
        }
    }

    /// Quantile function at `u` in (0, 1). Closed form where available,
    /// bisection on the CDF for mixtures.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) || u == 0.0 {
            return Err(CoreError::input(format!(
                "quantile level {u} outside (0, 1)"
            )));
        }
        use DistributionSpec::*;
        Ok(match self {
            Gaussian { mean, sd } => statrs::distribution::Normal::new(*mean, *sd)
                .expect("validated")
                .inverse_cdf(u),
            StudentT { dof } => statrs::distribution::StudentsT::new(0.0, 1.0, *dof)
                .expect("validated")
                .inverse_cdf(u),
            Cauchy => (std::f64::consts::PI * (u - 0.5)).tan(),
            Exponential { rate } => -(1.0 - u).ln() / rate,
            Laplace { location, scale } => {
                if u < 0.5 {
                    location + scale * (2.0 * u).ln()
                } else {
                    location - scale * (2.0 * (1.0 - u)).ln()
                }
            }
            LogNormal { log_mean, log_sd } => statrs::distribution::Normal::new(*log_mean, *log_sd)
                .expect("validated")
                .inverse_cdf(u)
                .exp(),
            Beta { a, b } => statrs::distribution::Beta::new(*a, *b)
                .expect("validated")
                .inverse_cdf(u),
            Gev { shape } => ((-u.ln()).powf(-shape) - 1.0) / shape,
            Triangular { min, mode, max } => {
                let span = max - min;
                let cut = (mode - min) / span;
                if u < cut {
                    min + (u * span * (mode - min)).sqrt()
                } else {
                    max - ((1.0 - u) * span * (max - mode)).sqrt()
                }
            }
            Mixture(_) => self.quantile_bisect(u),
        })
    }

    fn quantile_bisect(&self, u: f64) -> f64 {
        let mut lo = -1.0;
        let mut hi = 1.0;
        while self.cdf(lo) > u {
            lo *= 2.0;
        }
        while self.cdf(hi) < u {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `n` i.i.d. draws.
pub fn sample_distribution<R: Rng>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..n).map(|_| spec.sample_one(rng)).collect())
}

/// `n` i.i.d. draws with top-level mixture component indicators.
pub fn sample_distribution_labeled<R: Rng>(
    spec: &DistributionSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<u32>)> {
    spec.validate()?;
    let mut values = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, l) = spec.sample_labeled(rng);
        values.push(x);
        labels.push(l);
    }
    Ok((values, labels))
}
