//! Benchmark experiment designs with ground truth attached.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{DatasetMatrix, SignalLabels};
use crate::error::{CoreError, Result};
use crate::simgen::copula::{sample_copula, CopulaKind, CopulaSpec};
use crate::simgen::dist::DistributionSpec;
use crate::simgen::substream_rng;

/// Built-in experiment designs.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentDesign {
    /// p = 50, five signal features, Gaussian noise.
    I,
    /// p = 100, six signals, half Gaussian / half t5 noise.
    II,
    /// p = 5000, seven signals, exponential + Gaussian + t5 noise.
    III,
    /// p = 25000, nine signals, Cauchy-heavy noise mix.
    IV,
    /// p = 25, a jointly-bimodal pair plus two bimodal singles.
    V,
    /// Design V with copula-correlated signal/noise blocks.
    CorrV,
    /// Single noise column from the given family (threshold calibration).
    Calib(DistributionSpec),
}

impl ExperimentDesign {
    pub fn parse(id: &str) -> Result<Self> {
        match id.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ExperimentDesign::I),
            "II" | "2" => Ok(ExperimentDesign::II),
            "III" | "3" => Ok(ExperimentDesign::III),
            "IV" | "4" => Ok(ExperimentDesign::IV),
            "V" | "5" => Ok(ExperimentDesign::V),
            "CORR_V" | "CORR-V" | "CORRV" => Ok(ExperimentDesign::CorrV),
            other => {
                if let Some(fam) = other
                    .strip_prefix("CALIB(")
                    .and_then(|s| s.strip_suffix(')'))
                {
                    Ok(ExperimentDesign::Calib(DistributionSpec::from_id(
                        &fam.to_ascii_lowercase(),
                    )?))
                } else {
                    Err(CoreError::input(format!("unknown design '{id}'")))
                }
            }
        }
    }

    /// True pair the pairwise screen is expected to recover, if any.
    pub fn joint_pair(&self) -> Option<(usize, usize)> {
        match self {
            ExperimentDesign::V | ExperimentDesign::CorrV => Some((0, 1)),
            _ => None,
        }
    }
}

fn signal_x1() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (0.5, DistributionSpec::Beta { a: 4.0, b: 6.0 }),
        (0.5, DistributionSpec::Beta { a: 7.0, b: 3.0 }),
    ])
}

fn signal_x2() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (
            0.5,
            DistributionSpec::LogNormal {
                log_mean: 0.2,
                log_sd: 0.35,
            },
        ),
        (0.5, DistributionSpec::Gaussian { mean: 4.0, sd: 0.5 }),
    ])
}

fn signal_x3() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (
            0.5,
            DistributionSpec::Laplace {
                location: 3.0,
                scale: 1.5,
            },
        ),
        (
            0.5,
            DistributionSpec::Laplace {
                location: 5.0,
                scale: 1.5,
            },
        ),
    ])
}

fn signal_x6() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (0.3, DistributionSpec::Gaussian { mean: -2.5, sd: 1.0 }),
        (0.3, DistributionSpec::Gaussian { mean: 0.0, sd: 1.0 }),
        (0.4, DistributionSpec::Gaussian { mean: 2.5, sd: 1.0 }),
    ])
}

fn signal_x7() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (0.5, DistributionSpec::Gaussian { mean: -1.1, sd: 1.0 }),
        (0.5, DistributionSpec::Gaussian { mean: 1.1, sd: 1.0 }),
    ])
}

fn signal_x8() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (
            0.3,
            DistributionSpec::Laplace {
                location: -3.0,
                scale: 1.0,
            },
        ),
        (
            0.35,
            DistributionSpec::Laplace {
                location: 0.0,
                scale: 1.0,
            },
        ),
        (
            0.35,
            DistributionSpec::Laplace {
                location: 3.0,
                scale: 1.0,
            },
        ),
    ])
}

fn signal_x9() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (0.3, DistributionSpec::Beta { a: 8.0, b: 2.0 }),
        (0.35, DistributionSpec::Beta { a: 5.0, b: 5.0 }),
        (0.35, DistributionSpec::Beta { a: 2.0, b: 8.0 }),
    ])
}

/// Marginal of each coordinate of the design-V bivariate pair.
fn corr_v_pair_marginal() -> DistributionSpec {
    DistributionSpec::mixture(vec![
        (0.5, DistributionSpec::Gaussian { mean: 0.9, sd: 1.0 }),
        (0.5, DistributionSpec::Gaussian { mean: -0.9, sd: 1.0 }),
    ])
}

/// Equal-weight four-component bivariate normal block used for (X4, X5) of
/// designs I-IV: means (0,0), (0,-4), (4,0), (4,-4); correlation -0.85 on
/// the outer components and +0.85 on the inner two.
fn sample_biv4<R: Rng>(n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<u32>, Vec<u32>) {
    const MEANS: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, -4.0], [4.0, 0.0], [4.0, -4.0]];
    const RHOS: [f64; 4] = [-0.85, 0.85, 0.85, -0.85];
    let normal = rand_distr::StandardNormal;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut lx = Vec::with_capacity(n);
    let mut ly = Vec::with_capacity(n);
    for _ in 0..n {
        let comp = rng.random_range(0..4usize);
        let z1: f64 = rand_distr::Distribution::sample(&normal, rng);
        let z2: f64 = rand_distr::Distribution::sample(&normal, rng);
        let rho = RHOS[comp];
        xs.push(MEANS[comp][0] + z1);
        ys.push(MEANS[comp][1] + rho * z1 + (1.0 - rho * rho).sqrt() * z2);
        // per-coordinate cluster labels: x splits at mean 0 vs 4, y at 0 vs -4
        lx.push(u32::from(comp >= 2));
        ly.push(u32::from(comp % 2 == 1));
    }
    (xs, ys, lx, ly)
}

/// Two-component bivariate normal pair of design V: means (0.9, -0.9) and
/// (-0.9, 0.9), within-component correlation 0.9. Marginally near-unimodal,
/// jointly bimodal.
fn sample_biv2<R: Rng>(n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    let normal = rand_distr::StandardNormal;
    let rho: f64 = 0.9;
    let root = (1.0 - rho * rho).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let comp = u32::from(rng.random::<bool>());
        let sign = if comp == 0 { 1.0 } else { -1.0 };
        let z1: f64 = rand_distr::Distribution::sample(&normal, rng);
        let z2: f64 = rand_distr::Distribution::sample(&normal, rng);
        xs.push(sign * 0.9 + z1);
        ys.push(-sign * 0.9 + rho * z1 + root * z2);
        labels.push(comp);
    }
    (xs, ys, labels)
}

/// Generated columns: `(column index, values, optional component labels)`.
type ColumnBatch = Vec<(usize, Vec<f64>, Option<Vec<u32>>)>;

/// One unit of column generation; each task owns one RNG substream keyed by
/// its first column index, so parallel generation is order-independent.
enum Task {
    Column {
        col: usize,
        spec: DistributionSpec,
        labeled: bool,
    },
    Biv4 {
        cols: (usize, usize),
    },
    Biv2 {
        cols: (usize, usize),
    },
    Copula {
        cols: Vec<usize>,
        copula: CopulaSpec,
        marginals: Vec<DistributionSpec>,
    },
}

impl Task {
    fn first_col(&self) -> usize {
        match self {
            Task::Column { col, .. } => *col,
            Task::Biv4 { cols } | Task::Biv2 { cols } => cols.0,
            Task::Copula { cols, .. } => cols[0],
        }
    }

    fn run(&self, n: usize, seed: u64) -> Result<ColumnBatch> {
        let mut rng = substream_rng(seed, self.first_col() as u64);
        match self {
            Task::Column { col, spec, labeled } => {
                spec.validate()?;
                if *labeled {
                    let mut values = Vec::with_capacity(n);
                    let mut labels = Vec::with_capacity(n);
                    for _ in 0..n {
                        let (x, l) = spec.sample_labeled(&mut rng);
                        values.push(x);
                        labels.push(l);
                    }
                    Ok(vec![(*col, values, Some(labels))])
                } else {
                    let values = (0..n).map(|_| spec.sample_one(&mut rng)).collect();
                    Ok(vec![(*col, values, None)])
                }
            }
            Task::Biv4 { cols } => {
                let (xs, ys, lx, ly) = sample_biv4(n, &mut rng);
                Ok(vec![(cols.0, xs, Some(lx)), (cols.1, ys, Some(ly))])
            }
            Task::Biv2 { cols } => {
                let (xs, ys, labels) = sample_biv2(n, &mut rng);
                Ok(vec![
                    (cols.0, xs, Some(labels.clone())),
                    (cols.1, ys, Some(labels)),
                ])
            }
            Task::Copula {
                cols,
                copula,
                marginals,
            } => {
                let sampled = sample_copula(copula, marginals, n, &mut rng)?;
                Ok(cols
                    .iter()
                    .zip(sampled)
                    .map(|(&c, v)| (c, v, None))
                    .collect())
            }
        }
    }
}

struct DesignPlan {
    p: usize,
    signal_count: usize,
    tasks: Vec<Task>,
    /// (family description, column count) in column order.
    blocks: Vec<(String, usize)>,
    /// Signal features whose tasks emit labels.
    labeled_signals: bool,
}

fn noise_run(tasks: &mut Vec<Task>, start: usize, count: usize, spec: DistributionSpec) {
    for col in start..start + count {
        tasks.push(Task::Column {
            col,
            spec: spec.clone(),
            labeled: false,
        });
    }
}

fn plan(design: &ExperimentDesign) -> DesignPlan {
    let gauss = DistributionSpec::standard_gaussian();
    let t5 = DistributionSpec::StudentT { dof: 5.0 };
    let exp1 = DistributionSpec::Exponential { rate: 1.0 };
    match design {
        ExperimentDesign::I => {
            let mut tasks = vec![
                Task::Column { col: 0, spec: signal_x1(), labeled: true },
                Task::Column { col: 1, spec: signal_x2(), labeled: true },
                Task::Column { col: 2, spec: signal_x3(), labeled: true },
                Task::Biv4 { cols: (3, 4) },
            ];
            noise_run(&mut tasks, 5, 45, gauss);
            DesignPlan {
                p: 50,
                signal_count: 5,
                tasks,
                blocks: vec![("signal".into(), 5), ("gaussian".into(), 45)],
                labeled_signals: true,
            }
        }
        ExperimentDesign::II => {
            let mut tasks = vec![
                Task::Column { col: 0, spec: signal_x1(), labeled: true },
                Task::Column { col: 1, spec: signal_x2(), labeled: true },
                Task::Column { col: 2, spec: signal_x3(), labeled: true },
                Task::Biv4 { cols: (3, 4) },
                Task::Column { col: 5, spec: signal_x6(), labeled: true },
            ];
            noise_run(&mut tasks, 6, 47, gauss);
            noise_run(&mut tasks, 53, 47, t5);
            DesignPlan {
                p: 100,
                signal_count: 6,
                tasks,
                blocks: vec![
                    ("signal".into(), 6),
                    ("gaussian".into(), 47),
                    ("t5".into(), 47),
                ],
                labeled_signals: true,
            }
        }
        ExperimentDesign::III => {
            let p = 5000;
            let p_n = p - 7;
            // non-integral proportions are rounded down, remainder Gaussian
            let n_exp = (0.4 * p_n as f64).floor() as usize;
            let n_t5 = (0.3 * p_n as f64).floor() as usize;
            let n_gauss = p_n - n_exp - n_t5;
            let mut tasks = vec![
                Task::Column { col: 0, spec: signal_x1(), labeled: true },
                Task::Column { col: 1, spec: signal_x2(), labeled: true },
                Task::Column { col: 2, spec: signal_x3(), labeled: true },
                Task::Biv4 { cols: (3, 4) },
                Task::Column { col: 5, spec: signal_x6(), labeled: true },
                Task::Column { col: 6, spec: signal_x7(), labeled: true },
            ];
            noise_run(&mut tasks, 7, n_exp, exp1);
            noise_run(&mut tasks, 7 + n_exp, n_gauss, gauss);
            noise_run(&mut tasks, 7 + n_exp + n_gauss, n_t5, t5);
            DesignPlan {
                p,
                signal_count: 7,
                tasks,
                blocks: vec![
                    ("signal".into(), 7),
                    ("exponential".into(), n_exp),
                    ("gaussian".into(), n_gauss),
                    ("t5".into(), n_t5),
                ],
                labeled_signals: true,
            }
        }
        ExperimentDesign::IV => {
            let p = 25_000;
            let p_n = p - 9;
            let n_cauchy = (0.28 * p_n as f64).floor() as usize;
            let n_t5 = (0.24 * p_n as f64).floor() as usize;
            let n_exp = (0.24 * p_n as f64).floor() as usize;
            let n_gauss = p_n - n_cauchy - n_t5 - n_exp;
            let mut tasks = vec![
                Task::Column { col: 0, spec: signal_x1(), labeled: true },
                Task::Column { col: 1, spec: signal_x2(), labeled: true },
                Task::Column { col: 2, spec: signal_x3(), labeled: true },
                Task::Biv4 { cols: (3, 4) },
                Task::Column { col: 5, spec: signal_x6(), labeled: true },
                Task::Column { col: 6, spec: signal_x7(), labeled: true },
                Task::Column { col: 7, spec: signal_x8(), labeled: true },
                Task::Column { col: 8, spec: signal_x9(), labeled: true },
            ];
            let mut at = 9;
            noise_run(&mut tasks, at, n_cauchy, DistributionSpec::Cauchy);
            at += n_cauchy;
            noise_run(&mut tasks, at, n_gauss, gauss);
            at += n_gauss;
            noise_run(&mut tasks, at, n_t5, t5);
            at += n_t5;
            noise_run(&mut tasks, at, n_exp, exp1);
            DesignPlan {
                p,
                signal_count: 9,
                tasks,
                blocks: vec![
                    ("signal".into(), 9),
                    ("cauchy".into(), n_cauchy),
                    ("gaussian".into(), n_gauss),
                    ("t5".into(), n_t5),
                    ("exponential".into(), n_exp),
                ],
                labeled_signals: true,
            }
        }
        ExperimentDesign::V => {
            let mut tasks = vec![
                Task::Biv2 { cols: (0, 1) },
                Task::Column { col: 2, spec: signal_x1(), labeled: true },
                Task::Column { col: 3, spec: signal_x2(), labeled: true },
            ];
            noise_run(&mut tasks, 4, 21, gauss);
            DesignPlan {
                p: 25,
                signal_count: 4,
                tasks,
                blocks: vec![("signal".into(), 4), ("gaussian".into(), 21)],
                labeled_signals: true,
            }
        }
        ExperimentDesign::CorrV => {
            // Design V marginals, with two dependence blocks: a Gaussian
            // copula (rho 0.9) tying the pair (X1, X2) to ten Gaussian noise
            // features, and a t copula (2 dof, rho 0.8) tying (X3, X4) to the
            // remaining eleven.
            let block_a_cols: Vec<usize> = [0usize, 1].iter().copied().chain(4..14).collect();
            let mut marg_a = vec![corr_v_pair_marginal(), corr_v_pair_marginal()];
            marg_a.extend(std::iter::repeat_n(gauss.clone(), 10));
            let block_b_cols: Vec<usize> = [2usize, 3].iter().copied().chain(14..25).collect();
            let mut marg_b = vec![signal_x1(), signal_x2()];
            marg_b.extend(std::iter::repeat_n(gauss.clone(), 11));
            let tasks = vec![
                Task::Copula {
                    cols: block_a_cols,
                    copula: CopulaSpec::equicorrelated(CopulaKind::Gaussian, 12, 0.9),
                    marginals: marg_a,
                },
                Task::Copula {
                    cols: block_b_cols,
                    copula: CopulaSpec::equicorrelated(CopulaKind::StudentT { dof: 2.0 }, 13, 0.8),
                    marginals: marg_b,
                },
            ];
            DesignPlan {
                p: 25,
                signal_count: 4,
                tasks,
                blocks: vec![
                    ("gaussian-copula block".into(), 12),
                    ("t-copula block".into(), 13),
                ],
                labeled_signals: false,
            }
        }
        ExperimentDesign::Calib(spec) => DesignPlan {
            p: 1,
            signal_count: 0,
            tasks: vec![Task::Column {
                col: 0,
                spec: spec.clone(),
                labeled: false,
            }],
            blocks: vec![("calibration noise".into(), 1)],
            labeled_signals: false,
        },
    }
}

/// Generates one replicate of a design. Identical `(design, n, seed)` yield
/// bit-identical matrices regardless of thread count.
pub fn sample_experiment(design: &ExperimentDesign, n: usize, seed: u64) -> Result<DatasetMatrix> {
    if n < 2 {
        return Err(CoreError::Size { min: 2, got: n });
    }
    let plan = plan(design);
    let pieces: Vec<ColumnBatch> = plan
        .tasks
        .par_iter()
        .map(|t| t.run(n, seed))
        .collect::<Result<_>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); plan.p];
    let mut label_slots: Vec<Option<Vec<u32>>> = vec![None; plan.p];
    for (col, values, labels) in pieces.into_iter().flatten() {
        columns[col] = values;
        label_slots[col] = labels;
    }

    let signal_set: BTreeSet<usize> = (0..plan.signal_count).collect();
    let labels = if plan.labeled_signals {
        Some(
            signal_set
                .iter()
                .map(|&feature| SignalLabels {
                    feature,
                    labels: label_slots[feature].take().expect("signal labels present"),
                })
                .collect(),
        )
    } else {
        None
    };

    let mut matrix = DatasetMatrix::from_columns(columns, seed);
    matrix.signal_set = Some(signal_set);
    matrix.labels = labels;
    matrix.blocks = plan.blocks;
    Ok(matrix)
}
