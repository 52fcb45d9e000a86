//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it completes at the stated tolerance. Oracles live in `support` and stay
//! independent of the library implementation.

mod support;

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cosci_core::fdr::{
    compute_psi, data_driven_alpha, fit_empirical_null, lindsey_density, two_stage_select,
    DataDrivenConfig, PsiStats,
};
use cosci_core::interactions::{apply_pair_rule, pairwise_scores};
use cosci_core::merge::{clustering_score, merge_path, score_feature, sort_feature, FeatureScore};
use cosci_core::metrics::{cer, confusion_counts};
use cosci_core::screening::{detection_table, screen_fixed, ThresholdSpec};
use cosci_core::simgen::{sample_experiment, substream_rng, DistributionSpec, ExperimentDesign};

/// Random small input mixing continuous values, lattice values (duplicates
/// and tied gaps), and near-constant columns.
fn small_input(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(2..=8usize);
    match rng.random_range(0..4u8) {
        0 => (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect(),
        1 => (0..n).map(|_| rng.random_range(0..5) as f64).collect(),
        2 => (0..n).map(|_| rng.random_range(0..=2) as f64 * 3.5).collect(),
        _ => {
            let base = rng.random::<f64>();
            (0..n)
                .map(|_| {
                    if rng.random::<bool>() {
                        base
                    } else {
                        base + rng.random::<f64>()
                    }
                })
                .collect()
        }
    }
}

/// Replays the engine trace against the directly minimized fusion path:
/// zero-distance merges must realize the duplicate fusions of the zero-
/// penalty limit, and every later merge must land inside the lambda bracket
/// of its oracle fusion event, producing identical partitions throughout.
fn verify_against_path_oracle(values: &[f64]) {
    let sorted = sort_feature(values).unwrap();
    let trace = merge_path(&sorted);
    let (initial, fusions) = support::fusion_path(sorted.values());
    let n = sorted.len();
    let full: u32 = if n == 1 { 0 } else { (1u32 << (n - 1)) - 1 };

    let apply = |bounds: u32, left_start: u32, left_size: u32| -> u32 {
        let bit = 1u32 << (left_start + left_size - 1);
        assert!(bounds & bit != 0, "engine merged an already-fused pair");
        bounds & !bit
    };

    // centroid averages of 3+ equal values can be off by an ulp, so the
    // zero-penalty phase is "distance within rounding of zero"
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_eps = 1e-9 * (1.0 + max_abs);

    let mut bounds = full;
    let mut idx = 0;
    while idx < trace.events.len() && trace.events[idx].distance <= zero_eps {
        let e = &trace.events[idx];
        bounds = apply(bounds, e.left_start, e.left_size);
        idx += 1;
    }
    assert_eq!(
        bounds, initial,
        "zero-distance merges disagree with the zero-penalty partition for {values:?}"
    );

    // simultaneous fusions close at different slopes, so the oracle's
    // level-set tolerance can split one multi-merge into brackets a few
    // grouping-tolerances apart; coalesce brackets that close together
    let mut groups: Vec<support::OracleFusion> = Vec::new();
    for f in fusions {
        match groups.last_mut() {
            Some(last) if f.lambda_lo - last.lambda_hi <= 1e-4 * (1.0 + last.lambda_hi.abs()) => {
                last.lambda_hi = f.lambda_hi;
                last.after = f.after;
            }
            _ => groups.push(f),
        }
    }

    for fusion in &groups {
        assert_eq!(bounds, fusion.before, "partition drift for {values:?}");
        let tol = 1e-5 * (1.0 + fusion.lambda_hi.abs());
        while bounds != fusion.after {
            assert!(
                idx < trace.events.len(),
                "engine ran out of merges inside a fusion bracket for {values:?}"
            );
            let e = &trace.events[idx];
            idx += 1;
            let lambda = 2.0 * e.distance;
            assert!(
                lambda >= fusion.lambda_lo - tol && lambda <= fusion.lambda_hi + tol,
                "merge at lambda {lambda} outside bracket [{}, {}] for {values:?}",
                fusion.lambda_lo,
                fusion.lambda_hi
            );
            let bit = 1u32 << (e.left_start + e.left_size - 1);
            assert_eq!(
                fusion.after & bit,
                0,
                "engine merged a pair the oracle kept separate for {values:?}"
            );
            bounds = apply(bounds, e.left_start, e.left_size);
        }
    }
    assert_eq!(idx, trace.events.len(), "extra engine merges for {values:?}");
    assert_eq!(bounds, 0, "engine did not reach one cluster for {values:?}");
}

#[test]
fn criterion_1_path_oracle_equivalence() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..200 {
        let values = small_input(&mut rng);
        verify_against_path_oracle(&values);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 60,
        "path-oracle check took {elapsed:?}, budget is one minute"
    );
    println!("acceptance 1 path-oracle equivalence (200 inputs, {elapsed:?}): PASS");
}

fn mixed_family_column(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let spec = match rng.random_range(0..5u8) {
        0 => DistributionSpec::standard_gaussian(),
        1 => DistributionSpec::Exponential { rate: 1.0 },
        2 => DistributionSpec::StudentT { dof: 5.0 },
        3 => DistributionSpec::Beta { a: 1.0, b: 3.0 },
        _ => DistributionSpec::mixture(vec![
            (0.5, DistributionSpec::Gaussian { mean: -2.0, sd: 1.0 }),
            (0.5, DistributionSpec::Gaussian { mean: 2.0, sd: 1.0 }),
        ]),
    };
    (0..n).map(|_| spec.sample_one(rng)).collect()
}

#[test]
fn criterion_2_score_laws() {
    let cases: Vec<(u64, usize)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        (0..1000u64)
            .map(|i| {
                let log_n = rng.random::<f64>() * (10_000f64).ln();
                (i, (log_n.exp() as usize).clamp(2, 10_000))
            })
            .collect()
    };
    cases.par_iter().for_each(|&(i, n)| {
        let mut rng = substream_rng(203, i);
        let values = mixed_family_column(&mut rng, n);
        let base = merge_path(&sort_feature(&values).unwrap());
        let score = clustering_score(&base).unwrap().score;
        assert!(score > 0.0 && score <= 0.5, "score {score} out of (0, 0.5]");

        let key: Vec<(u32, u32, f64)> = base
            .events
            .iter()
            .map(|e| (e.left_size, e.right_size, e.alpha))
            .collect();
        for a in [0.5f64, 3.0, 10.0] {
            for b in [-5.0f64, 0.0, 7.0] {
                let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
                let t = merge_path(&sort_feature(&mapped).unwrap());
                let mapped_key: Vec<(u32, u32, f64)> = t
                    .events
                    .iter()
                    .map(|e| (e.left_size, e.right_size, e.alpha))
                    .collect();
                assert_eq!(key, mapped_key, "affine map a={a} b={b} changed the path");
                assert_eq!(score, clustering_score(&t).unwrap().score);
            }
        }
        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        assert_eq!(score, score_feature(&negated).unwrap().score);
    });
    println!("acceptance 2 score laws (1000 inputs, affine + negation bit-exact): PASS");
}

#[test]
fn criterion_3_calibration_spot_checks() {
    let started = std::time::Instant::now();
    let mut spec = ThresholdSpec::simulated();
    spec.reps = 200;

    let table = detection_table(500, &spec, 301).unwrap();
    let at_005 = table.iter().find(|(a, _)| *a == 0.05).unwrap().1;
    assert!(
        (at_005 - 0.67).abs() <= 0.15,
        "gaussian n=500 detection at 0.05: {at_005}, expected 0.67 +/- 0.15"
    );

    let table = detection_table(10_000, &spec, 302).unwrap();
    let at_005 = table.iter().find(|(a, _)| *a == 0.05).unwrap().1;
    assert!(
        at_005 <= 0.02,
        "gaussian n=10000 detection at 0.05: {at_005}, expected <= 0.02"
    );

    spec.noise_family = DistributionSpec::Beta { a: 1.0, b: 3.0 };
    let table = detection_table(100, &spec, 303).unwrap();
    let at_01 = table.iter().find(|(a, _)| *a == 0.1).unwrap().1;
    assert!(
        (at_01 - 0.78).abs() <= 0.15,
        "beta(1,3) n=100 detection at 0.1: {at_01}, expected 0.78 +/- 0.15"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 600, "calibration took {elapsed:?}");
    println!("acceptance 3 calibration spot checks (200 reps/cell, {elapsed:?}): PASS");
}

#[test]
fn criterion_4_experiment_i_desk_scale() {
    let started = std::time::Instant::now();
    let reps = 20u64;
    let mut dd = (0.0, 0.0);
    let mut fx = (0.0, 0.0);
    for rep in 0..reps {
        let m = sample_experiment(&ExperimentDesign::I, 1000, 400 + rep).unwrap();
        let truth = m.signal_set.clone().unwrap();
        let scores: Vec<FeatureScore> = m
            .columns
            .par_iter()
            .map(|c| score_feature(c).unwrap())
            .collect();

        let sel = data_driven_alpha(&scores, 0.9, &DataDrivenConfig::default()).unwrap();
        let set: BTreeSet<usize> = sel.selected.iter().copied().collect();
        let c = confusion_counts(&set, &truth, 50).unwrap();
        dd.0 += c.false_negatives as f64 / reps as f64;
        dd.1 += c.false_positives as f64 / reps as f64;

        let fixed = screen_fixed(&scores, 0.2).unwrap();
        let set: BTreeSet<usize> = fixed.selected.iter().copied().collect();
        let c = confusion_counts(&set, &truth, 50).unwrap();
        fx.0 += c.false_negatives as f64 / reps as f64;
        fx.1 += c.false_positives as f64 / reps as f64;
    }
    assert!(dd.0 <= 1.5, "data-driven avg FN {} > 1.5", dd.0);
    assert!(dd.1 <= 5.0, "data-driven avg FP {} > 5", dd.1);
    assert!(
        (fx.0 - 1.04).abs() <= 0.6,
        "fixed-0.2 avg FN {} outside 1.04 +/- 0.6",
        fx.0
    );
    assert!(
        (fx.1 - 1.68).abs() <= 1.5,
        "fixed-0.2 avg FP {} outside 1.68 +/- 1.5",
        fx.1
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 300, "experiment took {elapsed:?}");
    println!(
        "acceptance 4 benchmark I at n=1000 (data-driven FN {:.2} FP {:.2}; fixed FN {:.2} FP {:.2}; {elapsed:?}): PASS",
        dd.0, dd.1, fx.0, fx.1
    );
}

#[test]
fn criterion_5_experiment_v_pairwise() {
    // the benchmark's 20-point full-circle grid spans 10 distinct
    // projection lines, i.e. direction_grid(10) in half-circle form
    let grid = [0.05, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25];
    let reps = 10u64;
    let mut avg_fn = vec![0.0; grid.len()];
    let mut avg_fp = vec![0.0; grid.len()];
    for rep in 0..reps {
        let m = sample_experiment(&ExperimentDesign::V, 2000, 500 + rep).unwrap();
        let truth = m.signal_set.clone().unwrap();
        let marginals: Vec<f64> = m
            .columns
            .par_iter()
            .map(|c| score_feature(c).unwrap().score)
            .collect();
        let pairs = pairwise_scores(&m.columns, 10).unwrap();
        for (gi, &alpha) in grid.iter().enumerate() {
            let sel = apply_pair_rule(&marginals, &pairs, alpha).unwrap();
            let c = confusion_counts(&sel, &truth, 25).unwrap();
            avg_fn[gi] += c.false_negatives as f64 / reps as f64;
            avg_fp[gi] += c.false_positives as f64 / reps as f64;
        }
    }
    for (gi, &alpha) in grid.iter().enumerate() {
        assert_eq!(avg_fn[gi], 0.0, "avg FN at alpha {alpha} is {}", avg_fn[gi]);
    }
    for w in avg_fp.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "avg FP not non-increasing: {avg_fp:?}");
    }
    let fp_at_25 = avg_fp[grid.len() - 1];
    assert!(
        (fp_at_25 - 3.8).abs() <= 2.5,
        "avg FP at 0.25 is {fp_at_25}, expected 3.8 +/- 2.5"
    );
    println!(
        "acceptance 5 benchmark V pairwise (FN 0 everywhere, FP@0.25 {:.2}): PASS",
        fp_at_25
    );
}

#[test]
fn criterion_6_two_stage_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for case in 0..1000 {
        let log_p = rng.random::<f64>() * (10_000f64 / 3.0).ln();
        let p = ((3.0 * log_p.exp()) as usize).clamp(3, 10_000);
        let pi0 = 0.5 + 0.5 * rng.random::<f64>() * 0.999;
        let t: Vec<f64> = (0..p)
            .map(|_| match rng.random_range(0..10u8) {
                0 => 0.0,
                1 => 1.0,
                2 => 0.5, // repeated value: exercises boundary ties
                _ => rng.random::<f64>(),
            })
            .collect();
        let scores: Vec<FeatureScore> = (0..p)
            .map(|_| FeatureScore::new(0.5 * rng.random::<f64>().max(1e-9)))
            .collect();
        let raw: Vec<f64> = scores.iter().map(|s| s.score).collect();

        let got = two_stage_select(&t, pi0, &scores).unwrap();
        let want = support::two_stage_oracle(&t, pi0, &raw);
        assert_eq!(got.k_s, want.k_s, "case {case}: k_s");
        assert_eq!(got.k_d, want.k_d, "case {case}: k_d");
        assert_eq!(got.selected, want.selected, "case {case}: selected set");
        assert_eq!(got.alpha0_hat, want.alpha0_hat, "case {case}: alpha0");
    }
    println!("acceptance 6 two-stage selector vs direct formula oracle (1000 vectors): PASS");
}

#[test]
fn criterion_7_lindsey_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let uniform: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    let psi = psi_stats(uniform);
    let mix = lindsey_density(&psi, 60, 5).unwrap();
    let width = 1.0 / 60.0;
    let riemann: f64 = mix.fitted_density.iter().map(|d| d * width).sum();
    assert!((riemann - 1.0).abs() <= 0.02, "riemann sum {riemann}");
    for (b, d) in mix.fitted_density.iter().enumerate().skip(1).take(58) {
        assert!((d - 1.0).abs() <= 0.05, "uniform bin {b}: density {d}");
    }

    let beta = rand_distr::Beta::new(2.0, 5.0).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| beta.sample(&mut rng)).collect();
    let psi = psi_stats(draws);
    let mix = lindsey_density(&psi, 60, 7).unwrap();
    let truth = statrs::distribution::Beta::new(2.0, 5.0).unwrap();
    let mut worst = 0.0f64;
    for (c, d) in mix.bin_centers.iter().zip(&mix.fitted_density) {
        if (0.05..=0.95).contains(c) {
            worst = worst.max((d - statrs::distribution::Continuous::pdf(&truth, *c)).abs());
        }
    }
    assert!(worst <= 0.1, "beta(2,5) sup-norm error {worst}");
    println!("acceptance 7 density estimation (uniform flat, beta sup-err {worst:.3}): PASS");
}

fn psi_stats(values: Vec<f64>) -> PsiStats {
    let scores: Vec<FeatureScore> = values.iter().map(|&v| FeatureScore::new(v / 2.0)).collect();
    compute_psi(&scores).unwrap()
}

#[test]
fn criterion_8_empirical_null_fit() {
    let successes: usize = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = substream_rng(808, seed);
            let beta = rand_distr::Beta::new(1.0, 9.0).unwrap();
            let values: Vec<f64> = (0..2000).map(|_| beta.sample(&mut rng)).collect();
            let psi = psi_stats(values);
            let null = fit_empirical_null(&psi, 0.9, 0.0).unwrap();
            let ok = (0.8..=1.2).contains(&null.beta_a)
                && (7.0..=11.0).contains(&null.beta_b)
                && null.pi0 >= 0.9;
            usize::from(ok)
        })
        .sum();
    assert!(
        successes >= 45,
        "null recovered in only {successes}/50 seeds"
    );
    println!("acceptance 8 empirical-null fit ({successes}/50 seeds within bounds): PASS");
}

#[test]
fn criterion_10_metrics() {
    let v = cer(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
    assert_eq!(v, 2.0 / 3.0, "4-point CER must be exactly 2/3");

    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for _ in 0..200 {
        let n = rng.random_range(2..=50usize);
        let ka = rng.random_range(1..=5u32);
        let kb = rng.random_range(1..=5u32);
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        let fast = 1.0 - cer(&a, &b).unwrap();
        let slow = support::rand_index_pairs(&a, &b);
        assert!(
            (fast - slow).abs() < 1e-12,
            "contingency Rand {fast} vs pair enumeration {slow}"
        );
    }
    println!("acceptance 10 metrics (exact CER, 200 Rand-index oracle matches): PASS");
}
