//! Pairwise projection screening: feature pairs that carry cluster
//! information only jointly reveal it when the standardized pair is
//! projected onto a grid of unit directions and scored univariately.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::merge::score_feature;

/// Unit directions covering a half-circle. The mirrored half adds nothing:
/// scores are invariant under negation of the projected column.
#[derive(Debug, Clone)]
pub struct DirectionGrid {
    pub m: usize,
    /// Strictly increasing angles in [0, pi).
    pub angles: Vec<f64>,
    pub directions: Vec<[f64; 2]>,
}

/// `m` directions at angles `pi (k - 1) / m`, `k = 1..m`.
pub fn direction_grid(m: usize) -> Result<DirectionGrid> {
    if m < 2 {
        return Err(CoreError::input(format!("need at least 2 directions, got {m}")));
    }
    let angles: Vec<f64> = (0..m)
        .map(|k| std::f64::consts::PI * k as f64 / m as f64)
        .collect();
    let directions = angles.iter().map(|&a| [a.cos(), a.sin()]).collect();
    Ok(DirectionGrid {
        m,
        angles,
        directions,
    })
}

/// Best projected score of one feature pair.
#[derive(Debug, Clone, Copy)]
pub struct PairScore {
    /// 0-based feature indices, `i < j`.
    pub i: usize,
    pub j: usize,
    /// Max over grid directions of the projected clustering score.
    pub score: f64,
    /// The direction achieving the max (first such, scanning the grid).
    pub u_star: [f64; 2],
}

fn standardize(x: &[f64], which: &str) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return Err(CoreError::input(format!(
            "cannot standardize {which}: zero or non-finite variance"
        )));
    }
    let sd = var.sqrt();
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

/// Scores the pair `(xi, xj)`: both columns are standardized, projected onto
/// every grid direction, and scored; the best direction wins.
pub fn pair_score(
    pair: (usize, usize),
    xi: &[f64],
    xj: &[f64],
    grid: &DirectionGrid,
) -> Result<PairScore> {
    if xi.len() != xj.len() {
        return Err(CoreError::input(format!(
            "pair columns disagree in length: {} vs {}",
            xi.len(),
            xj.len()
        )));
    }
    if xi.len() < 2 {
        return Err(CoreError::Size { min: 2, got: xi.len() });
    }
    let zi = standardize(xi, "left column")?;
    let zj = standardize(xj, "right column")?;

    let mut best = f64::NEG_INFINITY;
    let mut best_dir = grid.directions[0];
    let mut projected = vec![0.0; zi.len()];
    for dir in &grid.directions {
        for (out, (a, b)) in projected.iter_mut().zip(zi.iter().zip(&zj)) {
            *out = dir[0] * a + dir[1] * b;
        }
        let s = score_feature(&projected)?.score;
        if s > best {
            best = s;
            best_dir = *dir;
        }
    }
    Ok(PairScore {
        i: pair.0,
        j: pair.1,
        score: best,
        u_star: best_dir,
    })
}

/// All `p (p-1) / 2` pair scores, computed in parallel and returned in
/// lexicographic `(i, j)` order.
pub fn pairwise_scores(columns: &[Vec<f64>], m: usize) -> Result<Vec<PairScore>> {
    let grid = direction_grid(m)?;
    let p = columns.len();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| pair_score((i, j), &columns[i], &columns[j], &grid))
        .collect()
}

/// Applies the joint selection rule at one threshold: the marginal screen
/// plus, for every passing pair, both features when no component of the best
/// direction dominates, or only the dominant feature when one component
/// magnitude reaches 0.95.
pub fn apply_pair_rule(
    marginal_scores: &[f64],
    pair_scores: &[PairScore],
    alpha0: f64,
) -> Result<BTreeSet<usize>> {
    if !(alpha0 > 0.0 && alpha0 <= 0.5) {
        return Err(CoreError::input(format!(
            "alpha0 must be in (0, 0.5], got {alpha0}"
        )));
    }
    let mut selected: BTreeSet<usize> = marginal_scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= alpha0)
        .map(|(j, _)| j)
        .collect();
    for ps in pair_scores {
        if ps.score < alpha0 {
            continue;
        }
        let (ui, uj) = (ps.u_star[0].abs(), ps.u_star[1].abs());
        if ui >= 0.95 {
            selected.insert(ps.i);
        } else if uj >= 0.95 {
            selected.insert(ps.j);
        } else {
            selected.insert(ps.i);
            selected.insert(ps.j);
        }
    }
    Ok(selected)
}

/// Marginal screen joined with the pairwise screen over all feature pairs.
pub fn pairwise_screen(columns: &[Vec<f64>], alpha0: f64, m: usize) -> Result<BTreeSet<usize>> {
    let marginals: Vec<f64> = columns
        .iter()
        .map(|c| score_feature(c).map(|s| s.score))
        .collect::<Result<_>>()?;
    let pairs = if columns.len() < 2 {
        Vec::new()
    } else {
        pairwise_scores(columns, m)?
    };
    apply_pair_rule(&marginals, &pairs, alpha0)
}
