//! Estimate/truth pairing and the RMSE aggregate.

use afdm_core::{Target64, TargetEstimate};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// How per-target squared errors are folded into one number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseKind {
    /// `(1/P)·√Σ e_i²`.
    #[default]
    ScaledRoot,
    /// `√((1/P)·Σ e_i²)`.
    RootMean,
}

pub fn rmse(errors: &[f64], kind: RmseKind) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let p = errors.len() as f64;
    let sum: f64 = errors.iter().map(|e| e * e).sum();
    match kind {
        RmseKind::ScaledRoot => sum.sqrt() / p,
        RmseKind::RootMean => (sum / p).sqrt(),
    }
}

/// Minimum-cost one-to-one assignment by exhaustive search. `cost[i][j]` is
/// the cost of matching row `i` to column `j`; returns the column of every
/// row. Ties go to the lexicographically first permutation.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut [bool], cur: &mut Vec<usize>, acc: f64, best: &mut (f64, Vec<usize>)) {
        if acc >= best.0 {
            return;
        }
        if row == cost.len() {
            *best = (acc, cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(cost, row + 1, used, cur, acc + cost[row][j], best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, (0..cost.len()).collect());
    let mut used = vec![false; cost.len()];
    go(cost, 0, &mut used, &mut Vec::with_capacity(cost.len()), 0.0, &mut best);
    best.1
}

/// Truth index for every estimate, minimizing the summed squared error in
/// normalized `(ℓ, ν)` coordinates.
pub fn pair(estimates: &[TargetEstimate<f64>], truths: &[Target64]) -> Result<Vec<usize>> {
    if estimates.len() != truths.len() {
        return Err(BenchError::CountMismatch {
            estimates: estimates.len(),
            truths: truths.len(),
        });
    }
    let cost: Vec<Vec<f64>> = estimates
        .iter()
        .map(|e| {
            truths
                .iter()
                .map(|t| {
                    let dl = e.ell as f64 - t.ell as f64;
                    let dn = e.nu - t.nu;
                    dl * dl + dn * dn
                })
                .collect()
        })
        .collect();
    Ok(min_cost_assignment(&cost))
}

pub fn rmse_velocity(estimates: &[TargetEstimate<f64>], truths: &[Target64], kind: RmseKind) -> Result<f64> {
    let matched = pair(estimates, truths)?;
    let errors: Vec<f64> = estimates
        .iter()
        .zip(&matched)
        .map(|(e, &t)| e.velocity - truths[t].velocity)
        .collect();
    Ok(rmse(&errors, kind))
}

pub fn rmse_range(estimates: &[TargetEstimate<f64>], truths: &[Target64], kind: RmseKind) -> Result<f64> {
    let matched = pair(estimates, truths)?;
    let errors: Vec<f64> = estimates
        .iter()
        .zip(&matched)
        .map(|(e, &t)| e.range - truths[t].range)
        .collect();
    Ok(rmse(&errors, kind))
}
