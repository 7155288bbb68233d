//! Sort-based Lagrangian bound for the max-min program.
//!
//! For any probability vector λ over Γ, `min_p (Wᵀy)_p <= λᵀWᵀy`, so
//! maximizing the right-hand side over feasible `y` bounds the optimum. The
//! inner maximum is a knapsack with unit weights: fill the N units greedily
//! with the best aggregated scores `Σ_p λ_p W[c][p]`, respecting capacities.

use crate::error::{Error, Result};
use crate::model::MipInstance;

/// Allowed deviation of `Σλ` from one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Upper bound on the optimum of `inst` certified by `lambda`.
pub fn dual_bound(inst: &MipInstance, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != inst.n_gamma() {
        return Err(Error::InvalidArgument(format!(
            "lambda has {} entries, instance has {} constraint sites",
            lambda.len(),
            inst.n_gamma()
        )));
    }
    if lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("lambda must be nonnegative and finite".into()));
    }
    let total: f64 = lambda.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidArgument(format!("lambda sums to {total}, expected 1")));
    }
    inst.check_feasible()?;

    let scores: Vec<f64> = (0..inst.n_lambda())
        .map(|c| {
            inst.weights
                .row(c)
                .iter()
                .zip(lambda)
                .map(|(w, l)| w * l)
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut remaining = inst.n;
    let mut bound = 0.0;
    for c in order {
        if remaining == 0 {
            break;
        }
        let take = inst.upper_bounds[c].min(remaining);
        bound += take as f64 * scores[c];
        remaining -= take;
    }
    Ok(bound)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub(crate) fn project_simplex(v: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend_from_slice(v);
    scratch.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in scratch.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // renormalize away rounding drift
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}
