//! Exhaustive enumeration of feasible allocations, and the greedy primal
//! heuristic.

use std::time::Instant;

use rand::Rng;

use super::report::{BoundReport, Status};
use crate::error::{Error, Result};
use crate::model::{MipInstance, WeightMatrix};

/// Largest number of allocations the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

/// Number of `y` with `0 <= y_c <= u_c` and `Σy = N`, saturating just above
/// `cap`.
pub fn count_allocations(inst: &MipInstance, cap: u128) -> u128 {
    let n = inst.n as usize;
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for &u in &inst.upper_bounds {
        let u = u as usize;
        let mut next = vec![0u128; n + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            let mut acc: u128 = 0;
            for take in 0..=u.min(k) {
                acc = acc.saturating_add(ways[k - take]);
            }
            *slot = acc.min(cap + 1);
        }
        ways = next;
    }
    ways[n]
}

/// Exact optimum by enumerating every feasible allocation.
pub fn brute_force_oracle(inst: &MipInstance) -> Result<BoundReport> {
    inst.check_feasible()?;
    let count = count_allocations(inst, ORACLE_LIMIT);
    if count > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ORACLE_LIMIT,
        });
    }
    let start = Instant::now();
    let nl = inst.n_lambda();
    // suffix capacity decides whether a partial allocation can still be completed
    let mut suffix = vec![0u64; nl + 1];
    for c in (0..nl).rev() {
        suffix[c] = suffix[c + 1] + inst.upper_bounds[c] as u64;
    }

    struct Walk<'a> {
        inst: &'a MipInstance,
        suffix: Vec<u64>,
        y: Vec<u32>,
        sums: Vec<f64>,
        best: f64,
        best_y: Vec<u32>,
        visited: u64,
    }

    impl Walk<'_> {
        fn go(&mut self, c: usize, remaining: u32) {
            if remaining == 0 {
                self.visited += 1;
                let v = self.sums.iter().copied().fold(f64::INFINITY, f64::min);
                if v > self.best {
                    self.best = v;
                    self.best_y.clone_from(&self.y);
                }
                return;
            }
            if c == self.y.len() || self.suffix[c] < remaining as u64 {
                return;
            }
            let max_take = self.inst.upper_bounds[c].min(remaining);
            let row = self.inst.weights.row(c);
            for take in (0..=max_take).rev() {
                if take > 0 {
                    for (s, w) in self.sums.iter_mut().zip(row) {
                        *s += take as f64 * w;
                    }
                }
                self.y[c] = take;
                self.go(c + 1, remaining - take);
                if take > 0 {
                    for (s, w) in self.sums.iter_mut().zip(row) {
                        *s -= take as f64 * w;
                    }
                }
            }
            self.y[c] = 0;
        }
    }

    let mut walk = Walk {
        inst,
        suffix,
        y: vec![0; nl],
        sums: vec![0.0; inst.n_gamma()],
        best: f64::NEG_INFINITY,
        best_y: vec![0; nl],
        visited: 0,
    };
    walk.go(0, inst.n);

    let y = walk.best_y;
    let value = inst.objective(&y);
    Ok(BoundReport::new(
        inst,
        value,
        y,
        Vec::new(),
        value,
        0.0,
        walk.visited,
        start.elapsed(),
        Status::Optimal,
    ))
}

/// Adds one unit at a time to the candidate that maximizes the resulting
/// minimum row sum (ties to the lowest index) until N units are placed.
pub fn greedy_incumbent(inst: &MipInstance) -> Result<(Vec<u32>, f64)> {
    inst.check_feasible()?;
    let nl = inst.n_lambda();
    let mut y = vec![0u32; nl];
    let mut sums = vec![0.0; inst.n_gamma()];
    for _ in 0..inst.n {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..nl {
            if y[c] >= inst.upper_bounds[c] {
                continue;
            }
            let v = sums
                .iter()
                .zip(inst.weights.row(c))
                .map(|(s, w)| s + w)
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((c, v));
            }
        }
        let (c, _) = best.expect("feasibility checked above");
        y[c] += 1;
        for (s, w) in sums.iter_mut().zip(inst.weights.row(c)) {
            *s += w;
        }
    }
    let value = inst.objective(&y);
    Ok((y, value))
}

/// Random instance with weights uniform in `[-1, 1)`, up to the given sizes,
/// in binary or integer mode with equal odds. Used for solver cross-checks.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_lambda: usize,
    max_gamma: usize,
    max_n: u32,
) -> MipInstance {
    let n = rng.gen_range(1..=max_n.max(1));
    let nl = rng.gen_range((n as usize).max(2)..=max_lambda.max(n as usize).max(2));
    let ng = rng.gen_range(1..=max_gamma.max(1));
    let rows: Vec<Vec<f64>> = (0..nl)
        .map(|_| (0..ng).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let cap = if rng.gen_bool(0.5) { 1 } else { n };
    let weights = WeightMatrix::from_rows(&rows).expect("rows are rectangular and finite");
    MipInstance::from_matrix(weights, vec![cap; nl], n).expect("capacity covers N")
}
