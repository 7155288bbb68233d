//! Best-bound-first branch-and-bound over bounded integer allocations.
//!
//! Every node is a box `lo <= y <= hi`. Nodes with at most one free unit are
//! solved exactly by a scan over candidates; all others are bounded by the
//! sort-based Lagrangian bound, with λ improved by projected subgradient
//! steps and warm-started from the parent. Each subgradient iterate also
//! yields a feasible allocation, which feeds the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::dual::{dual_bound, project_simplex};
use super::oracle::greedy_incumbent;
use super::report::{BoundReport, Status};
use crate::error::{Error, Result};
use crate::model::MipInstance;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

// non-improving iterations before the step multiplier halves
const ROOT_PATIENCE: usize = 50;
const NODE_PATIENCE: usize = 5;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Absolute optimality tolerance on `bound − incumbent`.
    pub tolerance: f64,
    pub time_limit: Option<Duration>,
    /// Stop early once the open-node gap falls to this absolute value.
    pub gap_limit: Option<f64>,
    /// Subgradient iterations for the root certificate.
    pub root_iterations: usize,
    /// Subgradient iterations per node.
    pub node_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: DEFAULT_TOLERANCE,
            time_limit: None,
            gap_limit: None,
            root_iterations: 2000,
            node_iterations: 20,
        }
    }
}

/// Solves `inst` to within `opts.tolerance`.
pub fn solve_bnb(inst: &MipInstance, opts: &SolveOptions) -> Result<BoundReport> {
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tolerance
        )));
    }
    inst.check_feasible()?;
    Search::new(inst, opts).run()
}

/// A bound change on one column, chained back to the root.
struct Change {
    col: u32,
    lo: u32,
    hi: u32,
    parent: Option<Rc<Change>>,
}

struct Node {
    bound: f64,
    id: u64,
    changes: Option<Rc<Change>>,
    warm: Rc<[(u32, f64)]>,
    col: usize,
    threshold: u32,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: highest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

enum Eval {
    /// Solved exactly; the incumbent already reflects it.
    Closed,
    /// Bound does not beat the incumbent.
    Pruned(f64),
    Infeasible,
    Open {
        bound: f64,
        warm: Rc<[(u32, f64)]>,
        col: usize,
        threshold: u32,
    },
}

struct Lagrangian {
    bound: f64,
    lambda: Vec<f64>,
    pruned: bool,
    /// Average allocation of free units over the iterations.
    avg: Vec<f64>,
}

struct Search<'a> {
    inst: &'a MipInstance,
    opts: &'a SolveOptions,
    nl: usize,
    ng: usize,
    /// Weights stored row-major by constraint site.
    wt: Vec<f64>,
    inc_value: f64,
    inc_y: Vec<u32>,
    nodes: u64,
    proven_upper: f64,
    next_id: u64,
    lo: Vec<u32>,
    hi: Vec<u32>,
    stamp: Vec<u64>,
    stamp_now: u64,
    base: Vec<f64>,
    sums: Vec<f64>,
    scores: Vec<f64>,
    active: Vec<u32>,
    order: Vec<u32>,
    scratch: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a MipInstance, opts: &'a SolveOptions) -> Self {
        let nl = inst.n_lambda();
        let ng = inst.n_gamma();
        Search {
            inst,
            opts,
            nl,
            ng,
            wt: inst.weights.transposed(),
            inc_value: f64::NEG_INFINITY,
            inc_y: vec![0; nl],
            nodes: 0,
            proven_upper: f64::NEG_INFINITY,
            next_id: 0,
            lo: vec![0; nl],
            hi: inst.upper_bounds.clone(),
            stamp: vec![0; nl],
            stamp_now: 0,
            base: vec![0.0; ng],
            sums: vec![0.0; ng],
            scores: vec![0.0; nl],
            active: Vec::with_capacity(nl),
            order: Vec::with_capacity(nl),
            scratch: Vec::with_capacity(ng),
        }
    }

    fn run(mut self) -> Result<BoundReport> {
        let start = Instant::now();
        let (y, v) = greedy_incumbent(self.inst)?;
        self.inc_value = v;
        self.inc_y = y;

        // Root certificate: full subgradient run, no early exit.
        self.load_bounds(&None);
        self.prepare_node();
        let uniform = vec![1.0 / self.ng as f64; self.ng];
        let root = self.lagrangian(&uniform, self.opts.root_iterations, false);
        let root_lambda = root.lambda.clone();

        let mut heap = BinaryHeap::new();
        self.nodes += 1;
        let root_eval = if self.free_units() >= 2 {
            self.finish_lagrangian(root)
        } else {
            self.evaluate(&sparse(&root_lambda))
        };
        self.absorb(root_eval, None, &mut heap);

        let mut status = Status::Optimal;
        while let Some(node) = heap.pop() {
            if node.bound <= self.inc_value + self.opts.tolerance {
                self.proven_upper = self.proven_upper.max(node.bound);
                continue;
            }
            if let Some(limit) = self.opts.gap_limit {
                if node.bound - self.inc_value <= limit {
                    heap.push(node);
                    status = Status::GapLimit;
                    break;
                }
            }
            if self.opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
                heap.push(node);
                status = Status::TimeLimit;
                break;
            }
            self.branch(&node, &mut heap);
        }

        let open_upper = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
        let value = self.inst.objective(&self.inc_y);
        let upper = self.proven_upper.max(open_upper);
        let gap = if upper.is_finite() { (upper - value).max(0.0) } else { 0.0 };
        let certified = dual_bound(self.inst, &root_lambda)?;
        Ok(BoundReport::new(
            self.inst,
            value,
            self.inc_y,
            root_lambda,
            certified,
            gap,
            self.nodes,
            start.elapsed(),
            status,
        ))
    }

    fn branch(&mut self, node: &Node, heap: &mut BinaryHeap<Node>) {
        self.load_bounds(&node.changes);
        let (col, threshold) = (node.col, node.threshold);
        let (lo, hi) = (self.lo[col], self.hi[col]);
        // include child first: it tends to produce incumbents
        for (clo, chi) in [(threshold + 1, hi), (lo, threshold)] {
            let change = Rc::new(Change {
                col: col as u32,
                lo: clo,
                hi: chi,
                parent: node.changes.clone(),
            });
            let chain = Some(change);
            self.load_bounds(&chain);
            self.prepare_node();
            self.nodes += 1;
            let eval = self.evaluate(&node.warm);
            self.absorb(eval, chain, heap);
        }
    }

    fn absorb(&mut self, eval: Eval, changes: Option<Rc<Change>>, heap: &mut BinaryHeap<Node>) {
        match eval {
            Eval::Closed | Eval::Infeasible => {}
            Eval::Pruned(b) => self.proven_upper = self.proven_upper.max(b),
            Eval::Open {
                bound,
                warm,
                col,
                threshold,
            } => {
                let id = self.next_id;
                self.next_id += 1;
                heap.push(Node {
                    bound,
                    id,
                    changes,
                    warm,
                    col,
                    threshold,
                });
            }
        }
    }

    fn load_bounds(&mut self, changes: &Option<Rc<Change>>) {
        self.lo.iter_mut().for_each(|v| *v = 0);
        self.hi.copy_from_slice(&self.inst.upper_bounds);
        self.stamp_now += 1;
        let mut cur = changes.as_ref();
        while let Some(ch) = cur {
            let c = ch.col as usize;
            if self.stamp[c] != self.stamp_now {
                self.stamp[c] = self.stamp_now;
                self.lo[c] = ch.lo;
                self.hi[c] = ch.hi;
            }
            cur = ch.parent.as_ref();
        }
    }

    /// Fills `base` (row sums of fixed units) and the list of columns with
    /// spare capacity.
    fn prepare_node(&mut self) {
        self.base.iter_mut().for_each(|v| *v = 0.0);
        self.active.clear();
        for c in 0..self.nl {
            if self.lo[c] > 0 {
                let k = self.lo[c] as f64;
                for (b, w) in self.base.iter_mut().zip(self.inst.weights.row(c)) {
                    *b += k * w;
                }
            }
            if self.hi[c] > self.lo[c] {
                self.active.push(c as u32);
            }
        }
    }

    fn fixed_units(&self) -> u64 {
        self.lo.iter().map(|&v| v as u64).sum()
    }

    fn free_units(&self) -> i64 {
        self.inst.n as i64 - self.fixed_units() as i64
    }

    fn evaluate(&mut self, warm: &[(u32, f64)]) -> Eval {
        let r = self.free_units();
        let spare: u64 = self.active.iter().map(|&c| (self.hi[c as usize] - self.lo[c as usize]) as u64).sum();
        if r < 0 || (spare as i64) < r {
            return Eval::Infeasible;
        }
        match r {
            0 => {
                let v = self.base.iter().copied().fold(f64::INFINITY, f64::min);
                let y = self.lo.clone();
                self.offer(y, v);
                Eval::Closed
            }
            1 => {
                self.complete_one();
                Eval::Closed
            }
            _ => {
                let lambda = dense(warm, self.ng);
                let lag = self.lagrangian(&lambda, self.opts.node_iterations, true);
                self.finish_lagrangian(lag)
            }
        }
    }

    /// Exact solution of a node with one free unit.
    fn complete_one(&mut self) {
        let mut best: Option<(usize, f64)> = None;
        for &c in &self.active {
            let c = c as usize;
            let floor = best.map_or(self.inc_value, |(_, b)| b.max(self.inc_value));
            let row = self.inst.weights.row(c);
            let mut m = f64::INFINITY;
            for (b, w) in self.base.iter().zip(row) {
                let v = b + w;
                if v < m {
                    m = v;
                    if m <= floor {
                        break;
                    }
                }
            }
            if m > floor {
                best = Some((c, m));
            }
        }
        if let Some((c, v)) = best {
            let mut y = self.lo.clone();
            y[c] += 1;
            self.offer(y, v);
        }
    }

    fn offer(&mut self, y: Vec<u32>, value: f64) {
        if value > self.inc_value {
            self.inc_value = value;
            self.inc_y = y;
        }
    }

    /// Projected subgradient descent on the Lagrangian dual of the current
    /// node. Steps follow a Polyak rule aimed at the incumbent, with the step
    /// multiplier halved after a run of iterations without improvement.
    fn lagrangian(&mut self, start: &[f64], iterations: usize, allow_prune: bool) -> Lagrangian {
        let patience = if allow_prune { NODE_PATIENCE } else { ROOT_PATIENCE };
        let r = self.free_units() as u32;
        let mut lambda = start.to_vec();
        let mut best_lambda = lambda.clone();
        let mut best = f64::INFINITY;
        let mut avg = vec![0.0; self.nl];
        let mut theta = 1.0;
        let mut stall = 0;
        let mut done = 0usize;
        let mut alloc: Vec<(usize, u32)> = Vec::with_capacity(r as usize);

        for _ in 0..iterations.max(1) {
            let phi = self.inner_max(&lambda, r, &mut alloc);
            if phi < best {
                if phi < best - 1e-15 {
                    stall = 0;
                }
                best = phi;
                best_lambda.copy_from_slice(&lambda);
            } else {
                stall += 1;
                if stall >= patience {
                    theta *= 0.5;
                    stall = 0;
                }
            }
            done += 1;
            for &(c, k) in &alloc {
                avg[c] += k as f64;
            }

            // subgradient = row sums of the maximizing allocation, which is
            // also a feasible solution
            self.sums.copy_from_slice(&self.base);
            for &(c, k) in &alloc {
                let k = k as f64;
                for (s, w) in self.sums.iter_mut().zip(self.inst.weights.row(c)) {
                    *s += k * w;
                }
            }
            let primal = self.sums.iter().copied().fold(f64::INFINITY, f64::min);
            if primal > self.inc_value {
                let mut y = self.lo.clone();
                for &(c, k) in &alloc {
                    y[c] += k;
                }
                self.offer(y, primal);
            }

            if allow_prune && best <= self.inc_value + self.opts.tolerance {
                return Lagrangian {
                    bound: best,
                    lambda: best_lambda,
                    pruned: true,
                    avg,
                };
            }

            let mean = self.sums.iter().sum::<f64>() / self.ng as f64;
            let norm2: f64 = self.sums.iter().map(|s| (s - mean) * (s - mean)).sum();
            if norm2 < 1e-30 {
                break;
            }
            let target = self.inc_value.min(phi - 1e-12).max(primal);
            let step = theta * (phi - target).max(1e-12) / norm2;
            for (l, s) in lambda.iter_mut().zip(&self.sums) {
                *l -= step * (s - mean);
            }
            project_simplex(&mut lambda, &mut self.scratch);
        }

        for a in avg.iter_mut() {
            *a /= done as f64;
        }
        let pruned = allow_prune && best <= self.inc_value + self.opts.tolerance;
        Lagrangian {
            bound: best,
            lambda: best_lambda,
            pruned,
            avg,
        }
    }

    /// `λ·base + (best r free units by aggregated score)`; fills `alloc` with
    /// the maximizing free allocation.
    fn inner_max(&mut self, lambda: &[f64], r: u32, alloc: &mut Vec<(usize, u32)>) -> f64 {
        self.scores.iter_mut().for_each(|s| *s = 0.0);
        for (p, &l) in lambda.iter().enumerate() {
            if l > 0.0 {
                let row = &self.wt[p * self.nl..(p + 1) * self.nl];
                for (s, w) in self.scores.iter_mut().zip(row) {
                    *s += l * w;
                }
            }
        }
        let scores = &self.scores;
        let by_score = |a: &u32, b: &u32| {
            scores[*b as usize]
                .total_cmp(&scores[*a as usize])
                .then(a.cmp(b))
        };
        self.order.clear();
        self.order.extend_from_slice(&self.active);
        let k = (r as usize).min(self.order.len());
        if k < self.order.len() {
            self.order.select_nth_unstable_by(k, by_score);
        }
        self.order[..k].sort_by(by_score);

        alloc.clear();
        let mut remaining = r;
        let mut value: f64 = lambda.iter().zip(&self.base).map(|(l, b)| l * b).sum();
        for &c in &self.order[..k] {
            if remaining == 0 {
                break;
            }
            let c = c as usize;
            let take = (self.hi[c] - self.lo[c]).min(remaining);
            value += take as f64 * self.scores[c];
            alloc.push((c, take));
            remaining -= take;
        }
        value
    }

    fn finish_lagrangian(&mut self, lag: Lagrangian) -> Eval {
        if lag.pruned || lag.bound <= self.inc_value + self.opts.tolerance {
            return Eval::Pruned(lag.bound);
        }
        // scores at the best λ drive the branching choice
        let mut alloc = Vec::new();
        let r = self.free_units() as u32;
        self.inner_max(&lag.lambda, r, &mut alloc);

        let min_score = self
            .active
            .iter()
            .map(|&c| self.scores[c as usize])
            .fold(f64::INFINITY, f64::min);
        let mut pick: Option<(usize, f64)> = None;
        for &c in &self.active {
            let c = c as usize;
            let v = self.lo[c] as f64 + lag.avg[c];
            let frac = v - v.floor();
            let fractionality = frac.min(1.0 - frac);
            if fractionality <= 1e-9 {
                continue;
            }
            let key = (self.scores[c] - min_score + 1e-12) * fractionality;
            if pick.is_none_or(|(_, k)| key > k) {
                pick = Some((c, key));
            }
        }
        let (col, threshold) = match pick {
            Some((c, _)) => (c, (self.lo[c] as f64 + lag.avg[c]).floor() as u32),
            None => {
                // integral averages: branch on the best-scoring selected column
                let chosen = self
                    .active
                    .iter()
                    .map(|&c| c as usize)
                    .filter(|&c| lag.avg[c] > 0.0)
                    .chain(self.active.iter().map(|&c| c as usize))
                    .fold(None::<usize>, |acc, c| match acc {
                        Some(a) if self.scores[a] >= self.scores[c] => Some(a),
                        Some(a) if lag.avg[a] > 0.0 && lag.avg[c] == 0.0 => Some(a),
                        _ => Some(c),
                    })
                    .expect("open node has a free column");
                let v = (self.lo[chosen] as f64 + lag.avg[chosen]).round() as u32;
                (chosen, v.saturating_sub(1))
            }
        };
        let threshold = threshold.clamp(self.lo[col], self.hi[col] - 1);
        Eval::Open {
            bound: lag.bound,
            warm: sparse(&lag.lambda),
            col,
            threshold,
        }
    }
}

fn sparse(lambda: &[f64]) -> Rc<[(u32, f64)]> {
    lambda
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(i, &l)| (i as u32, l))
        .collect()
}

fn dense(warm: &[(u32, f64)], n: usize) -> Vec<f64> {
    if warm.is_empty() {
        return vec![1.0 / n as f64; n];
    }
    let mut v = vec![0.0; n];
    for &(i, l) in warm {
        v[i as usize] = l;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightMatrix;
    use crate::solver::oracle::brute_force_oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(rows: Vec<Vec<f64>>, u: Vec<u32>, n: u32) -> MipInstance {
        MipInstance::from_matrix(WeightMatrix::from_rows(&rows).unwrap(), u, n).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> MipInstance {
        let nl = rng.gen_range(2..9);
        let ng = rng.gen_range(1..7);
        let n = rng.gen_range(1..5);
        let rows = (0..nl)
            .map(|_| (0..ng).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let u = if rng.gen_bool(0.5) || nl < n as usize { vec![n; nl] } else { vec![1; nl] };
        inst(rows, u, n)
    }

    #[test]
    fn single_column_takes_all_units() {
        let r = solve_bnb(&inst(vec![vec![0.4, 0.9, 0.6]], vec![3], 3), &SolveOptions::default()).unwrap();
        assert_eq!(r.y, vec![3]);
        assert!((r.value - 1.2).abs() < 1e-12);
        assert_eq!(r.status, Status::Optimal);
    }

    #[test]
    fn dominant_column_is_selected() {
        let rows = vec![vec![0.1, 0.2], vec![5.0, 4.0], vec![0.3, 0.0]];
        let r = solve_bnb(&inst(rows, vec![2, 2, 2], 2), &SolveOptions::default()).unwrap();
        assert_eq!(r.y, vec![0, 2, 0]);
        assert_eq!(r.value, 8.0);
    }

    #[test]
    fn matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..300 {
            let inst = random_instance(&mut rng);
            let exact = brute_force_oracle(&inst).unwrap();
            let r = solve_bnb(&inst, &SolveOptions::default()).unwrap();
            assert!(
                (r.value - exact.value).abs() <= 1e-9,
                "case {case}: bnb {} oracle {}",
                r.value,
                exact.value
            );
            assert_eq!(r.value, inst.objective(&r.y));
            assert_eq!(r.y.iter().sum::<u32>(), inst.n);
            assert!(r.y.iter().zip(&inst.upper_bounds).all(|(y, u)| y <= u));
            // the root λ certifies an upper bound
            assert!(r.dual_bound >= exact.value - 1e-9, "case {case}");
            assert!((r.dual_lambda.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_instance(&mut rng);
        let a = solve_bnb(&inst, &SolveOptions::default()).unwrap();
        let b = solve_bnb(&inst, &SolveOptions::default()).unwrap();
        assert_eq!((a.y, a.value, a.dual_lambda, a.nodes_explored), (b.y, b.value, b.dual_lambda, b.nodes_explored));
    }

    #[test]
    fn adding_a_column_never_lowers_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let base = random_instance(&mut rng);
            let mut rows: Vec<Vec<f64>> = (0..base.n_lambda()).map(|c| base.weights.row(c).to_vec()).collect();
            rows.push((0..base.n_gamma()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let mut u = base.upper_bounds.clone();
            u.push(base.n);
            let bigger = inst(rows, u, base.n);
            let a = solve_bnb(&base, &SolveOptions::default()).unwrap().value;
            let b = solve_bnb(&bigger, &SolveOptions::default()).unwrap().value;
            assert!(b >= a - 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let opts = SolveOptions { tolerance: 0.0, ..SolveOptions::default() };
        assert!(solve_bnb(&inst(vec![vec![1.0]], vec![1], 1), &opts).is_err());
    }
}
