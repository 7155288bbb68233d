//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use polarize::Point;

/// `exp(-a r²)` evaluated directly.
pub fn gauss(a: f64, r: f64) -> f64 {
    (-a * r * r).exp()
}

pub fn potential(a: f64, lamps: &[Point], p: Point) -> f64 {
    lamps.iter().map(|c| gauss(a, c.dist(p))).sum()
}

/// Best `min_p Σ_c y_c w[c][p]` over `y_c ∈ {0..cap}`, `Σy = n`, by plain
/// enumeration.
pub fn enumerate(w: &[Vec<f64>], cap: u32, n: u32) -> f64 {
    fn go(w: &[Vec<f64>], cap: u32, c: usize, left: u32, sums: &mut Vec<f64>, best: &mut f64) {
        if left == 0 {
            let m = sums.iter().copied().fold(f64::INFINITY, f64::min);
            *best = best.max(m);
            return;
        }
        if c == w.len() {
            return;
        }
        for take in 0..=cap.min(left) {
            for (s, x) in sums.iter_mut().zip(&w[c]) {
                *s += take as f64 * x;
            }
            go(w, cap, c + 1, left - take, sums, best);
            for (s, x) in sums.iter_mut().zip(&w[c]) {
                *s -= take as f64 * x;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(w, cap, 0, n, &mut vec![0.0; w[0].len()], &mut best);
    best
}

/// Uniform point in the triangle `a, b, c` by folding the unit square.
pub fn triangle_sample(a: Point, b: Point, c: Point, mut u: f64, mut v: f64) -> Point {
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    a + u * (b - a) + v * (c - a)
}
