//! Gaussian kernels, discrete potentials and the control-function family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SampleNet};

/// Absolute band inside which potentials count as tied when picking a
/// deterministic argmin.
pub const TIE_TOL: f64 = 1e-12;

/// Radial kernel `f(r) = exp(-a r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Gaussian { a: f64 },
}

impl PotentialSpec {
    pub fn gaussian(a: f64) -> Result<PotentialSpec> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian parameter a must be positive, got {a}"
            )));
        }
        Ok(PotentialSpec::Gaussian { a })
    }

    pub fn a(&self) -> f64 {
        match *self {
            PotentialSpec::Gaussian { a } => a,
        }
    }

    /// `f(r)` without the sign check; callers guarantee `r >= 0`.
    #[inline]
    pub fn f(&self, r: f64) -> f64 {
        (-self.a() * r * r).exp()
    }

    /// `f(0)`.
    pub fn peak(&self) -> f64 {
        1.0
    }

    /// Kernel value between two points.
    #[inline]
    pub fn kernel(&self, c: Point, p: Point) -> f64 {
        (-self.a() * c.dist_sq(p)).exp()
    }

    /// Largest value of `g(d, eps)` over all `d >= 0`, found by a grid scan
    /// refined with golden-section search.
    pub fn max_control(&self, eps: f64) -> f64 {
        let reach = 6.0 / self.a().sqrt() + eps;
        let steps = 400;
        let h = reach / steps as f64;
        let (mut best_d, mut best) = (0.0, control_g(self, 0.0, eps));
        for i in 1..=steps {
            let d = i as f64 * h;
            let v = control_g(self, d, eps);
            if v > best {
                best = v;
                best_d = d;
            }
        }
        let (mut lo, mut hi) = ((best_d - h).max(0.0), best_d + h);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if control_g(self, m1, eps) < control_g(self, m2, eps) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best.max(control_g(self, 0.5 * (lo + hi), eps))
    }
}

/// A multiset of lamp positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    points: Vec<Point>,
}

impl Configuration {
    pub fn new(points: Vec<Point>) -> Result<Configuration> {
        if points.is_empty() {
            return Err(Error::Empty("configuration has no points"));
        }
        Ok(Configuration { points })
    }

    /// Expands `(point, count)` pairs into a multiset.
    pub fn from_counts(counts: &[(Point, u32)]) -> Result<Configuration> {
        let points = counts
            .iter()
            .flat_map(|&(p, k)| std::iter::repeat_n(p, k as usize))
            .collect();
        Configuration::new(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distinct points with their multiplicities, in lexicographic order.
    pub fn counts(&self) -> Vec<(Point, u32)> {
        let mut sorted = self.points.clone();
        sorted.sort_by(|a, b| a.lex_cmp(b));
        let mut out: Vec<(Point, u32)> = Vec::new();
        for p in sorted {
            match out.last_mut() {
                Some((q, k)) if *q == p => *k += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Replaces the point at `index`.
    pub fn with_moved(&self, index: usize, to: Point) -> Result<Configuration> {
        if index >= self.points.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.points.len(),
            });
        }
        let mut points = self.points.clone();
        points[index] = to;
        Ok(Configuration { points })
    }
}

/// `f(r)` for `r >= 0`.
pub fn eval_f(spec: &PotentialSpec, r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::InvalidArgument(format!("distance must be >= 0, got {r}")));
    }
    Ok(spec.f(r))
}

/// `U(p, C) = Σ_{c∈C} f(‖p − c‖)`, multiplicities counted.
pub fn potential_u(spec: &PotentialSpec, p: Point, config: &Configuration) -> Result<f64> {
    if config.is_empty() {
        return Err(Error::Empty("configuration has no points"));
    }
    Ok(potential_at(spec, p, config.points()))
}

#[inline]
pub(crate) fn potential_at(spec: &PotentialSpec, p: Point, lamps: &[Point]) -> f64 {
    lamps.iter().map(|&c| spec.kernel(c, p)).sum()
}

/// Minimum of `U(·, C)` over the net and the lexicographically first net
/// point within [`TIE_TOL`] of that minimum.
pub fn polarization_over_net(
    spec: &PotentialSpec,
    net: &SampleNet,
    config: &Configuration,
) -> Result<(f64, Point)> {
    if config.is_empty() {
        return Err(Error::Empty("configuration has no points"));
    }
    min_over_points(spec, net.points(), config.points()).ok_or(Error::Empty("net has no points"))
}

pub(crate) fn min_over_points(
    spec: &PotentialSpec,
    sites: &[Point],
    lamps: &[Point],
) -> Option<(f64, Point)> {
    let values: Vec<f64> = sites.iter().map(|&p| potential_at(spec, p, lamps)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let arg = sites
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v <= min + TIE_TOL)
        .map(|(p, _)| *p)
        .min_by(|a, b| a.lex_cmp(b))?;
    Some((min, arg))
}

/// One-sided control `ĝ(x)` for a lamp/site pair at distance `d`:
/// `f(0) − f(d)` when `x < −d`, otherwise `|f(d + x) − f(d)|`.
pub fn control_hat(spec: &PotentialSpec, d: f64, x: f64) -> f64 {
    if x < -d {
        spec.peak() - spec.f(d)
    } else {
        (spec.f(d + x) - spec.f(d)).abs()
    }
}

/// `g(eps) = max(ĝ(eps), ĝ(−eps))`: bounds how far `f(‖c − p‖)` can move when
/// either endpoint moves by at most `eps`.
pub fn control_g(spec: &PotentialSpec, d: f64, eps: f64) -> f64 {
    control_hat(spec, d, eps).max(control_hat(spec, d, -eps))
}
