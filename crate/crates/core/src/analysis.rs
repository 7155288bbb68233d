//! Certified polarization of a given configuration, darkest-point sets, and
//! necessary conditions for local optimality.
//!
//! A failed condition is evidence that a configuration is not locally
//! optimal, up to net and tolerance resolution. A passed condition proves
//! nothing: the conditions are necessary, not sufficient.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_net, ConvexHull, DomainTag, NetOptions, Point, Region, SampleNet};
use crate::potential::{control_g, control_hat, potential_at, Configuration, PotentialSpec};

/// Tolerance of the hull-membership test in [`check_containment`].
pub const CONTAINMENT_TOL: f64 = 1e-9;
/// Strict margin of the interior test in [`check_dark_location`].
pub const INTERIOR_MARGIN: f64 = 1e-9;
/// First step of the shadow line search; steps double up to `diam(A)`.
pub const SHADOW_FIRST_STEP: f64 = 1e-3;

/// Lower bound on the true polarization of `config` over `A`.
///
/// Builds a validated ε-net Γ of `A` and returns
/// `min_{p∈Γ} Σ_c [f(‖c − p‖) − g(‖c − p‖, ε)]`. Every point of `A` is within ε
/// of some `p ∈ Γ`, and moving `p` that far changes each term by at most `g`.
pub fn certified_lower_bound(
    spec: &PotentialSpec,
    region: &Region,
    config: &Configuration,
    eps: f64,
    opts: &NetOptions,
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let net = build_net(region, eps, 1, DomainTag::OnA, opts)?;
    Ok(net
        .points()
        .iter()
        .map(|&p| {
            config
                .points()
                .iter()
                .map(|&c| {
                    let d = c.dist(p);
                    spec.f(d) - control_g(spec, d, eps)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min))
}

/// Net points whose potential is within `tol` of the net minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkSet {
    pub points: Vec<Point>,
    /// Potential at each member, aligned with `points`.
    pub potentials: Vec<f64>,
    /// Exact minimum of the potential over the net.
    pub level: f64,
    pub tol: f64,
}

impl DarkSet {
    /// Writes `x,y,u` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y", "u"])?;
        for (p, u) in self.points.iter().zip(&self.potentials) {
            wtr.serialize((p.x, p.y, u))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Band used when no dark-set tolerance is given: the potential of `N` lamps
/// moves by at most `N·g(0, ε)` inside one net cell at distance zero.
pub fn default_dark_tol(spec: &PotentialSpec, n: usize, eps: f64) -> f64 {
    n as f64 * control_g(spec, 0.0, eps)
}

pub fn darkest_points(
    spec: &PotentialSpec,
    config: &Configuration,
    net: &SampleNet,
    tol: f64,
) -> Result<DarkSet> {
    if net.is_empty() {
        return Err(Error::Empty("net has no points"));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")));
    }
    let values: Vec<f64> = net
        .points()
        .iter()
        .map(|&p| potential_at(spec, p, config.points()))
        .collect();
    let level = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (points, potentials) = net
        .points()
        .iter()
        .zip(&values)
        .filter(|(_, &u)| u <= level + tol)
        .map(|(p, u)| (*p, *u))
        .unzip();
    Ok(DarkSet {
        points,
        potentials,
        level,
        tol,
    })
}

/// Net points that may lie within ε of a true darkest point of `A`.
///
/// The kernel decreases with distance, so moving a net point `p` by at most ε
/// lowers the potential by at most `Σ_c [f(d_c) − f(d_c + ε)]` with
/// `d_c = ‖c − p‖`, the one-sided control `ĝ(d_c, ε)`. The true minimum never
/// exceeds the net minimum, so a net point within ε of a true darkest point
/// satisfies `U(p) − Σ_c ĝ(d_c, ε) ≤ level`. The band adapts to each point, unlike
/// the uniform band of [`darkest_points`]; `tol` records the widest one used.
pub fn certified_dark_points(
    spec: &PotentialSpec,
    config: &Configuration,
    net: &SampleNet,
) -> Result<DarkSet> {
    if net.is_empty() {
        return Err(Error::Empty("net has no points"));
    }
    let eps = net.epsilon();
    let rows: Vec<(Point, f64, f64)> = net
        .points()
        .iter()
        .map(|&p| {
            let u = potential_at(spec, p, config.points());
            let band: f64 = config.points().iter().map(|&c| control_hat(spec, c.dist(p), eps)).sum();
            (p, u, band)
        })
        .collect();
    let level = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut dark = DarkSet {
        points: Vec::new(),
        potentials: Vec::new(),
        level,
        tol: 0.0,
    };
    for (p, u, band) in rows {
        if u - band <= level {
            dark.points.push(p);
            dark.potentials.push(u);
            dark.tol = dark.tol.max(band);
        }
    }
    Ok(dark)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub holds: bool,
    /// Configuration points outside the hull of the dark set.
    pub violating_points: Vec<Point>,
}

/// Tests `C ⊂ conv(dark)`. A violation indicates `C` is not locally optimal.
pub fn check_containment(config: &Configuration, dark: &DarkSet) -> Result<ContainmentReport> {
    if dark.points.is_empty() {
        return Err(Error::Empty("dark set has no points"));
    }
    let hull = ConvexHull::of(&dark.points);
    let violating_points: Vec<Point> = config
        .points()
        .iter()
        .filter(|&&c| !hull.contains(c, CONTAINMENT_TOL))
        .copied()
        .collect();
    Ok(ContainmentReport {
        holds: violating_points.is_empty(),
        violating_points,
    })
}

/// Looks for a point `q ∈ A` strictly darker than `p`.
///
/// Picks the direction `v` with `‖v‖∞ ≤ 1` maximizing `min_c v·(p − c)`. If that
/// minimum is positive, every lamp recedes along `p + λv`, so any such `q`
/// inside `A` is darker. The steps `λ` run over a doubling grid. `None` is
/// inconclusive.
pub fn shadow_certificate(
    spec: &PotentialSpec,
    region: &Region,
    config: &Configuration,
    p: Point,
) -> Option<Point> {
    let dirs: Vec<Point> = config.points().iter().map(|&c| p - c).collect();
    let v = best_box_direction(&dirs)?;
    let u_p = potential_at(spec, p, config.points());
    let diam = region.diameter();
    let mut step = SHADOW_FIRST_STEP;
    while step <= diam {
        let q = p + step * v;
        if region.contains(q) {
            let u_q = potential_at(spec, q, config.points());
            if u_q < u_p {
                return Some(q);
            }
        }
        step *= 2.0;
    }
    None
}

/// Maximizes `min_i v·w_i` over the box `‖v‖∞ ≤ 1`; returns `v` only when the
/// optimum is positive. The objective is positively homogeneous, so a
/// positive optimum sits on the box boundary: at a corner or where two
/// constraints tie along an edge. Enumerating those candidates is exact.
fn best_box_direction(w: &[Point]) -> Option<Point> {
    if w.is_empty() {
        return None;
    }
    let mut candidates = vec![
        Point::new(1.0, 1.0),
        Point::new(1.0, -1.0),
        Point::new(-1.0, 1.0),
        Point::new(-1.0, -1.0),
    ];
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let d = w[i] - w[j];
            for s in [-1.0, 1.0] {
                // edge x = s: s·d.x + y·d.y = 0
                if d.y != 0.0 {
                    let y = -s * d.x / d.y;
                    if y.abs() <= 1.0 {
                        candidates.push(Point::new(s, y));
                    }
                }
                if d.x != 0.0 {
                    let x = -s * d.y / d.x;
                    if x.abs() <= 1.0 {
                        candidates.push(Point::new(x, s));
                    }
                }
            }
        }
    }
    let slack = |v: &Point| w.iter().map(|wi| v.dot(*wi)).fold(f64::INFINITY, f64::min);
    let mut best: Option<(Point, f64)> = None;
    for v in candidates {
        let s = slack(&v);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((v, s));
        }
    }
    best.filter(|(_, s)| *s > 0.0).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationReport {
    pub holds: bool,
    /// Dark points neither strictly inside `conv(C)` nor near `∂A`.
    pub violating_points: Vec<Point>,
}

/// Darkest points of an optimal configuration lie in the interior of
/// `conv(C)` or on `∂A`. Net dark sets satisfy this only up to `tol`.
pub fn check_dark_location(
    region: &Region,
    config: &Configuration,
    dark: &DarkSet,
    tol: f64,
) -> LocationReport {
    let hull = ConvexHull::of(config.points());
    let violating_points: Vec<Point> = dark
        .points
        .iter()
        .filter(|&&p| {
            !(hull.contains_strictly(p, INTERIOR_MARGIN) || region.boundary_distance(p) <= tol)
        })
        .copied()
        .collect();
    LocationReport {
        holds: violating_points.is_empty(),
        violating_points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoveReport {
    pub p_old: f64,
    pub p_new: f64,
    pub decreased: bool,
}

/// Net polarization before and after moving lamp `index` to `to`.
pub fn single_move_check(
    spec: &PotentialSpec,
    config: &Configuration,
    index: usize,
    to: Point,
    net: &SampleNet,
) -> Result<MoveReport> {
    let moved = config.with_moved(index, to)?;
    let p_old = net_min(spec, config, net)?;
    let p_new = net_min(spec, &moved, net)?;
    Ok(MoveReport {
        p_old,
        p_new,
        decreased: p_new < p_old,
    })
}

fn net_min(spec: &PotentialSpec, config: &Configuration, net: &SampleNet) -> Result<f64> {
    if net.is_empty() {
        return Err(Error::Empty("net has no points"));
    }
    Ok(net
        .points()
        .iter()
        .map(|&p| potential_at(spec, p, config.points()))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatCell {
    pub x: f64,
    pub y: f64,
    pub inside: bool,
    pub u: f64,
}

/// `resolution × resolution` grid of potentials over the bounding box,
/// row-major from the bottom-left node.
pub fn heatmap_grid(
    spec: &PotentialSpec,
    region: &Region,
    config: &Configuration,
    resolution: usize,
) -> Result<Vec<HeatCell>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "heatmap resolution must be at least 2, got {resolution}"
        )));
    }
    let bb = region.bounding_box();
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let y = step(bb.min.y, bb.max.y, j);
        for i in 0..resolution {
            let x = step(bb.min.x, bb.max.x, i);
            let p = Point::new(x, y);
            cells.push(HeatCell {
                x,
                y,
                inside: region.contains(p),
                u: potential_at(spec, p, config.points()),
            });
        }
    }
    Ok(cells)
}

/// Writes `x,y,inside,u` rows.
pub fn write_heatmap_csv<W: Write>(cells: &[HeatCell], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for c in cells {
        wtr.serialize(c)?;
    }
    wtr.flush()?;
    Ok(())
}
