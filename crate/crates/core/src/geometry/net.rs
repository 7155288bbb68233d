//! ε-nets and (ε,k)-nets from scaled A2 (triangular) lattices plus boundary
//! samples, with a Monte Carlo covering certificate.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hull::ConvexHull;
use super::point::{BoundingBox, Point};
use super::region::{polyline_samples, Region};
use crate::error::{Error, Result};

/// Lattice spacing factor: spacing `s = √3·ε·LATTICE_MARGIN` keeps the A2
/// covering radius `s/√3` at 95% of ε.
pub const LATTICE_MARGIN: f64 = 0.95;

/// Per-round shrink factor for refinement when validation fails or when a
/// multiplicity above one is requested.
pub const REFINE_FACTOR: f64 = 0.9;

pub const DEFAULT_PROBES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0x5eed_0fa2;
pub const DEFAULT_MAX_ROUNDS: usize = 40;

/// Which set a net samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainTag {
    /// Γ: constraint sites on `A`.
    #[serde(rename = "on-A")]
    OnA,
    /// Λ: candidate lamp sites on `conv(A)`.
    #[serde(rename = "on-conv-A")]
    OnConvA,
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainTag::OnA => "on-A",
            DomainTag::OnConvA => "on-conv-A",
        })
    }
}

impl FromStr for DomainTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on-A" | "A" | "gamma" => Ok(DomainTag::OnA),
            "on-conv-A" | "conv-A" | "lambda" => Ok(DomainTag::OnConvA),
            other => Err(Error::InvalidArgument(format!("unknown domain tag {other:?}"))),
        }
    }
}

impl DomainTag {
    fn contains(self, region: &Region, p: Point) -> bool {
        match self {
            DomainTag::OnA => region.contains(p),
            DomainTag::OnConvA => region.hull_membership(p, 0.0),
        }
    }
}

/// Outcome of a Monte Carlo covering check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest distance from a probe to its nearest net point.
    pub max_gap: f64,
    /// Fewest net points found strictly within ε of a probe.
    pub min_multiplicity: usize,
    pub pass: bool,
    pub probes: usize,
    pub seed: u64,
}

/// A finite sample of `A` or `conv(A)` with its covering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleNet {
    points: Vec<Point>,
    epsilon: f64,
    multiplicity: usize,
    tag: DomainTag,
    validation: Option<ValidationReport>,
}

/// Sidecar metadata written next to a net CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetMeta {
    pub epsilon: f64,
    pub k: usize,
    pub domain_tag: DomainTag,
    pub validated: bool,
    pub seed: Option<u64>,
    pub points: usize,
    pub max_gap: Option<f64>,
}

impl SampleNet {
    /// Wraps raw points as an unvalidated net. Points must be pairwise distinct.
    pub fn from_points(
        points: Vec<Point>,
        epsilon: f64,
        multiplicity: usize,
        tag: DomainTag,
    ) -> Result<SampleNet> {
        check_params(epsilon, multiplicity)?;
        if points.is_empty() {
            return Err(Error::Empty("net has no points"));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.lex_cmp(b));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("net points must be pairwise distinct".into()));
        }
        Ok(SampleNet {
            points,
            epsilon,
            multiplicity,
            tag,
            validation: None,
        })
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

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn tag(&self) -> DomainTag {
        self.tag
    }

    pub fn is_validated(&self) -> bool {
        self.validation.is_some_and(|v| v.pass)
    }

    pub fn validation(&self) -> Option<&ValidationReport> {
        self.validation.as_ref()
    }

    /// Checks membership of every point in the tagged domain, runs the
    /// covering check and records the outcome.
    pub fn certify(&mut self, region: &Region, probes: usize, seed: u64) -> Result<ValidationReport> {
        if let Some(p) = self.points.iter().find(|p| !self.tag.contains(region, **p)) {
            return Err(Error::NetPrecondition(format!(
                "net point ({}, {}) lies outside its domain {}",
                p.x, p.y, self.tag
            )));
        }
        let report = validate_net(self, region, probes, seed)?;
        self.validation = Some(report);
        Ok(report)
    }

    pub fn meta(&self) -> NetMeta {
        NetMeta {
            epsilon: self.epsilon,
            k: self.multiplicity,
            domain_tag: self.tag,
            validated: self.is_validated(),
            seed: self.validation.map(|v| v.seed),
            points: self.points.len(),
            max_gap: self.validation.map(|v| v.max_gap),
        }
    }

    /// Writes `x,y` CSV rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_points_csv(&self.points, w)
    }
}

pub fn write_points_csv<W: Write>(points: &[Point], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "y"])?;
    for p in points {
        wtr.write_record([p.x.to_string(), p.y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<Point>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
    }
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<Row>()
        .map(|row| Ok(row.map(|r| Point::new(r.x, r.y))?))
        .collect()
}

fn check_params(epsilon: f64, k: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("multiplicity k must be at least 1".into()));
    }
    Ok(())
}

/// Knobs for [`build_net`].
#[derive(Debug, Clone, Copy)]
pub struct NetOptions {
    pub probes: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions {
            probes: DEFAULT_PROBES,
            seed: DEFAULT_SEED,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

/// Builds a validated (ε,k)-net of the tagged domain.
///
/// Interior points come from an A2 lattice with spacing `√3·ε·0.95`; the
/// boundary is sampled at spacing at most ε so the collar the lattice misses
/// is still covered. If the Monte Carlo check fails (always the case for
/// small spacings when `k > 1`), lattice and boundary spacings shrink by 10%
/// and the net is rebuilt, up to `max_rounds` times.
pub fn build_net(
    region: &Region,
    epsilon: f64,
    k: usize,
    tag: DomainTag,
    opts: &NetOptions,
) -> Result<SampleNet> {
    check_params(epsilon, k)?;
    if opts.probes == 0 {
        return Err(Error::InvalidArgument("probes must be at least 1".into()));
    }
    let base_spacing = 3f64.sqrt() * epsilon * LATTICE_MARGIN;
    let mut last = None;
    for round in 0..=opts.max_rounds {
        let shrink = REFINE_FACTOR.powi(round as i32);
        let points = raw_net_points(region, tag, base_spacing * shrink, epsilon * shrink)?;
        let mut net = SampleNet {
            points,
            epsilon,
            multiplicity: k,
            tag,
            validation: None,
        };
        let report = net.certify(region, opts.probes, opts.seed)?;
        if report.pass {
            return Ok(net);
        }
        last = Some((round, report));
    }
    let (rounds, report) = last.expect("at least one round runs");
    Err(Error::NetValidation {
        rounds,
        max_gap: report.max_gap,
        epsilon,
        min_multiplicity: report.min_multiplicity,
        k,
    })
}

fn raw_net_points(
    region: &Region,
    tag: DomainTag,
    spacing: f64,
    boundary_spacing: f64,
) -> Result<Vec<Point>> {
    let (bbox, boundary) = match tag {
        DomainTag::OnA => (region.bounding_box(), region.boundary_sample(boundary_spacing)?),
        DomainTag::OnConvA => {
            let verts = region.hull().vertices();
            let bbox = BoundingBox::of_points(&verts).expect("hull of a region is nonempty");
            let boundary = match region.hull() {
                ConvexHull::Polygon(v) => polyline_samples(v, boundary_spacing),
                other => other.vertices(),
            };
            (bbox, boundary)
        }
    };

    let mut points: Vec<Point> = a2_lattice(bbox, spacing)
        .filter(|p| tag.contains(region, *p))
        .collect();
    points.extend(boundary);
    points.sort_by(|a, b| a.lex_cmp(b));
    points.dedup_by(|a, b| a.dist(*b) <= 1e-12);
    Ok(points)
}

/// A2 lattice points covering `bbox` (plus one spacing of margin), rows
/// parallel to the x-axis and anchored at the lower-left corner.
fn a2_lattice(bbox: BoundingBox, s: f64) -> impl Iterator<Item = Point> {
    let h = s * 3f64.sqrt() / 2.0;
    let rows = (bbox.height() / h).floor() as usize + 1;
    let cols = (bbox.width() / s).floor() as usize + 2;
    (0..rows).flat_map(move |j| {
        let y = bbox.min.y + j as f64 * h;
        let shift = if j % 2 == 1 { -0.5 * s } else { 0.0 };
        (0..=cols).map(move |i| Point::new(bbox.min.x + shift + i as f64 * s, y))
    })
}

/// Uniform-grid bucket index for fixed-radius queries.
pub struct GridIndex<'a> {
    points: &'a [Point],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    key_min: (i64, i64),
    key_max: (i64, i64),
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [Point], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(i as u32);
        }
        let mut key_min = (i64::MAX, i64::MAX);
        let mut key_max = (i64::MIN, i64::MIN);
        for &(x, y) in buckets.keys() {
            key_min = (key_min.0.min(x), key_min.1.min(y));
            key_max = (key_max.0.max(x), key_max.1.max(y));
        }
        GridIndex {
            points,
            cell,
            buckets,
            key_min,
            key_max,
        }
    }

    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Number of indexed points strictly within `cell` of `p`.
    pub fn count_within(&self, p: Point) -> usize {
        let (cx, cy) = Self::key(p, self.cell);
        let r2 = self.cell * self.cell;
        let mut n = 0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.buckets.get(&(cx + dx, cy + dy)) {
                    n += bucket
                        .iter()
                        .filter(|&&i| self.points[i as usize].dist_sq(p) < r2)
                        .count();
                }
            }
        }
        n
    }

    /// Distance to the nearest indexed point.
    pub fn nearest_distance(&self, p: Point) -> f64 {
        let (cx, cy) = Self::key(p, self.cell);
        let mut best = f64::INFINITY;
        if self.buckets.is_empty() {
            return best;
        }
        let max_ring = [
            (self.key_min.0 - cx).abs(),
            (self.key_max.0 - cx).abs(),
            (self.key_min.1 - cy).abs(),
            (self.key_max.1 - cy).abs(),
        ]
        .into_iter()
        .max()
        .unwrap();
        for ring in 0..=max_ring {
            // Points in ring `ring` are at least (ring - 1)·cell away.
            if best.is_finite() && (ring as f64 - 1.0) * self.cell > best {
                break;
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(bucket) = self.buckets.get(&(cx + dx, cy + dy)) {
                        for &i in bucket {
                            best = best.min(self.points[i as usize].dist(p));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Monte Carlo covering certificate: draws `probes` uniform points from the
/// tagged domain and reports the worst nearest-net distance and the fewest
/// net points within ε. Passes iff `max_gap < ε` and every probe sees at
/// least `k` net points strictly within ε.
pub fn validate_net(
    net: &SampleNet,
    region: &Region,
    probes: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if probes == 0 {
        return Err(Error::InvalidArgument("probes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = GridIndex::new(&net.points, net.epsilon);
    let mut max_gap: f64 = 0.0;
    let mut min_mult = usize::MAX;
    for _ in 0..probes {
        let p = match net.tag {
            DomainTag::OnA => region.sample_uniform(&mut rng),
            DomainTag::OnConvA => region.sample_uniform_hull(&mut rng),
        };
        let count = index.count_within(p);
        min_mult = min_mult.min(count);
        max_gap = max_gap.max(index.nearest_distance(p));
    }
    Ok(ValidationReport {
        max_gap,
        min_multiplicity: min_mult,
        pass: max_gap < net.epsilon && min_mult >= net.multiplicity,
        probes,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(probes: usize) -> NetOptions {
        NetOptions {
            probes,
            ..NetOptions::default()
        }
    }

    #[test]
    fn triangle_net_covers() {
        let tri = Region::equilateral_triangle(1.0).unwrap();
        let net = build_net(&tri, 0.04, 1, DomainTag::OnA, &opts(20_000)).unwrap();
        assert!(net.is_validated());
        let v = net.validation().unwrap();
        assert!(v.max_gap < 0.04);
        for p in net.points() {
            assert!(tri.contains(*p));
        }
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5 * 3f64.sqrt())] {
            assert!(net.points().iter().any(|p| p.dist(Point::new(x, y)) < 1e-12));
        }
    }

    #[test]
    fn disk_multiplicity_net() {
        let disk = Region::disk(Point::ORIGIN, 1.0).unwrap();
        let net = build_net(&disk, 0.5, 3, DomainTag::OnConvA, &opts(20_000)).unwrap();
        let v = net.validation().unwrap();
        assert!(v.min_multiplicity >= 3);
        for p in net.points() {
            assert!(disk.hull_membership(*p, 0.0));
        }
    }

    #[test]
    fn tiny_region_gets_a_small_valid_net() {
        let tri = Region::equilateral_triangle(0.01).unwrap();
        let net = build_net(&tri, 0.5, 1, DomainTag::OnA, &opts(1_000)).unwrap();
        assert!(net.is_validated());
        assert!(net.len() <= 4);
    }

    #[test]
    fn thinned_net_fails() {
        let disk = Region::disk(Point::ORIGIN, 1.0).unwrap();
        let net = build_net(&disk, 0.1, 1, DomainTag::OnA, &opts(10_000)).unwrap();
        let half: Vec<Point> = net.points().iter().copied().step_by(2).collect();
        let thin = SampleNet::from_points(half, 0.1, 1, DomainTag::OnA).unwrap();
        let report = validate_net(&thin, &disk, 10_000, 1).unwrap();
        assert!(!report.pass);
        assert!(report.max_gap >= 0.1 || report.min_multiplicity == 0);
    }

    #[test]
    fn k1_net_checked_for_k2() {
        let disk = Region::disk(Point::ORIGIN, 1.0).unwrap();
        let net = build_net(&disk, 0.2, 1, DomainTag::OnA, &opts(10_000)).unwrap();
        let as_k2 =
            SampleNet::from_points(net.points().to_vec(), 0.2, 2, DomainTag::OnA).unwrap();
        let r = validate_net(&as_k2, &disk, 50_000, 3).unwrap();
        assert!(r.min_multiplicity >= 1);
        if r.min_multiplicity < 2 {
            assert!(!r.pass);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let disk = Region::disk(Point::ORIGIN, 1.0).unwrap();
        assert!(build_net(&disk, 0.0, 1, DomainTag::OnA, &opts(10)).is_err());
        assert!(build_net(&disk, 0.1, 0, DomainTag::OnA, &opts(10)).is_err());
        assert!(SampleNet::from_points(vec![Point::ORIGIN; 2], 0.1, 1, DomainTag::OnA).is_err());
    }

    #[test]
    fn exhausted_refinement_reports_achieved_gap() {
        let disk = Region::disk(Point::ORIGIN, 1.0).unwrap();
        let o = NetOptions {
            probes: 2_000,
            seed: 1,
            max_rounds: 0,
        };
        let err = build_net(&disk, 0.3, 4, DomainTag::OnA, &o).unwrap_err();
        assert!(matches!(err, Error::NetValidation { k: 4, .. }));
    }

    #[test]
    fn grid_index_nearest_matches_brute_force() {
        let pts: Vec<Point> = (0..50)
            .map(|i| Point::new((i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.91).cos() * 2.0))
            .collect();
        let index = GridIndex::new(&pts, 0.1);
        for q in [Point::new(10.0, 10.0), Point::new(0.0, 0.0), Point::new(-2.9, 1.1)] {
            let brute = pts.iter().map(|p| p.dist(q)).fold(f64::INFINITY, f64::min);
            assert!((index.nearest_distance(q) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![Point::new(0.1, 0.2), Point::new(1.0 / 3.0, -2.5e-7)];
        let mut buf = Vec::new();
        write_points_csv(&pts, &mut buf).unwrap();
        assert!(buf.starts_with(b"x,y\n"));
        assert_eq!(read_points_csv(buf.as_slice()).unwrap(), pts);
    }
}
