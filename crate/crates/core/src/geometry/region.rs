//! Compact planar regions built from disks and simple polygons.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hull::{edges, ConvexHull};
use super::point::{segment_distance, BoundingBox, Point};
use crate::error::{Error, Result};

/// Closed-set membership slack for points constructed exactly on a boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Number of vertices of the circumscribed polygon standing in for a disk
/// when building `conv(A)`.
pub const DISK_HULL_SIDES: usize = 256;

/// On-disk region description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionDoc {
    Disk { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    Union { parts: Vec<RegionDoc> },
}

/// One convex-or-simple primitive of a region.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    /// Simple polygon, counterclockwise.
    Polygon { vertices: Vec<Point> },
}

impl Shape {
    pub fn disk(center: Point, radius: f64) -> Result<Shape> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(Error::InvalidRegion("non-finite disk parameters".into()));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidRegion(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Shape::Disk { center, radius })
    }

    /// Validates a simple polygon and orients it counterclockwise.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Shape> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidRegion(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidRegion("non-finite polygon vertex".into()));
        }
        let area = signed_area(&vertices);
        let scale = BoundingBox::of_points(&vertices).unwrap().diagonal();
        if area.abs() <= 1e-12 * scale * scale {
            return Err(Error::InvalidRegion("polygon has zero area".into()));
        }
        if let Some((i, j)) = self_intersection(&vertices) {
            return Err(Error::InvalidRegion(format!(
                "polygon is self-intersecting (edges {i} and {j})"
            )));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Shape::Polygon { vertices })
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Disk { center, radius } => p.dist(*center) <= radius + BOUNDARY_TOL,
            Shape::Polygon { vertices } => {
                if edges(vertices).any(|(a, b)| segment_distance(p, a, b) <= BOUNDARY_TOL) {
                    return true;
                }
                crossing_parity(vertices, p)
            }
        }
    }

    /// Unsigned distance from `p` to the boundary curve of this shape.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => (p.dist(*center) - radius).abs(),
            Shape::Polygon { vertices } => edges(vertices)
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn bounding_box(&self) -> BoundingBox {
        match self {
            Shape::Disk { center, radius } => BoundingBox {
                min: Point::new(center.x - radius, center.y - radius),
                max: Point::new(center.x + radius, center.y + radius),
            },
            Shape::Polygon { vertices } => BoundingBox::of_points(vertices).unwrap(),
        }
    }

    /// Points on the boundary curve with consecutive gaps at most `spacing`.
    fn boundary_points(&self, spacing: f64) -> Vec<Point> {
        match self {
            Shape::Disk { center, radius } => {
                let m = ((2.0 * PI * radius / spacing).ceil() as usize).max(3);
                (0..m)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / m as f64;
                        Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => polyline_samples(vertices, spacing),
        }
    }

    /// Vertices whose convex hull contains this shape.
    fn hull_generators(&self) -> Vec<Point> {
        match self {
            Shape::Disk { center, radius } => {
                let n = DISK_HULL_SIDES;
                let r = radius / (PI / n as f64).cos();
                (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / n as f64;
                        Point::new(center.x + r * t.cos(), center.y + r * t.sin())
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => vertices.clone(),
        }
    }

    fn doc(&self) -> RegionDoc {
        match self {
            Shape::Disk { center, radius } => RegionDoc::Disk {
                center: (*center).into(),
                radius: *radius,
            },
            Shape::Polygon { vertices } => RegionDoc::Polygon {
                vertices: vertices.iter().map(|&p| p.into()).collect(),
            },
        }
    }
}

/// A compact region `A`: the union of one or more primitives, with its
/// (polygonal) convex hull precomputed.
#[derive(Debug, Clone)]
pub struct Region {
    parts: Vec<Shape>,
    hull: ConvexHull,
    bbox: BoundingBox,
}

impl Region {
    pub fn new(parts: Vec<Shape>) -> Result<Region> {
        if parts.is_empty() {
            return Err(Error::InvalidRegion("union must have at least one part".into()));
        }
        let generators: Vec<Point> = parts.iter().flat_map(|s| s.hull_generators()).collect();
        let hull = ConvexHull::of(&generators);
        let bbox = parts
            .iter()
            .map(Shape::bounding_box)
            .reduce(BoundingBox::union)
            .unwrap();
        Ok(Region { parts, hull, bbox })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Region> {
        Region::new(vec![Shape::disk(center, radius)?])
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Region> {
        Region::new(vec![Shape::polygon(vertices)?])
    }

    /// Equilateral triangle with the given side, lower-left vertex at the origin.
    pub fn equilateral_triangle(side: f64) -> Result<Region> {
        Region::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(side, 0.0),
            Point::new(0.5 * side, 0.5 * 3f64.sqrt() * side),
        ])
    }

    pub fn from_doc(doc: &RegionDoc) -> Result<Region> {
        let mut parts = Vec::new();
        flatten(doc, &mut parts)?;
        Region::new(parts)
    }

    pub fn to_doc(&self) -> RegionDoc {
        match self.parts.as_slice() {
            [single] => single.doc(),
            parts => RegionDoc::Union {
                parts: parts.iter().map(Shape::doc).collect(),
            },
        }
    }

    pub fn parts(&self) -> &[Shape] {
        &self.parts
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bbox
    }

    /// Upper bound on the diameter of `A` (bounding-box diagonal).
    pub fn diameter(&self) -> f64 {
        self.bbox.diagonal()
    }

    /// Closed membership: boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.parts.iter().any(|s| s.contains(p))
    }

    /// Distance from a point of `A` to `∂A`. Exact for unions of disjoint
    /// parts; for overlapping parts it is the depth inside the deepest part
    /// containing `p`, which never exceeds the true distance. For points
    /// outside `A` it is the distance to the nearest part boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let inside_depth = self
            .parts
            .iter()
            .filter(|s| s.contains(p))
            .map(|s| s.boundary_distance(p))
            .fold(f64::NEG_INFINITY, f64::max);
        if inside_depth.is_finite() {
            inside_depth
        } else {
            self.parts
                .iter()
                .map(|s| s.boundary_distance(p))
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Points on `∂A`, every boundary component sampled with consecutive gaps
    /// at most `spacing`. Polygon vertices are always included. Samples of one
    /// part's boundary that fall strictly inside another part are dropped,
    /// since they are not on the boundary of the union.
    pub fn boundary_sample(&self, spacing: f64) -> Result<Vec<Point>> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "boundary spacing must be positive, got {spacing}"
            )));
        }
        let mut out = Vec::new();
        for (i, shape) in self.parts.iter().enumerate() {
            for p in shape.boundary_points(spacing) {
                let buried = self.parts.iter().enumerate().any(|(j, other)| {
                    j != i && other.contains(p) && other.boundary_distance(p) > 1e-9
                });
                if !buried {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Membership in `conv(A)` up to `tol`, tested against the polygonal hull
    /// (disks are replaced by circumscribed 256-gons).
    pub fn hull_membership(&self, p: Point, tol: f64) -> bool {
        self.hull.contains(p, tol)
    }

    /// Uniform sample from `A` by rejection over the bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        loop {
            let p = self.sample_bbox(rng);
            if self.contains(p) {
                return p;
            }
        }
    }

    /// Uniform sample from the polygonal `conv(A)` by rejection.
    pub fn sample_uniform_hull<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let bb = BoundingBox::of_points(&self.hull.vertices()).unwrap();
        loop {
            let p = Point::new(
                rng.gen_range(bb.min.x..=bb.max.x),
                rng.gen_range(bb.min.y..=bb.max.y),
            );
            if self.hull.contains(p, 0.0) {
                return p;
            }
        }
    }

    fn sample_bbox<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let bb = self.bbox;
        Point::new(
            rng.gen_range(bb.min.x..=bb.max.x),
            rng.gen_range(bb.min.y..=bb.max.y),
        )
    }
}

/// Parses the JSON region schema.
pub fn parse_region(text: &str) -> Result<Region> {
    let doc: RegionDoc =
        serde_json::from_str(text).map_err(|e| Error::MalformedRegion(e.to_string()))?;
    Region::from_doc(&doc)
}

fn flatten(doc: &RegionDoc, out: &mut Vec<Shape>) -> Result<()> {
    match doc {
        RegionDoc::Disk { center, radius } => out.push(Shape::disk((*center).into(), *radius)?),
        RegionDoc::Polygon { vertices } => out.push(Shape::polygon(
            vertices.iter().map(|&v| v.into()).collect(),
        )?),
        RegionDoc::Union { parts } => {
            if parts.is_empty() {
                return Err(Error::InvalidRegion("union must have at least one part".into()));
            }
            for part in parts {
                flatten(part, out)?;
            }
        }
    }
    Ok(())
}

/// Samples along a closed polyline; vertices included, gaps at most `spacing`.
pub(crate) fn polyline_samples(vertices: &[Point], spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for (a, b) in edges(vertices) {
        let m = ((a.dist(b) / spacing).ceil() as usize).max(1);
        for k in 0..m {
            let t = k as f64 / m as f64;
            out.push(a + t * (b - a));
        }
    }
    out
}

fn signed_area(v: &[Point]) -> f64 {
    0.5 * edges(v).map(|(a, b)| a.cross(b)).sum::<f64>()
}

fn crossing_parity(v: &[Point], p: Point) -> bool {
    let mut inside = false;
    for (a, b) in edges(v) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (v[j], v[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex: reject
                // a fold-back where they overlap along a line.
                let shared = if j == i + 1 { b } else { a };
                let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                let u = p - shared;
                let w = q - shared;
                if u.cross(w).abs() <= 1e-14 * u.norm() * w.norm() && u.dot(w) > 0.0 {
                    return Some((i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

fn orient(a: Point, b: Point, c: Point) -> i8 {
    let v = (b - a).cross(c - a);
    let scale = (b - a).norm() * (c - a).norm();
    if v.abs() <= 1e-14 * scale {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - 1e-15
        && p.x <= a.x.max(b.x) + 1e-15
        && p.y >= a.y.min(b.y) - 1e-15
        && p.y <= a.y.max(b.y) + 1e-15
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> Region {
        Region::disk(Point::ORIGIN, 1.0).unwrap()
    }

    fn tri(offset: f64) -> RegionDoc {
        RegionDoc::Polygon {
            vertices: vec![[offset, 0.0], [offset + 1.0, 0.0], [offset + 0.5, 0.866025]],
        }
    }

    #[test]
    fn parses_schema_variants() {
        let disk = parse_region(r#"{"type":"disk","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(
            disk.parts(),
            &[Shape::Disk {
                center: Point::ORIGIN,
                radius: 1.0
            }]
        );

        let t = parse_region(r#"{"type":"polygon","vertices":[[0,0],[1,0],[0.5,0.866025]]}"#)
            .unwrap();
        assert!(matches!(&t.parts()[0], Shape::Polygon { vertices } if vertices.len() == 3));

        let u = parse_region(
            r#"{"type":"union","parts":[{"type":"disk","center":[0,0],"radius":1},
                {"type":"polygon","vertices":[[3,0],[4,0],[3.5,0.8]]}]}"#,
        )
        .unwrap();
        assert_eq!(u.parts().len(), 2);
        assert!(u.contains(Point::new(3.5, 0.3)));
        assert!(u.contains(Point::new(0.0, 0.5)));
        assert!(!u.contains(Point::new(2.0, 0.0)));
    }

    #[test]
    fn rejects_degenerate_or_malformed() {
        for text in [
            r#"{"type":"disk","center":[0,0],"radius":0}"#,
            r#"{"type":"disk","center":[0,0],"radius":-1}"#,
            r#"{"type":"polygon","vertices":[[0,0],[1,0]]}"#,
            r#"{"type":"polygon","vertices":[[0,0],[1,1],[1,0],[0,1]]}"#,
            r#"{"type":"polygon","vertices":[[0,0],[1,0],[2,0]]}"#,
            r#"{"type":"union","parts":[]}"#,
        ] {
            assert!(
                matches!(parse_region(text), Err(Error::InvalidRegion(_))),
                "{text}"
            );
        }
        for text in [
            r#"{"type":"disk","center":[0,0]}"#,
            r#"{"type":"ellipse","center":[0,0],"radius":1}"#,
            r#"{"type":"disk","center":[0,0],"radius":1,"extra":2}"#,
            "not json",
        ] {
            assert!(
                matches!(parse_region(text), Err(Error::MalformedRegion(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let r = Region::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        let Shape::Polygon { vertices } = &r.parts()[0] else {
            unreachable!()
        };
        assert!(signed_area(vertices) > 0.0);
    }

    #[test]
    fn disk_membership_is_closed() {
        let d = unit_disk();
        assert!(d.contains(Point::new(0.5, 0.0)));
        assert!(d.contains(Point::new(1.0, 0.0)));
        assert!(!d.contains(Point::new(1.0001, 0.0)));
    }

    #[test]
    fn nonconvex_polygon_membership() {
        // L-shape
        let r = Region::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        assert!(r.contains(Point::new(0.5, 1.5)));
        assert!(r.contains(Point::new(1.0, 1.5)));
        assert!(!r.contains(Point::new(1.5, 1.5)));
        assert!(r.hull_membership(Point::new(1.5, 1.5), 0.0));
        assert!(!r.hull_membership(Point::new(1.9, 1.9), 1e-9));
    }

    #[test]
    fn boundary_sample_disk() {
        let pts = unit_disk().boundary_sample(PI / 2.0).unwrap();
        assert!(pts.len() >= 4);
        let mut angles: Vec<f64> = pts.iter().map(|p| p.y.atan2(p.x)).collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            assert!(w[1] - w[0] <= PI / 2.0 + 1e-12);
        }
        assert!(angles[0] + 2.0 * PI - angles[angles.len() - 1] <= PI / 2.0 + 1e-12);
        for p in pts {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_sample_triangle_includes_vertices() {
        let r = Region::from_doc(&tri(0.0)).unwrap();
        let pts = r.boundary_sample(0.5).unwrap();
        assert!(pts.len() >= 6);
        let Shape::Polygon { vertices } = &r.parts()[0] else {
            unreachable!()
        };
        for v in vertices {
            assert!(pts.contains(v));
        }
        for p in &pts {
            assert!(r.contains(*p));
            assert!(r.boundary_distance(*p) <= 1e-9);
        }
    }

    #[test]
    fn boundary_sample_two_triangles() {
        let r = Region::from_doc(&RegionDoc::Union {
            parts: vec![tri(0.0), tri(3.0)],
        })
        .unwrap();
        let pts = r.boundary_sample(0.25).unwrap();
        assert!(pts.iter().any(|p| p.x < 1.5));
        assert!(pts.iter().any(|p| p.x > 2.5));
    }

    #[test]
    fn overlapping_union_drops_buried_boundary() {
        let r = Region::new(vec![
            Shape::disk(Point::ORIGIN, 1.0).unwrap(),
            Shape::disk(Point::new(1.0, 0.0), 1.0).unwrap(),
        ])
        .unwrap();
        let pts = r.boundary_sample(0.05).unwrap();
        // (1,0) on the first circle lies strictly inside the second disk.
        assert!(pts.iter().all(|p| p.dist(Point::new(1.0, 0.0)) > 0.02));
        for p in &pts {
            assert!(r.boundary_distance(*p) <= 1e-9);
        }
    }

    #[test]
    fn hull_membership_examples() {
        let r = Region::from_doc(&RegionDoc::Union {
            parts: vec![tri(0.0), tri(10.0)],
        })
        .unwrap();
        let c1 = Point::new(0.5, 0.288675);
        let c2 = Point::new(10.5, 0.288675);
        assert!(r.hull_membership(0.5 * (c1 + c2), 0.0));
        assert!(!r.contains(0.5 * (c1 + c2)));

        let d = unit_disk();
        assert!(d.hull_membership(Point::new(0.9999, 0.0), 1e-9));
        assert!(!d.hull_membership(Point::new(1.1, 0.0), 1e-9));
    }

    #[test]
    fn disk_hull_overapproximation_is_tight() {
        let d = unit_disk();
        let excess = d
            .hull()
            .vertices()
            .iter()
            .map(|v| v.norm() - 1.0)
            .fold(0.0, f64::max);
        assert!(excess > 0.0 && excess < 1e-4);
    }

    #[test]
    fn doc_round_trip() {
        let doc = RegionDoc::Union {
            parts: vec![
                tri(0.0),
                RegionDoc::Disk {
                    center: [5.0, 5.0],
                    radius: 0.5,
                },
            ],
        };
        let r = Region::from_doc(&doc).unwrap();
        assert_eq!(r.to_doc(), doc);
    }
}
