//! Planar convex hulls (Andrew's monotone chain) and half-plane membership.

use super::point::{segment_distance, Point};

/// Slack added to every half-plane test so that points produced by exact
/// constructions (vertices, edge subdivisions) are never rejected by rounding.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Convex hull of a finite point set, including its degenerate forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexHull {
    Empty,
    Point(Point),
    Segment(Point, Point),
    /// Counterclockwise vertices, no three collinear.
    Polygon(Vec<Point>),
}

impl ConvexHull {
    pub fn of(points: &[Point]) -> ConvexHull {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.lex_cmp(b));
        pts.dedup();
        match pts.len() {
            0 => return ConvexHull::Empty,
            1 => return ConvexHull::Point(pts[0]),
            _ => {}
        }

        let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);

        match lower.len() {
            1 => ConvexHull::Point(lower[0]),
            2 => ConvexHull::Segment(lower[0], lower[1]),
            _ => ConvexHull::Polygon(lower),
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            ConvexHull::Empty => vec![],
            ConvexHull::Point(p) => vec![*p],
            ConvexHull::Segment(a, b) => vec![*a, *b],
            ConvexHull::Polygon(v) => v.clone(),
        }
    }

    /// Closed membership up to `tol` (distance outside the hull allowed).
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let tol = tol.max(0.0) + ROUNDING_SLACK;
        match self {
            ConvexHull::Empty => false,
            ConvexHull::Point(q) => p.dist(*q) <= tol,
            ConvexHull::Segment(a, b) => segment_distance(p, *a, *b) <= tol,
            ConvexHull::Polygon(v) => edges(v).all(|(a, b)| signed_offset(a, b, p) >= -tol),
        }
    }

    /// Strict interior membership: at least `margin` inside every edge.
    /// Degenerate hulls have empty interior.
    pub fn contains_strictly(&self, p: Point, margin: f64) -> bool {
        match self {
            ConvexHull::Polygon(v) => edges(v).all(|(a, b)| signed_offset(a, b, p) > margin),
            _ => false,
        }
    }

    /// Distance from `p` to the hull boundary (for polygons), or to the
    /// degenerate hull itself.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            ConvexHull::Empty => f64::INFINITY,
            ConvexHull::Point(q) => p.dist(*q),
            ConvexHull::Segment(a, b) => segment_distance(p, *a, *b),
            ConvexHull::Polygon(v) => edges(v)
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Positive when `a -> b -> c` turns counterclockwise.
pub fn turn(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Signed distance of `p` from the directed line `a -> b`; positive on the left.
pub fn signed_offset(a: Point, b: Point, p: Point) -> f64 {
    let d = b - a;
    d.cross(p - a) / d.norm()
}

/// Cyclic edge iterator over a closed vertex ring.
pub fn edges(v: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}
