use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2, Segment, TOLERANCE};

/// Twice the signed area of a closed vertex ring (positive when counter-clockwise).
fn doubled_signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum()
}

/// Shoelace area of a simple polygon given as a vertex ring of either orientation.
pub fn polygon_area(vertices: &[Point2]) -> Result<f64, GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::Degenerate { vertices: vertices.len() });
    }
    let area = 0.5 * doubled_signed_area(vertices).abs();
    if area <= 0.0 || !area.is_finite() {
        return Err(GeometryError::ZeroArea);
    }
    Ok(area)
}

/// Area-weighted centroid of a simple polygon.
pub fn polygon_centroid(vertices: &[Point2]) -> Result<Point2, GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::Degenerate { vertices: vertices.len() });
    }
    // Shift to the first vertex so large coordinates do not swamp the sums.
    let origin = vertices[0];
    let n = vertices.len();
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = vertices[i] - origin;
        let q = vertices[(i + 1) % n] - origin;
        let c = p.cross(q);
        a2 += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    if a2 == 0.0 || !a2.is_finite() {
        return Err(GeometryError::ZeroArea);
    }
    Ok(origin + Point2::new(cx / (3.0 * a2), cy / (3.0 * a2)))
}

/// A convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and normalizes a vertex ring: drops repeated and collinear
    /// vertices, flips clockwise input, rejects reflex corners.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut ring = dedup_ring(vertices);
        if ring.len() < 3 {
            return Err(GeometryError::Degenerate { vertices: ring.len() });
        }
        if doubled_signed_area(&ring) < 0.0 {
            ring.reverse();
        }
        let scale = ring
            .iter()
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(1.0_f64, f64::max);
        let tol = TOLERANCE * scale * scale;

        // Remove collinear vertices until every corner turns left.
        let mut changed = true;
        while changed && ring.len() >= 3 {
            changed = false;
            let n = ring.len();
            for i in 0..n {
                let prev = ring[(i + n - 1) % n];
                let next = ring[(i + 1) % n];
                let turn = (ring[i] - prev).cross(next - ring[i]);
                if turn.abs() <= tol {
                    ring.remove(i);
                    changed = true;
                    break;
                }
                if turn < 0.0 {
                    return Err(GeometryError::NotConvex { vertex: i });
                }
            }
        }
        if ring.len() < 3 {
            return Err(GeometryError::Degenerate { vertices: ring.len() });
        }
        Ok(Self { vertices: ring })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    /// The square `[0, side]²`.
    pub fn square(side: f64) -> Self {
        Self::rectangle(0.0, 0.0, side, side).expect("square side must be positive")
    }

    /// Wraps a counter-clockwise convex ring produced by clipping; only
    /// consecutive duplicates are removed.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        0.5 * doubled_signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(&self.vertices).unwrap_or_else(|_| {
            let n = self.vertices.len().max(1) as f64;
            let s = self.vertices.iter().fold(Point2::ZERO, |acc, &p| acc + p);
            s * (1.0 / n)
        })
    }

    /// Inside-or-on test with an absolute slack of `tol` arena units.
    pub fn contains(&self, q: Point2, tol: f64) -> bool {
        self.edges().all(|e| {
            let d = e.b - e.a;
            let len = d.norm();
            len == 0.0 || d.cross(q - e.a) / len >= -tol
        })
    }

    /// Euclidean projection onto the polygon (identity for interior points).
    pub fn project(&self, q: Point2) -> Point2 {
        if self.contains(q, 0.0) {
            return q;
        }
        self.edges()
            .map(|e| e.closest_point(q))
            .min_by(|a, b| a.distance(q).total_cmp(&b.distance(q)))
            .unwrap_or(q)
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

impl TryFrom<Vec<Point2>> for ConvexPolygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

pub(crate) fn dedup_ring(mut ring: Vec<Point2>) -> Vec<Point2> {
    ring.dedup_by(|b, a| a.distance(*b) <= TOLERANCE);
    while ring.len() > 1 && ring[0].distance(ring[ring.len() - 1]) <= TOLERANCE {
        ring.pop();
    }
    ring
}
