//! Planar geometry primitives: points, segments and polygon queries.
//!
//! Everything operates in metres on a 2-D floor plane. The conventions used
//! throughout the crate are fixed here:
//!
//! * **Polygons** are vertex lists with an implicit closing edge from the
//!   last vertex back to the first. Containment uses the even-odd rule and
//!   treats the boundary as *inside* unless the `strict` variant is used.
//! * **Segment crossings** distinguish *proper* crossings (the segments
//!   straddle each other) from mere endpoint touches, which never count.
//!   Collinear overlap of positive length counts as a single crossing.
//! * **Interior traversal** of a polygon by a segment is decided by slicing
//!   the segment at every boundary intersection and testing whether any
//!   sub-interval of positive length lies strictly inside. Sliding along an
//!   edge or grazing a corner therefore does not count as a traversal.
//!
//! Absolute tolerances are used because the toolkit targets room-scale
//! coordinates (tens of metres); see [`BOUNDARY_TOL`].

use crate::error::{Error, Result};
use crate::real::Real;

/// Absolute tolerance (metres) within which a point counts as lying on a
/// boundary, and below which squared-area orientation tests count as zero.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// A point (or free vector) on the floor plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point2<T> {
    /// X coordinate in metres.
    pub x: T,
    /// Y coordinate in metres.
    pub y: T,
}

impl<T: Real> Point2<T> {
    /// Creates a point from its coordinates.
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// The origin.
    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Self) -> T {
        self.distance_squared(other).sqrt()
    }

    /// Squared Euclidean distance to `other`.
    pub fn distance_squared(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Dot product, treating both points as vectors.
    pub fn dot(&self, other: &Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// 2-D cross product (z component of the 3-D cross product).
    pub fn cross(&self, other: &Self) -> T {
        self.x * other.y - self.y * other.x
    }

    /// Euclidean norm, treating the point as a vector.
    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Linear interpolation: `self` at `t = 0`, `other` at `t = 1`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        Self::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    /// True when both coordinates are finite.
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Converts the coordinates to another scalar type via `f64`.
    pub fn cast<U: Real>(&self) -> Point2<U> {
        Point2::new(
            U::lit(self.x.to_f64().expect("finite coordinate")),
            U::lit(self.y.to_f64().expect("finite coordinate")),
        )
    }
}

impl<T: Real> std::ops::Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> std::ops::Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> std::ops::Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl<T: Real> std::ops::Neg for Point2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Signed double area of triangle `a b c`; positive when `c` lies to the left
/// of the directed line `a -> b`.
pub fn orient<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(&(c - a))
}

fn near_zero<T: Real>(value: T) -> bool {
    // Orientation values are double areas; at room scale an area this small
    // is numerically indistinguishable from collinearity.
    value.abs() < T::lit(1e-12)
}

/// Distance from point `p` to segment `a b` (which may degenerate to a point).
pub fn segment_point_distance<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len_sq = ab.dot(&ab);
    if len_sq <= T::lit(BOUNDARY_TOL * BOUNDARY_TOL) {
        return p.distance(&a);
    }
    let t = (p - a).dot(&ab) / len_sq;
    let t = t.clamp(T::zero(), T::one());
    p.distance(&(a + ab * t))
}

/// Minimum distance between segments `a1 a2` and `b1 b2`.
pub fn segment_segment_distance<T: Real>(
    a1: Point2<T>,
    a2: Point2<T>,
    b1: Point2<T>,
    b2: Point2<T>,
) -> T {
    if segments_properly_cross(a1, a2, b1, b2) {
        return T::zero();
    }
    let candidates = [
        segment_point_distance(a1, b1, b2),
        segment_point_distance(a2, b1, b2),
        segment_point_distance(b1, a1, a2),
        segment_point_distance(b2, a1, a2),
    ];
    candidates
        .into_iter()
        .fold(T::max_value().unwrap(), |acc, d| acc.min(d))
}

/// Distance from `p` to the nearest point on the polyline through `path`.
///
/// Errors with [`Error::PolylineTooShort`] when `path` has fewer than two
/// points.
pub fn point_to_polyline_distance<T: Real>(p: Point2<T>, path: &[Point2<T>]) -> Result<T> {
    if path.len() < 2 {
        return Err(Error::PolylineTooShort(path.len()));
    }
    Ok(path
        .windows(2)
        .map(|w| segment_point_distance(p, w[0], w[1]))
        .fold(T::max_value().unwrap(), |acc, d| acc.min(d)))
}

/// True when segments `a1 a2` and `b1 b2` properly cross: they straddle each
/// other, or they are collinear and overlap over a positive length.
///
/// Touching at a single point without crossing (endpoint contacts, T-shaped
/// contacts, corner grazes) returns `false`.
pub fn segments_properly_cross<T: Real>(
    a1: Point2<T>,
    a2: Point2<T>,
    b1: Point2<T>,
    b2: Point2<T>,
) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);

    if near_zero(d1) && near_zero(d2) && near_zero(d3) && near_zero(d4) {
        // Collinear: crossing means an overlap of positive length.
        return collinear_overlap_params(a1, a2, b1, b2)
            .map(|(lo, hi)| hi - lo > T::lit(BOUNDARY_TOL))
            .unwrap_or(false);
    }

    d1 * d2 < T::zero() && d3 * d4 < T::zero()
}

/// For collinear segments, returns the parameter interval of `b1 b2` on
/// `a1 a2` (clamped to `[0, 1]`), or `None` when they do not overlap or
/// `a1 a2` is degenerate.
fn collinear_overlap_params<T: Real>(
    a1: Point2<T>,
    a2: Point2<T>,
    b1: Point2<T>,
    b2: Point2<T>,
) -> Option<(T, T)> {
    let ab = a2 - a1;
    let len_sq = ab.dot(&ab);
    if len_sq <= T::lit(BOUNDARY_TOL * BOUNDARY_TOL) {
        return None;
    }
    let t1 = (b1 - a1).dot(&ab) / len_sq;
    let t2 = (b2 - a1).dot(&ab) / len_sq;
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let lo = lo.max(T::zero());
    let hi = hi.min(T::one());
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Parameters `t` along `a1 a2` at which the segment meets segment `b1 b2`.
///
/// Proper and touching intersections contribute one parameter; a collinear
/// overlap contributes the two parameters bounding the shared portion. The
/// returned values lie in `[0, 1]` and are not sorted or deduplicated.
fn segment_intersection_params<T: Real>(
    a1: Point2<T>,
    a2: Point2<T>,
    b1: Point2<T>,
    b2: Point2<T>,
    out: &mut Vec<T>,
) {
    let r = a2 - a1;
    let s = b2 - b1;
    let denom = r.cross(&s);
    let qp = b1 - a1;

    if near_zero(denom) {
        if near_zero(qp.cross(&r)) {
            if let Some((lo, hi)) = collinear_overlap_params(a1, a2, b1, b2) {
                out.push(lo);
                out.push(hi);
            }
        }
        return;
    }

    let t = qp.cross(&s) / denom;
    let u = qp.cross(&r) / denom;
    let eps = T::lit(1e-12);
    if t >= -eps && t <= T::one() + eps && u >= -eps && u <= T::one() + eps {
        out.push(t.clamp(T::zero(), T::one()));
    }
}

/// Even-odd containment test with the boundary counted as **inside**.
pub fn point_in_polygon<T: Real>(p: Point2<T>, polygon: &[Point2<T>]) -> bool {
    point_on_polygon_boundary(p, polygon) || point_in_polygon_even_odd(p, polygon)
}

/// Even-odd containment test with the boundary counted as **outside**.
pub fn point_in_polygon_strict<T: Real>(p: Point2<T>, polygon: &[Point2<T>]) -> bool {
    !point_on_polygon_boundary(p, polygon) && point_in_polygon_even_odd(p, polygon)
}

/// True when `p` lies within [`BOUNDARY_TOL`] of any polygon edge.
pub fn point_on_polygon_boundary<T: Real>(p: Point2<T>, polygon: &[Point2<T>]) -> bool {
    let tol = T::lit(BOUNDARY_TOL);
    polygon_edges(polygon).any(|(a, b)| segment_point_distance(p, a, b) <= tol)
}

/// Raw even-odd ray-crossing parity; boundary points are rule-dependent.
fn point_in_polygon_even_odd<T: Real>(p: Point2<T>, polygon: &[Point2<T>]) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(polygon) {
        // Half-open vertical rule: each edge owns its lower endpoint, which
        // makes rays through vertices count each crossing exactly once.
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Iterator over polygon edges, including the implicit closing edge.
pub fn polygon_edges<T: Real>(
    polygon: &[Point2<T>],
) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
    let n = polygon.len();
    (0..n).map(move |i| (polygon[i], polygon[(i + 1) % n]))
}

/// Signed area of the polygon (positive when counter-clockwise).
pub fn polygon_signed_area<T: Real>(polygon: &[Point2<T>]) -> T {
    let two = T::lit(2.0);
    polygon_edges(polygon)
        .map(|(a, b)| a.cross(&b))
        .fold(T::zero(), |acc, v| acc + v)
        / two
}

/// Area centroid of the polygon, falling back to the vertex mean when the
/// area is numerically zero.
pub fn polygon_centroid<T: Real>(polygon: &[Point2<T>]) -> Point2<T> {
    let area = polygon_signed_area(polygon);
    if area.abs() < T::lit(1e-12) || polygon.is_empty() {
        let n = T::from_usize(polygon.len().max(1)).unwrap();
        let sum = polygon
            .iter()
            .fold(Point2::origin(), |acc, p| acc + *p);
        return sum * (T::one() / n);
    }
    let six_area = T::lit(6.0) * area;
    let mut cx = T::zero();
    let mut cy = T::zero();
    for (a, b) in polygon_edges(polygon) {
        let w = a.cross(&b);
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Point2::new(cx / six_area, cy / six_area)
}

/// True when the polygon is simple: at least three vertices, no zero-length
/// edges, and no two edges intersecting except adjacent edges at their shared
/// vertex.
pub fn polygon_is_simple<T: Real>(polygon: &[Point2<T>]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let tol = T::lit(BOUNDARY_TOL);
    let edges: Vec<(Point2<T>, Point2<T>)> = polygon_edges(polygon).collect();
    if edges.iter().any(|(a, b)| a.distance(b) <= tol) {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a1, a2) = edges[i];
            let (b1, b2) = edges[j];
            if adjacent {
                // Adjacent edges may only share their common vertex; any
                // positive-length collinear overlap is a spike.
                if collinear_overlap_params(a1, a2, b1, b2)
                    .map(|(lo, hi)| hi - lo > tol)
                    .unwrap_or(false)
                {
                    return false;
                }
            } else if segment_segment_distance(a1, a2, b1, b2) <= tol {
                return false;
            }
        }
    }
    true
}

/// True when segment `a b` passes through the polygon's interior over a
/// positive length.
///
/// The segment is cut at every boundary intersection; the midpoint of each
/// resulting sub-interval is classified with the strict containment test.
/// Grazing a corner or sliding along an edge therefore never counts.
pub fn segment_crosses_polygon_interior<T: Real>(
    a: Point2<T>,
    b: Point2<T>,
    polygon: &[Point2<T>],
) -> bool {
    if polygon.len() < 3 || a.distance(&b) <= T::lit(BOUNDARY_TOL) {
        return false;
    }
    let mut cuts: Vec<T> = vec![T::zero(), T::one()];
    for (c, d) in polygon_edges(polygon) {
        segment_intersection_params(a, b, c, d, &mut cuts);
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut parameters"));
    let min_len = T::lit(BOUNDARY_TOL);
    let half = T::lit(0.5);
    cuts.windows(2).any(|w| {
        let (lo, hi) = (w[0], w[1]);
        hi - lo > min_len && point_in_polygon_strict(a.lerp(&b, (lo + hi) * half), polygon)
    })
}
