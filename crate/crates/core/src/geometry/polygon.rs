use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{orient, perimeter, signed_area, Vec2, DIM};
use crate::{Error, FloatExt, Result};

/// Relative tolerance below which three points count as collinear:
/// `orient(a, b, c) <= COLLINEAR_TOL * |b - a| * |c - b|`.
pub const COLLINEAR_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn strictly_left(a: Vec2, b: Vec2, c: Vec2) -> bool {
    orient(a, b, c) > COLLINEAR_TOL * (b - a).norm() * (c - b).norm()
}

/// A strictly convex polygon with counter-clockwise vertices. The closing
/// edge from the last to the first vertex is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polygon vertex".into()));
        }
        if vertices[0] == vertices[n - 1] {
            return Err(Error::InvalidArgument(
                "polygon must not repeat its first vertex".into(),
            ));
        }
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            if !strictly_left(a, b, c) {
                return Err(Error::DegenerateGeometry(format!(
                    "vertex {i} is not a strictly convex CCW corner"
                )));
            }
        }
        // all left turns could still wind around twice
        let turning: f64 = (0..n)
            .map(|i| {
                let e1 = vertices[i] - vertices[(i + n - 1) % n];
                let e2 = vertices[(i + 1) % n] - vertices[i];
                e1.cross(e2).atan2(e1.dot(e2))
            })
            .sum();
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::DegenerateGeometry(
                "polygon is not simple (winds more than once)".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vec2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub const fn dim(&self) -> usize {
        DIM
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        perimeter(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max((v[i] - v[j]).norm());
            }
        }
        d
    }

    /// Minimal width over edge directions (exact for convex polygons).
    pub fn width(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        (0..n)
            .map(|i| {
                let a = v[i];
                let e = v[(i + 1) % n] - a;
                let len = e.norm();
                v.iter()
                    .map(|&p| e.cross(p - a) / len)
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `diameter / width`.
    pub fn aspect_ratio(&self) -> f64 {
        self.diameter() / self.width()
    }

    /// Weak containment test (points on the boundary count as inside).
    pub fn contains(&self, p: Vec2) -> bool {
        let v = &self.vertices;
        let n = v.len();
        (0..n).all(|i| orient(v[i], v[(i + 1) % n], p) >= -1e-12 * (v[(i + 1) % n] - v[i]).norm())
    }

    pub fn scaled(&self, t: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| p * t).collect(),
        }
    }

    pub fn translated(&self, d: Vec2) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| p + d).collect(),
        }
    }
}

/// Regular `n`-gon inscribed in the circle of radius `r` about the origin,
/// starting at `(r, 0)`.
pub fn make_regular_polygon(n: usize, r: f64) -> Result<ConvexPolygon> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let vertices = (0..n)
        .map(|k| {
            let a = 2.0 * PI * (k as f64) / (n as f64);
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    ConvexPolygon::new(vertices)
}

/// Convex hull (Andrew's monotone chain) with collinear points removed. The
/// output starts at the lexicographically smallest point and runs CCW.
pub fn convexity_project(points: &[Vec2]) -> Result<ConvexPolygon> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateGeometry("fewer than 3 distinct points".into()));
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && !strictly_left(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && !strictly_left(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry("all points are collinear".into()));
    }
    ConvexPolygon::new(hull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn regular_polygon_areas() {
        let sq = make_regular_polygon(4, 1.0).unwrap();
        assert!((sq.area() - 2.0).abs() < 1e-15);
        let hex = make_regular_polygon(6, 1.0).unwrap();
        // closed form: (n/2) r^2 sin(2 pi / n)
        assert!((hex.area() - 3.0 * 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((hex.area() - 2.598076).abs() < 1e-6);
        let fine = make_regular_polygon(256, 1.0).unwrap();
        assert!((fine.area() - PI).abs() < 1e-3);
        assert_eq!(fine.len(), 256);
    }

    #[test]
    fn regular_polygon_rejects_bad_arguments() {
        assert!(matches!(make_regular_polygon(2, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_regular_polygon(5, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_regular_polygon(5, -1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let mut pts = square();
        pts.push(Vec2::new(0.5, 0.5));
        let h = convexity_project(&pts).unwrap();
        assert_eq!(h.vertices(), &square()[..]);

        let mut pts = square();
        pts.extend([
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 0.5),
        ]);
        let h = convexity_project(&pts).unwrap();
        assert_eq!(h.vertices(), &square()[..]);
    }

    #[test]
    fn hull_of_convex_pentagon_is_identity() {
        let p = make_regular_polygon(5, 2.0).unwrap();
        let h = convexity_project(p.vertices()).unwrap();
        assert_eq!(h.len(), 5);
        for v in p.vertices() {
            assert!(h.vertices().contains(v));
        }
    }

    #[test]
    fn hull_rejects_collinear_input() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(matches!(convexity_project(&pts), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn polygon_validation() {
        let mut cw = square();
        cw.reverse();
        assert!(ConvexPolygon::new(cw).is_err());
        let mut collinear = square();
        collinear.insert(1, Vec2::new(0.5, 0.0));
        assert!(ConvexPolygon::new(collinear).is_err());
        let mut closed = square();
        closed.push(Vec2::new(0.0, 0.0));
        assert!(ConvexPolygon::new(closed).is_err());
        assert!(ConvexPolygon::new(square()).is_ok());
    }

    #[test]
    fn width_and_aspect() {
        let r = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((r.width() - 1.0).abs() < 1e-15);
        assert!((r.aspect_ratio() - 17f64.sqrt()).abs() < 1e-12);
    }
}
