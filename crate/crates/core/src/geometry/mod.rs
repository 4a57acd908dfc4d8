//! Convex polygons, triangulation and boundary extraction (2D).

mod boundary;
mod delaunay;
mod mesh;
mod polygon;

pub use boundary::{boundary_trace, BoundaryGraph};
pub use mesh::{disk_polygon, mesh_measures, triangulate, triangulate_with, Mesh, MeshOptions, DEFAULT_C_USR};
pub use polygon::{convexity_project, make_regular_polygon, ConvexPolygon, COLLINEAR_TOL};

use core::ops::{Add, Mul, Neg, Sub};

use crate::FloatExt;

/// Dimension tag carried by geometric types. Only `d = 2` is implemented.
pub const DIM: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation by -90 degrees: the outward normal direction of a CCW edge.
    #[inline]
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    #[inline]
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of `(a, b, c)`; positive for a left turn.
#[inline]
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Signed area of a closed polygon (shoelace).
pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * s
}

pub fn perimeter(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).sum()
}

/// Area centroid of a closed polygon.
pub fn centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2))
}

/// Ratio of the principal second moments of area (>= 1), a symmetry measure.
pub fn second_moment_ratio(pts: &[Vec2]) -> f64 {
    let c = centroid(pts);
    let n = pts.len();
    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = pts[i] - c;
        let q = pts[(i + 1) % n] - c;
        let w = p.cross(q);
        ixx += w * (p.y * p.y + p.y * q.y + q.y * q.y);
        iyy += w * (p.x * p.x + p.x * q.x + q.x * q.x);
        ixy += w * (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y);
    }
    ixx /= 12.0;
    iyy /= 12.0;
    ixy /= 24.0;
    let mean = 0.5 * (ixx + iyy);
    let dev = (0.25 * (ixx - iyy) * (ixx - iyy) + ixy * ixy).sqrt();
    (mean + dev) / (mean - dev)
}

/// Isoperimetric ratio `P^2 / (4 pi A)`; equals 1 only for the disk.
pub fn isoperimetric_ratio(pts: &[Vec2]) -> f64 {
    let p = perimeter(pts);
    p * p / (4.0 * core::f64::consts::PI * signed_area(pts))
}

/// Largest exterior turning angle along a closed CCW polyline (radians).
pub fn max_turning_angle(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[(i + n - 1) % n];
            let b = pts[i];
            let c = pts[(i + 1) % n];
            let e1 = b - a;
            let e2 = c - b;
            e1.cross(e2).atan2(e1.dot(e2))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn polygon_measures_of_unit_square() {
        let sq = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(perimeter(&sq), 4.0);
        assert_eq!(centroid(&sq), Vec2::new(0.5, 0.5));
        assert!((second_moment_ratio(&sq) - 1.0).abs() < 1e-12);
        assert!((isoperimetric_ratio(&sq) - 4.0 / core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn moment_ratio_of_rectangle() {
        // I_xx = a b^3 / 12, I_yy = b a^3 / 12 for an a x b rectangle.
        let r = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!((second_moment_ratio(&r) - 4.0).abs() < 1e-12);
    }
}
