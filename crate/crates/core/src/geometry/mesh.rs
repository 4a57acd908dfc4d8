use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::delaunay::{delaunay_flip, node_neighbors, Triangulation};
use super::{orient, BoundaryGraph, ConvexPolygon, Vec2};
use crate::{Error, FloatExt, Result};

/// Default bound on `h_T / rho_T` (longest edge over inscribed diameter).
/// An equilateral triangle scores `sqrt(3)`.
pub const DEFAULT_C_USR: f64 = 8.0;

const MAX_ASPECT: f64 = 1e3;
const SMOOTHING_PASSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOptions {
    pub c_usr: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { c_usr: DEFAULT_C_USR }
    }
}

/// Planar triangulation with positively oriented triangles and a CCW
/// boundary cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    h_max: f64,
    quality: f64,
}

fn tri_shape(a: Vec2, b: Vec2, c: Vec2) -> (f64, f64) {
    let (l0, l1, l2) = ((b - a).norm(), (c - b).norm(), (a - c).norm());
    let h = l0.max(l1).max(l2);
    let area = 0.5 * orient(a, b, c);
    // inscribed diameter 4A/P
    (h, h * (l0 + l1 + l2) / (4.0 * area))
}

impl Mesh {
    /// Builds a mesh after checking orientation, manifoldness and that
    /// `boundary` is the CCW cycle of boundary edges.
    pub fn from_parts(nodes: Vec<Vec2>, triangles: Vec<[usize; 3]>, boundary: Vec<usize>) -> Result<Mesh> {
        let n = nodes.len();
        if triangles.is_empty() || boundary.len() < 3 {
            return Err(Error::InvalidMesh("empty mesh".into()));
        }
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node".into()));
        }
        let mut h_max: f64 = 0.0;
        let mut quality: f64 = 0.0;
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {k} has an out-of-range node")));
            }
            let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if !(orient(a, b, c) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {k} is not positively oriented")));
            }
            let (h, q) = tri_shape(a, b, c);
            h_max = h_max.max(h);
            quality = quality.max(q);
        }
        let mut edges: Vec<(usize, usize, usize, usize)> = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i], t[(i + 1) % 3])))
            .map(|(a, b)| (a.min(b), a.max(b), a, b))
            .collect();
        edges.sort_unstable();
        let mut next = vec![usize::MAX; n];
        let mut nb_edges = 0;
        let mut k = 0;
        while k < edges.len() {
            let mut j = k;
            while j < edges.len() && edges[j].0 == edges[k].0 && edges[j].1 == edges[k].1 {
                j += 1;
            }
            match j - k {
                1 => {
                    let (_, _, a, b) = edges[k];
                    if next[a] != usize::MAX {
                        return Err(Error::InvalidMesh(format!("node {a} starts two boundary edges")));
                    }
                    next[a] = b;
                    nb_edges += 1;
                }
                2 if edges[k].2 != edges[k + 1].2 => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is non-manifold",
                        edges[k].0, edges[k].1
                    )))
                }
            }
            k = j;
        }
        let nb = boundary.len();
        if nb_edges != nb {
            return Err(Error::InvalidMesh(format!(
                "boundary cycle has {nb} nodes but the mesh has {nb_edges} boundary edges"
            )));
        }
        for i in 0..nb {
            let a = boundary[i];
            if a >= n || next[a] != boundary[(i + 1) % nb] {
                return Err(Error::InvalidMesh(format!(
                    "boundary list does not follow the CCW boundary at position {i}"
                )));
            }
        }
        Ok(Mesh {
            nodes,
            triangles,
            boundary,
            h_max,
            quality,
        })
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary node indices in CCW order (implicitly closed).
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Longest triangle edge.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Worst shape ratio `max_T h_T / rho_T`.
    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * orient(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]))
            .sum()
    }

    pub fn perimeter(&self) -> f64 {
        let b = &self.boundary;
        (0..b.len())
            .map(|i| (self.nodes[b[(i + 1) % b.len()]] - self.nodes[b[i]]).norm())
            .sum()
    }

    /// `(area, perimeter)`.
    pub fn measures(&self) -> (f64, f64) {
        (self.area(), self.perimeter())
    }

    pub fn boundary_points(&self) -> Vec<Vec2> {
        self.boundary.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn boundary_graph(&self) -> Result<BoundaryGraph> {
        BoundaryGraph::new(self)
    }

    pub fn diameter(&self) -> f64 {
        let b = self.boundary_points();
        let mut d: f64 = 0.0;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                d = d.max((b[i] - b[j]).norm());
            }
        }
        d
    }

    /// Same connectivity, node positions multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Mesh {
        Mesh {
            nodes: self.nodes.iter().map(|&p| p * t).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            h_max: self.h_max * t,
            quality: self.quality,
        }
    }

    pub fn translated(&self, d: Vec2) -> Mesh {
        Mesh {
            nodes: self.nodes.iter().map(|&p| p + d).collect(),
            ..self.clone()
        }
    }

    /// Same connectivity with new node positions; fails on inverted triangles.
    pub fn with_nodes(&self, nodes: Vec<Vec2>) -> Result<Mesh> {
        if nodes.len() != self.nodes.len() {
            return Err(Error::InvalidArgument("node count changed".into()));
        }
        let mut h_max: f64 = 0.0;
        let mut quality: f64 = 0.0;
        for (k, t) in self.triangles.iter().enumerate() {
            let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if !(orient(a, b, c) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {k} inverted")));
            }
            let (h, q) = tri_shape(a, b, c);
            h_max = h_max.max(h);
            quality = quality.max(q);
        }
        Ok(Mesh {
            nodes,
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            h_max,
            quality,
        })
    }

    /// Red refinement: every triangle split into four via edge midpoints.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        self.refine_uniform_with(|p| p)
    }

    /// Red refinement with new boundary midpoints mapped through `project`
    /// (for example onto a circle). Boundary nodes come first in the result.
    pub fn refine_uniform_with(&self, project: impl Fn(Vec2) -> Vec2) -> Result<Mesh> {
        let n = self.nodes.len();
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i].min(t[(i + 1) % 3]), t[i].max(t[(i + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mid = |a: usize, b: usize| -> usize {
            n + edges.binary_search(&(a.min(b), a.max(b))).unwrap()
        };
        let mut nodes = self.nodes.clone();
        nodes.extend(edges.iter().map(|&(a, b)| (self.nodes[a] + self.nodes[b]) * 0.5));
        let nb = self.boundary.len();
        let mut boundary = Vec::with_capacity(2 * nb);
        for i in 0..nb {
            let a = self.boundary[i];
            let b = self.boundary[(i + 1) % nb];
            let m = mid(a, b);
            nodes[m] = project(nodes[m]);
            boundary.push(a);
            boundary.push(m);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let (a, b, c) = (t[0], t[1], t[2]);
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let (nodes, triangles, boundary) = boundary_first(nodes, triangles, boundary);
        Mesh::from_parts(nodes, triangles, boundary)
    }

    /// Evaluates the P1 field `values` at `points`. Points outside the mesh
    /// take the value at the nearest point of the closest triangle.
    pub fn interpolate(&self, values: &[f64], points: &[Vec2]) -> Vec<f64> {
        let loc = PointLocator::new(self);
        points
            .iter()
            .map(|&p| {
                let (t, w) = loc.locate(p);
                let tri = self.triangles[t];
                w[0] * values[tri[0]] + w[1] * values[tri[1]] + w[2] * values[tri[2]]
            })
            .collect()
    }
}

/// Renumbers so the boundary cycle occupies indices `0..nb` in order.
fn boundary_first(
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
) -> (Vec<Vec2>, Vec<[usize; 3]>, Vec<usize>) {
    let n = nodes.len();
    let mut perm = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    for &b in &boundary {
        perm[b] = order.len();
        order.push(b);
    }
    for i in 0..n {
        if perm[i] == usize::MAX {
            perm[i] = order.len();
            order.push(i);
        }
    }
    let nodes = order.iter().map(|&i| nodes[i]).collect();
    let triangles = triangles
        .iter()
        .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
        .collect();
    let boundary = (0..boundary.len()).collect();
    (nodes, triangles, boundary)
}

/// Uniform bucket grid over triangle bounding boxes.
struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = (mesh.nodes[0], mesh.nodes[0]);
        for p in &mesh.nodes {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = mesh.h_max.max(1e-300);
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).min(4096);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).min(4096);
        let cell = cell.max((hi.x - lo.x) / nx as f64).max((hi.y - lo.y) / ny as f64);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, t) in mesh.triangles.iter().enumerate() {
            let ps = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
            let x0 = ps.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let x1 = ps.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let y0 = ps.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let y1 = ps.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, Vec2::new(x0, y0));
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, Vec2::new(x1, y1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(lo: Vec2, cell: f64, nx: usize, ny: usize, p: Vec2) -> (usize, usize) {
        let i = ((p.x - lo.x) / cell).floor().max(0.0) as usize;
        let j = ((p.y - lo.y) / cell).floor().max(0.0) as usize;
        (i.min(nx - 1), j.min(ny - 1))
    }

    fn bary(&self, t: usize, p: Vec2) -> [f64; 3] {
        let tri = self.mesh.triangles[t];
        let (a, b, c) = (self.mesh.nodes[tri[0]], self.mesh.nodes[tri[1]], self.mesh.nodes[tri[2]]);
        let d = orient(a, b, c);
        [orient(p, b, c) / d, orient(a, p, c) / d, orient(a, b, p) / d]
    }

    fn locate(&self, p: Vec2) -> (usize, [f64; 3]) {
        let (i, j) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, p);
        let mut best = (0, f64::NEG_INFINITY, [1.0, 0.0, 0.0]);
        for &t in &self.buckets[j * self.nx + i] {
            let w = self.bary(t, p);
            let m = w[0].min(w[1]).min(w[2]);
            if m >= -1e-12 {
                return (t, w);
            }
            if m > best.1 {
                best = (t, m, w);
            }
        }
        // outside: closest triangle by barycentric violation
        for t in 0..self.mesh.triangles.len() {
            let w = self.bary(t, p);
            let m = w[0].min(w[1]).min(w[2]);
            if m > best.1 {
                best = (t, m, w);
            }
        }
        let (t, _, mut w) = best;
        let mut s = 0.0;
        for x in &mut w {
            *x = x.max(0.0);
            s += *x;
        }
        for x in &mut w {
            *x /= s;
        }
        (t, w)
    }
}

/// `(area, perimeter)` of a mesh.
pub fn mesh_measures(m: &Mesh) -> (f64, f64) {
    m.measures()
}

/// Regular polygon inscribed in the circle of radius `r` whose edges are no
/// longer than `h`.
pub fn disk_polygon(r: f64, h: f64) -> Result<ConvexPolygon> {
    if !(h > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("need r > 0 and h > 0, got r = {r}, h = {h}")));
    }
    let x = (h / (2.0 * r)).min(1.0);
    let mut n = ((PI / libm::asin(x) - 1e-9).ceil() as usize).max(3);
    while 2.0 * r * (PI / n as f64).sin() > h {
        n += 1;
    }
    super::make_regular_polygon(n, r)
}

pub fn triangulate(p: &ConvexPolygon, h: f64) -> Result<Mesh> {
    triangulate_with(p, h, &MeshOptions::default())
}

/// Triangulates a convex polygon with all edges of length at most `h`.
///
/// Polygon edges are split uniformly, an equilateral lattice fills the
/// interior, the result is made Delaunay (boundary edges fixed) and interior
/// nodes are Laplace-smoothed. The lattice is shrunk until `h_max <= h`.
pub fn triangulate_with(p: &ConvexPolygon, h: f64, opts: &MeshOptions) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("mesh size must be positive, got {h}")));
    }
    if !(opts.c_usr > 0.0) {
        return Err(Error::InvalidArgument(format!("c_usr must be positive, got {}", opts.c_usr)));
    }
    let aspect = p.aspect_ratio();
    if !(aspect <= MAX_ASPECT) {
        return Err(Error::DegenerateGeometry(format!(
            "aspect ratio {aspect:.3e} exceeds {MAX_ASPECT:.0e}"
        )));
    }
    let verts = p.vertices();
    let nv = verts.len();
    let edges: Vec<(Vec2, Vec2, f64)> = (0..nv)
        .map(|i| {
            let a = verts[i];
            let b = verts[(i + 1) % nv];
            (a, b, (b - a).norm())
        })
        .collect();
    let inner_dist = |q: Vec2| {
        edges
            .iter()
            .map(|&(a, b, l)| orient(a, b, q) / l)
            .fold(f64::INFINITY, f64::min)
    };
    let (lo, hi) = verts.iter().fold(
        (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), v| (Vec2::new(lo.x.min(v.x), lo.y.min(v.y)), Vec2::new(hi.x.max(v.x), hi.y.max(v.y))),
    );
    let mut best: Option<Mesh> = None;
    // the first boundary layer stretches lattice edges by roughly 15%
    let mut s = 0.9 * h;
    for _ in 0..80 {
        let mut boundary_pts = Vec::new();
        for i in 0..nv {
            let a = verts[i];
            let b = verts[(i + 1) % nv];
            let k = ((b - a).norm() / s).ceil().max(1.0) as usize;
            for j in 0..k {
                boundary_pts.push(a + (b - a) * (j as f64 / k as f64));
            }
        }
        let mut tri = Triangulation::from_convex_cycle(boundary_pts.clone())
            .ok_or_else(|| Error::DegenerateGeometry("boundary cycle cannot be triangulated".into()))?;
        let dy = s * 3f64.sqrt() / 2.0;
        let j0 = (lo.y / dy).floor() as i64;
        let j1 = (hi.y / dy).ceil() as i64;
        for j in j0..=j1 {
            let y = j as f64 * dy;
            let shift = if j.rem_euclid(2) == 1 { 0.5 * s } else { 0.0 };
            let i0 = ((lo.x - shift) / s).floor() as i64;
            let i1 = ((hi.x - shift) / s).ceil() as i64;
            for i in i0..=i1 {
                let q = Vec2::new(i as f64 * s + shift, y);
                if inner_dist(q) >= 0.5 * s {
                    tri.insert(q);
                }
            }
        }
        let nb = boundary_pts.len();
        let mut nodes = tri.points().to_vec();
        let mut tris = tri.triangles();
        smooth(&mut nodes, &tris, nb);
        tris = delaunay_flip(&nodes, &tris);
        let mesh = Mesh::from_parts(nodes, tris, (0..nb).collect())?;
        if mesh.h_max <= h {
            best = Some(mesh);
            break;
        }
        s *= 0.97;
    }
    let mesh = best.ok_or_else(|| Error::MeshQuality {
        achieved: f64::INFINITY,
        limit: opts.c_usr,
    })?;
    if mesh.quality > opts.c_usr {
        return Err(Error::MeshQuality {
            achieved: mesh.quality,
            limit: opts.c_usr,
        });
    }
    Ok(mesh)
}

/// Laplacian smoothing of nodes `nb..`, skipping moves that would flatten
/// or invert an incident triangle.
fn smooth(nodes: &mut [Vec2], tris: &[[usize; 3]], nb: usize) {
    let n = nodes.len();
    let nbrs = node_neighbors(n, tris);
    let mut incident = vec![Vec::new(); n];
    for (k, t) in tris.iter().enumerate() {
        for &i in t {
            incident[i].push(k);
        }
    }
    for _ in 0..SMOOTHING_PASSES {
        for i in nb..n {
            let l = &nbrs[i];
            if l.is_empty() {
                continue;
            }
            let mut c = Vec2::default();
            for &j in l {
                c = c + nodes[j];
            }
            let c = c * (1.0 / l.len() as f64);
            let old = nodes[i];
            let worst_before = incident[i]
                .iter()
                .map(|&k| tri_shape(nodes[tris[k][0]], nodes[tris[k][1]], nodes[tris[k][2]]).1)
                .fold(0.0, f64::max);
            nodes[i] = c;
            let ok = incident[i].iter().all(|&k| {
                let t = tris[k];
                let (a, b, cc) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
                let l2 = (b - a).dot(b - a).max((cc - b).dot(cc - b));
                orient(a, b, cc) > 1e-3 * l2
            });
            let worst_after = incident[i]
                .iter()
                .map(|&k| tri_shape(nodes[tris[k][0]], nodes[tris[k][1]], nodes[tris[k][2]]).1)
                .fold(0.0, f64::max);
            if !ok || worst_after > worst_before.max(2.0 * 3f64.sqrt()) {
                nodes[i] = old;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_regular_polygon;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_half() {
        let m = triangulate(&unit_square(), 0.5).unwrap();
        assert!(m.h_max() <= 0.5);
        assert!(m.num_nodes() >= 9);
        let (a, p) = m.measures();
        assert!((a - 1.0).abs() < 1e-12);
        assert!((p - 4.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_64_area() {
        let poly = make_regular_polygon(64, 1.0).unwrap();
        let m = triangulate(&poly, 0.125).unwrap();
        assert!((m.area() - PI).abs() < 1e-2);
        assert!((m.area() - poly.area()).abs() < 1e-12 * poly.area());
        assert!((m.perimeter() - poly.perimeter()).abs() < 1e-12 * poly.perimeter());
        assert!(m.quality() <= DEFAULT_C_USR);
    }

    #[test]
    fn boundary_nodes_first_and_on_polygon() {
        let poly = make_regular_polygon(7, 1.3).unwrap();
        let m = triangulate(&poly, 0.2).unwrap();
        for (k, &b) in m.boundary().iter().enumerate() {
            assert_eq!(k, b);
        }
        for v in poly.vertices() {
            assert!(m.nodes().contains(v));
        }
        let bp = m.boundary_points();
        for i in 0..bp.len() {
            assert!((bp[(i + 1) % bp.len()] - bp[i]).norm() <= 0.2);
        }
    }

    #[test]
    fn refinement_halves_h() {
        let m = triangulate(&unit_square(), 0.25).unwrap();
        let r = m.refine_uniform().unwrap();
        assert!((r.h_max() - 0.5 * m.h_max()).abs() < 1e-15);
        assert_eq!(r.triangles().len(), 4 * m.triangles().len());
        assert!((r.area() - 1.0).abs() < 1e-12);
        let m2 = triangulate(&unit_square(), 0.125).unwrap();
        let ratio = m.h_max() / m2.h_max();
        assert!(ratio > 2.0 / 1.1 && ratio < 2.0 * 1.1, "{ratio}");
    }

    #[test]
    fn circle_projected_refinement() {
        let m = triangulate(&disk_polygon(1.0, 0.25).unwrap(), 0.25).unwrap();
        let mut snapped = m.nodes().to_vec();
        for &b in m.boundary() {
            snapped[b] = snapped[b] * (1.0 / snapped[b].norm());
        }
        let m = m.with_nodes(snapped).unwrap();
        let r = m.refine_uniform_with(|p| p * (1.0 / p.norm())).unwrap();
        for p in r.boundary_points() {
            assert!((p.norm() - 1.0).abs() < 1e-14);
        }
        assert!(PI - r.area() < PI - m.area());
    }

    #[test]
    fn disk_polygon_edges() {
        let p = disk_polygon(1.0, 0.125).unwrap();
        let v = p.vertices();
        assert!((v[1] - v[0]).norm() <= 0.125);
        let n = v.len();
        assert!(2.0 * libm::sin(PI / (n - 1) as f64) > 0.125);
    }

    #[test]
    fn rejects_needles_and_bad_h() {
        let needle = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1e-4),
            Vec2::new(0.0, 1e-4),
        ])
        .unwrap();
        assert!(matches!(triangulate(&needle, 0.1), Err(Error::DegenerateGeometry(_))));
        assert!(matches!(triangulate(&unit_square(), 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tight_quality_limit_reports_achieved_value() {
        let opts = MeshOptions { c_usr: 1.0 };
        match triangulate_with(&unit_square(), 0.3, &opts) {
            Err(Error::MeshQuality { achieved, limit }) => {
                assert!(achieved > 1.0);
                assert_eq!(limit, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let m = triangulate(&make_regular_polygon(9, 1.0).unwrap(), 0.2).unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|p| 2.0 * p.x - p.y + 0.5).collect();
        let pts = [Vec2::new(0.1, 0.2), Vec2::new(-0.5, 0.3), Vec2::new(0.0, -0.7)];
        let v = m.interpolate(&f, &pts);
        for (p, v) in pts.iter().zip(v) {
            assert!((v - (2.0 * p.x - p.y + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn from_parts_rejects_wrong_boundary() {
        let m = triangulate(&unit_square(), 0.5).unwrap();
        let mut b = m.boundary().to_vec();
        b.reverse();
        assert!(matches!(
            Mesh::from_parts(m.nodes().to_vec(), m.triangles().to_vec(), b),
            Err(Error::InvalidMesh(_))
        ));
    }
}
