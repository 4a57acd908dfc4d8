//! Constrained Delaunay triangulation of a convex boundary cycle plus
//! interior points. Boundary edges are never flipped, which is all the
//! constraint handling a convex domain needs.

use alloc::vec;
use alloc::vec::Vec;

use super::polygon::strictly_left;
use super::{orient, Vec2};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [usize; 3],
    /// `n[i]` is the neighbour across the edge opposite `v[i]`.
    n: [usize; 3],
}

pub(crate) struct Triangulation {
    pts: Vec<Vec2>,
    tris: Vec<Tri>,
    last: usize,
    scale: f64,
}

#[inline]
fn nx(i: usize) -> usize {
    (i + 1) % 3
}

#[inline]
fn pv(i: usize) -> usize {
    (i + 2) % 3
}

/// Positive when `d` lies strictly inside the circumcircle of CCW `(a, b, c)`.
fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

impl Triangulation {
    /// Triangulates the CCW boundary cycle `pts` (convex, collinear runs
    /// allowed) by ear clipping, then makes it Delaunay.
    pub(crate) fn from_convex_cycle(pts: Vec<Vec2>) -> Option<Self> {
        let n = pts.len();
        if n < 3 {
            return None;
        }
        let mut scale: f64 = 0.0;
        for p in &pts {
            scale = scale.max(p.x.abs()).max(p.y.abs());
        }
        let mut ring: Vec<usize> = (0..n).collect();
        let mut faces: Vec<[usize; 3]> = Vec::with_capacity(n - 2);
        while ring.len() > 3 {
            let m = ring.len();
            let mut cand: Vec<(f64, usize)> = Vec::with_capacity(m);
            for k in 0..m {
                let (a, b, c) = (pts[ring[(k + m - 1) % m]], pts[ring[k]], pts[ring[(k + 1) % m]]);
                if strictly_left(a, b, c) {
                    // prefer well-shaped ears
                    let q = orient(a, b, c) / ((b - a).dot(b - a) + (c - b).dot(c - b) + (a - c).dot(a - c));
                    cand.push((q, k));
                }
            }
            cand.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            let best = cand.into_iter().map(|(_, k)| k).find(|&k| {
                let (ia, ib, ic) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
                let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
                // another ring point on the chord a-c would leave a sliver
                !ring.iter().any(|&j| {
                    j != ia && j != ib && j != ic && {
                        let p = pts[j];
                        orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && !strictly_left(a, c, p)
                    }
                })
            });
            let k = best?;
            let m = ring.len();
            faces.push([ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]]);
            ring.remove(k);
        }
        if !strictly_left(pts[ring[0]], pts[ring[1]], pts[ring[2]]) {
            return None;
        }
        faces.push([ring[0], ring[1], ring[2]]);
        let mut t = Triangulation {
            pts,
            tris: Vec::new(),
            last: 0,
            scale: scale.max(f64::MIN_POSITIVE),
        };
        t.tris = faces
            .into_iter()
            .map(|v| Tri { v, n: [NONE; 3] })
            .collect();
        t.link();
        t.make_delaunay();
        Some(t)
    }

    /// Rebuilds neighbour links from vertex triples.
    fn link(&mut self) {
        let mut edges: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * self.tris.len());
        for (t, tri) in self.tris.iter().enumerate() {
            for i in 0..3 {
                let a = tri.v[nx(i)];
                let b = tri.v[pv(i)];
                edges.push((a.min(b), a.max(b), t, i));
            }
        }
        edges.sort_unstable();
        for tri in &mut self.tris {
            tri.n = [NONE; 3];
        }
        let mut k = 0;
        while k < edges.len() {
            if k + 1 < edges.len() && edges[k].0 == edges[k + 1].0 && edges[k].1 == edges[k + 1].1 {
                let (_, _, t1, i1) = edges[k];
                let (_, _, t2, i2) = edges[k + 1];
                self.tris[t1].n[i1] = t2;
                self.tris[t2].n[i2] = t1;
                k += 2;
            } else {
                k += 1;
            }
        }
    }

    fn should_flip(&self, t: usize, i: usize) -> bool {
        let u = self.tris[t].n[i];
        if u == NONE {
            return false;
        }
        let tri = self.tris[t];
        let j = self.index_of_neighbor(u, t);
        let d = self.pts[self.tris[u].v[j]];
        let (a, b, c) = (self.pts[tri.v[i]], self.pts[tri.v[nx(i)]], self.pts[tri.v[pv(i)]]);
        let s2 = self.scale * self.scale;
        if incircle(a, b, c, d) <= 1e-12 * s2 * s2 {
            return false;
        }
        // the new diagonal a-d must split a strictly convex quad
        orient(a, b, d) > 1e-14 * s2 && orient(a, d, c) > 1e-14 * s2
    }

    fn index_of_neighbor(&self, u: usize, t: usize) -> usize {
        let n = self.tris[u].n;
        if n[0] == t {
            0
        } else if n[1] == t {
            1
        } else {
            2
        }
    }

    /// Flips the edge opposite `v[i]` of triangle `t`. Afterwards `t` is
    /// `(a, b, d)` and the neighbour is `(a, d, c)`, both keeping `a` at index 0.
    fn flip(&mut self, t: usize, i: usize) -> usize {
        let u = self.tris[t].n[i];
        let j = self.index_of_neighbor(u, t);
        let tt = self.tris[t];
        let uu = self.tris[u];
        let (a, b, c) = (tt.v[i], tt.v[nx(i)], tt.v[pv(i)]);
        let d = uu.v[j];
        let n_ab = tt.n[pv(i)];
        let n_ca = tt.n[nx(i)];
        let n_bd = uu.n[nx(j)];
        let n_dc = uu.n[pv(j)];
        self.tris[t] = Tri {
            v: [a, b, d],
            n: [n_bd, u, n_ab],
        };
        self.tris[u] = Tri {
            v: [a, d, c],
            n: [n_dc, n_ca, t],
        };
        if n_bd != NONE {
            let k = self.index_of_neighbor(n_bd, u);
            self.tris[n_bd].n[k] = t;
        }
        if n_ca != NONE {
            let k = self.index_of_neighbor(n_ca, t);
            self.tris[n_ca].n[k] = u;
        }
        u
    }

    /// Global Lawson flipping until locally Delaunay.
    pub(crate) fn make_delaunay(&mut self) {
        let cap = 64 * (self.tris.len() + 1);
        for _ in 0..cap {
            let mut flipped = false;
            for t in 0..self.tris.len() {
                for i in 0..3 {
                    if self.should_flip(t, i) {
                        self.flip(t, i);
                        flipped = true;
                    }
                }
            }
            if !flipped {
                return;
            }
        }
    }

    fn locate(&self, p: Vec2) -> Option<usize> {
        let mut t = self.last.min(self.tris.len() - 1);
        for _ in 0..4 * self.tris.len() + 16 {
            let tri = self.tris[t];
            let mut moved = false;
            for i in 0..3 {
                let a = self.pts[tri.v[nx(i)]];
                let b = self.pts[tri.v[pv(i)]];
                if orient(a, b, p) < 0.0 && tri.n[i] != NONE {
                    t = tri.n[i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Some(t);
            }
        }
        // walking can cycle only on badly broken input; scan instead
        (0..self.tris.len()).find(|&t| {
            let v = self.tris[t].v;
            (0..3).all(|i| orient(self.pts[v[nx(i)]], self.pts[v[pv(i)]], p) >= 0.0)
        })
    }

    /// Inserts a point strictly inside the current triangulated region.
    pub(crate) fn insert(&mut self, p: Vec2) -> bool {
        let Some(t) = self.locate(p) else {
            return false;
        };
        let tri = self.tris[t];
        let mut edge = None;
        for i in 0..3 {
            let a = self.pts[tri.v[nx(i)]];
            let b = self.pts[tri.v[pv(i)]];
            let o = orient(a, b, p);
            if o < 0.0 {
                return false;
            }
            if o <= 1e-12 * (b - a).dot(b - a) {
                edge = Some(i);
            }
        }
        let ip = self.pts.len();
        self.pts.push(p);
        let mut stack = Vec::with_capacity(8);
        match edge {
            None => self.split_triangle(t, ip, &mut stack),
            Some(i) => {
                if tri.n[i] == NONE {
                    // the caller keeps interior points off the boundary
                    self.pts.pop();
                    return false;
                }
                self.split_edge(t, i, ip, &mut stack)
            }
        }
        while let Some(t) = stack.pop() {
            if self.should_flip(t, 0) {
                let u = self.flip(t, 0);
                stack.push(t);
                stack.push(u);
            }
        }
        self.last = t;
        true
    }

    fn split_triangle(&mut self, t: usize, ip: usize, stack: &mut Vec<usize>) {
        let Tri { v: [a, b, c], n: [na, nb, nc] } = self.tris[t];
        let t1 = self.tris.len();
        let t2 = t1 + 1;
        self.tris[t] = Tri {
            v: [ip, b, c],
            n: [na, t1, t2],
        };
        self.tris.push(Tri {
            v: [ip, c, a],
            n: [nb, t2, t],
        });
        self.tris.push(Tri {
            v: [ip, a, b],
            n: [nc, t, t1],
        });
        if nb != NONE {
            let k = self.index_of_neighbor(nb, t);
            self.tris[nb].n[k] = t1;
        }
        if nc != NONE {
            let k = self.index_of_neighbor(nc, t);
            self.tris[nc].n[k] = t2;
        }
        stack.extend([t, t1, t2]);
    }

    /// Splits the edge opposite `v[i]` of `t`, shared with an interior
    /// neighbour, into four triangles around `ip`.
    fn split_edge(&mut self, t: usize, i: usize, ip: usize, stack: &mut Vec<usize>) {
        let u = self.tris[t].n[i];
        let j = self.index_of_neighbor(u, t);
        let tt = self.tris[t];
        let uu = self.tris[u];
        let (a, b, c) = (tt.v[i], tt.v[nx(i)], tt.v[pv(i)]);
        let d = uu.v[j];
        let n_ab = tt.n[pv(i)];
        let n_ca = tt.n[nx(i)];
        let n_bd = uu.n[nx(j)];
        let n_dc = uu.n[pv(j)];
        let t2 = self.tris.len();
        let u2 = t2 + 1;
        // t: (p, a, b), t2: (p, c, a), u: (p, b, d), u2: (p, d, c)
        self.tris[t] = Tri {
            v: [ip, a, b],
            n: [n_ab, u, t2],
        };
        self.tris[u] = Tri {
            v: [ip, b, d],
            n: [n_bd, u2, t],
        };
        self.tris.push(Tri {
            v: [ip, c, a],
            n: [n_ca, t, u2],
        });
        self.tris.push(Tri {
            v: [ip, d, c],
            n: [n_dc, t2, u],
        });
        if n_ca != NONE {
            let k = self.index_of_neighbor(n_ca, t);
            self.tris[n_ca].n[k] = t2;
        }
        if n_dc != NONE {
            let k = self.index_of_neighbor(n_dc, u);
            self.tris[n_dc].n[k] = u2;
        }
        stack.extend([t, u, t2, u2]);
    }

    pub(crate) fn points(&self) -> &[Vec2] {
        &self.pts
    }

    pub(crate) fn triangles(&self) -> Vec<[usize; 3]> {
        self.tris.iter().map(|t| t.v).collect()
    }
}

/// Lawson flips on an existing triangle list whose boundary edges are
/// fixed. Used after node smoothing.
pub(crate) fn delaunay_flip(pts: &[Vec2], tris: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut scale: f64 = 0.0;
    for p in pts {
        scale = scale.max(p.x.abs()).max(p.y.abs());
    }
    let mut t = Triangulation {
        pts: pts.to_vec(),
        tris: tris.iter().map(|&v| Tri { v, n: [NONE; 3] }).collect(),
        last: 0,
        scale: scale.max(f64::MIN_POSITIVE),
    };
    t.link();
    t.make_delaunay();
    t.triangles()
}

/// Node-to-neighbour adjacency (sorted, deduplicated).
pub(crate) fn node_neighbors(n: usize, tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); n];
    for t in tris {
        for i in 0..3 {
            nb[t[i]].push(t[nx(i)]);
            nb[t[i]].push(t[pv(i)]);
        }
    }
    for l in &mut nb {
        l.sort_unstable();
        l.dedup();
    }
    nb
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(pts: &[Vec2], tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| 0.5 * orient(pts[t[0]], pts[t[1]], pts[t[2]]))
            .sum()
    }

    #[test]
    fn square_with_collinear_midpoints() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.5),
        ];
        let mut t = Triangulation::from_convex_cycle(pts).unwrap();
        assert_eq!(t.triangles().len(), 6);
        assert!(t.insert(Vec2::new(0.5, 0.5)));
        let tris = t.triangles();
        assert_eq!(tris.len(), 8);
        let p = t.points();
        for tri in &tris {
            assert!(orient(p[tri[0]], p[tri[1]], p[tri[2]]) > 0.0);
        }
        assert!((area(p, &tris) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn insertion_on_interior_edge() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let mut t = Triangulation::from_convex_cycle(pts).unwrap();
        // the single diagonal passes through the centre
        assert!(t.insert(Vec2::new(1.0, 1.0)));
        let tris = t.triangles();
        assert_eq!(tris.len(), 4);
        assert!((area(t.points(), &tris) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn result_is_locally_delaunay() {
        let mut pts = Vec::new();
        for k in 0..24 {
            let a = core::f64::consts::TAU * k as f64 / 24.0;
            pts.push(Vec2::new(libm::cos(a), libm::sin(a)));
        }
        let mut t = Triangulation::from_convex_cycle(pts).unwrap();
        let mut s = 0.123f64;
        for _ in 0..200 {
            s = (s * 9301.0 + 0.49297) % 1.0;
            let r = 0.9 * libm::sqrt(s);
            s = (s * 9301.0 + 0.49297) % 1.0;
            let a = core::f64::consts::TAU * s;
            t.insert(Vec2::new(r * libm::cos(a), r * libm::sin(a)));
        }
        for ti in 0..t.tris.len() {
            for i in 0..3 {
                assert!(!t.should_flip(ti, i));
            }
        }
        let tris = t.triangles();
        let p = t.points();
        let a = area(p, &tris);
        let exact = 12.0 * libm::sin(core::f64::consts::TAU / 24.0);
        assert!((a - exact).abs() < 1e-12);
    }
}
