//! Descent of the scaled eigenvalue over convex polygons.
//!
//! The design variables are the boundary nodes of the mesh. A gradient
//! entry is a central difference of `λ̂` for one boundary node moved along
//! its normal with the connectivity kept. The descent direction is the
//! linear-elastic extension of the boundary forces `−g_i n_i` to the whole
//! mesh, applied to every node. Boundary nodes that turn reflex are
//! projected back onto the chord of their neighbours; the domain is
//! remeshed from its convex hull only when that fails or the mesh quality
//! degrades. Accepted shapes are rescaled to area `π` and centred.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fem::{assemble_elasticity, plane_stress_lame, solve_spd, Discretization};
use crate::flow::FlowParams;
use crate::geometry::{
    centroid, convexity_project, isoperimetric_ratio, max_turning_angle, perimeter, second_moment_ratio,
    signed_area, triangulate, ConvexPolygon, Mesh, Vec2,
};
use crate::scaling::{scaled_eigenvalue, ScaledEigen, V_TARGET};
use crate::{Error, FloatExt, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticityParams {
    pub young: f64,
    pub poisson: f64,
    /// Zero-order damping `ρ`.
    pub rho: f64,
}

impl Default for ElasticityParams {
    fn default() -> Self {
        Self {
            young: 0.5,
            poisson: 0.2,
            rho: 0.5,
        }
    }
}

impl ElasticityParams {
    pub fn validate(&self) -> Result<()> {
        plane_stress_lame(self.young, self.poisson)?;
        if !(self.rho > 0.0) {
            return Err(Error::InvalidArgument(format!("damping must be positive, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Problem and descent settings. `m_hat` and `ell_min` refer to the domain
/// normalized to area `π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeParams {
    pub m_hat: f64,
    pub ell_min: f64,
    /// Mesh size.
    pub h: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Probe length relative to `h`.
    pub probe_factor: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Step growth after an accepted step.
    pub growth: f64,
    /// Stop when `max|g_i| ≤ stationarity · λ̂ / diam`.
    pub stationarity: f64,
    /// Side of the centred box that must contain the normalized domain.
    pub bbox: f64,
    /// Remesh once the mesh quality exceeds this value.
    pub remesh_quality: f64,
    /// Seed of the initial flow guess.
    pub seed: u64,
    /// Iteration cap of the probe flows.
    pub probe_max_iter: usize,
    /// A flow that hits its cap still counts once its last step norm is
    /// below `drift_factor · eps_stop`.
    pub drift_factor: f64,
}

impl ShapeParams {
    /// `ℓ_min = q m̂ / |∂B₁|` as on the unit disk.
    pub fn from_fraction(m_hat: f64, q: f64, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("q must lie in [0, 1], got {q}")));
        }
        let s = Self {
            m_hat,
            ell_min: q * m_hat / (2.0 * PI),
            h,
            initial_step: 0.05,
            max_step: 0.2,
            probe_factor: 1e-2,
            armijo: 1e-4,
            max_halvings: 8,
            growth: 1.5,
            stationarity: 1e-3,
            bbox: 10.0,
            remesh_quality: 5.0,
            seed: 0,
            probe_max_iter: 500,
            drift_factor: 10.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_hat", self.m_hat),
            ("h", self.h),
            ("initial_step", self.initial_step),
            ("max_step", self.max_step),
            ("probe_factor", self.probe_factor),
            ("armijo", self.armijo),
            ("stationarity", self.stationarity),
            ("bbox", self.bbox),
            ("remesh_quality", self.remesh_quality),
            ("drift_factor", self.drift_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ell_min >= 0.0) {
            return Err(Error::InvalidArgument(format!("ell_min must be nonnegative, got {}", self.ell_min)));
        }
        if self.probe_max_iter == 0 {
            return Err(Error::InvalidArgument("probe_max_iter must be positive".into()));
        }
        if !(self.growth >= 1.0) {
            return Err(Error::InvalidArgument(format!("growth must be at least 1, got {}", self.growth)));
        }
        Ok(())
    }

    /// Largest feasible perimeter of the normalized domain, `m̂/ℓ_min`.
    pub fn max_perimeter(&self) -> f64 {
        if self.ell_min > 0.0 {
            self.m_hat / self.ell_min
        } else {
            f64::INFINITY
        }
    }
}

/// Runs independent probes. Results must come back in index order.
pub trait ProbeExecutor: Sync {
    fn run(&self, count: usize, probe: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Vec<Result<f64>>;
}

pub struct SequentialProbes;

impl ProbeExecutor for SequentialProbes {
    fn run(&self, count: usize, probe: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Vec<Result<f64>> {
        (0..count).map(probe).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ShapeState {
    mesh: Mesh,
    polygon: ConvexPolygon,
    disc: Discretization,
    eigen: ScaledEigen,
    step_size: f64,
    iter: usize,
    stalled: bool,
    accepted: bool,
    remeshed: bool,
    grad_max: f64,
}

impl ShapeState {
    /// Normalizes `initial` to area `π`, meshes it and solves.
    pub fn new(initial: &ConvexPolygon, sp: &ShapeParams, fp: &FlowParams) -> Result<Self> {
        sp.validate()?;
        let s = (V_TARGET / initial.area()).sqrt();
        let c = centroid(initial.vertices());
        let poly = ConvexPolygon::new(initial.vertices().iter().map(|&p| (p - c) * s).collect())?;
        let mesh = triangulate(&poly, sp.h)?;
        check_feasible(&mesh, sp)?;
        let disc = Discretization::new(&mesh)?;
        let eigen = scaled_eigenvalue(&disc, sp.m_hat, sp.ell_min, fp, None, sp.seed)?;
        Ok(Self {
            polygon: hull_of(&mesh)?,
            mesh,
            disc,
            eigen,
            step_size: sp.initial_step,
            iter: 0,
            stalled: false,
            accepted: false,
            remeshed: true,
            grad_max: f64::NAN,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Convex hull of the boundary nodes (collinear nodes dropped).
    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn eigen(&self) -> &ScaledEigen {
        &self.eigen
    }

    pub fn lambda_hat(&self) -> f64 {
        self.eigen.lambda_hat
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn stalled(&self) -> bool {
        self.stalled
    }

    /// Whether the last descent step was accepted.
    pub fn accepted(&self) -> bool {
        self.accepted
    }

    /// Whether the mesh was rebuilt in the last step.
    pub fn remeshed(&self) -> bool {
        self.remeshed
    }

    /// `max|g_i|` of the gradient that produced this state.
    pub fn grad_max(&self) -> f64 {
        self.grad_max
    }

    pub fn boundary_points(&self) -> Vec<Vec2> {
        self.mesh.boundary_points()
    }

    /// Tolerance of the stationarity test for this shape.
    pub fn stationarity_tol(&self, sp: &ShapeParams) -> f64 {
        sp.stationarity * self.lambda_hat() / self.polygon.diameter()
    }
}

fn hull_of(mesh: &Mesh) -> Result<ConvexPolygon> {
    convexity_project(&mesh.boundary_points())
}

fn check_feasible(mesh: &Mesh, sp: &ShapeParams) -> Result<()> {
    let b = mesh.boundary_points();
    let t = (V_TARGET / signed_area(&b)).sqrt();
    let p = perimeter(&b) * t;
    if p > sp.max_perimeter() {
        return Err(Error::InfeasibleParams(format!(
            "normalized perimeter {p} exceeds m̂/ℓ_min = {}",
            sp.max_perimeter()
        )));
    }
    let half = 0.5 * sp.bbox;
    if b.iter().any(|q| q.x.abs() > half || q.y.abs() > half) {
        return Err(Error::InfeasibleParams("domain leaves the bounding box".into()));
    }
    Ok(())
}

/// Every corner of the closed polyline turns left or goes straight.
fn is_convex(pts: &[Vec2]) -> bool {
    let n = pts.len();
    (0..n).all(|i| {
        let (a, b, c) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
        let (e1, e2) = (b - a, c - b);
        e1.cross(e2) >= -1e-12 * e1.norm() * e2.norm()
    })
}

/// `g_i = [λ̂(Ω_i^{+δ}) − λ̂(Ω_i^{−δ})] / 2δ` in boundary order, where
/// `Ω_i^{±δ}` has boundary node `i` moved by `±δ n_i` and `δ = probe_factor · h`.
pub fn shape_gradient(
    s: &ShapeState,
    sp: &ShapeParams,
    fp: &FlowParams,
    exec: &dyn ProbeExecutor,
) -> Result<Vec<f64>> {
    let delta = sp.probe_factor * sp.h;
    let pfp = FlowParams {
        max_iter: fp.max_iter.min(sp.probe_max_iter),
        ..*fp
    };
    let bg = s.disc.boundary();
    let warm = &s.eigen.result.u;
    let moved = |k: usize, d: f64| -> Result<f64> {
        let mut nodes = s.mesh.nodes().to_vec();
        let i = bg.nodes()[k];
        nodes[i] = nodes[i] + bg.normals()[k] * d;
        let mesh = s.mesh.with_nodes(nodes)?;
        let disc = Discretization::new(&mesh)?;
        let e = scaled_eigenvalue(&disc, sp.m_hat, sp.ell_min, &pfp, Some(warm), sp.seed)?;
        if !settled(&e, sp, &pfp) {
            return Err(Error::NoConvergence {
                iterations: e.result.iterations,
                residual: e.result.residual,
            });
        }
        Ok(e.lambda_hat)
    };
    // a single-node move has curvature ~1/h, which swamps a one-sided quotient
    let probe = |k: usize| -> Result<f64> { Ok((moved(k, delta)? - moved(k, -delta)?) / (2.0 * delta)) };
    exec.run(bg.len(), &probe)
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.map_err(|e| Error::GradientProbe {
                vertex: k,
                reason: format!("{e}"),
            })
        })
        .collect()
}

/// Solves `a(w, v) + ρ(w, v) = −Σ_k f_k · v(x_k)` for the boundary forces
/// `loads` (boundary order) and returns the nodal displacement.
pub fn elasticity_smooth(mesh: &Mesh, loads: &[Vec2], ep: &ElasticityParams) -> Result<Vec<Vec2>> {
    ep.validate()?;
    let bnd = mesh.boundary();
    if loads.len() != bnd.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} boundary loads, got {}",
            bnd.len(),
            loads.len()
        )));
    }
    if loads.iter().any(|f| !f.x.is_finite() || !f.y.is_finite()) {
        return Err(Error::InvalidArgument("non-finite load".into()));
    }
    let (mu, la) = plane_stress_lame(ep.young, ep.poisson)?;
    let k = assemble_elasticity(mesh, mu, la, ep.rho);
    let mut rhs = vec![0.0; 2 * mesh.num_nodes()];
    for (&i, f) in bnd.iter().zip(loads) {
        rhs[2 * i] -= f.x;
        rhs[2 * i + 1] -= f.y;
    }
    let w = solve_spd(&k, &rhs, 1e-10)?;
    Ok((0..mesh.num_nodes()).map(|i| Vec2::new(w[2 * i], w[2 * i + 1])).collect())
}

/// Moves reflex boundary nodes onto the chord of their neighbours until the
/// boundary is convex.
fn convexify_boundary(nodes: &mut [Vec2], boundary: &[usize]) -> bool {
    let n = boundary.len();
    for _ in 0..50 {
        let pts: Vec<Vec2> = boundary.iter().map(|&i| nodes[i]).collect();
        if is_convex(&pts) {
            return true;
        }
        for k in 0..n {
            let (a, b, c) = (
                nodes[boundary[(k + n - 1) % n]],
                nodes[boundary[k]],
                nodes[boundary[(k + 1) % n]],
            );
            let (e1, e2) = (b - a, c - b);
            if e1.cross(e2) < -1e-12 * e1.norm() * e2.norm() {
                let d = c - a;
                let s = ((b - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                nodes[boundary[k]] = a + d * s;
            }
        }
    }
    let pts: Vec<Vec2> = boundary.iter().map(|&i| nodes[i]).collect();
    is_convex(&pts)
}

/// Area `π`, centroid at the origin.
fn normalize_mesh(mesh: &Mesh) -> Result<Mesh> {
    let b = mesh.boundary_points();
    let c = centroid(&b);
    let s = (V_TARGET / signed_area(&b)).sqrt();
    mesh.with_nodes(mesh.nodes().iter().map(|&p| (p - c) * s).collect())
}

/// Candidate mesh for displaced nodes and whether it was rebuilt.
fn candidate(mesh: &Mesh, mut nodes: Vec<Vec2>, sp: &ShapeParams) -> Result<(Mesh, bool)> {
    if convexify_boundary(&mut nodes, mesh.boundary()) {
        if let Ok(m) = mesh.with_nodes(nodes.clone()) {
            if m.quality() <= sp.remesh_quality {
                return Ok((normalize_mesh(&m)?, false));
            }
        }
    }
    let pts: Vec<Vec2> = mesh.boundary().iter().map(|&i| nodes[i]).collect();
    let hull = convexity_project(&pts)?;
    let s = (V_TARGET / hull.area()).sqrt();
    let c = centroid(hull.vertices());
    let poly = ConvexPolygon::new(hull.vertices().iter().map(|&p| (p - c) * s).collect())?;
    Ok((triangulate(&poly, sp.h)?, true))
}

/// One Armijo-controlled descent step. A stationary input, or one whose
/// trials all fail, comes back unchanged with `stalled` set.
pub fn descend_step(
    s: &ShapeState,
    sp: &ShapeParams,
    fp: &FlowParams,
    ep: &ElasticityParams,
    exec: &dyn ProbeExecutor,
) -> Result<ShapeState> {
    let g = shape_gradient(s, sp, fp, exec)?;
    descend_with_gradient(s, &g, sp, fp, ep)
}

/// [`descend_step`] for a precomputed gradient.
pub fn descend_with_gradient(
    s: &ShapeState,
    g: &[f64],
    sp: &ShapeParams,
    fp: &FlowParams,
    ep: &ElasticityParams,
) -> Result<ShapeState> {
    let grad_max = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = s.clone();
    out.iter = s.iter + 1;
    out.grad_max = grad_max;
    out.accepted = false;
    out.remeshed = false;
    if grad_max <= s.stationarity_tol(sp) {
        out.stalled = true;
        return Ok(out);
    }
    let bg = s.disc.boundary();
    let loads: Vec<Vec2> = g.iter().zip(bg.normals()).map(|(&gi, &n)| n * gi).collect();
    let w = elasticity_smooth(&s.mesh, &loads, ep)?;
    let wmax = w.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    if !(wmax > 0.0) {
        out.stalled = true;
        return Ok(out);
    }
    let mut step = s.step_size;
    for _ in 0..=sp.max_halvings {
        let nodes: Vec<Vec2> = s.mesh.nodes().iter().zip(&w).map(|(&p, &v)| p + v * (step / wmax)).collect();
        if let Some((mesh, remeshed, eigen)) = trial(s, nodes, sp, fp)? {
            if eigen.lambda_hat <= s.lambda_hat() - sp.armijo * step * gnorm {
                out.polygon = hull_of(&mesh)?;
                out.disc = Discretization::new(&mesh)?;
                out.mesh = mesh;
                out.eigen = eigen;
                out.step_size = (step * sp.growth).min(sp.max_step);
                out.accepted = true;
                out.remeshed = remeshed;
                out.stalled = false;
                return Ok(out);
            }
        }
        step *= 0.5;
    }
    out.step_size = step;
    out.stalled = true;
    Ok(out)
}

/// Converged, or still drifting slowly along a near-neutral direction (the
/// rotations of an asymmetric state on a nearly round domain).
fn settled(e: &ScaledEigen, sp: &ShapeParams, fp: &FlowParams) -> bool {
    e.result.converged || e.result.last_step_norm <= sp.drift_factor * fp.eps_stop
}

/// Builds and solves one trial shape; `None` marks a rejected trial.
fn trial(
    s: &ShapeState,
    nodes: Vec<Vec2>,
    sp: &ShapeParams,
    fp: &FlowParams,
) -> Result<Option<(Mesh, bool, ScaledEigen)>> {
    let Ok((mesh, remeshed)) = candidate(&s.mesh, nodes, sp) else {
        return Ok(None);
    };
    if check_feasible(&mesh, sp).is_err() {
        return Ok(None);
    }
    let warm = if remeshed {
        s.mesh.interpolate(&s.eigen.result.u, mesh.nodes())
    } else {
        s.eigen.result.u.clone()
    };
    let disc = Discretization::new(&mesh)?;
    match scaled_eigenvalue(&disc, sp.m_hat, sp.ell_min, fp, Some(&warm), sp.seed) {
        Ok(e) if settled(&e, sp, fp) => Ok(Some((mesh, remeshed, e))),
        Ok(_) | Err(Error::NoConvergence { .. }) | Err(Error::InfeasibleParams(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `λ̂` recomputed on a fresh mesh of the normalized hull, relative to the
/// reported value.
pub fn cross_check(s: &ShapeState, sp: &ShapeParams, fp: &FlowParams) -> Result<f64> {
    let hull = s.polygon();
    let t = (V_TARGET / hull.area()).sqrt();
    let mesh = triangulate(&hull.scaled(t), sp.h)?;
    let disc = Discretization::new(&mesh)?;
    let warm = s.mesh.interpolate(&s.eigen.result.u, &mesh.nodes().iter().map(|&p| p * (1.0 / t)).collect::<Vec<_>>());
    let e = scaled_eigenvalue(&disc, sp.m_hat, sp.ell_min, fp, Some(&warm), sp.seed)?;
    Ok((e.lambda_hat - s.lambda_hat()) / s.lambda_hat())
}

/// One row of the descent trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeRecord {
    pub iter: usize,
    pub lambda_hat: f64,
    pub area: f64,
    pub perimeter: f64,
    pub step_size: f64,
    pub grad_max: f64,
    pub accepted: bool,
    pub isoperimetric_ratio: f64,
    pub moment_ratio: f64,
    /// Largest exterior angle of the hull (radians).
    pub max_turning_angle: f64,
}

impl ShapeRecord {
    pub fn of(s: &ShapeState) -> Self {
        let b = s.boundary_points();
        let v = s.polygon.vertices();
        Self {
            iter: s.iter,
            lambda_hat: s.lambda_hat(),
            area: signed_area(&b),
            perimeter: perimeter(&b),
            step_size: s.step_size,
            grad_max: s.grad_max,
            accepted: s.accepted,
            isoperimetric_ratio: isoperimetric_ratio(&b),
            moment_ratio: second_moment_ratio(&b),
            max_turning_angle: max_turning_angle(v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShapeRun {
    pub records: Vec<ShapeRecord>,
    /// `(iteration, relative difference)` of the periodic fresh-mesh check.
    pub cross_checks: Vec<(usize, f64)>,
    pub final_state: ShapeState,
}

/// Descends from `initial` until stalled or `budget` steps. `observe` sees
/// every state, the initial one included.
pub fn optimize(
    initial: &ConvexPolygon,
    sp: &ShapeParams,
    fp: &FlowParams,
    ep: &ElasticityParams,
    budget: usize,
    exec: &dyn ProbeExecutor,
    observe: &mut dyn FnMut(&ShapeState),
) -> Result<ShapeRun> {
    ep.validate()?;
    let mut s = ShapeState::new(initial, sp, fp)?;
    observe(&s);
    let mut records = vec![ShapeRecord::of(&s)];
    let mut cross_checks = Vec::new();
    while s.iter < budget {
        s = descend_step(&s, sp, fp, ep, exec)?;
        observe(&s);
        records.push(ShapeRecord::of(&s));
        if s.iter % 10 == 0 || s.stalled {
            cross_checks.push((s.iter, cross_check(&s, sp, fp)?));
        }
        if s.stalled {
            break;
        }
    }
    Ok(ShapeRun {
        records,
        cross_checks,
        final_state: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disk_polygon;

    #[test]
    fn params() {
        let sp = ShapeParams::from_fraction(2.0, 0.5, 0.25).unwrap();
        assert!((sp.ell_min - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((sp.max_perimeter() - 4.0 * PI).abs() < 1e-12);
        assert!(ShapeParams::from_fraction(2.0, 1.5, 0.25).is_err());
        assert!(ElasticityParams::default().validate().is_ok());
    }

    #[test]
    fn zero_loads_give_zero_displacement() {
        let mesh = triangulate(&disk_polygon(1.0, 0.4).unwrap(), 0.4).unwrap();
        let loads = vec![Vec2::new(0.0, 0.0); mesh.boundary().len()];
        let w = elasticity_smooth(&mesh, &loads, &ElasticityParams::default()).unwrap();
        assert!(w.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn convexify_projects_reflex_node() {
        let mut nodes = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.1),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(convexify_boundary(&mut nodes, &[0, 1, 2, 3, 4]));
        assert!(nodes[1].y.abs() < 1e-15);
    }
}
