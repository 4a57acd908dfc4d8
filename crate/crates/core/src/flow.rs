//! Decoupled gradient flow for the insulation eigenvalue.
//!
//! Each step solves for a pseudo-time derivative `d` that is L²-orthogonal
//! to the previous iterate,
//!
//! ```text
//! (d, v)_⋆ + a_{ℓ_{k-1}}(u_{k-1} + τ d, v) = 0   for all v ⊥_{L²} u_{k-1},
//! ```
//!
//! then moves `u_k = u_{k-1} + τ d` and replaces the film by the optimal
//! density of `u_k`. The multiplier of the constraint is eliminated with two
//! SPD solves against `S + τA`.

use alloc::vec;
use alloc::vec::Vec;

use crate::fem::{pcg, smallest_generalized_eig, CsrMatrix, Discretization, EigOptions, EigPair};
use crate::insulation::{optimal_density, Density, InsulationParams};
use crate::num::{axpy, dot, norm};
use crate::{Error, FloatExt, Result};

/// Gram matrix of the `⋆` inner product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StarProduct {
    /// Stiffness plus mass.
    #[default]
    H1,
    /// Mass only.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub tau: f64,
    /// Stop once `‖d‖_⋆ ≤ eps_stop`.
    pub eps_stop: f64,
    pub max_iter: usize,
    pub star: StarProduct,
    /// Relative residual of the inner CG solves.
    pub cg_tol: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            tau: 10.0,
            eps_stop: 1e-6,
            max_iter: 5000,
            star: StarProduct::H1,
            cg_tol: 1e-12,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eps_stop > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "eps_stop must be positive, got {}",
                self.eps_stop
            )));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        Ok(())
    }
}

/// How the film is chosen from the current trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilmModel {
    /// Optimal density over `ℓ ≥ 0` on top of the fixed layer `ℓ_min > 0`.
    LowerBound(InsulationParams),
    /// No lower bound: `ℓ = m̂ φ / ∫φ` with `φ = √(u² + ε²)`. The boundary
    /// energy is `∫(u² + ε²)/ℓ = (∫φ)²/m̂`.
    Regularized { m_hat: f64, eps: f64 },
}

impl FilmModel {
    pub fn lower_bound(p: InsulationParams) -> Result<Self> {
        if p.beta().is_none() {
            return Err(Error::InfeasibleParams("the flow with a lower bound needs ℓ_min > 0".into()));
        }
        Ok(Self::LowerBound(p))
    }

    pub fn m_hat(&self) -> f64 {
        match self {
            Self::LowerBound(p) => p.m_hat(),
            Self::Regularized { m_hat, .. } => *m_hat,
        }
    }

    fn film(&self, ub: &[f64], w: &[f64]) -> Result<Film> {
        match *self {
            Self::LowerBound(p) => {
                let density = optimal_density(ub, w, &p)?;
                let c = crate::insulation::compute_c(ub, w, &p)?;
                Ok(Film {
                    total: density.total(),
                    density,
                    c,
                })
            }
            Self::Regularized { m_hat, eps } => {
                let phi: Vec<f64> = ub.iter().map(|x| (x * x + eps * eps).sqrt()).collect();
                let s: f64 = phi.iter().zip(w).map(|(p, w)| p * w).sum();
                let total: Vec<f64> = phi.iter().map(|p| m_hat * p / s).collect();
                Ok(Film {
                    density: Density::new(total.clone(), 0.0)?,
                    total,
                    c: f64::NAN,
                })
            }
        }
    }

    fn boundary_energy(&self, ub: &[f64], film: &Film, w: &[f64]) -> f64 {
        let eps2 = match self {
            Self::LowerBound(_) => 0.0,
            Self::Regularized { eps, .. } => eps * eps,
        };
        ub.iter()
            .zip(&film.total)
            .zip(w)
            .map(|((x, t), w)| w * (x * x + eps2) / t)
            .sum()
    }
}

#[derive(Clone, Debug)]
struct Film {
    /// `ℓ_min + ℓ` at the boundary nodes.
    total: Vec<f64>,
    density: Density,
    c: f64,
}

/// Iterate of the flow. `u` is not normalized.
#[derive(Clone, Debug)]
pub struct FlowState {
    k: usize,
    u: Vec<f64>,
    film: Film,
    energy: f64,
    last_step_norm: f64,
    last_orthogonality: f64,
    /// `τ Σ ‖d_j‖²_⋆`
    cumulative_star: f64,
    /// `τ² Σ ‖d_j‖²_{L²}`
    cumulative_l2: f64,
    initial_energy: f64,
    initial_l2: f64,
    l2_norm_sq: f64,
    warm: Option<(Vec<f64>, Vec<f64>)>,
}

impl FlowState {
    /// State `k = 0` with the optimal film of `u0`.
    pub fn new(u0: Vec<f64>, disc: &Discretization, model: &FilmModel) -> Result<Self> {
        if u0.len() != disc.num_nodes() {
            return Err(Error::InvalidArgument(alloc::format!(
                "initial field has {} values for {} nodes",
                u0.len(),
                disc.num_nodes()
            )));
        }
        let bg = disc.boundary();
        let ub = bg.trace(&u0);
        let film = model.film(&ub, bg.weights())?;
        let energy = disc.stiffness().quad_form(&u0) + model.boundary_energy(&ub, &film, bg.weights());
        let l2 = disc.l2_norm_sq(&u0);
        Ok(Self {
            k: 0,
            u: u0,
            film,
            energy,
            last_step_norm: f64::INFINITY,
            last_orthogonality: 0.0,
            cumulative_star: 0.0,
            cumulative_l2: 0.0,
            initial_energy: energy,
            initial_l2: l2,
            l2_norm_sq: l2,
            warm: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn density(&self) -> &Density {
        &self.film.density
    }

    /// Threshold `c_u` of the current density (NaN without a lower bound).
    pub fn c_u(&self) -> f64 {
        self.film.c
    }

    /// `J(u_k, ℓ_k)`
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `‖d_k‖_⋆`
    pub fn last_step_norm(&self) -> f64 {
        self.last_step_norm
    }

    /// `|(u_{k-1}, d_k)_{L²}| / (‖u_{k-1}‖ ‖d_k‖)`
    pub fn last_orthogonality(&self) -> f64 {
        self.last_orthogonality
    }

    pub fn cumulative_star(&self) -> f64 {
        self.cumulative_star
    }

    pub fn cumulative_l2(&self) -> f64 {
        self.cumulative_l2
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    /// `(J_k + τΣ‖d‖²_⋆ − J_0) / J_0`; nonpositive when the energy estimate
    /// holds.
    pub fn telescoping_defect(&self) -> f64 {
        (self.energy + self.cumulative_star - self.initial_energy) / self.initial_energy.abs()
    }

    /// `|‖u_k‖² − ‖u_0‖² − τ²Σ‖d‖²| / ‖u_k‖²`
    pub fn norm_identity_defect(&self) -> f64 {
        (self.l2_norm_sq - self.initial_l2 - self.cumulative_l2).abs() / self.l2_norm_sq
    }

    /// `J_k / ‖u_k‖²`
    pub fn rayleigh(&self) -> f64 {
        self.energy / self.l2_norm_sq
    }
}

/// CG to `tol`, or to its rounding floor if that lies within `100 tol`.
fn solve_to_floor(p: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
    let (x, stats, converged) = pcg(p, b, x0, tol)?;
    if converged || stats.residual <= 100.0 * tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: stats.iterations,
            residual: stats.residual,
        })
    }
}

/// One step of the flow.
pub fn flow_step(s: FlowState, disc: &Discretization, model: &FilmModel, fp: &FlowParams) -> Result<FlowState> {
    fp.validate()?;
    let tau = fp.tau;
    let bg = disc.boundary();
    let coef: Vec<f64> = s.film.total.iter().map(|t| 1.0 / t).collect();
    let a = disc.robin_operator(&coef);
    let (ck, cm) = match fp.star {
        StarProduct::H1 => (1.0, 1.0),
        StarProduct::L2 => (0.0, 1.0),
    };
    let mut p = CsrMatrix::combine(&[(ck + tau, disc.stiffness()), (cm, disc.mass())])?;
    p.add_diagonal(&disc.boundary_diagonal(&coef.iter().map(|c| tau * c).collect::<Vec<_>>()))?;

    let au = a.mul_vec(&s.u);
    let b = disc.mass().mul_vec(&s.u);
    let (w1, w2) = match &s.warm {
        Some((x1, x2)) => (Some(x1.as_slice()), Some(x2.as_slice())),
        None => (None, None),
    };
    let x1 = solve_to_floor(&p, &au, w1, fp.cg_tol)?;
    let x2 = solve_to_floor(&p, &b, w2, fp.cg_tol)?;
    let mu = dot(&b, &x1) / dot(&b, &x2);
    let mut d = x2.clone();
    d.iter_mut().zip(&x1).for_each(|(d, x)| *d = mu * *d - x);

    let md = disc.mass().mul_vec(&d);
    let d_l2 = dot(&d, &md);
    let d_star = match fp.star {
        StarProduct::H1 => disc.stiffness().quad_form(&d) + d_l2,
        StarProduct::L2 => d_l2,
    };
    let orth = dot(&b, &d).abs() / (norm(&b) * norm(&d)).max(f64::MIN_POSITIVE);

    let mut u = s.u;
    axpy(tau, &d, &mut u);
    let ub = bg.trace(&u);
    let film = model.film(&ub, bg.weights())?;
    let energy = disc.stiffness().quad_form(&u) + model.boundary_energy(&ub, &film, bg.weights());
    let l2 = disc.l2_norm_sq(&u);
    Ok(FlowState {
        k: s.k + 1,
        u,
        film,
        energy,
        last_step_norm: d_star.sqrt(),
        last_orthogonality: orth,
        cumulative_star: s.cumulative_star + tau * d_star,
        cumulative_l2: s.cumulative_l2 + tau * tau * d_l2,
        initial_energy: s.initial_energy,
        initial_l2: s.initial_l2,
        l2_norm_sq: l2,
        warm: Some((x1, x2)),
    })
}

/// Row of the per-iteration log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowLogEntry {
    pub k: usize,
    pub j: f64,
    pub step_norm_star: f64,
    pub l2_norm_sq: f64,
    pub c_u: f64,
}

impl FlowLogEntry {
    fn of(s: &FlowState) -> Self {
        Self {
            k: s.k,
            j: s.energy,
            step_norm_star: if s.k == 0 { 0.0 } else { s.last_step_norm },
            l2_norm_sq: s.l2_norm_sq,
            c_u: s.film.c,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// `J(u, h_u)` re-evaluated at the normalized `u`.
    pub lambda: f64,
    /// `J_K / ‖u_K‖²` from the flow.
    pub flow_rayleigh: f64,
    /// L²-normalized eigenfunction.
    pub u: Vec<f64>,
    /// Free film of the normalized `u` (boundary order).
    pub density: Density,
    pub c_u: f64,
    pub iterations: usize,
    /// `‖A u − λ M u‖ / ‖M u‖` with the film of `u`.
    pub residual: f64,
    pub converged: bool,
    pub last_step_norm: f64,
    /// Largest `telescoping_defect` over all iterations.
    pub max_telescoping_defect: f64,
    /// Largest `norm_identity_defect` over all iterations.
    pub max_norm_defect: f64,
    /// Largest `last_orthogonality` over all iterations.
    pub max_orthogonality: f64,
    pub log: Vec<FlowLogEntry>,
}

/// Runs the flow from `init` (`‖init‖_{L²} = 1`) until `‖d‖_⋆ ≤ eps_stop` or
/// `max_iter`. Hitting `max_iter` is reported in `converged`, not as an error.
pub fn run_film_flow(init: Vec<f64>, disc: &Discretization, model: &FilmModel, fp: &FlowParams) -> Result<EigenResult> {
    fp.validate()?;
    let n0 = disc.l2_norm_sq(&init);
    if !((n0 - 1.0).abs() <= 1e-8) {
        return Err(Error::InvalidArgument(alloc::format!(
            "initial field must have unit L² norm, got ‖u‖² = {n0}"
        )));
    }
    let mut s = FlowState::new(init, disc, model)?;
    let mut log = vec![FlowLogEntry::of(&s)];
    let (mut tel, mut nrm, mut orth) = (f64::NEG_INFINITY, 0.0_f64, 0.0_f64);
    let mut converged = false;
    while s.k < fp.max_iter {
        s = flow_step(s, disc, model, fp)?;
        tel = tel.max(s.telescoping_defect());
        nrm = nrm.max(s.norm_identity_defect());
        orth = orth.max(s.last_orthogonality);
        log.push(FlowLogEntry::of(&s));
        if s.last_step_norm <= fp.eps_stop {
            converged = true;
            break;
        }
    }
    if s.k == 0 {
        tel = 0.0;
    }
    finish(s, disc, model, converged, tel, nrm, orth, log)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    s: FlowState,
    disc: &Discretization,
    model: &FilmModel,
    converged: bool,
    tel: f64,
    nrm: f64,
    orth: f64,
    log: Vec<FlowLogEntry>,
) -> Result<EigenResult> {
    let bg = disc.boundary();
    let w = bg.weights();
    let scale = s.l2_norm_sq.sqrt();
    let u: Vec<f64> = s.u.iter().map(|x| x / scale).collect();
    let ub = bg.trace(&u);
    let ku = disc.stiffness().quad_form(&u);
    let (lambda, density, c_u, film) = match *model {
        FilmModel::LowerBound(_) => {
            let film = model.film(&ub, w)?;
            let e = ku + model.boundary_energy(&ub, &film, w);
            (e, film.density.clone(), film.c, film.total)
        }
        FilmModel::Regularized { m_hat, .. } => {
            let l1: f64 = ub.iter().zip(w).map(|(x, w)| x.abs() * w).sum();
            let ell: Vec<f64> = ub.iter().map(|x| m_hat * x.abs() / l1).collect();
            let film = model.film(&ub, w)?;
            (ku + l1 * l1 / m_hat, Density::new(ell, 0.0)?, f64::NAN, film.total)
        }
    };
    let coef: Vec<f64> = film.iter().map(|t| 1.0 / t).collect();
    let mut r = disc.robin_operator(&coef).mul_vec(&u);
    let mu = disc.mass().mul_vec(&u);
    let rq = dot(&u, &r);
    axpy(-rq, &mu, &mut r);
    Ok(EigenResult {
        lambda,
        flow_rayleigh: s.rayleigh(),
        residual: norm(&r) / norm(&mu),
        u,
        density,
        c_u,
        iterations: s.k,
        converged,
        last_step_norm: s.last_step_norm,
        max_telescoping_defect: tel,
        max_norm_defect: nrm,
        max_orthogonality: orth,
        log,
    })
}

/// Flow with the lower bound of `p` (`ℓ_min > 0`).
pub fn run_flow(init: Vec<f64>, disc: &Discretization, p: &InsulationParams, fp: &FlowParams) -> Result<EigenResult> {
    run_film_flow(init, disc, &FilmModel::lower_bound(*p)?, fp)
}

/// `ε = N^{-1/2} / 10` for `N` mesh nodes.
pub fn regularization_eps(num_nodes: usize) -> f64 {
    0.1 / (num_nodes as f64).sqrt()
}

/// Eigenvalue without a lower bound, `min ∫|∇u|² + (∫|u| ds)²/m̂`, computed
/// with the regularized film. `density` holds `ℓ_opt = m̂|u|/∫|u| ds`.
pub fn eigenvalue_no_lower_bound(
    init: Vec<f64>,
    disc: &Discretization,
    m_hat: f64,
    fp: &FlowParams,
) -> Result<EigenResult> {
    if !(m_hat > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("total mass must be positive, got {m_hat}")));
    }
    let model = FilmModel::Regularized {
        m_hat,
        eps: regularization_eps(disc.num_nodes()),
    };
    run_film_flow(init, disc, &model, fp)
}

/// First eigenpair of `K + α B` with the lumped boundary mass `B`.
pub fn robin_eigen(disc: &Discretization, alpha: f64, opts: &EigOptions) -> Result<EigPair> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("alpha must be nonnegative, got {alpha}")));
    }
    let a = disc.robin_operator(&vec![alpha; disc.boundary().len()]);
    let mut e = smallest_generalized_eig(&a, disc.mass(), &[], opts)?;
    if e.vector.iter().sum::<f64>() < 0.0 {
        e.vector.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(e)
}

/// Robin eigenvalue with the constant film `m̂/|∂Ω|`, i.e. `α = |∂Ω|/m̂`.
pub fn robin_reference(disc: &Discretization, m_hat: f64) -> Result<f64> {
    if !(m_hat > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("total mass must be positive, got {m_hat}")));
    }
    Ok(robin_eigen(disc, disc.perimeter() / m_hat, &EigOptions::default())?.value)
}

/// First nonzero Neumann eigenvalue.
pub fn neumann_mu2(disc: &Discretization) -> Result<f64> {
    let ones = vec![1.0; disc.num_nodes()];
    Ok(smallest_generalized_eig(disc.stiffness(), disc.mass(), &[&ones], &EigOptions::default())?.value)
}

/// Relative amplitude of the second mode in [`initial_guess`].
pub const SYMMETRY_BREAKING_AMPLITUDE: f64 = 1e-2;

/// First Robin eigenfunction for the constant film `m̂/|∂Ω|` plus
/// `1e-2` times the second one, L²-normalized. The seed fixes the start
/// vector of the second-mode solve, and with it the mix of a degenerate
/// pair.
pub fn initial_guess(disc: &Discretization, m_hat: f64, seed: u64) -> Result<Vec<f64>> {
    if !(m_hat > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("total mass must be positive, got {m_hat}")));
    }
    let opts = EigOptions {
        seed,
        ..EigOptions::default()
    };
    let alpha = disc.perimeter() / m_hat;
    let first = robin_eigen(disc, alpha, &opts)?;
    let a = disc.robin_operator(&vec![alpha; disc.boundary().len()]);
    // the disk's second eigenvalue is a pair split only by the mesh, so
    // inverse iteration resolves it slowly; a rough mode suffices here
    let rough = EigOptions {
        rq_tol: 1e-6,
        residual_tol: 1e-3,
        ..opts
    };
    let second = smallest_generalized_eig(&a, disc.mass(), &[&first.vector], &rough)?;
    let mut u = first.vector;
    axpy(SYMMETRY_BREAKING_AMPLITUDE, &second.vector, &mut u);
    let s = disc.l2_norm_sq(&u).sqrt();
    u.iter_mut().for_each(|x| *x /= s);
    Ok(u)
}

/// Film model for `(m̂, q)`: the regularized path at `q = 0`, the lower bound
/// otherwise.
pub fn film_model(m_hat: f64, q: f64, disc: &Discretization) -> Result<FilmModel> {
    if q == 0.0 {
        if !(m_hat > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("total mass must be positive, got {m_hat}")));
        }
        Ok(FilmModel::Regularized {
            m_hat,
            eps: regularization_eps(disc.num_nodes()),
        })
    } else {
        FilmModel::lower_bound(InsulationParams::from_fraction(m_hat, q, disc.perimeter())?)
    }
}

/// Eigenvalue for `(m̂, q)` from the default initial guess.
pub fn insulation_eigenvalue(disc: &Discretization, m_hat: f64, q: f64, fp: &FlowParams, seed: u64) -> Result<EigenResult> {
    let model = film_model(m_hat, q, disc)?;
    let init = initial_guess(disc, m_hat, seed)?;
    run_film_flow(init, disc, &model, fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_polygon, triangulate};

    fn disk(h: f64) -> Discretization {
        Discretization::new(&triangulate(&disk_polygon(1.0, h).unwrap(), h).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::default().validate().is_ok());
        let bad = FlowParams {
            tau: 0.0,
            ..FlowParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn robin_endpoint_is_stationary() {
        // q = 1: the film is the constant ℓ_min, so the Robin eigenfunction
        // is already the minimizer
        let d = disk(0.25);
        let m_hat = 2.0;
        let p = InsulationParams::from_fraction(m_hat, 1.0, d.perimeter()).unwrap();
        let e = robin_eigen(&d, d.perimeter() / m_hat, &EigOptions::default()).unwrap();
        let model = FilmModel::lower_bound(p).unwrap();
        let s0 = FlowState::new(e.vector.clone(), &d, &model).unwrap();
        let s1 = flow_step(s0, &d, &model, &FlowParams::default()).unwrap();
        assert!(s1.last_step_norm() < 1e-5, "{}", s1.last_step_norm());
        let r = run_flow(e.vector, &d, &p, &FlowParams::default()).unwrap();
        assert!(r.converged);
        assert!(((r.lambda - e.value) / e.value).abs() < 1e-8);
    }

    #[test]
    fn one_step_decreases_energy() {
        let d = disk(0.25);
        let p = InsulationParams::from_fraction(1.0, 0.3, d.perimeter()).unwrap();
        let model = FilmModel::lower_bound(p).unwrap();
        let mut u: Vec<f64> = (0..d.num_nodes()).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let s = d.l2_norm_sq(&u).sqrt();
        u.iter_mut().for_each(|x| *x /= s);
        let s0 = FlowState::new(u, &d, &model).unwrap();
        let j0 = s0.energy();
        let s1 = flow_step(s0, &d, &model, &FlowParams::default()).unwrap();
        assert!(s1.energy() + s1.cumulative_star() <= j0 + 1e-10 * j0);
        assert!(s1.last_orthogonality() < 1e-10);
        assert!(s1.norm_identity_defect() < 1e-8);
    }

    #[test]
    fn zero_lower_bound_needs_regularized_model() {
        let d = disk(0.5);
        let p = InsulationParams::new(1.0, 0.0, d.perimeter()).unwrap();
        let u = vec![1.0 / d.area().sqrt(); d.num_nodes()];
        assert!(matches!(run_flow(u, &d, &p, &FlowParams::default()), Err(Error::InfeasibleParams(_))));
    }

    #[test]
    fn l2_star_product_runs() {
        let d = disk(0.25);
        let fp = FlowParams {
            star: StarProduct::L2,
            ..FlowParams::default()
        };
        let r = insulation_eigenvalue(&d, 3.0, 0.5, &fp, 1).unwrap();
        assert!(r.converged);
        assert!(r.max_telescoping_defect <= 1e-10);
        // constant film is optimal up to the asymmetry of the mesh
        let robin = robin_reference(&d, 3.0).unwrap();
        assert!((r.lambda - robin).abs() < 1e-4 * robin);
    }
}
