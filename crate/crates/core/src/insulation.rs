//! The optimal film density for a given boundary trace.
//!
//! Boundary integrals use the lumped (trapezoidal) node measures of the
//! [`BoundaryGraph`], so for a trace `u` with node measures `w`
//!
//! ```text
//! E(u, ℓ) = Σ w_i u_i² / (ℓ_min + ℓ_i),     mass(ℓ) = Σ w_i ℓ_i.
//! ```
//!
//! The mass is the exact integral of the piecewise-linear `ℓ`. With this
//! quadrature `h = (ℓ_min/c) max(|u| − c, 0)` is the exact minimizer of the
//! discrete energy over `{ℓ ≥ 0, mass(ℓ) = m}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::fem::CsrMatrix;
use crate::geometry::BoundaryGraph;
use crate::{Error, FloatExt, Result};

/// Total mass `m̂`, lower bound `ℓ_min` and the perimeter of the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InsulationParams {
    m_hat: f64,
    ell_min: f64,
    perimeter: f64,
}

impl InsulationParams {
    /// Fails with `InfeasibleParams` when the fixed layer alone needs more
    /// than `m̂` (`ℓ_min |∂Ω| > m̂`).
    pub fn new(m_hat: f64, ell_min: f64, perimeter: f64) -> Result<Self> {
        if !(m_hat > 0.0) || !m_hat.is_finite() {
            return Err(Error::InvalidArgument(format!("total mass must be positive, got {m_hat}")));
        }
        if !(ell_min >= 0.0) || !ell_min.is_finite() {
            return Err(Error::InvalidArgument(format!("lower bound must be nonnegative, got {ell_min}")));
        }
        if !(perimeter > 0.0) || !perimeter.is_finite() {
            return Err(Error::InvalidArgument(format!("perimeter must be positive, got {perimeter}")));
        }
        let m = m_hat - ell_min * perimeter;
        // q = 1 lands on m = 0 only up to rounding
        if m < -1e-12 * m_hat {
            return Err(Error::InfeasibleParams(format!(
                "free mass {m} < 0: perimeter {perimeter} exceeds m̂/ℓ_min = {}",
                m_hat / ell_min
            )));
        }
        Ok(Self {
            m_hat,
            ell_min,
            perimeter,
        })
    }

    /// `ℓ_min = q m̂ / |∂Ω|` for a mass fraction `q ∈ [0, 1]`.
    pub fn from_fraction(m_hat: f64, q: f64, perimeter: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("q must lie in [0, 1], got {q}")));
        }
        Self::new(m_hat, q * m_hat / perimeter, perimeter)
    }

    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }

    pub fn ell_min(&self) -> f64 {
        self.ell_min
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Free mass `m = m̂ − ℓ_min |∂Ω| ≥ 0`.
    pub fn free_mass(&self) -> f64 {
        (self.m_hat - self.ell_min * self.perimeter).max(0.0)
    }

    /// `β = 1/ℓ_min`, defined only for a positive lower bound.
    pub fn beta(&self) -> Option<f64> {
        (self.ell_min > 0.0).then(|| 1.0 / self.ell_min)
    }

    /// Mass fraction `q = ℓ_min |∂Ω| / m̂`.
    pub fn fraction(&self) -> f64 {
        self.ell_min * self.perimeter / self.m_hat
    }

    /// Same `m̂` and `ℓ_min` on a domain with another perimeter.
    pub fn with_perimeter(&self, perimeter: f64) -> Result<Self> {
        Self::new(self.m_hat, self.ell_min, perimeter)
    }

    fn require_beta(&self) -> Result<f64> {
        self.beta().ok_or_else(|| {
            Error::InfeasibleParams("the optimal density formula needs ℓ_min > 0".into())
        })
    }
}

/// Free film thickness `ℓ ≥ 0` at the boundary nodes (boundary order).
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    ell: Vec<f64>,
    ell_min: f64,
}

impl Density {
    pub fn new(ell: Vec<f64>, ell_min: f64) -> Result<Self> {
        if let Some(i) = ell.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDensity {
                node: i,
                value: ell[i] + ell_min,
            });
        }
        Ok(Self { ell, ell_min })
    }

    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    pub fn ell_min(&self) -> f64 {
        self.ell_min
    }

    /// Total film `ℓ̂ = ℓ_min + ℓ`.
    pub fn total(&self) -> Vec<f64> {
        self.ell.iter().map(|l| l + self.ell_min).collect()
    }

    /// `∫ ℓ ds` for the lumped node measures `w`.
    pub fn mass(&self, w: &[f64]) -> f64 {
        self.ell.iter().zip(w).map(|(l, w)| l * w).sum()
    }

    /// Coefficient of variation of the total film along the boundary.
    pub fn coefficient_of_variation(&self, w: &[f64]) -> f64 {
        let t = self.total();
        let p: f64 = w.iter().sum();
        let mean = t.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / p;
        let var = t.iter().zip(w).map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>() / p;
        if mean > 0.0 {
            var.sqrt() / mean
        } else {
            0.0
        }
    }
}

/// `φ(c) = c (|{|u| ≥ c}| + mβ) − ∫_{|u| ≥ c} |u| ds`.
pub fn c_residual(c: f64, u: &[f64], w: &[f64], p: &InsulationParams) -> Result<f64> {
    let beta = p.require_beta()?;
    let (mut meas, mut int) = (0.0, 0.0);
    for (&x, &wi) in u.iter().zip(w) {
        if x.abs() >= c {
            meas += wi;
            int += wi * x.abs();
        }
    }
    Ok(c * (meas + p.free_mass() * beta) - int)
}

fn check_trace(u: &[f64], w: &[f64]) -> Result<()> {
    if u.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "trace has {} values but there are {} boundary nodes",
            u.len(),
            w.len()
        )));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite boundary trace".into()));
    }
    Ok(())
}

/// The unique `c ≥ 0` with `φ(c) = 0`.
///
/// `φ` is affine between consecutive sorted values of `|u|`, so the root is
/// found by walking the brackets from the top and solving
/// `c = S_k / (W_k + mβ)` with `W_k`, `S_k` the measure and integral of the
/// `k` largest values. Bisection is the fallback if rounding defeats the
/// bracket test.
pub fn compute_c(u: &[f64], w: &[f64], p: &InsulationParams) -> Result<f64> {
    let beta = p.require_beta()?;
    check_trace(u, w)?;
    let mb = p.free_mass() * beta;
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&i, &j| u[j].abs().total_cmp(&u[i].abs()).then(i.cmp(&j)));
    let top = order.first().map_or(0.0, |&i| u[i].abs());
    if top == 0.0 {
        return Ok(0.0);
    }
    let (mut wk, mut sk) = (0.0, 0.0);
    for (k, &i) in order.iter().enumerate() {
        wk += w[i];
        sk += w[i] * u[i].abs();
        let hi = u[i].abs();
        let lo = order.get(k + 1).map_or(0.0, |&j| u[j].abs());
        if lo == hi {
            continue;
        }
        let c = sk / (wk + mb);
        if c >= lo && c <= hi {
            return Ok(c);
        }
    }
    // φ is continuous and increasing with φ(0) < 0 < φ(max|u|)
    let (mut a, mut b) = (0.0, top);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if c_residual(mid, u, w, p)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `h_{u,c} = (ℓ_min/c) max(|u| − c, 0)` for a given `c > 0`.
pub fn density_for_c(u: &[f64], c: f64, ell_min: f64) -> Vec<f64> {
    let s = ell_min / c;
    u.iter().map(|x| s * (x.abs() - c).max(0.0)).collect()
}

/// The optimal density `h_u` with mass exactly `m`. A vanishing trace
/// returns the uniform density `m/|∂Ω|`.
pub fn optimal_density(u: &[f64], w: &[f64], p: &InsulationParams) -> Result<Density> {
    let c = compute_c(u, w, p)?;
    let m = p.free_mass();
    let perim: f64 = w.iter().sum();
    if c == 0.0 {
        return Density::new(vec![m / perim; u.len()], p.ell_min());
    }
    let mut h = density_for_c(u, c, p.ell_min());
    let mass: f64 = h.iter().zip(w).map(|(h, w)| h * w).sum();
    // rounding-level mass correction
    if mass > 0.0 && m > 0.0 {
        let s = m / mass;
        h.iter_mut().for_each(|x| *x *= s);
    }
    Density::new(h, p.ell_min())
}

/// `∫ u² / (ℓ_min + ℓ) ds`.
pub fn boundary_energy(u: &[f64], d: &Density, w: &[f64]) -> Result<f64> {
    check_trace(u, w)?;
    let mut e = 0.0;
    for (i, ((&x, &l), &wi)) in u.iter().zip(d.ell()).zip(w).enumerate() {
        let t = d.ell_min() + l;
        if !(t > 0.0) {
            return Err(Error::InvalidDensity { node: i, value: t });
        }
        e += wi * x * x / t;
    }
    Ok(e)
}

/// `G_c(x) = βx²` for `|x| < c` and `βc|x|` otherwise.
pub fn g_c(x: f64, c: f64, beta: f64) -> f64 {
    if x.abs() < c {
        beta * x * x
    } else {
        beta * c * x.abs()
    }
}

/// `∫ G_c(u) ds`, equal to the boundary energy of the optimal density.
pub fn g_c_energy(u: &[f64], c: f64, w: &[f64], p: &InsulationParams) -> Result<f64> {
    let beta = p.require_beta()?;
    check_trace(u, w)?;
    Ok(u.iter().zip(w).map(|(&x, &wi)| wi * g_c(x, c, beta)).sum())
}

/// `J(u, ℓ) = ∫|∇u|² + ∫ u²/(ℓ_min + ℓ) ds` for the stiffness matrix `k`.
pub fn objective_j(k: &CsrMatrix, u: &[f64], bg: &BoundaryGraph, d: &Density) -> Result<f64> {
    Ok(k.quad_form(u) + boundary_energy(&bg.trace(u), d, bg.weights())?)
}
