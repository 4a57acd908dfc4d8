//! Volume normalization.
//!
//! `(m̂, ℓ_min)` describe the domain scaled to area [`V_TARGET`], so the
//! scaled eigenvalue `λ̂(Ω) = λ_{m̂,ℓ_min}(tΩ)`, `t = (V_target/|Ω|)^{1/2}`, is
//! invariant under dilations of `Ω`. The scaled domain is never meshed: its
//! matrices are those of `Ω` with the mass multiplied by `t²` and boundary
//! measures by `t`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fem::Discretization;
use crate::flow::{initial_guess, regularization_eps, run_film_flow, EigenResult, FilmModel, FlowParams};
use crate::geometry::DIM;
use crate::insulation::InsulationParams;
use crate::{Error, FloatExt, Result};

/// Area of the unit disk.
pub const V_TARGET: f64 = PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleMap {
    t: f64,
    v_target: f64,
}

impl ScaleMap {
    /// `t = (v_target/area)^{1/d}`
    pub fn new(area: f64, v_target: f64) -> Result<Self> {
        if !(area > 0.0) || !(v_target > 0.0) || !area.is_finite() || !v_target.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "areas must be positive, got {area} and {v_target}"
            )));
        }
        Ok(Self {
            t: (v_target / area).powf(1.0 / DIM as f64),
            v_target,
        })
    }

    pub fn to_unit_disk_area(area: f64) -> Result<Self> {
        Self::new(area, V_TARGET)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn v_target(&self) -> f64 {
        self.v_target
    }

    pub fn apply(&self, disc: &Discretization) -> Discretization {
        disc.scaled(self.t)
    }
}

/// Parameters on `tΩ`: `m̂ → t^d m̂`, `ℓ_min → t ℓ_min`, `|∂Ω| → t^{d-1}|∂Ω|`.
pub fn rescale_params(t: f64, p: &InsulationParams) -> Result<InsulationParams> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("scale factor must be positive, got {t}")));
    }
    InsulationParams::new(p.m_hat() * t * t, p.ell_min() * t, p.perimeter() * t)
}

#[derive(Clone, Debug)]
pub struct ScaledEigen {
    pub lambda_hat: f64,
    pub scale: ScaleMap,
    /// Film model on the normalized configuration.
    pub model: FilmModel,
    /// Flow result on the normalized configuration; `u` is normalized there.
    pub result: EigenResult,
}

/// Film model on the normalized configuration `disc_t`; `ℓ_min = 0` selects
/// the regularized path.
pub fn normalized_model(disc_t: &Discretization, m_hat: f64, ell_min: f64) -> Result<FilmModel> {
    if ell_min == 0.0 {
        if !(m_hat > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("total mass must be positive, got {m_hat}")));
        }
        return Ok(FilmModel::Regularized {
            m_hat,
            eps: regularization_eps(disc_t.num_nodes()),
        });
    }
    let p = InsulationParams::new(m_hat, ell_min, disc_t.perimeter())?;
    FilmModel::lower_bound(p)
}

/// `λ̂_{m̂,ℓ_min}(Ω)`. `init` (any nonzero scaling) warm-starts the flow;
/// without it the default initial guess is built with `seed`.
pub fn scaled_eigenvalue(
    disc: &Discretization,
    m_hat: f64,
    ell_min: f64,
    fp: &FlowParams,
    init: Option<&[f64]>,
    seed: u64,
) -> Result<ScaledEigen> {
    let scale = ScaleMap::to_unit_disk_area(disc.area())?;
    let disc_t = scale.apply(disc);
    let model = normalized_model(&disc_t, m_hat, ell_min)?;
    let u0 = match init {
        Some(u) => {
            let s = disc_t.l2_norm_sq(u).sqrt();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument("warm start has zero norm".into()));
            }
            u.iter().map(|x| x / s).collect::<Vec<f64>>()
        }
        None => initial_guess(&disc_t, m_hat, seed)?,
    };
    let result = run_film_flow(u0, &disc_t, &model, fp)?;
    Ok(ScaledEigen {
        lambda_hat: result.lambda,
        scale,
        model,
        result,
    })
}
