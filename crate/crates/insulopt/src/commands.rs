//! The five subcommands. Each writes its files into `cfg.out` and returns
//! the error whose exit code the process should report.

use std::f64::consts::PI;
use std::path::Path;

use insulopt_core::fem::{Discretization, EigOptions};
use insulopt_core::flow::{
    eigenvalue_no_lower_bound, film_model, initial_guess, neumann_mu2, robin_eigen, robin_reference,
    run_film_flow, EigenResult, FlowParams,
};
use insulopt_core::geometry::{disk_polygon, make_regular_polygon, triangulate, ConvexPolygon, Mesh, Vec2};
use insulopt_core::shape::{optimize, ShapeParams, ShapeState};
use rayon::prelude::*;

use crate::config::{Command, DomainSpec, RunConfig};
use crate::error::CliError;
use crate::io::{
    boundary_to_nodal, create_out_dir, fmt_f64, polygon_string, read_polygon, sha256_hex, write_csv, write_vtk,
};
use crate::parallel::{thread_pool, RayonProbes};

pub const EIG_COLUMNS: &[&str] = &[
    "lambda",
    "iterations",
    "residual",
    "c_u",
    "perimeter",
    "area",
    "m_hat",
    "q",
    "ell_min",
    "density_cv",
    "robin_reference",
    "converged",
];
pub const FLOW_LOG_COLUMNS: &[&str] = &["k", "j", "step_norm_star", "l2_norm_sq", "c_u"];
pub const SWEEP_COLUMNS: &[&str] = &["q", "ell_min", "m", "lambda", "iters", "density_cv", "status"];
pub const CRITICAL_HISTORY_COLUMNS: &[&str] = &["eval", "m", "lambda", "f", "iterations", "converged", "m_lo", "m_hi"];
pub const CRITICAL_SUMMARY_COLUMNS: &[&str] = &["m0", "m_lo", "m_hi", "mu2", "evaluations", "nodes", "h"];
pub const TRAJECTORY_COLUMNS: &[&str] = &["iter", "lambda_hat", "area", "perimeter", "step_size", "grad_max", "accepted"];
pub const SHAPE_SUMMARY_COLUMNS: &[&str] = &[
    "iterations",
    "lambda_hat_initial",
    "lambda_hat_final",
    "stalled",
    "isoperimetric_ratio",
    "moment_ratio",
    "max_turning_angle",
    "max_cross_check",
    "m_hat",
    "q",
    "ell_min",
];
pub const CROSS_CHECK_COLUMNS: &[&str] = &["iter", "relative_difference"];
pub const MESH_COLUMNS: &[&str] = &[
    "nodes",
    "triangles",
    "boundary_nodes",
    "h_max",
    "quality",
    "area",
    "perimeter",
    "vtk_sha256",
];

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let polygon = build_polygon(cfg)?;
    create_out_dir(&cfg.out)?;
    match cfg.command {
        Command::Eig => cmd_eig(cfg, &polygon),
        Command::Sweep => cmd_sweep(cfg, &polygon),
        Command::CriticalMass => cmd_critical_mass(cfg, &polygon),
        Command::ShapeOpt => cmd_shape_opt(cfg, &polygon),
        Command::Mesh => cmd_mesh(cfg, &polygon),
    }
}

pub fn build_polygon(cfg: &RunConfig) -> Result<ConvexPolygon, CliError> {
    let r = cfg.radius;
    let p = match &cfg.domain {
        DomainSpec::Disk { n: None } => disk_polygon(r, cfg.h)?,
        DomainSpec::Disk { n: Some(n) } | DomainSpec::Ngon { n } => make_regular_polygon(*n, r)?,
        DomainSpec::Square => ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])?,
        DomainSpec::Ellipse { aspect, n } => ConvexPolygon::new(
            (0..*n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / *n as f64;
                    Vec2::new(r * aspect * t.cos(), r / aspect * t.sin())
                })
                .collect(),
        )?,
        DomainSpec::File(path) => read_polygon(path)?,
    };
    Ok(p)
}

fn mesh_of(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<Mesh, CliError> {
    if !(cfg.h < polygon.diameter()) {
        return Err(CliError::BadInput(format!(
            "mesh size {} is not below the domain diameter {}",
            cfg.h,
            polygon.diameter()
        )));
    }
    Ok(triangulate(polygon, cfg.h)?)
}

fn b(x: bool) -> String {
    x.to_string()
}

fn film_fields(mesh: &Mesh, r: &EigenResult) -> (Vec<f64>, Vec<f64>) {
    (
        boundary_to_nodal(mesh, r.density.ell()),
        boundary_to_nodal(mesh, &r.density.total()),
    )
}

fn cmd_eig(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<(), CliError> {
    let mesh = mesh_of(cfg, polygon)?;
    let disc = Discretization::new(&mesh)?;
    let model = film_model(cfg.m_hat, cfg.q, &disc)?;
    let init = initial_guess(&disc, cfg.m_hat, cfg.seed)?;
    let r = run_film_flow(init, &disc, &model, &cfg.flow)?;
    let robin = robin_reference(&disc, cfg.m_hat)?;
    let cv = r.density.coefficient_of_variation(disc.boundary().weights());
    write_csv(
        &cfg.out.join("eig.csv"),
        EIG_COLUMNS,
        &[vec![
            fmt_f64(r.lambda),
            r.iterations.to_string(),
            fmt_f64(r.residual),
            fmt_f64(r.c_u),
            fmt_f64(disc.perimeter()),
            fmt_f64(disc.area()),
            fmt_f64(cfg.m_hat),
            fmt_f64(cfg.q),
            fmt_f64(r.density.ell_min()),
            fmt_f64(cv),
            fmt_f64(robin),
            b(r.converged),
        ]],
    )?;
    let log: Vec<Vec<String>> = r
        .log
        .iter()
        .map(|e| {
            vec![
                e.k.to_string(),
                fmt_f64(e.j),
                fmt_f64(e.step_norm_star),
                fmt_f64(e.l2_norm_sq),
                fmt_f64(e.c_u),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("flow_log.csv"), FLOW_LOG_COLUMNS, &log)?;
    let (ell, ell_hat) = film_fields(&mesh, &r);
    write_vtk(
        &cfg.out.join("solution.vtk"),
        &mesh,
        &[("u", &r.u), ("ell", &ell), ("ell_hat", &ell_hat)],
    )?;
    if !r.converged {
        return Err(CliError::NoConvergence(format!(
            "flow stopped after {} iterations with step norm {:.3e}",
            r.iterations, r.last_step_norm
        )));
    }
    Ok(())
}

/// One row of a q-sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub ell_min: f64,
    pub m: f64,
    pub lambda: f64,
    pub iters: usize,
    pub density_cv: f64,
    /// `ok`, `max_iter` or `error: ...`.
    pub status: String,
}

/// Eigenvalue at `q` on `disc`. `q = 1` is the Robin problem with the
/// constant film, `q = 0` the problem without lower bound.
pub fn sweep_cell(disc: &Discretization, m_hat: f64, q: f64, init: &[f64], fp: &FlowParams) -> SweepRow {
    let p = disc.perimeter();
    let ell_min = q * m_hat / p;
    let mut row = SweepRow {
        q,
        ell_min,
        m: m_hat - ell_min * p,
        lambda: f64::NAN,
        iters: 0,
        density_cv: f64::NAN,
        status: String::new(),
    };
    let result = if q == 1.0 {
        robin_eigen(disc, p / m_hat, &EigOptions::default()).map(|e| {
            row.m = 0.0;
            row.lambda = e.value;
            row.iters = e.iterations;
            row.density_cv = 0.0;
            true
        })
    } else {
        let run = if q == 0.0 {
            eigenvalue_no_lower_bound(init.to_vec(), disc, m_hat, fp)
        } else {
            film_model(m_hat, q, disc).and_then(|model| run_film_flow(init.to_vec(), disc, &model, fp))
        };
        run.map(|r| {
            row.lambda = r.lambda;
            row.iters = r.iterations;
            row.density_cv = r.density.coefficient_of_variation(disc.boundary().weights());
            r.converged
        })
    };
    row.status = match result {
        Ok(true) => "ok".into(),
        Ok(false) => "max_iter".into(),
        Err(e) => format!("error: {e}"),
    };
    row
}

fn cmd_sweep(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<(), CliError> {
    let mesh = mesh_of(cfg, polygon)?;
    let disc = Discretization::new(&mesh)?;
    let init = initial_guess(&disc, cfg.m_hat, cfg.seed)?;
    let pool = thread_pool(cfg.threads)?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cfg.q_grid
            .par_iter()
            .map(|&q| sweep_cell(&disc, cfg.m_hat, q, &init, &cfg.flow))
            .collect()
    });
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.q),
                fmt_f64(r.ell_min),
                fmt_f64(r.m),
                fmt_f64(r.lambda),
                r.iters.to_string(),
                fmt_f64(r.density_cv),
                r.status.clone(),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("sweep.csv"), SWEEP_COLUMNS, &table)?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    if 10 * ok < 9 * rows.len() {
        return Err(CliError::NoConvergence(format!("only {ok} of {} sweep cells succeeded", rows.len())));
    }
    Ok(())
}

/// Result of the critical-mass bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalMass {
    pub m0: f64,
    pub bracket: (f64, f64),
    pub mu2: f64,
    /// False if `λ − μ₂` has no sign change on the initial bracket.
    pub bracketed: bool,
    /// Flow runs that hit the iteration cap.
    pub unconverged: usize,
    pub history: Vec<Vec<String>>,
}

/// Bisection for the mass at which the eigenvalue without lower bound
/// crosses the first nonzero Neumann eigenvalue.
pub fn critical_mass(
    disc: &Discretization,
    m_lo: f64,
    m_hi: f64,
    width: f64,
    fp: &FlowParams,
    seed: u64,
) -> Result<CriticalMass, CliError> {
    let mu2 = neumann_mu2(disc)?;
    let mut out = CriticalMass {
        m0: f64::NAN,
        bracket: (m_lo, m_hi),
        mu2,
        bracketed: false,
        unconverged: 0,
        history: Vec::new(),
    };
    let eval = |m: f64, out: &mut CriticalMass| -> Result<f64, CliError> {
        let init = initial_guess(disc, m, seed)?;
        let r = eigenvalue_no_lower_bound(init, disc, m, fp)?;
        if !r.converged {
            out.unconverged += 1;
        }
        let f = r.lambda - mu2;
        out.history.push(vec![
            out.history.len().to_string(),
            fmt_f64(m),
            fmt_f64(r.lambda),
            fmt_f64(f),
            r.iterations.to_string(),
            b(r.converged),
            fmt_f64(out.bracket.0),
            fmt_f64(out.bracket.1),
        ]);
        Ok(f)
    };
    let f_lo = eval(m_lo, &mut out)?;
    let f_hi = eval(m_hi, &mut out)?;
    if f_lo.signum() == f_hi.signum() {
        return Ok(out);
    }
    out.bracketed = true;
    while out.bracket.1 - out.bracket.0 > width {
        let mid = 0.5 * (out.bracket.0 + out.bracket.1);
        let f = eval(mid, &mut out)?;
        if f.signum() == f_lo.signum() {
            out.bracket.0 = mid;
        } else {
            out.bracket.1 = mid;
        }
    }
    out.m0 = 0.5 * (out.bracket.0 + out.bracket.1);
    Ok(out)
}

fn cmd_critical_mass(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<(), CliError> {
    let mesh = mesh_of(cfg, polygon)?;
    let disc = Discretization::new(&mesh)?;
    let c = &cfg.critical;
    let cm = critical_mass(&disc, c.m_lo, c.m_hi, c.width, &cfg.flow, cfg.seed)?;
    write_csv(&cfg.out.join("critical_mass_history.csv"), CRITICAL_HISTORY_COLUMNS, &cm.history)?;
    write_csv(
        &cfg.out.join("critical_mass.csv"),
        CRITICAL_SUMMARY_COLUMNS,
        &[vec![
            fmt_f64(cm.m0),
            fmt_f64(cm.bracket.0),
            fmt_f64(cm.bracket.1),
            fmt_f64(cm.mu2),
            cm.history.len().to_string(),
            mesh.num_nodes().to_string(),
            fmt_f64(cfg.h),
        ]],
    )?;
    if !cm.bracketed {
        return Err(CliError::Bracket(format!(
            "lambda - mu2 has no sign change on [{}, {}]",
            c.m_lo, c.m_hi
        )));
    }
    if cm.unconverged > 0 {
        return Err(CliError::NoConvergence(format!(
            "{} flow runs hit the iteration cap",
            cm.unconverged
        )));
    }
    Ok(())
}

fn write_snapshot(dir: &Path, name: &str, s: &ShapeState) -> Result<(), CliError> {
    let t = s.eigen().scale.t();
    let mesh = s.mesh().scaled(t);
    let hull: Vec<Vec2> = s.polygon().vertices().iter().map(|&p| p * t).collect();
    std::fs::write(dir.join(format!("{name}.poly")), polygon_string(&hull))?;
    let r = &s.eigen().result;
    let (_, ell_hat) = film_fields(&mesh, r);
    write_vtk(&dir.join(format!("{name}.vtk")), &mesh, &[("u", &r.u), ("ell_hat", &ell_hat)])?;
    Ok(())
}

fn cmd_shape_opt(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<(), CliError> {
    let st = &cfg.shape;
    let sp = ShapeParams {
        initial_step: st.initial_step,
        max_step: st.max_step,
        probe_factor: st.probe_factor,
        stationarity: st.stationarity,
        seed: cfg.seed,
        ..ShapeParams::from_fraction(cfg.m_hat, cfg.q, cfg.h)?
    };
    sp.validate()?;
    let pool = thread_pool(cfg.threads)?;
    let exec = RayonProbes { pool: &pool };
    let mut io_error = None;
    let every = st.snapshot_every;
    let run = optimize(polygon, &sp, &cfg.flow, &st.elasticity, st.budget, &exec, &mut |s| {
        if every > 0 && s.iter() % every == 0 && io_error.is_none() {
            if let Err(e) = write_snapshot(&cfg.out, &format!("shape_{:04}", s.iter()), s) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let traj: Vec<Vec<String>> = run
        .records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                fmt_f64(r.lambda_hat),
                fmt_f64(r.area),
                fmt_f64(r.perimeter),
                fmt_f64(r.step_size),
                fmt_f64(r.grad_max),
                b(r.accepted),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("trajectory.csv"), TRAJECTORY_COLUMNS, &traj)?;
    let checks: Vec<Vec<String>> = run
        .cross_checks
        .iter()
        .map(|(k, d)| vec![k.to_string(), fmt_f64(*d)])
        .collect();
    write_csv(&cfg.out.join("cross_check.csv"), CROSS_CHECK_COLUMNS, &checks)?;
    let first = run.records[0];
    let last = run.records[run.records.len() - 1];
    let max_check = run.cross_checks.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
    write_csv(
        &cfg.out.join("summary.csv"),
        SHAPE_SUMMARY_COLUMNS,
        &[vec![
            last.iter.to_string(),
            fmt_f64(first.lambda_hat),
            fmt_f64(last.lambda_hat),
            b(run.final_state.stalled()),
            fmt_f64(last.isoperimetric_ratio),
            fmt_f64(last.moment_ratio),
            fmt_f64(last.max_turning_angle),
            fmt_f64(max_check),
            fmt_f64(cfg.m_hat),
            fmt_f64(cfg.q),
            fmt_f64(sp.ell_min),
        ]],
    )?;
    write_snapshot(&cfg.out, "final", &run.final_state)
}

fn cmd_mesh(cfg: &RunConfig, polygon: &ConvexPolygon) -> Result<(), CliError> {
    let mesh = mesh_of(cfg, polygon)?;
    let vtk = write_vtk(&cfg.out.join("mesh.vtk"), &mesh, &[])?;
    std::fs::write(cfg.out.join("domain.poly"), polygon_string(polygon.vertices()))?;
    let (area, perimeter) = mesh.measures();
    write_csv(
        &cfg.out.join("mesh.csv"),
        MESH_COLUMNS,
        &[vec![
            mesh.num_nodes().to_string(),
            mesh.triangles().len().to_string(),
            mesh.boundary().len().to_string(),
            fmt_f64(mesh.h_max()),
            fmt_f64(mesh.quality()),
            fmt_f64(area),
            fmt_f64(perimeter),
            sha256_hex(vtk.as_bytes()),
        ]],
    )
}
