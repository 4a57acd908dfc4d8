//! Argument parsing and config merging.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_entries, Command, RunConfig};
use crate::error::CliError;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  bad input (config, parameters, polygon file)
  3  no convergence (flow iteration cap, solver failure, < 90% sweep cells)
  4  critical-mass bracket without sign change
  5  I/O failure (output directory not writable)

Any option may also be given as `key = value` in the --config file
(dashes become underscores); command-line values win.";

#[derive(Parser, Debug)]
#[command(name = "insulopt", version, about = "Optimal insulation eigenvalue with a lower bound on the film thickness", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Eigenvalue and optimal film for one (m_hat, q): eig.csv, flow_log.csv, solution.vtk
    Eig(Options),
    /// Eigenvalue over a q-grid: sweep.csv
    Sweep(Options),
    /// Bisection for the mass where the eigenvalue without lower bound meets mu_2:
    /// critical_mass.csv, critical_mass_history.csv
    CriticalMass(Options),
    /// Convex shape descent of the volume-normalized eigenvalue: trajectory.csv,
    /// summary.csv, cross_check.csv, shape_NNNN.{poly,vtk}, final.{poly,vtk}
    ShapeOpt(Options),
    /// Triangulate the domain: mesh.vtk, mesh.csv, domain.poly
    Mesh(Options),
}

impl Sub {
    fn split(&self) -> (Command, &Options) {
        match self {
            Sub::Eig(o) => (Command::Eig, o),
            Sub::Sweep(o) => (Command::Sweep, o),
            Sub::CriticalMass(o) => (Command::CriticalMass, o),
            Sub::ShapeOpt(o) => (Command::ShapeOpt, o),
            Sub::Mesh(o) => (Command::Mesh, o),
        }
    }
}

#[derive(clap::Args, Debug, Default)]
pub struct Options {
    /// Config file with `key = value` lines
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing [default: out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Worker threads for sweep cells and gradient probes [default: 1]
    #[arg(long, value_name = "N")]
    pub threads: Option<String>,
    /// Seed of the initial guess [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<String>,
    /// disk | ngon | square | ellipse | file [default: disk]
    #[arg(long)]
    pub domain: Option<String>,
    /// Vertex count for ngon, ellipse and disk (disk default: edges ≤ h)
    #[arg(long)]
    pub n: Option<String>,
    /// Circumradius of disk, ngon and ellipse (length) [default: 1]
    #[arg(long)]
    pub radius: Option<String>,
    /// Ellipse axis ratio factor, semi-axes radius·aspect and radius/aspect [default: 1.3]
    #[arg(long)]
    pub aspect: Option<String>,
    /// Polygon file for domain = file, one CCW `x y` pair per line
    #[arg(long)]
    pub polygon: Option<String>,
    /// Mesh size, longest triangle edge (length) [default: 0.0625]
    #[arg(long)]
    pub h: Option<String>,
    /// Total film mass m_hat (length²) [default: 1]
    #[arg(long)]
    pub m_hat: Option<String>,
    /// Lower-bound fraction q in [0, 1], ell_min = q·m_hat/|∂Ω| (dimensionless) [default: 0.5]
    #[arg(long)]
    pub q: Option<String>,
    /// q-grid: `i/N` for i = 0..N or a comma list, strictly increasing [default: i/20]
    #[arg(long)]
    pub q_grid: Option<String>,
    /// Pseudo-time step of the flow (dimensionless) [default: 10]
    #[arg(long)]
    pub tau: Option<String>,
    /// Flow stops once the step norm is below this [default: 1e-6]
    #[arg(long)]
    pub eps_stop: Option<String>,
    /// Flow iteration cap [default: 5000]
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Metric of the flow step: h1 | l2 [default: h1]
    #[arg(long)]
    pub star: Option<String>,
    /// Shape descent iteration budget [default: 100]
    #[arg(long)]
    pub budget: Option<String>,
    /// Shape snapshot interval in iterations, 0 = none [default: 10]
    #[arg(long)]
    pub snapshot_every: Option<String>,
    /// First shape step, largest node displacement (length) [default: 0.05]
    #[arg(long)]
    pub initial_step: Option<String>,
    /// Largest shape step (length) [default: 0.2]
    #[arg(long)]
    pub max_step: Option<String>,
    /// Gradient probe length relative to h [default: 0.01]
    #[arg(long)]
    pub probe_factor: Option<String>,
    /// Stationarity: stop when max|g| ≤ value·lambda_hat/diameter [default: 0.001]
    #[arg(long)]
    pub stationarity: Option<String>,
    /// Young modulus of the deformation (dimensionless) [default: 0.5]
    #[arg(long)]
    pub young: Option<String>,
    /// Poisson ratio of the deformation [default: 0.2]
    #[arg(long)]
    pub poisson: Option<String>,
    /// Damping of the deformation [default: 0.5]
    #[arg(long)]
    pub rho: Option<String>,
    /// Lower end of the critical-mass bracket (length²) [default: 0.5]
    #[arg(long)]
    pub m_lo: Option<String>,
    /// Upper end of the critical-mass bracket (length²) [default: 4]
    #[arg(long)]
    pub m_hi: Option<String>,
    /// Final bracket width of the critical-mass bisection [default: 0.001]
    #[arg(long)]
    pub width: Option<String>,
}

impl Options {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("out", &self.out),
            ("threads", &self.threads),
            ("seed", &self.seed),
            ("domain", &self.domain),
            ("n", &self.n),
            ("radius", &self.radius),
            ("aspect", &self.aspect),
            ("polygon", &self.polygon),
            ("h", &self.h),
            ("m_hat", &self.m_hat),
            ("q", &self.q),
            ("q_grid", &self.q_grid),
            ("tau", &self.tau),
            ("eps_stop", &self.eps_stop),
            ("max_iter", &self.max_iter),
            ("star", &self.star),
            ("budget", &self.budget),
            ("snapshot_every", &self.snapshot_every),
            ("initial_step", &self.initial_step),
            ("max_step", &self.max_step),
            ("probe_factor", &self.probe_factor),
            ("stationarity", &self.stationarity),
            ("young", &self.young),
            ("poisson", &self.poisson),
            ("rho", &self.rho),
            ("m_lo", &self.m_lo),
            ("m_hi", &self.m_hi),
            ("width", &self.width),
        ]
    }
}

/// Config file entries overridden by flags.
pub fn resolve(sub: &Sub) -> Result<RunConfig, CliError> {
    let (command, opts) = sub.split();
    let mut map = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
            parse_entries(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in opts.overrides() {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    RunConfig::from_entries(command, map)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match resolve(&cli.command).and_then(|cfg| crate::commands::run(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("insulopt: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("insulopt-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "h = 0.25\nm_hat = 2\n").unwrap();
        let cli = Cli::try_parse_from([
            "insulopt",
            "eig",
            "--config",
            path.to_str().unwrap(),
            "--m-hat",
            "3",
            "--q",
            "1",
        ])
        .unwrap();
        let cfg = resolve(&cli.command).unwrap();
        assert_eq!(cfg.h, 0.25);
        assert_eq!(cfg.m_hat, 3.0);
        assert_eq!(cfg.q, 1.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn every_key_has_a_flag() {
        let o = Options::default();
        let mut keys: Vec<&str> = o.overrides().iter().map(|(k, _)| *k).collect();
        keys.sort_unstable();
        let mut all = crate::config::KEYS.to_vec();
        all.sort_unstable();
        assert_eq!(keys, all);
    }
}
