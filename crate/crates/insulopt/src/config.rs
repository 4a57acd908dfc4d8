//! Run configuration: `key = value` files merged with command-line overrides.
//!
//! Every key may appear in a config file or as `--key value`; flags win.
//! Lengths are in units of the input domain, masses in length² (film
//! thickness times boundary length).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use insulopt_core::flow::{FlowParams, StarProduct};
use insulopt_core::shape::ElasticityParams;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Eig,
    Sweep,
    CriticalMass,
    ShapeOpt,
    Mesh,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Eig => "eig",
            Command::Sweep => "sweep",
            Command::CriticalMass => "critical-mass",
            Command::ShapeOpt => "shape-opt",
            Command::Mesh => "mesh",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    /// Disk of radius `radius`; `n` vertices if given, else edges of length ≤ h.
    Disk { n: Option<usize> },
    /// Regular `n`-gon inscribed in the circle of radius `radius`.
    Ngon { n: usize },
    /// Unit square `[0, 1]²`.
    Square,
    /// Ellipse with semi-axes `radius·aspect` and `radius/aspect`, `n` vertices.
    Ellipse { aspect: f64, n: usize },
    /// Polygon text file, one CCW `x y` pair per line.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSettings {
    pub budget: usize,
    /// Snapshot every this many iterations (0 disables snapshots).
    pub snapshot_every: usize,
    pub initial_step: f64,
    pub max_step: f64,
    pub probe_factor: f64,
    pub stationarity: f64,
    pub elasticity: ElasticityParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalSettings {
    pub m_lo: f64,
    pub m_hi: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainSpec,
    pub radius: f64,
    pub h: f64,
    pub m_hat: f64,
    pub q: f64,
    pub q_grid: Vec<f64>,
    pub flow: FlowParams,
    pub shape: ShapeSettings,
    pub critical: CriticalSettings,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

/// Keys accepted in config files and as flags.
pub const KEYS: &[&str] = &[
    "domain",
    "n",
    "radius",
    "aspect",
    "polygon",
    "h",
    "m_hat",
    "q",
    "q_grid",
    "tau",
    "eps_stop",
    "max_iter",
    "star",
    "budget",
    "snapshot_every",
    "initial_step",
    "max_step",
    "probe_factor",
    "stationarity",
    "young",
    "poisson",
    "rho",
    "m_lo",
    "m_hi",
    "width",
    "out",
    "seed",
    "threads",
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::BadInput(format!("config line {}: expected `key = value`", no + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::BadInput(format!("config line {}: unknown key `{k}`", no + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

/// `i/N` for `i = 0..=N`, or a comma-separated list.
pub fn parse_q_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    let grid: Vec<f64> = if let Some(n) = s.strip_prefix("i/") {
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| CliError::BadInput(format!("q_grid: bad denominator in `{s}`")))?;
        if n == 0 {
            return Err(CliError::BadInput("q_grid: denominator must be positive".into()));
        }
        (0..=n).map(|i| i as f64 / n as f64).collect()
    } else {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::BadInput(format!("q_grid: cannot parse `{t}`")))
            })
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(CliError::BadInput("q_grid is empty".into()));
    }
    for &q in &grid {
        check_q(q)?;
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::BadInput("q_grid must be strictly increasing".into()));
    }
    Ok(grid)
}

fn check_q(q: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CliError::BadInput(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::BadInput(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::BadInput(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.get(key, default)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::BadInput(format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }
}

impl RunConfig {
    /// Builds and validates a configuration from merged entries.
    pub fn from_entries(command: Command, map: BTreeMap<String, String>) -> Result<Self, CliError> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::BadInput(format!("unknown key `{k}`")));
        }
        let e = Entries(map);
        let n: Option<usize> = e.opt("n")?;
        let domain = match e.get("domain", "disk".to_string())?.as_str() {
            "disk" => DomainSpec::Disk { n },
            "ngon" => DomainSpec::Ngon {
                n: n.ok_or_else(|| CliError::BadInput("domain `ngon` needs `n`".into()))?,
            },
            "square" => DomainSpec::Square,
            "ellipse" => DomainSpec::Ellipse {
                aspect: e.positive("aspect", 1.3)?,
                n: n.unwrap_or(64),
            },
            "file" => DomainSpec::File(PathBuf::from(
                e.0.get("polygon")
                    .ok_or_else(|| CliError::BadInput("domain `file` needs `polygon`".into()))?,
            )),
            d => return Err(CliError::BadInput(format!("unknown domain `{d}`"))),
        };
        if let DomainSpec::Disk { n: Some(k) } | DomainSpec::Ngon { n: k } | DomainSpec::Ellipse { n: k, .. } = domain {
            if k < 3 {
                return Err(CliError::BadInput(format!("`n` must be at least 3, got {k}")));
            }
        }
        let q = e.get("q", 0.5)?;
        check_q(q)?;
        let q_grid = parse_q_grid(&e.get("q_grid", "i/20".to_string())?)?;
        let star = match e.get("star", "h1".to_string())?.as_str() {
            "h1" => StarProduct::H1,
            "l2" => StarProduct::L2,
            s => return Err(CliError::BadInput(format!("`star` must be h1 or l2, got `{s}`"))),
        };
        let defaults = FlowParams::default();
        let flow = FlowParams {
            tau: e.positive("tau", defaults.tau)?,
            eps_stop: e.positive("eps_stop", defaults.eps_stop)?,
            max_iter: e.get("max_iter", defaults.max_iter)?,
            star,
            cg_tol: defaults.cg_tol,
        };
        flow.validate().map_err(CliError::from)?;
        let ed = ElasticityParams::default();
        let elasticity = ElasticityParams {
            young: e.positive("young", ed.young)?,
            poisson: e.positive("poisson", ed.poisson)?,
            rho: e.positive("rho", ed.rho)?,
        };
        elasticity.validate().map_err(CliError::from)?;
        let shape = ShapeSettings {
            budget: e.get("budget", 100)?,
            snapshot_every: e.get("snapshot_every", 10)?,
            initial_step: e.positive("initial_step", 0.05)?,
            max_step: e.positive("max_step", 0.2)?,
            probe_factor: e.positive("probe_factor", 1e-2)?,
            stationarity: e.positive("stationarity", 1e-3)?,
            elasticity,
        };
        let critical = CriticalSettings {
            m_lo: e.positive("m_lo", 0.5)?,
            m_hi: e.positive("m_hi", 4.0)?,
            width: e.positive("width", 1e-3)?,
        };
        if !(critical.m_hi > critical.m_lo) {
            return Err(CliError::BadInput("critical mass bracket needs m_lo < m_hi".into()));
        }
        let threads = e.get("threads", 1usize)?;
        if threads == 0 {
            return Err(CliError::BadInput("`threads` must be at least 1".into()));
        }
        Ok(Self {
            command,
            domain,
            radius: e.positive("radius", 1.0)?,
            h: e.positive("h", 0.0625)?,
            m_hat: e.positive("m_hat", 1.0)?,
            q,
            q_grid,
            flow,
            shape,
            critical,
            out: PathBuf::from(e.get("out", "out".to_string())?),
            seed: e.get("seed", 0u64)?,
            threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_file_format() {
        let m = parse_entries("# run\nh = 0.125\n\nm_hat=2 # total mass\nq-grid = 0, 0.5,1\n").unwrap();
        assert_eq!(m["h"], "0.125");
        assert_eq!(m["m_hat"], "2");
        assert_eq!(m["q_grid"], "0, 0.5,1");
        assert!(parse_entries("bogus = 1").is_err());
        assert!(parse_entries("h 0.1").is_err());
    }

    #[test]
    fn q_grids() {
        let g = parse_q_grid("i/20").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[1], 0.05);
        assert_eq!(g[20], 1.0);
        assert_eq!(parse_q_grid("0.2, 0.5,0.8").unwrap(), vec![0.2, 0.5, 0.8]);
        assert!(parse_q_grid("").is_err());
        assert!(parse_q_grid("0.5,0.2").is_err());
        assert!(parse_q_grid("0.5,1.5").is_err());
        assert!(parse_q_grid("i/0").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::from_entries(Command::Eig, BTreeMap::new()).unwrap();
        assert_eq!(c.domain, DomainSpec::Disk { n: None });
        assert_eq!(c.flow, FlowParams::default());
        assert_eq!(c.threads, 1);
        let c = RunConfig::from_entries(Command::Mesh, entries(&[("domain", "ngon"), ("n", "6")])).unwrap();
        assert_eq!(c.domain, DomainSpec::Ngon { n: 6 });
        for bad in [
            [("q", "1.5")],
            [("h", "-1")],
            [("domain", "ngon")],
            [("domain", "blob")],
            [("star", "h2")],
            [("poisson", "0.5")],
            [("threads", "0")],
            [("m_hat", "x")],
        ] {
            assert!(RunConfig::from_entries(Command::Eig, entries(&bad)).is_err(), "{bad:?}");
        }
    }
}
