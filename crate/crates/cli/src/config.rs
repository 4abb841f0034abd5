//! Experiment configuration: TOML on disk, validated into a list of
//! field-named violations before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anderson_core::disorder::DistributionSpec;
use anderson_core::lattice::default_faber_krahn_constant;
use anderson_core::pam::WalkMode;
use anderson_core::variational::ChiMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Pam,
    Ids,
    Bounds,
    Tauber,
    Report,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Spectrum, Command::Pam, Command::Ids, Command::Bounds, Command::Tauber, Command::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pam => "pam",
            Command::Ids => "ids",
            Command::Bounds => "bounds",
            Command::Tauber => "tauber",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// An explicit list, or `{ log_range = [lo, hi, count] }`, or `{ linear = [lo, hi, count] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    LogRange { log_range: (f64, f64, usize) },
    Linear { linear: (f64, f64, usize) },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let spaced = |lo: f64, k: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            match k {
                0 => vec![],
                1 => vec![lo],
                _ => (0..k).map(|i| f(i as f64 / (k - 1) as f64)).collect(),
            }
        };
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::LogRange { log_range: (lo, hi, k) } => {
                spaced(lo, k, &|s| (lo.ln() + s * (hi.ln() - lo.ln())).exp())
            }
            Grid::Linear { linear: (lo, hi, k) } => spaced(lo, k, &|s| lo + s * (hi - lo)),
        }
    }

    fn check(&self, field: &str, positive: bool, ascending: bool, out: &mut Vec<String>) {
        if let Grid::LogRange { log_range: (lo, hi, _) } = *self {
            if !(lo > 0.0 && hi > 0.0) {
                out.push(format!("{field}: log_range bounds must be positive"));
                return;
            }
        }
        let v = self.values();
        if v.is_empty() {
            out.push(format!("{field}: grid is empty"));
        } else if v.iter().any(|x| !x.is_finite()) {
            out.push(format!("{field}: grid values must be finite"));
        } else if positive && v.iter().any(|&x| x <= 0.0) {
            out.push(format!("{field}: grid values must be positive"));
        } else if ascending && v.windows(2).any(|w| w[1] <= w[0]) {
            out.push(format!("{field}: grid values must be strictly ascending"));
        }
    }
}

/// Box side: a fixed `n`, or `"auto"` for the per-`t` box schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Side {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Krylov integrator tolerance.
    pub krylov: Option<f64>,
    /// Lanczos residual tolerance for partial spectra.
    pub lanczos: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportInputs {
    pub bounds: PathBuf,
    pub ids: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub n: Option<Side>,
    pub spec: Option<DistributionSpec>,
    pub t_grid: Option<Grid>,
    pub e_grid: Option<Grid>,
    pub n_disorder: Option<usize>,
    /// Feynman–Kac walkers per realization; 0 disables Monte Carlo.
    pub n_paths: Option<usize>,
    pub walk_mode: Option<WalkMode>,
    pub output: Option<PathBuf>,
    pub c_fk: Option<f64>,
    pub ell_max: Option<usize>,
    pub mode: Option<ChiMode>,
    /// Eigenvalues per realization for `spectrum`; all when absent.
    pub n_eigen: Option<usize>,
    /// Bootstrap resamples of the log-correction comparison.
    pub bootstrap: Option<usize>,
    /// Scale `C` in the shifted rate bounds.
    pub c_rate: Option<f64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub tolerance: Tolerances,
    pub report: Option<ReportInputs>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        // relative report inputs are taken relative to the config file
        if let (Some(r), Some(dir)) = (cfg.report.as_mut(), path.parent()) {
            for p in [&mut r.bounds, &mut r.ids] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t_grid.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn e_values(&self) -> Vec<f64> {
        self.e_grid.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn dim(&self) -> usize {
        self.d.unwrap_or(1)
    }

    pub fn c_fk(&self) -> f64 {
        self.c_fk.unwrap_or_else(|| default_faber_krahn_constant(self.dim()))
    }

    pub fn krylov_tol(&self) -> f64 {
        self.tolerance.krylov.unwrap_or(1e-10)
    }

    pub fn lanczos_tol(&self) -> f64 {
        self.tolerance.lanczos.unwrap_or(1e-10)
    }

    /// Violations for running `command`; empty iff runnable.
    pub fn validate(&self, command: Command) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(c) = self.command {
            if c != command {
                out.push(format!("command: config is for {c}, invoked as {command}"));
            }
        }
        if self.seed.is_none() {
            out.push("seed: missing (no wall-clock default)".into());
        }
        if command == Command::Report {
            match &self.report {
                None => out.push("report: needs [report] with bounds and ids paths".into()),
                Some(r) => {
                    for (name, p) in [("report.bounds", &r.bounds), ("report.ids", &r.ids)] {
                        if !p.is_file() {
                            out.push(format!("{name}: {} not found", p.display()));
                        }
                    }
                }
            }
            return out;
        }

        match self.d {
            None => out.push("d: missing".into()),
            Some(0) => out.push("d: must be at least 1".into()),
            Some(_) => {}
        }
        match &self.spec {
            None => out.push("spec: missing".into()),
            Some(s) => {
                if let Err(e) = s.validate() {
                    out.push(format!("spec: {e}"));
                }
            }
        }
        if self.ell_max.is_some_and(|l| l < 2) {
            out.push("ell_max: must be at least 2".into());
        }
        if self.c_fk.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            out.push("c_fk: must be positive".into());
        }
        if self.c_rate.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            out.push("c_rate: must be positive".into());
        }
        if self.threads == Some(0) {
            out.push("threads: must be at least 1".into());
        }
        for (name, v) in [("tolerance.krylov", self.tolerance.krylov), ("tolerance.lanczos", self.tolerance.lanczos)] {
            if v.is_some_and(|x| !(1e-15..1.0).contains(&x)) {
                out.push(format!("{name}: must lie in [1e-15, 1)"));
            }
        }
        if self.n == Some(Side::Fixed(0)) {
            out.push("n: must be at least 1".into());
        }

        let need_t = matches!(command, Command::Pam | Command::Bounds);
        let need_e = matches!(command, Command::Ids | Command::Tauber);
        match (&self.t_grid, need_t) {
            (None, true) => out.push("t_grid: missing".into()),
            (Some(g), _) => g.check("t_grid", true, false, &mut out),
            _ => {}
        }
        match (&self.e_grid, need_e) {
            (None, true) => out.push("e_grid: missing".into()),
            (Some(g), _) => g.check("e_grid", false, command == Command::Ids, &mut out),
            _ => {}
        }

        let min_disorder = match command {
            Command::Pam | Command::Bounds => 2,
            _ => 1,
        };
        let n_needed = match command {
            Command::Spectrum | Command::Ids => Some(false),
            Command::Pam => Some(true),
            _ => None,
        };
        match (self.n, n_needed) {
            (None, Some(_)) => out.push("n: missing".into()),
            (Some(Side::Auto(_)), Some(false)) => out.push(format!("n: \"auto\" needs a t grid, not available for {command}")),
            _ => {}
        }
        let uses_disorder = matches!(command, Command::Spectrum | Command::Pam | Command::Ids)
            || (command == Command::Bounds && self.n.is_some());
        if uses_disorder {
            match self.n_disorder {
                None if command != Command::Spectrum => out.push("n_disorder: missing".into()),
                Some(k) if k < min_disorder => out.push(format!("n_disorder: must be at least {min_disorder}")),
                _ => {}
            }
        }
        out
    }
}
