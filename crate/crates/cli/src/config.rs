//! Run configuration: a flat sectioned `key = value` file, overridden by flags.

use std::fmt;
use std::path::Path;

use heat_threshold::nonlinearity::sobolev_exponent;
use heat_threshold::{Error as CoreError, Nonlinearity};
use ini::Ini;
use serde::Serialize;

/// A configuration problem, reported with the offending `section.key`.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    PowerExp,
    CutoffExp,
    PurePower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Graded,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Bump,
    Scaling,
    Truncation,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonlinearitySection {
    pub family: FamilyName,
    pub p: f64,
    pub q: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainSection {
    pub dim: usize,
    pub r_patch: f64,
    pub r_outer: f64,
    pub grid: GridKind,
    pub r1: f64,
    pub n_inner: usize,
    pub n_outer: usize,
    pub n_intervals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSection {
    pub rtol: f64,
    pub atol: f64,
    pub patch_tol: f64,
    pub check_patch: bool,
    pub u_min: f64,
    pub u_max: f64,
    pub samples: usize,
    pub tol_q: f64,
    pub flux_tol: f64,
    pub slope_tol: f64,
    pub caps: Vec<f64>,
    pub horizon: f64,
    pub dt_max: f64,
    pub safety: f64,
    pub slices: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSection {
    pub perturbation: PerturbationKind,
    pub center: f64,
    pub width: f64,
    /// Bump amplitude as a fraction of `u*(center)`.
    pub amplitude: f64,
    pub factor: f64,
    pub truncation: f64,
    /// Scan amplitudes as fractions of `u*(center)`.
    pub amplitudes: Vec<f64>,
    pub pure_heat: bool,
    pub t_obs: f64,
    pub k_max: usize,
    /// Ladder data is `scale * u*`.
    pub scale: f64,
    pub ladder_r_outer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub nonlinearity: NonlinearitySection,
    pub domain: DomainSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nonlinearity: NonlinearitySection { family: FamilyName::PowerExp, p: 5.0, q: 2.0, a: 20.0 },
            domain: DomainSection {
                dim: 3,
                r_patch: 1e-3,
                r_outer: 10.0,
                grid: GridKind::Graded,
                r1: 1e-3,
                n_inner: 30,
                n_outer: 60,
                n_intervals: 63,
            },
            solver: SolverSection {
                rtol: 1e-8,
                atol: 1e-10,
                patch_tol: 1e-5,
                check_patch: true,
                u_min: 1e-6,
                u_max: 1e3,
                samples: 2000,
                tol_q: 1e-12,
                flux_tol: 1e-4,
                slope_tol: 1e-10,
                caps: vec![1e4, 1e5],
                horizon: 0.5,
                dt_max: 1e-3,
                safety: 0.5,
                slices: 64,
            },
            experiment: ExperimentSection {
                perturbation: PerturbationKind::Bump,
                center: 2.0,
                width: 0.3,
                amplitude: 0.2,
                factor: 1.2,
                truncation: 2.0,
                amplitudes: vec![-0.3, -0.1, 0.1, 0.3],
                pure_heat: false,
                t_obs: 0.1,
                k_max: 8,
                scale: 0.9,
                ladder_r_outer: 4.0,
            },
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| number(key, v)).collect()
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::new(key, format!("expected true or false, got `{value}`"))),
    }
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options.iter().find(|(name, _)| *name == value.trim()).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        ConfigError::new(key, format!("expected one of {}, got `{value}`", names.join(", ")))
    })
}

impl RunConfig {
    /// Defaults overridden by the file at `path`.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text)
            .map_err(|e| ConfigError::new(format!("line {}", e.line), format!("malformed entry: {}", e.msg)))?;
        let mut cfg = Self::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(section) = section else {
                    return Err(ConfigError::new(key, "key outside a section"));
                };
                cfg.set(&format!("{section}.{key}"), value)?;
            }
        }
        Ok(cfg)
    }

    /// Sets one value addressed as `section.key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key;
        let (n, d, s, e) = (&mut self.nonlinearity, &mut self.domain, &mut self.solver, &mut self.experiment);
        match key {
            "nonlinearity.family" => {
                n.family = choice(
                    k,
                    value,
                    &[
                        ("power-exp", FamilyName::PowerExp),
                        ("cutoff-exp", FamilyName::CutoffExp),
                        ("pure-power", FamilyName::PurePower),
                    ],
                )?
            }
            "nonlinearity.p" => n.p = number(k, value)?,
            "nonlinearity.q" => n.q = number(k, value)?,
            "nonlinearity.a" => n.a = number(k, value)?,
            "domain.dim" => d.dim = number(k, value)?,
            "domain.r_patch" => d.r_patch = number(k, value)?,
            "domain.r_outer" => d.r_outer = number(k, value)?,
            "domain.grid" => {
                d.grid = choice(k, value, &[("graded", GridKind::Graded), ("uniform", GridKind::Uniform)])?
            }
            "domain.r1" => d.r1 = number(k, value)?,
            "domain.n_inner" => d.n_inner = number(k, value)?,
            "domain.n_outer" => d.n_outer = number(k, value)?,
            "domain.n_intervals" => d.n_intervals = number(k, value)?,
            "solver.rtol" => s.rtol = number(k, value)?,
            "solver.atol" => s.atol = number(k, value)?,
            "solver.patch_tol" => s.patch_tol = number(k, value)?,
            "solver.check_patch" => s.check_patch = boolean(k, value)?,
            "solver.u_min" => s.u_min = number(k, value)?,
            "solver.u_max" => s.u_max = number(k, value)?,
            "solver.samples" => s.samples = number(k, value)?,
            "solver.tol_q" => s.tol_q = number(k, value)?,
            "solver.flux_tol" => s.flux_tol = number(k, value)?,
            "solver.slope_tol" => s.slope_tol = number(k, value)?,
            "solver.caps" => s.caps = list(k, value)?,
            "solver.horizon" => s.horizon = number(k, value)?,
            "solver.dt_max" => s.dt_max = number(k, value)?,
            "solver.safety" => s.safety = number(k, value)?,
            "solver.slices" => s.slices = number(k, value)?,
            "experiment.perturbation" => {
                e.perturbation = choice(
                    k,
                    value,
                    &[
                        ("bump", PerturbationKind::Bump),
                        ("scaling", PerturbationKind::Scaling),
                        ("truncation", PerturbationKind::Truncation),
                    ],
                )?
            }
            "experiment.center" => e.center = number(k, value)?,
            "experiment.width" => e.width = number(k, value)?,
            "experiment.amplitude" => e.amplitude = number(k, value)?,
            "experiment.factor" => e.factor = number(k, value)?,
            "experiment.truncation" => e.truncation = number(k, value)?,
            "experiment.amplitudes" => e.amplitudes = list(k, value)?,
            "experiment.pure_heat" => e.pure_heat = boolean(k, value)?,
            "experiment.t_obs" => e.t_obs = number(k, value)?,
            "experiment.k_max" => e.k_max = number(k, value)?,
            "experiment.scale" => e.scale = number(k, value)?,
            "experiment.ladder_r_outer" => e.ladder_r_outer = number(k, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks ranges and builds the nonlinearity.
    pub fn validate(&self) -> Result<Nonlinearity, ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be positive, got {v}")))
            }
        };
        let (d, s, e) = (&self.domain, &self.solver, &self.experiment);
        if d.dim < 3 {
            return Err(ConfigError::new("domain.dim", format!("N >= 3 required, got {}", d.dim)));
        }
        for (key, v) in [
            ("domain.r_patch", d.r_patch),
            ("domain.r_outer", d.r_outer),
            ("domain.r1", d.r1),
            ("solver.rtol", s.rtol),
            ("solver.atol", s.atol),
            ("solver.patch_tol", s.patch_tol),
            ("solver.u_min", s.u_min),
            ("solver.tol_q", s.tol_q),
            ("solver.flux_tol", s.flux_tol),
            ("solver.slope_tol", s.slope_tol),
            ("solver.horizon", s.horizon),
            ("solver.dt_max", s.dt_max),
            ("solver.safety", s.safety),
            ("experiment.center", e.center),
            ("experiment.width", e.width),
            ("experiment.factor", e.factor),
            ("experiment.truncation", e.truncation),
            ("experiment.t_obs", e.t_obs),
            ("experiment.scale", e.scale),
            ("experiment.ladder_r_outer", e.ladder_r_outer),
        ] {
            positive(key, v)?;
        }
        if s.u_max <= s.u_min {
            return Err(ConfigError::new("solver.u_max", "must exceed solver.u_min"));
        }
        if d.r_patch >= d.r_outer {
            return Err(ConfigError::new("domain.r_patch", "must be below domain.r_outer"));
        }
        for (key, v) in [
            ("solver.samples", s.samples),
            ("solver.slices", s.slices),
            ("domain.n_inner", d.n_inner),
            ("domain.n_outer", d.n_outer),
            ("domain.n_intervals", d.n_intervals),
            ("experiment.k_max", e.k_max),
        ] {
            if v == 0 {
                return Err(ConfigError::new(key, "must be at least 1"));
            }
        }
        if s.caps.is_empty() || s.caps.iter().any(|&c| !(c > 0.0)) {
            return Err(ConfigError::new("solver.caps", "needs one or more positive caps"));
        }
        let n = &self.nonlinearity;
        let spec = match n.family {
            FamilyName::PowerExp => {
                let p_s: f64 = sobolev_exponent(d.dim);
                if n.p < p_s {
                    return Err(ConfigError::new(
                        "nonlinearity.p",
                        format!("power-exp needs p >= (N+2)/(N-2) = {p_s}, got {}", n.p),
                    ));
                }
                Nonlinearity::power_exp(n.p, n.q)
            }
            FamilyName::CutoffExp => Nonlinearity::cutoff_exp(n.a),
            FamilyName::PurePower => Nonlinearity::pure_power(n.p),
        };
        spec.map_err(|err| match err {
            CoreError::InvalidParameter { name, reason } => ConfigError::new(format!("nonlinearity.{name}"), reason),
            other => ConfigError::new("nonlinearity", other.to_string()),
        })
    }
}
