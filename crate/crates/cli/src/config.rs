//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use entropy_rk::initial::{barenblatt, cosine};
use entropy_rk::{
    registry, DiffusionCoefficient, EntropyFunctional, Family, Grid1D, NewtonConfig, ProblemSpec, QExponent,
    Scheme, StateField,
};
use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: Origin, key: String },
    #[error("{at}: key `{key}` given twice")]
    Duplicate { at: Origin, key: String },
    #[error("{at}: key `{key}`: cannot parse `{value}` as {expected}")]
    Parse {
        at: Origin,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("{at}: key `{key}`: {reason}")]
    Constraint { at: Origin, key: String, reason: String },
    #[error("{at}: key `{key}`: {source}")]
    Lookup {
        at: Origin,
        key: String,
        source: entropy_rk::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
}

impl ConfigError {
    pub fn category(&self) -> &'static str {
        match self {
            ConfigError::Lookup { .. } => "lookup",
            ConfigError::Read { .. } => "io",
            _ => "config",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Pme,
    Diffusion,
    System,
    Dlss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    Power,
    Log,
    Experiment,
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Barenblatt,
    Cosine,
    File,
}

/// Every recognised key, in echo order.
pub const KEYS: &[&str] = &[
    "problem",
    "beta",
    "rho1",
    "rho2",
    "mu",
    "diffusion_k",
    "diffusion_m",
    "scheme",
    "schemes",
    "n",
    "length",
    "tau",
    "t_end",
    "newton_tol",
    "newton_max_iter",
    "entropy",
    "alpha",
    "ic",
    "t0",
    "x_r",
    "mean",
    "amplitude",
    "ic_file",
    "snapshots",
    "base_times",
    "tau_max",
    "m",
    "q_exponent",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub beta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub mu: f64,
    pub diffusion_k: f64,
    pub diffusion_m: f64,
    pub scheme: String,
    /// Schemes profiled by `gprofile`; empty means all registered.
    pub schemes: Vec<String>,
    pub n: usize,
    pub length: f64,
    pub tau: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub entropy: EntropyKind,
    pub alpha: f64,
    pub ic: InitialKind,
    pub t0: f64,
    pub x_r: f64,
    pub mean: f64,
    pub amplitude: f64,
    pub ic_file: Option<PathBuf>,
    pub snapshots: Vec<f64>,
    pub base_times: Vec<f64>,
    pub tau_max: f64,
    pub m: usize,
    pub q_exponent: QExponent,
    origins: BTreeMap<&'static str, Origin>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Pme,
            beta: 2.0,
            rho1: 1.0,
            rho2: 1.0,
            mu: 1.0,
            diffusion_k: 1.0,
            diffusion_m: 0.0,
            scheme: "implicit_euler".into(),
            schemes: Vec::new(),
            n: 64,
            length: 1.0,
            tau: 1e-4,
            t_end: 0.01,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            entropy: EntropyKind::Experiment,
            alpha: 5.0,
            ic: InitialKind::Barenblatt,
            t0: 0.01,
            x_r: 0.25,
            mean: 1.0,
            amplitude: 0.2,
            ic_file: None,
            snapshots: Vec::new(),
            base_times: vec![0.001, 0.003, 0.006],
            tau_max: 1e-3,
            m: 100,
            q_exponent: QExponent::Equation,
            origins: BTreeMap::new(),
        }
    }
}

fn parse_f64(key: &str, value: &str, at: Origin) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Parse {
            at,
            key: key.into(),
            value: value.into(),
            expected: "a finite number",
        })
}

fn parse_usize(key: &str, value: &str, at: Origin) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        at,
        key: key.into(),
        value: value.into(),
        expected: "a non-negative integer",
    })
}

fn parse_list(key: &str, value: &str, at: Origin) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s, at))
        .collect()
}

fn choice<T: Copy>(key: &str, value: &str, at: Origin, options: &[(&str, T)], expected: &'static str) -> Result<T, ConfigError> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| ConfigError::Parse {
            at,
            key: key.into(),
            value: value.into(),
            expected,
        })
}

fn constraint(at: Origin, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        at,
        key: key.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    /// Parses configuration text.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: idx + 1 })?;
            cfg.set(key.trim(), value.trim(), Origin::Line(idx + 1))?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn origin(&self, key: &str) -> Origin {
        self.origins.get(key).copied().unwrap_or(Origin::Default)
    }

    /// Sets one key; file lines may not repeat a key, flags override.
    pub fn set(&mut self, key: &str, value: &str, at: Origin) -> Result<(), ConfigError> {
        let Some(&canonical) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey { at, key: key.into() });
        };
        if matches!(at, Origin::Line(_)) && matches!(self.origin(canonical), Origin::Line(_)) {
            return Err(ConfigError::Duplicate { at, key: key.into() });
        }
        let positive = |x: f64| {
            if x > 0.0 {
                Ok(x)
            } else {
                Err(constraint(at, key, format!("must be positive, got {x}")))
            }
        };
        let nonneg = |x: f64| {
            if x >= 0.0 {
                Ok(x)
            } else {
                Err(constraint(at, key, format!("must be non-negative, got {x}")))
            }
        };
        let lookup = |name: &str| {
            registry()
                .get(name)
                .map(|_| name.to_string())
                .map_err(|source| ConfigError::Lookup {
                    at,
                    key: key.into(),
                    source,
                })
        };
        match canonical {
            "problem" => {
                self.problem = choice(
                    key,
                    value,
                    at,
                    &[
                        ("pme", ProblemKind::Pme),
                        ("diffusion", ProblemKind::Diffusion),
                        ("system", ProblemKind::System),
                        ("dlss", ProblemKind::Dlss),
                    ],
                    "one of pme, diffusion, system, dlss",
                )?
            }
            "beta" => self.beta = positive(parse_f64(key, value, at)?)?,
            "rho1" => self.rho1 = nonneg(parse_f64(key, value, at)?)?,
            "rho2" => self.rho2 = nonneg(parse_f64(key, value, at)?)?,
            "mu" => self.mu = nonneg(parse_f64(key, value, at)?)?,
            "diffusion_k" => self.diffusion_k = positive(parse_f64(key, value, at)?)?,
            "diffusion_m" => self.diffusion_m = parse_f64(key, value, at)?,
            "scheme" => self.scheme = lookup(value)?,
            "schemes" => {
                self.schemes = if value == "all" {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(lookup)
                        .collect::<Result<_, _>>()?
                }
            }
            "n" => {
                let n = parse_usize(key, value, at)?;
                if n < 4 {
                    return Err(constraint(at, key, format!("need at least 4 cells, got {n}")));
                }
                self.n = n;
            }
            "length" => self.length = positive(parse_f64(key, value, at)?)?,
            "tau" => self.tau = positive(parse_f64(key, value, at)?)?,
            "t_end" => self.t_end = positive(parse_f64(key, value, at)?)?,
            "newton_tol" => self.newton_tol = positive(parse_f64(key, value, at)?)?,
            "newton_max_iter" => {
                let it = parse_usize(key, value, at)?;
                if it == 0 {
                    return Err(constraint(at, key, "must be at least 1"));
                }
                self.newton_max_iter = it;
            }
            "entropy" => {
                self.entropy = choice(
                    key,
                    value,
                    at,
                    &[
                        ("power", EntropyKind::Power),
                        ("log", EntropyKind::Log),
                        ("experiment", EntropyKind::Experiment),
                        ("first_order", EntropyKind::FirstOrder),
                    ],
                    "one of power, log, experiment, first_order",
                )?
            }
            "alpha" => self.alpha = nonneg(parse_f64(key, value, at)?)?,
            "ic" => {
                self.ic = choice(
                    key,
                    value,
                    at,
                    &[
                        ("barenblatt", InitialKind::Barenblatt),
                        ("cosine", InitialKind::Cosine),
                        ("file", InitialKind::File),
                    ],
                    "one of barenblatt, cosine, file",
                )?
            }
            "t0" => self.t0 = positive(parse_f64(key, value, at)?)?,
            "x_r" => self.x_r = parse_f64(key, value, at)?,
            "mean" => self.mean = parse_f64(key, value, at)?,
            "amplitude" => self.amplitude = parse_f64(key, value, at)?,
            "ic_file" => self.ic_file = Some(PathBuf::from(value)),
            "snapshots" => {
                self.snapshots = parse_list(key, value, at)?
                    .into_iter()
                    .map(nonneg)
                    .collect::<Result<_, _>>()?
            }
            "base_times" => {
                self.base_times = parse_list(key, value, at)?
                    .into_iter()
                    .map(nonneg)
                    .collect::<Result<_, _>>()?
            }
            "tau_max" => self.tau_max = positive(parse_f64(key, value, at)?)?,
            "m" => {
                let m = parse_usize(key, value, at)?;
                if m < 3 {
                    return Err(constraint(at, key, format!("need at least 3 intervals, got {m}")));
                }
                self.m = m;
            }
            "q_exponent" => {
                self.q_exponent = choice(
                    key,
                    value,
                    at,
                    &[("equation", QExponent::Equation), ("text", QExponent::Text)],
                    "one of equation, text",
                )?
            }
            _ => unreachable!("key table and match arms agree"),
        }
        self.origins.insert(canonical, at);
        Ok(())
    }

    /// Cross-key constraints, checked once all sources are merged.
    pub fn finish(self) -> Result<Self, ConfigError> {
        if self.t_end < self.tau {
            return Err(constraint(
                self.origin("t_end"),
                "t_end",
                format!("t_end = {} is shorter than tau = {}", self.t_end, self.tau),
            ));
        }
        if self.ic == InitialKind::Barenblatt {
            if self.problem != ProblemKind::Pme {
                return Err(constraint(self.origin("ic"), "ic", "barenblatt needs problem = pme"));
            }
            if self.beta <= 1.0 {
                return Err(constraint(
                    self.origin("ic"),
                    "ic",
                    format!("barenblatt needs beta > 1, got {}", self.beta),
                ));
            }
        }
        if self.ic == InitialKind::File && self.ic_file.is_none() {
            return Err(constraint(self.origin("ic"), "ic", "ic = file needs ic_file"));
        }
        if let Err(e) = self.entropy_functional().validate() {
            return Err(constraint(self.origin("alpha"), "alpha", e.to_string()));
        }
        if self.entropy == EntropyKind::FirstOrder && self.problem == ProblemKind::System {
            return Err(constraint(
                self.origin("entropy"),
                "entropy",
                "first-order entropies need a single-species problem",
            ));
        }
        Ok(self)
    }

    /// Echo of every key, parseable by [`RunConfig::parse_str`].
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for &key in KEYS {
            let value = match key {
                "problem" => match self.problem {
                    ProblemKind::Pme => "pme",
                    ProblemKind::Diffusion => "diffusion",
                    ProblemKind::System => "system",
                    ProblemKind::Dlss => "dlss",
                }
                .to_string(),
                "beta" => format!("{:e}", self.beta),
                "rho1" => format!("{:e}", self.rho1),
                "rho2" => format!("{:e}", self.rho2),
                "mu" => format!("{:e}", self.mu),
                "diffusion_k" => format!("{:e}", self.diffusion_k),
                "diffusion_m" => format!("{:e}", self.diffusion_m),
                "scheme" => self.scheme.clone(),
                "schemes" => {
                    if self.schemes.is_empty() {
                        "all".into()
                    } else {
                        self.schemes.join(",")
                    }
                }
                "n" => self.n.to_string(),
                "length" => format!("{:e}", self.length),
                "tau" => format!("{:e}", self.tau),
                "t_end" => format!("{:e}", self.t_end),
                "newton_tol" => format!("{:e}", self.newton_tol),
                "newton_max_iter" => self.newton_max_iter.to_string(),
                "entropy" => match self.entropy {
                    EntropyKind::Power => "power",
                    EntropyKind::Log => "log",
                    EntropyKind::Experiment => "experiment",
                    EntropyKind::FirstOrder => "first_order",
                }
                .to_string(),
                "alpha" => format!("{:e}", self.alpha),
                "ic" => match self.ic {
                    InitialKind::Barenblatt => "barenblatt",
                    InitialKind::Cosine => "cosine",
                    InitialKind::File => "file",
                }
                .to_string(),
                "t0" => format!("{:e}", self.t0),
                "x_r" => format!("{:e}", self.x_r),
                "mean" => format!("{:e}", self.mean),
                "amplitude" => format!("{:e}", self.amplitude),
                "ic_file" => match &self.ic_file {
                    Some(p) => p.display().to_string(),
                    None => continue,
                },
                "snapshots" => {
                    if self.snapshots.is_empty() {
                        continue;
                    }
                    list(&self.snapshots)
                }
                "base_times" => list(&self.base_times),
                "tau_max" => format!("{:e}", self.tau_max),
                "m" => self.m.to_string(),
                "q_exponent" => match self.q_exponent {
                    QExponent::Equation => "equation",
                    QExponent::Text => "text",
                }
                .to_string(),
                _ => unreachable!(),
            };
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    pub fn grid(&self) -> entropy_rk::Result<Grid1D> {
        Grid1D::new(self.n, self.length)
    }

    pub fn problem_spec(&self) -> entropy_rk::Result<ProblemSpec> {
        let family = match self.problem {
            ProblemKind::Pme => Family::PorousMedium { beta: self.beta },
            ProblemKind::Diffusion => {
                Family::ScalarDiffusion(DiffusionCoefficient::power(self.diffusion_k, self.diffusion_m))
            }
            ProblemKind::System => Family::LinearSystem {
                rho1: self.rho1,
                rho2: self.rho2,
                mu: self.mu,
            },
            ProblemKind::Dlss => Family::Dlss,
        };
        ProblemSpec::new(family, self.grid()?)
    }

    pub fn scheme_by_name(name: &str) -> entropy_rk::Result<Scheme> {
        registry().get(name).cloned()
    }

    pub fn newton(&self) -> entropy_rk::Result<NewtonConfig> {
        NewtonConfig::new(self.newton_tol, self.newton_max_iter)
    }

    pub fn entropy_functional(&self) -> EntropyFunctional {
        match self.entropy {
            EntropyKind::Power => EntropyFunctional::Power { alpha: self.alpha },
            EntropyKind::Log if self.problem == ProblemKind::System => EntropyFunctional::LogSum,
            EntropyKind::Log => EntropyFunctional::Power { alpha: 0.0 },
            EntropyKind::Experiment => EntropyFunctional::ExperimentPower { alpha: self.alpha },
            EntropyKind::FirstOrder => EntropyFunctional::FirstOrder { alpha: self.alpha },
        }
    }

    /// Schemes for `gprofile`.
    pub fn profile_schemes(&self) -> Vec<String> {
        if self.schemes.is_empty() {
            registry().names().map(String::from).collect()
        } else {
            self.schemes.clone()
        }
    }
}

/// Initial state on `grid` for the configured problem.
pub fn make_initial(cfg: &RunConfig, grid: &Grid1D) -> Result<StateField, crate::CliError> {
    let species = if cfg.problem == ProblemKind::System { 2 } else { 1 };
    match cfg.ic {
        InitialKind::Barenblatt => Ok(barenblatt(grid, cfg.beta, cfg.t0, cfg.x_r)?),
        InitialKind::Cosine => Ok(cosine(grid, species, cfg.mean, cfg.amplitude)?),
        InitialKind::File => {
            let path = cfg.ic_file.as_deref().expect("checked in finish");
            read_state(path, species, grid.n())
        }
    }
}

/// Reads a state written as a snapshot (`x,u` or `x,u1,u2` with a header)
/// or as one value per line.
pub fn read_state(path: &Path, species: usize, n: usize) -> Result<StateField, crate::CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::CliError::Io {
        path: path.into(),
        source,
    })?;
    let bad = |line: usize, what: &str| {
        crate::CliError::Config(ConfigError::Constraint {
            at: Origin::Line(line),
            key: "ic_file".into(),
            reason: format!("{}: {what}", path.display()),
        })
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); species];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let values = match fields.len() {
            1 if species == 1 => &fields[..],
            k if k == species + 1 => &fields[1..],
            k => return Err(bad(idx + 1, &format!("expected {} columns, found {k}", species + 1))),
        };
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v.parse().map_err(|_| bad(idx + 1, &format!("not a number: `{v}`")))?);
        }
    }
    if columns[0].len() != n {
        return Err(bad(0, &format!("expected {n} rows, found {}", columns[0].len())));
    }
    Ok(StateField::new(species, n, columns.concat())?)
}
