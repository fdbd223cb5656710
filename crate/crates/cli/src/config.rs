//! Flat `key = value` run configuration.
//!
//! ```text
//! # lattice
//! n_x = 16
//! n_t = 64
//! dx = 1.0
//! dt = 0.5
//! mass = 1.0
//! statistics = bosonic
//! # source term, one line per site: t x value
//! source = 20 3 1.0
//! source = 21 4 -0.5
//! window = 24 40
//! samples = 8
//! tuples = 4
//! order = 6
//! perturb = 0.0
//! scan_half_width = 6
//! suites = demo-inhomogeneous, moments
//! seed = 7
//! out = results
//! ```
//!
//! Missing keys take the defaults of [`RunConfig::default`].

use std::path::{Path, PathBuf};

use affqft::{AffineOperator, Lattice, PhaseSpace, Section, Statistics};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("source term at (t = {t}, x = {x}) violates the support margin: slices must lie in [2, {max}]")]
    SupportMargin { t: usize, x: usize, max: usize },
    #[error("source term at (t = {t}, x = {x}) is outside the lattice")]
    SourceOutOfRange { t: usize, x: usize },
    #[error("window [{t_a}, {t_b}] is invalid: {reason}")]
    Window { t_a: usize, t_b: usize, reason: String },
    #[error("{0}")]
    Unsupported(String),
}

/// Subcommands a `suites` list may name.
pub const SUITES: [&str; 4] = ["demo-inhomogeneous", "moments", "causality-scan", "timeslice"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_x: usize,
    pub n_t: usize,
    pub dx: f64,
    pub dt: f64,
    pub mass: f64,
    pub statistics: Statistics,
    pub source: Vec<(usize, usize, f64)>,
    pub window: Option<(usize, usize)>,
    /// Number of random observables drawn by `moments` and `timeslice`.
    pub samples: usize,
    /// Number of random argument tuples drawn by `moments`.
    pub tuples: usize,
    /// Highest moment order for `moments`.
    pub order: usize,
    /// Shift applied to degree-4 evaluations of the base state.
    pub perturb: f64,
    pub scan_half_width: usize,
    pub suites: Vec<String>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let l = Lattice::desk();
        Self {
            n_x: l.n_x(),
            n_t: l.n_t(),
            dx: l.dx(),
            dt: l.dt(),
            mass: l.mass(),
            statistics: Statistics::Bosonic,
            source: Vec::new(),
            window: None,
            samples: 6,
            tuples: 4,
            order: 6,
            perturb: 0.0,
            scan_half_width: 6,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            seed: 0,
            out: PathBuf::from("."),
        }
    }
}

fn parse<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { line, key: key.into(), value: value.into() })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_x" => cfg.n_x = parse(line, key, value)?,
                "n_t" => cfg.n_t = parse(line, key, value)?,
                "dx" => cfg.dx = parse(line, key, value)?,
                "dt" => cfg.dt = parse(line, key, value)?,
                "mass" => cfg.mass = parse(line, key, value)?,
                "statistics" => {
                    cfg.statistics = match value {
                        "bosonic" => Statistics::Bosonic,
                        "fermionic" => Statistics::Fermionic,
                        _ => return Err(ConfigError::BadValue { line, key: key.into(), value: value.into() }),
                    }
                }
                "source" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(ConfigError::BadValue { line, key: key.into(), value: value.into() });
                    }
                    cfg.source.push((
                        parse(line, key, parts[0])?,
                        parse(line, key, parts[1])?,
                        parse(line, key, parts[2])?,
                    ));
                }
                "window" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(ConfigError::BadValue { line, key: key.into(), value: value.into() });
                    }
                    cfg.window = Some((parse(line, key, parts[0])?, parse(line, key, parts[1])?));
                }
                "samples" => cfg.samples = parse(line, key, value)?,
                "tuples" => cfg.tuples = parse(line, key, value)?,
                "order" => cfg.order = parse(line, key, value)?,
                "perturb" => cfg.perturb = parse(line, key, value)?,
                "scan_half_width" => cfg.scan_half_width = parse(line, key, value)?,
                "suites" => {
                    cfg.suites = value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                    if let Some(bad) = cfg.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
                        return Err(ConfigError::BadValue { line, key: key.into(), value: bad.clone() });
                    }
                }
                "seed" => cfg.seed = parse(line, key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks lattice invariants, explicit-scheme stability, support margins
    /// and the window.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = self.lattice()?;
        l.check_mode_stability().map_err(|e| ConfigError::Lattice(e.to_string()))?;
        for &(t, x, _) in &self.source {
            if t >= l.n_t() || x >= l.n_x() {
                return Err(ConfigError::SourceOutOfRange { t, x });
            }
            if !l.compact_slices().contains(&t) {
                return Err(ConfigError::SupportMargin { t, x, max: l.n_t() - 3 });
            }
        }
        if let Some((t_a, t_b)) = self.window {
            l.window(t_a, t_b).map_err(|e| ConfigError::Window { t_a, t_b, reason: e.to_string() })?;
            if t_b < t_a + 4 {
                return Err(ConfigError::Window { t_a, t_b, reason: "needs t_b - t_a >= 4".into() });
            }
        }
        if !(1..=8).contains(&self.order) {
            return Err(ConfigError::BadValue { line: 0, key: "order".into(), value: self.order.to_string() });
        }
        if self.samples == 0 {
            return Err(ConfigError::BadValue { line: 0, key: "samples".into(), value: "0".into() });
        }
        if self.statistics == Statistics::Fermionic {
            return Err(ConfigError::Unsupported(
                "the lattice field is bosonic; fermionic data is only available through the library API".into(),
            ));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice, ConfigError> {
        Lattice::new(self.n_x, self.n_t, self.dx, self.dt, self.mass).map_err(|e| ConfigError::Lattice(e.to_string()))
    }

    pub fn source_section(&self) -> Result<Section, ConfigError> {
        let l = self.lattice()?;
        Section::from_triples(&l, &self.source).map_err(|e| ConfigError::Lattice(e.to_string()))
    }

    pub fn phase_space(&self) -> Result<PhaseSpace, ConfigError> {
        let op = AffineOperator::new(self.source_section()?).map_err(|e| ConfigError::Lattice(e.to_string()))?;
        PhaseSpace::new(op).map_err(|e| ConfigError::Lattice(e.to_string()))
    }

    /// The configured window, or the middle nine slices.
    pub fn window_or_default(&self) -> (usize, usize) {
        self.window.unwrap_or((self.n_t / 2 - 4, self.n_t / 2 + 4))
    }
}
