//! Flat, line-oriented configuration: `key = value` lines, `#` comments and
//! `[section]` headers, one section per subcommand. Keys before the first
//! header are shared by every subcommand.

use crate::values::ConfigValue;
use bees::experiments::Sampler;
use bees::sim::Mode;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value` or `[section]`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("[{section}] {key} = {value:?}: expected {expected}")]
    Value {
        section: String,
        key: String,
        value: String,
        expected: String,
    },
    #[error("[{section}] {key}: {message}")]
    Constraint {
        section: String,
        key: String,
        message: String,
    },
    #[error("override {0:?} is not of the form key=value")]
    Override(String),
}

fn constraint(section: &str, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        section: section.into(),
        key: key.into(),
        message: message.into(),
    }
}

macro_rules! section {
    ($name:ident, $title:literal, { $($field:ident : $ty:ty = $default:expr,)* }) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }

        impl $name {
            pub const TITLE: &'static str = $title;
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field),)*];

            pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                match key {
                    $(stringify!($field) => {
                        self.$field = ConfigValue::parse(value).map_err(|expected| ConfigError::Value {
                            section: $title.into(),
                            key: key.into(),
                            value: value.into(),
                            expected,
                        })?;
                    })*
                    _ => {
                        return Err(ConfigError::UnknownKey {
                            section: $title.into(),
                            key: key.into(),
                        })
                    }
                }
                Ok(())
            }

            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($field), self.$field.render()),)*]
            }
        }
    };
}

section!(Common, "common", {
    seed: u64 = 0,
    out: Option<String> = None,
    workers: usize = 0,
});

section!(SimulateSection, "simulate", {
    n: usize = 100,
    d: usize = 1,
    t: f64 = 1.0,
    mode: Mode = Mode::Exact,
    record: Vec<f64> = Vec::new(),
    sampler: Sampler = Sampler::Origin,
    replica: u64 = 0,
    keep_events: bool = true,
});

section!(SolveSection, "solve", {
    d: usize = 1,
    initial: String = "uniform-ball".into(),
    t: f64 = 1.0,
    delta: f64 = 0.01,
    target_gap: Option<f64> = None,
    spacing: f64 = bees::obstacle::DEFAULT_SPACING,
    boundary_tol: f64 = bees::obstacle::DEFAULT_BOUNDARY_TOLERANCE,
});

section!(StationarySection, "stationary", {
    d: usize = 1,
    points: usize = 200,
    check_points: usize = 40,
    fd_step: f64 = 1e-3,
});

section!(HydroSection, "hydro", {
    n: usize = 2000,
    d: usize = 1,
    t: f64 = 1.0,
    sampler: Sampler = Sampler::UniformBall,
    replicas: usize = 10,
    delta: f64 = 0.01,
    spacing: f64 = bees::obstacle::DEFAULT_SPACING,
    tolerance: f64 = 0.05,
    allow_small: bool = false,
    keep_snapshots: bool = false,
});

section!(BoundarySection, "boundary", {
    n: usize = 5000,
    d: usize = 1,
    t: f64 = 2.0,
    eta: f64 = 0.2,
    sampler: Sampler = Sampler::UniformBall,
    replicas: usize = 10,
    delta: f64 = 0.01,
    spacing: f64 = bees::obstacle::DEFAULT_SPACING,
    tolerance: f64 = 0.1,
    keep_snapshots: bool = false,
});

section!(SelectionSection, "selection", {
    n: usize = 2000,
    d: usize = 1,
    t: f64 = 15.0,
    k: f64 = 1.0,
    c: f64 = 1.0,
    sampler: Sampler = Sampler::Origin,
    replicas: usize = 10,
    window: f64 = 1.0,
    sup_tolerance: f64 = 0.07,
    max_tolerance: f64 = 0.15,
    set_tolerance: f64 = 0.05,
    failure_fraction: f64 = 0.1,
    keep_snapshots: bool = false,
});

section!(StationaritySection, "stationarity", {
    n: usize = 1000,
    d: usize = 1,
    burn_in: f64 = 20.0,
    window: f64 = 5.0,
    windows: usize = 4,
    sampler: Sampler = Sampler::Origin,
    tolerance: f64 = 0.05,
});

section!(KernelDumpSection, "kernel-dump", {
    d: usize = 1,
    y: Vec<f64> = vec![0.0, 0.5, 2.0],
    r: Vec<f64> = vec![0.5, 1.0, 2.0],
    t: Vec<f64> = vec![0.1, 1.0, 4.0],
    tolerance: f64 = bees::kernel::KernelContext::DEFAULT_TOLERANCE,
});

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub common: Common,
    pub simulate: SimulateSection,
    pub solve: SolveSection,
    pub stationary: StationarySection,
    pub hydro: HydroSection,
    pub boundary: BoundarySection,
    pub selection: SelectionSection,
    pub stationarity: StationaritySection,
    pub kernel_dump: KernelDumpSection,
}

pub const SECTIONS: &[&str] = &[
    SimulateSection::TITLE,
    SolveSection::TITLE,
    StationarySection::TITLE,
    HydroSection::TITLE,
    BoundarySection::TITLE,
    SelectionSection::TITLE,
    StationaritySection::TITLE,
    KernelDumpSection::TITLE,
];

impl RunConfig {
    /// Sets `key` in `section` (`None` for the shared keys).
    pub fn set(&mut self, section: Option<&str>, key: &str, value: &str) -> Result<(), ConfigError> {
        match section {
            None => self.common.set(key, value),
            Some("simulate") => self.simulate.set(key, value),
            Some("solve") => self.solve.set(key, value),
            Some("stationary") => self.stationary.set(key, value),
            Some("hydro") => self.hydro.set(key, value),
            Some("boundary") => self.boundary.set(key, value),
            Some("selection") => self.selection.set(key, value),
            Some("stationarity") => self.stationarity.set(key, value),
            Some("kernel-dump") => self.kernel_dump.set(key, value),
            Some(other) => Err(ConfigError::UnknownSection {
                line: 0,
                name: other.into(),
            }),
        }
    }

    /// `key=value` applied to `section`; shared keys are accepted too.
    pub fn apply_override(&mut self, section: &str, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(assignment.into()))?;
        let (key, value) = (key.trim(), value.trim());
        if Common::KEYS.contains(&key) {
            self.common.set(key, value)
        } else {
            self.set(Some(section), key, value)
        }
    }

    /// Renders every key. Without `with_runtime`, `workers` and `out` are
    /// left out so artifacts do not depend on where or how wide a run was.
    pub fn render(&self, with_runtime: bool) -> String {
        let mut out = String::new();
        for (k, v) in self.common.entries() {
            if with_runtime || !matches!(k, "workers" | "out") {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        let sections: [(&str, Vec<(&str, String)>); 8] = [
            (SimulateSection::TITLE, self.simulate.entries()),
            (SolveSection::TITLE, self.solve.entries()),
            (StationarySection::TITLE, self.stationary.entries()),
            (HydroSection::TITLE, self.hydro.entries()),
            (BoundarySection::TITLE, self.boundary.entries()),
            (SelectionSection::TITLE, self.selection.entries()),
            (StationaritySection::TITLE, self.stationarity.entries()),
            (KernelDumpSection::TITLE, self.kernel_dump.entries()),
        ];
        for (title, entries) in sections {
            out.push_str(&format!("\n[{title}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    /// Only the shared keys and one section, for per-run artifacts.
    pub fn render_section(&self, section: &str) -> String {
        let full = self.render(false);
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for line in full.lines() {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(name);
                if name == section {
                    out.push_str(&format!("\n{line}\n"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if current.is_none() || current == Some(section) {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    pub fn validate(&self, section: &str) -> Result<(), ConfigError> {
        match section {
            "simulate" => self.simulate.validate(),
            "solve" => self.solve.validate(),
            "stationary" => self.stationary.validate(),
            "hydro" => self.hydro.validate(),
            "boundary" => self.boundary.validate(),
            "selection" => self.selection.validate(),
            "stationarity" => self.stationarity.validate(),
            "kernel-dump" => self.kernel_dump.validate(),
            other => Err(ConfigError::UnknownSection {
                line: 0,
                name: other.into(),
            }),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line: i + 1,
                    name: name.into(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        cfg.set(section.as_deref(), key.trim(), value.trim())?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn at_least_one(section: &str, key: &str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        return Err(constraint(section, key, "must be at least 1, got 0"));
    }
    Ok(())
}

fn positive(section: &str, key: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(constraint(section, key, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn dimension(section: &str, d: usize) -> Result<(), ConfigError> {
    if d == 0 || d > bees::obstacle::MAX_SUPPORTED_DIM {
        return Err(constraint(
            section,
            "d",
            format!("must lie in 1..={}, got {d}", bees::obstacle::MAX_SUPPORTED_DIM),
        ));
    }
    Ok(())
}

impl SimulateSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "n", self.n)?;
        at_least_one(s, "d", self.d)?;
        positive(s, "t", self.t)?;
        if let Mode::FrozenBatch { dt } = self.mode {
            positive(s, "mode", dt)?;
        }
        if self.record.windows(2).any(|w| w[0] >= w[1]) {
            return Err(constraint(s, "record", "snapshot times must be strictly increasing"));
        }
        if self.record.iter().any(|&r| !(r >= 0.0 && r <= self.t)) {
            return Err(constraint(s, "record", format!("snapshot times must lie in [0, t = {}]", self.t)));
        }
        Ok(())
    }

    /// Snapshot schedule; defaults to the final time only.
    pub fn schedule(&self) -> Vec<f64> {
        if self.record.is_empty() {
            vec![self.t]
        } else {
            self.record.clone()
        }
    }
}

impl SolveSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        dimension(s, self.d)?;
        positive(s, "t", self.t)?;
        positive(s, "delta", self.delta)?;
        if let Some(g) = self.target_gap {
            positive(s, "target_gap", g)?;
        }
        positive(s, "spacing", self.spacing)?;
        if !(self.boundary_tol > 0.0 && self.boundary_tol < 1.0) {
            return Err(constraint(s, "boundary_tol", "must lie in (0, 1)"));
        }
        if self.initial.is_empty() {
            return Err(constraint(s, "initial", "name a sampler law or a profile CSV path"));
        }
        Ok(())
    }
}

impl StationarySection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        dimension(s, self.d)?;
        at_least_one(s, "points", self.points)?;
        at_least_one(s, "check_points", self.check_points)?;
        positive(s, "fd_step", self.fd_step)
    }
}

impl HydroSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "n", self.n)?;
        dimension(s, self.d)?;
        positive(s, "t", self.t)?;
        at_least_one(s, "replicas", self.replicas)?;
        positive(s, "delta", self.delta)?;
        positive(s, "spacing", self.spacing)?;
        if self.n < bees::experiments::MIN_HYDRO_POPULATION && !self.allow_small {
            return Err(constraint(
                s,
                "n",
                format!(
                    "must be at least {} unless allow_small = true, got {}",
                    bees::experiments::MIN_HYDRO_POPULATION,
                    self.n
                ),
            ));
        }
        Ok(())
    }
}

impl BoundarySection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "n", self.n)?;
        dimension(s, self.d)?;
        positive(s, "t", self.t)?;
        positive(s, "eta", self.eta)?;
        if self.eta >= self.t {
            return Err(constraint(s, "eta", format!("must be below t = {}, got {}", self.t, self.eta)));
        }
        at_least_one(s, "replicas", self.replicas)?;
        positive(s, "delta", self.delta)?;
        positive(s, "spacing", self.spacing)
    }
}

impl SelectionSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "n", self.n)?;
        dimension(s, self.d)?;
        positive(s, "t", self.t)?;
        positive(s, "k", self.k)?;
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(constraint(s, "c", format!("must lie in (0, 1], got {}", self.c)));
        }
        at_least_one(s, "replicas", self.replicas)?;
        if !(self.window >= 0.0 && self.window.is_finite()) {
            return Err(constraint(s, "window", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

impl StationaritySection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "n", self.n)?;
        dimension(s, self.d)?;
        positive(s, "burn_in", self.burn_in)?;
        positive(s, "window", self.window)?;
        at_least_one(s, "windows", self.windows)
    }
}

impl KernelDumpSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = Self::TITLE;
        at_least_one(s, "d", self.d)?;
        if self.y.iter().any(|&y| !(y >= 0.0 && y.is_finite())) {
            return Err(constraint(s, "y", "values must be finite and nonnegative"));
        }
        if self.r.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(constraint(s, "r", "values must be finite and nonnegative"));
        }
        if self.t.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(constraint(s, "t", "times must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(constraint(s, "tolerance", "must lie in (0, 1e-6]"));
        }
        Ok(())
    }
}
