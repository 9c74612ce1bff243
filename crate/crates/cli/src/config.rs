//! Run configuration: defaults, config files, presets, flag overrides.
//!
//! Precedence, lowest to highest: built-in baseline defaults, then the
//! config file (`--config`), then the preset (`--preset`, which resets the
//! nine model parameters to its tabled values), then individual flags.
//!
//! Config files are either flat `key = value` text with `#` comments or a
//! JSON object with the same keys. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use tapgrowth_core::ensemble::TakeoffQuantity;
use tapgrowth_core::kernel::{AlphaSchedule, KernelParams};
use tapgrowth_core::{MacroParams, YearRange};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Stochastic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Deterministic => write!(f, "deterministic"),
            Mode::Stochastic => write!(f, "stochastic"),
        }
    }
}

/// Everything a subcommand needs, resolved from all sources.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // The nine tabled model parameters.
    pub y0: f64,
    pub m0: f64,
    pub p: f64,
    pub theta: f64,
    pub rho: f64,
    pub l0: f64,
    pub beta: f64,
    pub s: f64,
    pub delta: f64,
    /// Combination-size cutoff of the alpha schedule.
    pub cutoff: u32,
    pub horizon: YearRange,
    pub mode: Mode,
    pub seed: u64,
    pub population: PathBuf,
    pub benchmark: PathBuf,
    pub out: PathBuf,
    // Ensemble / takeoff-rule settings.
    pub runs: usize,
    pub window: u32,
    pub threshold: f64,
    pub quantity: TakeoffQuantity,
    /// Hard cap for ensemble horizon extension; `None` = no extension.
    pub cap: Option<i32>,
    // Calibration settings.
    pub grid: usize,
    pub refine_iters: usize,
    pub free_m0: bool,
    pub allow_divergence: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            y0: 1.82741e11,
            m0: 50.0,
            p: 0.0006,
            theta: 6.0,
            rho: 2.0,
            l0: 1.7e8,
            beta: 1.0 / 3.0,
            s: 0.25,
            delta: 0.06,
            cutoff: 4,
            horizon: YearRange::new(1, 2015),
            mode: Mode::Deterministic,
            seed: 42,
            population: PathBuf::from("data/population.csv"),
            benchmark: PathBuf::from("data/gdp.csv"),
            out: PathBuf::from("out"),
            runs: 100,
            window: 20,
            threshold: 0.01,
            quantity: TakeoffQuantity::Output,
            cap: None,
            grid: 25,
            refine_iters: 200,
            free_m0: false,
            allow_divergence: false,
        }
    }
}

impl RunConfig {
    /// Validated kernel parameters; every violated constraint listed.
    pub fn kernel(&self) -> Result<KernelParams, CliError> {
        KernelParams::new(self.p, AlphaSchedule::new(self.theta, self.rho, self.cutoff))
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn macro_params(&self) -> Result<MacroParams, CliError> {
        MacroParams::new(self.beta, self.s, self.delta).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies one `key = value` assignment; the shared path for config
    /// files, JSON configs and tests.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Config(format!("bad value '{value}' for key '{what}'"));
        match key {
            "y0" => self.y0 = parse_f64(value).ok_or_else(|| bad(key))?,
            "m0" => self.m0 = parse_f64(value).ok_or_else(|| bad(key))?,
            "p" => self.p = parse_f64(value).ok_or_else(|| bad(key))?,
            "theta" => self.theta = parse_f64(value).ok_or_else(|| bad(key))?,
            "rho" => self.rho = parse_f64(value).ok_or_else(|| bad(key))?,
            "l0" => self.l0 = parse_f64(value).ok_or_else(|| bad(key))?,
            "beta" => self.beta = parse_f64(value).ok_or_else(|| bad(key))?,
            "s" => self.s = parse_f64(value).ok_or_else(|| bad(key))?,
            "delta" => self.delta = parse_f64(value).ok_or_else(|| bad(key))?,
            "cutoff" => self.cutoff = value.parse().map_err(|_| bad(key))?,
            "horizon_start" => self.horizon.start = value.parse().map_err(|_| bad(key))?,
            "horizon_end" => self.horizon.end = value.parse().map_err(|_| bad(key))?,
            "mode" => self.mode = parse_mode(value).ok_or_else(|| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "population" => self.population = PathBuf::from(value),
            "benchmark" => self.benchmark = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "runs" => self.runs = value.parse().map_err(|_| bad(key))?,
            "window" => self.window = value.parse().map_err(|_| bad(key))?,
            "threshold" => self.threshold = parse_f64(value).ok_or_else(|| bad(key))?,
            "quantity" => self.quantity = parse_quantity(value).ok_or_else(|| bad(key))?,
            "cap" => self.cap = Some(value.parse().map_err(|_| bad(key))?),
            "grid" => self.grid = value.parse().map_err(|_| bad(key))?,
            "refine_iters" => self.refine_iters = value.parse().map_err(|_| bad(key))?,
            "free_m0" => self.free_m0 = value.parse().map_err(|_| bad(key))?,
            "allow_divergence" => self.allow_divergence = value.parse().map_err(|_| bad(key))?,
            other => {
                return Err(CliError::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Loads a config file over the current values. Flat `key = value` or a
    /// JSON object, chosen by the first non-blank character.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
            for (key, value) in &map {
                let rendered = match value {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    other => {
                        return Err(CliError::Config(format!(
                            "config key '{key}' has unsupported JSON value {other}"
                        )))
                    }
                };
                self.set(key, &rendered)?;
            }
        } else {
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "config {} line {}: expected 'key = value'",
                        path.display(),
                        idx + 1
                    ))
                })?;
                self.set(key.trim(), value.trim())?;
            }
        }
        Ok(())
    }

    /// Applies a named preset: the three tabled parameterizations. Resets
    /// all nine model parameters, then pins `(m0, delta)`.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        let (m0, delta) = match name {
            "m50-d006" => (50.0, 0.06),
            "m50-d0" => (50.0, 0.0),
            "m88-d006" => (88.0, 0.06),
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset '{other}' (expected m50-d006, m50-d0 or m88-d006)"
                )))
            }
        };
        let base = RunConfig::default();
        self.y0 = base.y0;
        self.m0 = m0;
        self.p = base.p;
        self.theta = base.theta;
        self.rho = base.rho;
        self.l0 = base.l0;
        self.beta = base.beta;
        self.s = base.s;
        self.delta = delta;
        self.cutoff = base.cutoff;
        Ok(())
    }
}

fn parse_f64(value: &str) -> Option<f64> {
    let v: f64 = value.parse().ok()?;
    v.is_finite().then_some(v)
}

pub fn parse_mode(value: &str) -> Option<Mode> {
    match value.to_ascii_lowercase().as_str() {
        "deterministic" | "det" => Some(Mode::Deterministic),
        "stochastic" | "stoch" => Some(Mode::Stochastic),
        _ => None,
    }
}

pub fn parse_quantity(value: &str) -> Option<TakeoffQuantity> {
    match value.to_ascii_lowercase().as_str() {
        "y" | "output" => Some(TakeoffQuantity::Output),
        "m" | "cambiodiversity" => Some(TakeoffQuantity::Cambiodiversity),
        _ => None,
    }
}

pub fn quantity_name(q: TakeoffQuantity) -> &'static str {
    match q {
        TakeoffQuantity::Output => "Y",
        TakeoffQuantity::Cambiodiversity => "M",
    }
}
