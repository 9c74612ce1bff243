//! Stable JSON output schemas. Field names and order are part of the
//! interface; every document carries `schema_version`. Infinite losses
//! (divergence sentinels) serialize as `null` next to an explicit
//! `diverged` flag.

use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct HorizonJson {
    pub start: i32,
    pub end: i32,
}

#[derive(Serialize)]
pub struct ParamsJson {
    pub y0: f64,
    pub m0: f64,
    pub p: f64,
    pub theta: f64,
    pub rho: f64,
    pub cutoff: u32,
    pub l0: f64,
    pub beta: f64,
    pub s: f64,
    pub delta: f64,
}

impl ParamsJson {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            y0: config.y0,
            m0: config.m0,
            p: config.p,
            theta: config.theta,
            rho: config.rho,
            cutoff: config.cutoff,
            l0: config.l0,
            beta: config.beta,
            s: config.s,
            delta: config.delta,
        }
    }
}

#[derive(Serialize)]
pub struct StateJson {
    pub year: i32,
    pub m: f64,
    pub k: f64,
    pub l: f64,
    pub y: f64,
}

#[derive(Serialize)]
pub struct SummaryJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub horizon: HorizonJson,
    pub params: ParamsJson,
    pub final_state: StateJson,
    pub takeoff_year: Option<i32>,
    pub diverged_at: Option<i32>,
    pub blowup_estimate_years: Option<f64>,
}

#[derive(Serialize)]
pub struct FreeParamJson {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Serialize)]
pub struct BestParamsJson {
    pub p: f64,
    pub m0: f64,
}

#[derive(Serialize)]
pub struct ReferenceJson {
    pub name: String,
    pub p: f64,
    pub m0: f64,
    pub delta: f64,
    /// `null` when the parameterization diverged (infinite loss sentinel).
    pub loss: Option<f64>,
    pub diverged: bool,
}

#[derive(Serialize)]
pub struct CalibrationJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub objective: &'static str,
    pub horizon: HorizonJson,
    pub free: Vec<FreeParamJson>,
    pub grid: usize,
    pub refine_iters: usize,
    pub best: BestParamsJson,
    /// `null` when even the best point diverged.
    pub loss: Option<f64>,
    pub evaluations: usize,
    pub diverged_count: usize,
    pub reference: Vec<ReferenceJson>,
}

#[derive(Serialize)]
pub struct RuleJson {
    pub window: u32,
    pub threshold: f64,
    pub quantity: &'static str,
}

#[derive(Serialize)]
pub struct StatsJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub runs: usize,
    pub master_seed: u64,
    pub horizon: HorizonJson,
    pub cap: i32,
    pub rule: RuleJson,
    pub reached: usize,
    pub reached_fraction: f64,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q05: Option<f64>,
    pub q95: Option<f64>,
}

/// Finite value or `None` (serialized as `null`) for sentinels.
pub fn finite_or_null(value: f64) -> Option<f64> {
    value.is_finite().then_some(value)
}

/// Pretty JSON with a trailing newline; byte-stable for identical inputs.
pub fn render<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("schema types always serialize");
    text.push('\n');
    text
}
