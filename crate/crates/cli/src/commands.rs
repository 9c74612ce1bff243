//! The four subcommands: simulate, calibrate, ensemble, analyze.

use std::fmt::Write as _;
use std::path::Path;

use tapgrowth_core::calibrate::{self, CalibError, CalibrationSpec, FreeParam};
use tapgrowth_core::economy::{simulate, EconomyState, SimError, SimMode, Trajectory};
use tapgrowth_core::ensemble::{run_ensemble, takeoff_time, EnsembleConfig, TakeoffRule};
use tapgrowth_core::kernel::blowup_estimate;
use tapgrowth_core::series::{load_series_file, AnnualSeries};
use tapgrowth_core::YearRange;

use crate::config::{quantity_name, Mode, RunConfig};
use crate::summary::{self, finite_or_null};
use crate::{svg, trajectory_io, CliError};

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Series(e) => CliError::Data(e.to_string()),
            SimError::Config(msg) => CliError::Config(msg),
            SimError::NotReachable(msg) => CliError::Data(msg),
        }
    }
}

impl From<CalibError> for CliError {
    fn from(err: CalibError) -> Self {
        match err {
            CalibError::Sim(e) => e.into(),
            CalibError::NoOverlap => CliError::Data(err.to_string()),
            CalibError::Spec(msg) => CliError::Config(msg),
        }
    }
}

fn load_population(config: &RunConfig) -> Result<AnnualSeries, CliError> {
    load_series_file(&config.population).map_err(|e| {
        CliError::Data(format!(
            "population {}: {e}",
            config.population.display()
        ))
    })
}

fn load_benchmark(config: &RunConfig) -> Result<AnnualSeries, CliError> {
    load_series_file(&config.benchmark)
        .map_err(|e| CliError::Data(format!("benchmark {}: {e}", config.benchmark.display())))
}

fn initial_state(config: &RunConfig) -> Result<EconomyState, CliError> {
    EconomyState::anchored(
        config.horizon.start,
        config.m0,
        config.y0,
        config.l0,
        config.beta,
    )
    .map_err(CliError::from)
}

fn takeoff_rule(config: &RunConfig) -> TakeoffRule {
    TakeoffRule {
        window: config.window,
        threshold: config.threshold,
        quantity: config.quantity,
    }
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// `simulate`: one trajectory -> trajectory.csv, summary.json, plot.svg.
pub fn cmd_simulate(config: &RunConfig) -> Result<(), CliError> {
    let kernel = config.kernel()?;
    config.macro_params()?;
    let population = load_population(config)?;
    let initial = initial_state(config)?;
    let mode = match config.mode {
        Mode::Deterministic => SimMode::Deterministic,
        Mode::Stochastic => SimMode::Stochastic { seed: config.seed },
    };
    let trajectory = simulate(
        &initial,
        &kernel,
        &config.macro_params()?,
        &population,
        config.horizon.end,
        mode,
    )?;
    if let Some(year) = trajectory.divergence {
        if !config.allow_divergence {
            return Err(CliError::Divergence { year });
        }
    }

    let takeoff = takeoff_time(&trajectory, &takeoff_rule(config));
    let last = trajectory.last();
    let summary = summary::SummaryJson {
        schema_version: summary::SCHEMA_VERSION,
        command: "simulate",
        mode: config.mode.to_string(),
        seed: match config.mode {
            Mode::Stochastic => Some(config.seed),
            Mode::Deterministic => None,
        },
        horizon: summary::HorizonJson {
            start: config.horizon.start,
            end: config.horizon.end,
        },
        params: summary::ParamsJson::from_config(config),
        final_state: summary::StateJson {
            year: last.year,
            m: last.m,
            k: last.k,
            l: last.l,
            y: last.y,
        },
        takeoff_year: takeoff,
        diverged_at: trajectory.divergence,
        blowup_estimate_years: blowup_estimate(last.m, &kernel),
    };

    let years: Vec<(f64, f64)> = trajectory
        .states
        .iter()
        .map(|s| (f64::from(s.year), s.y))
        .collect();
    let ms: Vec<(f64, f64)> = trajectory
        .states
        .iter()
        .map(|s| (f64::from(s.year), s.m))
        .collect();
    let plot = svg::two_panel_plot(
        "world output Y and cambiodiversity M",
        &[
            svg::Series {
                label: "Y",
                color: "steelblue",
                points: &years,
            },
            svg::Series {
                label: "M",
                color: "darkorange",
                points: &ms,
            },
        ],
    );

    write_output(&config.out, "trajectory.csv", &trajectory_io::to_csv(&trajectory))?;
    write_output(&config.out, "summary.json", &summary::render(&summary))?;
    write_output(&config.out, "plot.svg", &plot)?;
    Ok(())
}

fn calibration_spec(config: &RunConfig) -> Result<CalibrationSpec, CliError> {
    let mut free = vec![{
        let (lo, hi) = FreeParam::P.default_bounds();
        (FreeParam::P, lo, hi)
    }];
    if config.free_m0 {
        let (lo, hi) = FreeParam::M0.default_bounds();
        free.push((FreeParam::M0, lo, hi));
    }
    Ok(CalibrationSpec {
        free,
        kernel: config.kernel()?,
        macro_params: config.macro_params()?,
        y0: config.y0,
        m0: config.m0,
        l0: config.l0,
        horizon: config.horizon,
        population: load_population(config)?,
        benchmark: load_benchmark(config)?,
        grid: config.grid,
        refine_iters: config.refine_iters,
    })
}

/// `calibrate`: fit free parameters -> calibration.json, trace.csv.
pub fn cmd_calibrate(config: &RunConfig) -> Result<(), CliError> {
    let spec = calibration_spec(config)?;
    let result = calibrate::calibrate(&spec)?;
    let (best_kernel, best_m0) = spec.resolve(&result.best);

    let json = summary::CalibrationJson {
        schema_version: summary::SCHEMA_VERSION,
        command: "calibrate",
        objective: "log_rmse",
        horizon: summary::HorizonJson {
            start: config.horizon.start,
            end: config.horizon.end,
        },
        free: spec
            .free
            .iter()
            .map(|&(param, lo, hi)| summary::FreeParamJson {
                name: param.name(),
                lo,
                hi,
            })
            .collect(),
        grid: config.grid,
        refine_iters: config.refine_iters,
        best: summary::BestParamsJson {
            p: best_kernel.p,
            m0: best_m0,
        },
        loss: finite_or_null(result.loss),
        evaluations: result.trace.len(),
        diverged_count: result.diverged_count,
        reference: result
            .reference
            .iter()
            .map(|r| summary::ReferenceJson {
                name: r.name.clone(),
                p: r.p,
                m0: r.m0,
                delta: r.delta,
                loss: finite_or_null(r.loss),
                diverged: r.diverged,
            })
            .collect(),
    };

    let mut trace = String::from("index");
    for &(param, _, _) in &spec.free {
        let _ = write!(trace, ",{}", param.name());
    }
    trace.push_str(",loss\n");
    for (i, (values, loss)) in result.trace.iter().enumerate() {
        let _ = write!(trace, "{i}");
        for v in values {
            let _ = write!(trace, ",{v}");
        }
        let _ = writeln!(trace, ",{loss}");
    }

    write_output(&config.out, "calibration.json", &summary::render(&json))?;
    write_output(&config.out, "trace.csv", &trace)?;
    Ok(())
}

/// `ensemble`: Monte Carlo takeoff times -> hitting_times.csv, stats.json.
pub fn cmd_ensemble(config: &RunConfig) -> Result<(), CliError> {
    if config.mode != Mode::Stochastic {
        return Err(CliError::Config(
            "ensemble needs --mode stochastic (takeoff times are a property of the sampled model)"
                .into(),
        ));
    }
    let cap = config.cap.unwrap_or(config.horizon.end);
    let ensemble = EnsembleConfig {
        runs: config.runs,
        master_seed: config.seed,
        horizon: config.horizon,
        hard_cap: cap,
        takeoff: takeoff_rule(config),
        kernel: config.kernel()?,
        macro_params: config.macro_params()?,
        initial: initial_state(config)?,
        population: load_population(config)?,
    };
    let stats = run_ensemble(&ensemble)?;

    let mut csv = String::from("run,seed,takeoff_year\n");
    for (i, (time, seed)) in stats.times.iter().zip(&stats.seeds).enumerate() {
        match time {
            Some(t) => {
                let _ = writeln!(csv, "{i},{seed},{t}");
            }
            None => {
                let _ = writeln!(csv, "{i},{seed},");
            }
        }
    }

    let json = summary::StatsJson {
        schema_version: summary::SCHEMA_VERSION,
        command: "ensemble",
        runs: config.runs,
        master_seed: config.seed,
        horizon: summary::HorizonJson {
            start: config.horizon.start,
            end: config.horizon.end,
        },
        cap,
        rule: summary::RuleJson {
            window: config.window,
            threshold: config.threshold,
            quantity: quantity_name(config.quantity),
        },
        reached: stats.reached,
        reached_fraction: stats.reached_fraction,
        mean: stats.mean,
        median: stats.median,
        q05: stats.q05,
        q95: stats.q95,
    };

    write_output(&config.out, "hitting_times.csv", &csv)?;
    write_output(&config.out, "stats.json", &summary::render(&json))?;
    Ok(())
}

/// `analyze`: report on an existing trajectory CSV.
pub fn cmd_analyze(config: &RunConfig, path: &Path) -> Result<(), CliError> {
    let trajectory = trajectory_io::read_file(path)?;
    let report = analyze_report(config, &trajectory)?;
    print!("{report}");
    Ok(())
}

fn analyze_report(config: &RunConfig, trajectory: &Trajectory) -> Result<String, CliError> {
    let kernel = config.kernel()?;
    let rule = takeoff_rule(config);
    let first = trajectory.first();
    let last = trajectory.last();
    let mut out = String::new();

    let _ = writeln!(
        out,
        "trajectory: years {}..{} ({} states)",
        first.year,
        last.year,
        trajectory.states.len()
    );

    match takeoff_time(trajectory, &rule) {
        Some(year) => {
            let _ = writeln!(
                out,
                "takeoff (window {}, threshold {}, quantity {}): year {year}",
                rule.window,
                rule.threshold,
                quantity_name(rule.quantity)
            );
        }
        None => {
            let _ = writeln!(
                out,
                "takeoff (window {}, threshold {}, quantity {}): not reached",
                rule.window,
                rule.threshold,
                quantity_name(rule.quantity)
            );
        }
    }

    let _ = writeln!(out, "doubling time of Y by era:");
    for (a, b) in quarter_eras(first.year, last.year) {
        let ya = trajectory.at_year(a).expect("era bounds inside trajectory").y;
        let yb = trajectory.at_year(b).expect("era bounds inside trajectory").y;
        let growth = (yb.ln() - ya.ln()) / f64::from(b - a);
        if growth > 0.0 {
            let _ = writeln!(
                out,
                "  {a}..{b}: {:.1} years",
                std::f64::consts::LN_2 / growth
            );
        } else {
            let _ = writeln!(out, "  {a}..{b}: n/a (no growth)");
        }
    }

    match blowup_estimate(last.m, &kernel) {
        Some(t) => {
            let _ = writeln!(
                out,
                "blow-up estimate from final state (M = {}): {t:.6} years",
                last.m
            );
        }
        None => {
            let _ = writeln!(
                out,
                "blow-up estimate from final state: none (no quartic term)"
            );
        }
    }

    match trajectory
        .states
        .windows(2)
        .find(|w| w[1].k < w[0].k)
        .map(|w| w[1].year)
    {
        Some(year) => {
            let _ = writeln!(out, "capital stock: shrank first at year {year}");
        }
        None => {
            let _ = writeln!(out, "capital stock: never shrank");
        }
    }
    Ok(out)
}

/// Four consecutive eras of (almost) equal length spanning the trajectory.
fn quarter_eras(first: i32, last: i32) -> Vec<(i32, i32)> {
    let span = i64::from(last) - i64::from(first);
    if span < 4 {
        return vec![(first, last)];
    }
    (0..4)
        .map(|q| {
            let a = first + (span * q / 4) as i32;
            let b = first + (span * (q + 1) / 4) as i32;
            (a, b)
        })
        .collect()
}
