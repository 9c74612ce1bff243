//! Macro coupling: Cobb-Douglas output, capital accumulation, trajectories.
//!
//! Output is `Y = M * K^beta * L^(1-beta)` and capital follows
//! `K' = s*Y + (1-delta)*K`. Population `L` is exogenous, looked up from an
//! [`AnnualSeries`]. Within a simulated year the update order is: advance
//! `M` by the innovation kernel, advance `K` from last year's output, look
//! up `L`, then recompute `Y`.
//!
//! Blow-up is expected model behavior: when any value leaves f64 range the
//! trajectory is truncated and carries a divergence marker instead of
//! erroring out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kernel::{expected_increment, stochastic_increment, KernelParams};
use crate::series::{AnnualSeries, SeriesError, YearRange};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no initial cambiodiversity at the start year reaches the anchor: {0}")]
    NotReachable(String),
}

/// Capital share, saving rate, depreciation rate of the accumulation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroParams {
    pub beta: f64,
    pub s: f64,
    pub delta: f64,
}

impl MacroParams {
    pub fn new(beta: f64, s: f64, delta: f64) -> Result<Self, SimError> {
        let mut violations = Vec::new();
        if !(beta > 0.0 && beta < 1.0) {
            violations.push(format!("beta must lie in (0,1), got {beta}"));
        }
        if !(s > 0.0 && s < 1.0) {
            violations.push(format!("s must lie in (0,1), got {s}"));
        }
        if !(delta >= 0.0 && delta < 1.0) {
            violations.push(format!("delta must lie in [0,1), got {delta}"));
        }
        if violations.is_empty() {
            Ok(Self { beta, s, delta })
        } else {
            Err(SimError::Config(violations.join("; ")))
        }
    }

    /// Table-style baseline: beta = 1/3, s = 0.25, delta = 0.06.
    pub fn baseline() -> Self {
        Self::new(1.0 / 3.0, 0.25, 0.06).expect("baseline is valid")
    }
}

/// One period's snapshot. Year 0 is 1 BC (astronomical numbering).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomyState {
    pub year: i32,
    pub m: f64,
    pub k: f64,
    pub l: f64,
    pub y: f64,
}

impl EconomyState {
    /// Builds a state from production inputs; `y` is computed from the
    /// production function so the output identity holds exactly.
    pub fn from_production(
        year: i32,
        m: f64,
        k: f64,
        l: f64,
        beta: f64,
    ) -> Result<Self, SimError> {
        let y = output(m, k, l, beta);
        let state = Self { year, m, k, l, y };
        if state.is_finite() && m >= 0.0 && k > 0.0 && l > 0.0 && y > 0.0 {
            Ok(state)
        } else {
            Err(SimError::Config(format!(
                "non-finite or non-positive initial state: {state:?}"
            )))
        }
    }

    /// Builds the initial state from the observed anchors `(y0, m0, l0)` by
    /// backing out the unique capital stock consistent with them.
    pub fn anchored(year: i32, m0: f64, y0: f64, l0: f64, beta: f64) -> Result<Self, SimError> {
        let k0 = backout_initial_capital(y0, m0, l0, beta);
        Self::from_production(year, m0, k0, l0, beta)
    }

    fn is_finite(&self) -> bool {
        self.m.is_finite() && self.k.is_finite() && self.l.is_finite() && self.y.is_finite()
    }
}

/// Cobb-Douglas production: `M * K^beta * L^(1-beta)`.
pub fn output(m: f64, k: f64, l: f64, beta: f64) -> f64 {
    m * k.powf(beta) * l.powf(1.0 - beta)
}

/// Capital accumulation: `s*y + (1-delta)*k`.
pub fn capital_step(y: f64, k: f64, macro_params: &MacroParams) -> f64 {
    macro_params.s * y + (1.0 - macro_params.delta) * k
}

/// The unique `K` satisfying the production function for given `(y0, m0, l0)`:
/// `(y0 / (m0 * l0^(1-beta)))^(1/beta)`.
pub fn backout_initial_capital(y0: f64, m0: f64, l0: f64, beta: f64) -> f64 {
    (y0 / (m0 * l0.powf(1.0 - beta))).powf(beta.recip())
}

/// How cambiodiversity advances each year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Expected-value recurrence; M real-valued; bit-reproducible.
    Deterministic,
    /// Sampled increments; M integer-valued; reproducible given the seed.
    Stochastic { seed: u64 },
}

/// An ordered run of yearly states, possibly truncated by blow-up.
///
/// `divergence = Some(t)` means every value through year `t - 1` is finite
/// and stored, and year `t` left f64 range.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<EconomyState>,
    pub divergence: Option<i32>,
    pub mode: SimMode,
}

impl Trajectory {
    pub fn first(&self) -> &EconomyState {
        &self.states[0]
    }

    pub fn last(&self) -> &EconomyState {
        self.states.last().expect("trajectory is never empty")
    }

    /// State at `year`, if stored (years are consecutive).
    pub fn at_year(&self, year: i32) -> Option<&EconomyState> {
        let first = self.states.first()?.year;
        if year < first {
            return None;
        }
        self.states.get((year - first) as usize)
    }
}

/// Runs the coupled recurrence from `initial` through `end_year` inclusive.
///
/// The population series must cover the horizon. Kernel parameters are
/// trusted as given (validate at the boundary); degenerate setups such as
/// `p = 0` simply freeze `M`.
pub fn simulate(
    initial: &EconomyState,
    kernel: &KernelParams,
    macro_params: &MacroParams,
    population: &AnnualSeries,
    end_year: i32,
    mode: SimMode,
) -> Result<Trajectory, SimError> {
    if end_year < initial.year {
        return Err(SimError::Config(format!(
            "end year {end_year} precedes initial year {}",
            initial.year
        )));
    }
    population.validate_coverage(YearRange::new(initial.year, end_year))?;

    let mut rng = match mode {
        SimMode::Deterministic => None,
        SimMode::Stochastic { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut m_int: u64 = if let SimMode::Stochastic { .. } = mode {
        if initial.m.fract() != 0.0 || initial.m < 0.0 || initial.m > 2f64.powi(53) {
            return Err(SimError::Config(format!(
                "stochastic mode needs a non-negative integer initial M, got {}",
                initial.m
            )));
        }
        initial.m as u64
    } else {
        0
    };

    let mut states = Vec::with_capacity((end_year - initial.year + 1) as usize);
    states.push(*initial);
    let mut divergence = None;

    let mut current = *initial;
    for year in initial.year..end_year {
        let next_year = year + 1;

        // 1. advance M
        let next_m = match &mut rng {
            None => match expected_increment(current.m, kernel) {
                Ok(dm) => current.m + dm,
                Err(_) => f64::INFINITY,
            },
            Some(rng) => match stochastic_increment(m_int, kernel, rng) {
                Ok(dm) => match m_int.checked_add(dm) {
                    Some(next) => {
                        m_int = next;
                        next as f64
                    }
                    None => f64::INFINITY,
                },
                Err(_) => f64::INFINITY,
            },
        };
        // 2. advance K from last year's output
        let next_k = capital_step(current.y, current.k, macro_params);
        // 3. exogenous population
        let next_l = population.interpolate(next_year)?;
        // 4. output
        let next_y = output(next_m, next_k, next_l, macro_params.beta);

        if !(next_m.is_finite() && next_k.is_finite() && next_y.is_finite()) {
            divergence = Some(next_year);
            break;
        }
        current = EconomyState {
            year: next_year,
            m: next_m,
            k: next_k,
            l: next_l,
            y: next_y,
        };
        states.push(current);
    }

    Ok(Trajectory {
        states,
        divergence,
        mode,
    })
}

/// Result of extending a trajectory backward from an anchor state.
#[derive(Debug, Clone)]
pub struct BackwardExtension {
    /// Simulated states from the start year through the anchor year.
    pub trajectory: Trajectory,
    /// Cambiodiversity recovered at the start year.
    pub recovered_m: f64,
    /// Relative gap between the simulated M at the anchor year and the
    /// anchor's M (the bisection residual).
    pub residual: f64,
    /// First year at which capital shrank inside the extension, if any —
    /// the coherence check for pre-anchor validity.
    pub capital_shrank: Option<i32>,
}

/// Relative tolerance for matching the anchor's M.
const BACKWARD_TOL: f64 = 1e-6;

/// Finds the cambiodiversity at `start_year` whose forward evolution reaches
/// the anchor's M at the anchor year, then rebuilds the full economy over
/// the extension.
///
/// The M recurrence is autonomous and monotone in its start value, so a
/// bisection on `[1, anchor.m]` suffices. Capital at the start year is
/// backed out of the production function under flat per-capita output — the
/// stylized pre-takeoff fact that incomes hovered near subsistence — so the
/// extension's capital path is a diagnostic, not a fitted quantity;
/// `capital_shrank` reports where it contracts.
pub fn extend_backward(
    anchor: &EconomyState,
    kernel: &KernelParams,
    macro_params: &MacroParams,
    population: &AnnualSeries,
    start_year: i32,
) -> Result<BackwardExtension, SimError> {
    if start_year > anchor.year {
        return Err(SimError::Config(format!(
            "start year {start_year} is after the anchor year {}",
            anchor.year
        )));
    }
    population.validate_coverage(YearRange::new(start_year, anchor.year))?;

    if start_year == anchor.year {
        return Ok(BackwardExtension {
            trajectory: Trajectory {
                states: vec![*anchor],
                divergence: None,
                mode: SimMode::Deterministic,
            },
            recovered_m: anchor.m,
            residual: 0.0,
            capital_shrank: None,
        });
    }

    let steps = (anchor.year - start_year) as usize;
    let forward_m = |m_start: f64| -> f64 {
        let mut m = m_start;
        for _ in 0..steps {
            match expected_increment(m, kernel) {
                Ok(dm) => m += dm,
                Err(_) => return f64::INFINITY,
            }
        }
        m
    };

    let target = anchor.m;
    if forward_m(1.0) > target * (1.0 + BACKWARD_TOL) {
        return Err(SimError::NotReachable(format!(
            "M = 1 at year {start_year} already exceeds the anchor M = {target} at year {}",
            anchor.year
        )));
    }

    let mut lo = 1.0f64;
    let mut hi = target.max(1.0);
    let mut mid = lo;
    let mut residual = (forward_m(lo) - target).abs() / target;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let reached = forward_m(mid);
        residual = (reached - target).abs() / target;
        if residual <= BACKWARD_TOL {
            break;
        }
        if reached < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi {
            break;
        }
    }
    let recovered_m = mid;

    // Rebuild the economy over the extension: capital at the start year is
    // backed out under per-capita output equal to the anchor's.
    let l_start = population.interpolate(start_year)?;
    let y_start = anchor.y * l_start / anchor.l;
    let initial = EconomyState::anchored(
        start_year,
        recovered_m,
        y_start,
        l_start,
        macro_params.beta,
    )?;
    let trajectory = simulate(
        &initial,
        kernel,
        macro_params,
        population,
        anchor.year,
        SimMode::Deterministic,
    )?;

    let capital_shrank = trajectory
        .states
        .windows(2)
        .find(|w| w[1].k < w[0].k)
        .map(|w| w[1].year);

    Ok(BackwardExtension {
        trajectory,
        recovered_m,
        residual,
        capital_shrank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::AlphaSchedule;
    use proptest::prelude::*;

    fn flat_population(value: f64, start: i32, end: i32) -> AnnualSeries {
        AnnualSeries::new("population", "persons", vec![(start, value), (end, value)]).unwrap()
    }

    fn kremer_like() -> AnnualSeries {
        AnnualSeries::new(
            "population",
            "persons",
            vec![
                (-1000, 5.0e7),
                (-500, 1.0e8),
                (1, 1.7e8),
                (1000, 2.65e8),
                (2015, 7.38e9),
            ],
        )
        .unwrap()
    }

    const Y0: f64 = 1.82741e11;
    const L0: f64 = 1.7e8;

    #[test]
    fn output_identity_case() {
        assert_eq!(output(1.0, 1.0, 1.0, 1.0 / 3.0), 1.0);
    }

    #[test]
    fn backout_round_trips_table_values() {
        let beta = 1.0 / 3.0;
        let k0 = backout_initial_capital(Y0, 50.0, L0, beta);
        assert!((k0 - 1.689274147292739e12).abs() / k0 < 1e-12);
        // Matches the production function exactly on the way back.
        let y = output(50.0, k0, L0, beta);
        assert!((y - Y0).abs() / Y0 < 1e-12);

        let k0_88 = backout_initial_capital(Y0, 88.0, L0, beta);
        assert!((k0_88 - 3.0985758536167652e11).abs() / k0_88 < 1e-12);

        assert!((backout_initial_capital(1.0, 1.0, 1.0, 0.42) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capital_step_hand_values() {
        let mp = MacroParams::baseline();
        let k0 = backout_initial_capital(Y0, 50.0, L0, mp.beta);
        let k1 = capital_step(Y0, k0, &mp);
        assert!((k1 - 1.633602948455175e12).abs() / k1 < 1e-12);
        assert!(k1 < k0, "capital shrinks in the M0=50, delta=0.06 variant");

        let no_dep = MacroParams::new(1.0 / 3.0, 0.25, 0.0).unwrap();
        assert!(capital_step(123.0, 7.0, &no_dep) > 7.0);
        assert!((capital_step(0.0, 10.0, &mp) - 9.4).abs() < 1e-12);
    }

    #[test]
    fn macro_params_bounds() {
        assert!(MacroParams::new(0.0, 0.25, 0.06).is_err());
        assert!(MacroParams::new(1.0 / 3.0, 1.0, 0.06).is_err());
        assert!(MacroParams::new(1.0 / 3.0, 0.25, 1.0).is_err());
        assert!(MacroParams::new(1.0 / 3.0, 0.25, 0.0).is_ok());
    }

    #[test]
    fn m88_first_capital_step_grows() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 88.0, Y0, L0, mp.beta).unwrap();
        let traj = simulate(&initial, &kernel, &mp, &kremer_like(), 2, SimMode::Deterministic)
            .unwrap();
        assert!(traj.states[1].k > traj.states[0].k);
    }

    #[test]
    fn production_identity_holds_at_every_state() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let traj = simulate(&initial, &kernel, &mp, &kremer_like(), 40, SimMode::Deterministic)
            .unwrap();
        for s in &traj.states {
            assert_eq!(s.y, output(s.m, s.k, s.l, mp.beta), "year {}", s.year);
        }
    }

    #[test]
    fn frozen_innovation_approaches_solow_fixed_point() {
        // With p = 0 and constant L the output map is constant in time, so
        // the capital difference changes sign at most once.
        let kernel = KernelParams::new_unchecked(0.0, AlphaSchedule::baseline());
        let mp = MacroParams::baseline();
        let pop = flat_population(L0, 1, 3000);
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let traj =
            simulate(&initial, &kernel, &mp, &pop, 2000, SimMode::Deterministic).unwrap();
        let diffs: Vec<f64> = traj.states.windows(2).map(|w| w[1].k - w[0].k).collect();
        let sign_changes = diffs
            .windows(2)
            .filter(|d| (d[0] > 0.0) != (d[1] > 0.0) && d[0] != 0.0 && d[1] != 0.0)
            .count();
        assert!(sign_changes <= 1, "{sign_changes} sign changes");
        // And M never moved.
        assert_eq!(traj.last().m, 50.0);
        // Capital settles near the fixed point K = ((s/delta) M)^(3/2) L.
        let k_star = (mp.s * 50.0 / mp.delta).powf(1.5) * L0;
        assert!((traj.last().k - k_star).abs() / k_star < 1e-3);
    }

    #[test]
    fn zero_depreciation_gives_strictly_increasing_capital() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::new(1.0 / 3.0, 0.25, 0.0).unwrap();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let traj = simulate(&initial, &kernel, &mp, &kremer_like(), 60, SimMode::Deterministic)
            .unwrap();
        assert!(traj.states.windows(2).all(|w| w[1].k > w[0].k));
    }

    #[test]
    fn cambiodiversity_never_decreases() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        for mode in [SimMode::Deterministic, SimMode::Stochastic { seed: 9 }] {
            let traj = simulate(&initial, &kernel, &mp, &kremer_like(), 50, mode).unwrap();
            assert!(traj.states.windows(2).all(|w| w[1].m >= w[0].m));
        }
    }

    #[test]
    fn deterministic_simulation_is_bit_reproducible() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let a = simulate(&initial, &kernel, &mp, &kremer_like(), 61, SimMode::Deterministic)
            .unwrap();
        let b = simulate(&initial, &kernel, &mp, &kremer_like(), 61, SimMode::Deterministic)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stochastic_same_seed_same_run() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let mode = SimMode::Stochastic { seed: 1234 };
        let a = simulate(&initial, &kernel, &mp, &kremer_like(), 80, mode).unwrap();
        let b = simulate(&initial, &kernel, &mp, &kremer_like(), 80, mode).unwrap();
        assert_eq!(a, b);
        let c = simulate(
            &initial,
            &kernel,
            &mp,
            &kremer_like(),
            80,
            SimMode::Stochastic { seed: 1235 },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn baseline_blowup_is_marked_not_an_error() {
        // Table-style P from M0 = 50 blows up around year 62; the run must
        // finish with a divergence marker and a truncated state list.
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let pop = flat_population(L0, 1, 3000);
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let traj =
            simulate(&initial, &kernel, &mp, &pop, 2015, SimMode::Deterministic).unwrap();
        let t = traj.divergence.expect("baseline blows up inside 2015 years");
        assert!(t > 30 && t < 200, "divergence at {t}");
        assert_eq!(traj.last().year, t - 1);
        assert!(traj.states.iter().all(|s| s.y.is_finite()));
    }

    #[test]
    fn coverage_gap_is_a_config_error() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let initial = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let narrow = flat_population(L0, 1, 100);
        assert!(matches!(
            simulate(&initial, &kernel, &mp, &narrow, 200, SimMode::Deterministic),
            Err(SimError::Series(SeriesError::Coverage { .. }))
        ));
    }

    #[test]
    fn backward_identity_at_anchor_year() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let anchor = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let ext = extend_backward(&anchor, &kernel, &mp, &kremer_like(), 1).unwrap();
        assert_eq!(ext.trajectory.states, vec![anchor]);
        assert_eq!(ext.recovered_m, 50.0);
    }

    #[test]
    fn backward_reaches_anchor_m_within_tolerance() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let anchor = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let ext = extend_backward(&anchor, &kernel, &mp, &kremer_like(), -350).unwrap();
        assert!(ext.residual <= 1e-6, "residual {}", ext.residual);
        assert_eq!(ext.trajectory.first().year, -350);
        assert_eq!(ext.trajectory.last().year, 1);
        let reached = ext.trajectory.last().m;
        assert!((reached - 50.0).abs() / 50.0 <= 1e-6);
        assert!(ext.recovered_m < 50.0);
    }

    #[test]
    fn backward_monotone_in_anchor_m() {
        let kernel = KernelParams::baseline();
        let mp = MacroParams::baseline();
        let pop = kremer_like();
        let small = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        let large = EconomyState::anchored(1, 88.0, Y0, L0, mp.beta).unwrap();
        let m_small = extend_backward(&small, &kernel, &mp, &pop, -350)
            .unwrap()
            .recovered_m;
        let m_large = extend_backward(&large, &kernel, &mp, &pop, -350)
            .unwrap()
            .recovered_m;
        assert!(m_large > m_small);
    }

    #[test]
    fn backward_not_reachable_when_unit_m_overshoots() {
        // A huge p makes even M = 1 explode past the anchor over 300 years.
        let kernel = KernelParams::new(0.9, AlphaSchedule::new(1.0, 1.0, 4)).unwrap();
        let mp = MacroParams::baseline();
        let anchor = EconomyState::anchored(1, 50.0, Y0, L0, mp.beta).unwrap();
        assert!(matches!(
            extend_backward(&anchor, &kernel, &mp, &kremer_like(), -300),
            Err(SimError::NotReachable(_))
        ));
    }

    proptest! {
        /// Degree-1 homogeneity of output in (K, L).
        #[test]
        fn output_homogeneity(
            m in 1e-3f64..1e6,
            k in 1e-3f64..1e12,
            l in 1e-3f64..1e10,
            c in 1e-3f64..1e3,
            beta in 0.05f64..0.95,
        ) {
            let scaled = output(m, c * k, c * l, beta);
            let direct = c * output(m, k, l, beta);
            prop_assert!(((scaled - direct) / direct).abs() < 1e-12);
        }
    }
}
