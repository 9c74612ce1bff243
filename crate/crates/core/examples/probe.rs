// Scratch exploration program (deleted before release).
use tapgrowth_core::calibrate::{calibrate, CalibrationSpec, FreeParam};
use tapgrowth_core::economy::{extend_backward, simulate, EconomyState, MacroParams, SimMode};
use tapgrowth_core::ensemble::{takeoff_time, TakeoffRule};
use tapgrowth_core::kernel::KernelParams;
use tapgrowth_core::series::{load_series_file, YearRange};

fn main() {
    let pop = load_series_file(std::path::Path::new("data/population.csv")).unwrap();
    let gdp = load_series_file(std::path::Path::new("data/gdp.csv")).unwrap();
    let mp = MacroParams::baseline();
    let y0 = 1.82741e11;
    let l0 = 1.7e8;

    // Divergence year at tabled P from M0=50 and M0=88.
    for m0 in [50.0, 88.0] {
        let initial = EconomyState::anchored(1, m0, y0, l0, mp.beta).unwrap();
        let traj = simulate(
            &initial,
            &KernelParams::baseline(),
            &mp,
            &pop,
            2015,
            SimMode::Deterministic,
        )
        .unwrap();
        println!(
            "tabled P=0.0006, M0={m0}: divergence={:?} last_year={}",
            traj.divergence,
            traj.last().year
        );
    }

    // Calibrate P on the shipped benchmark, M0=50 fixed.
    let spec = CalibrationSpec {
        free: vec![(FreeParam::P, 1e-8, 1e-1)],
        kernel: KernelParams::baseline(),
        macro_params: mp,
        y0,
        m0: 50.0,
        l0,
        horizon: YearRange::new(1, 2015),
        population: pop.clone(),
        benchmark: gdp.clone(),
        grid: 25,
        refine_iters: 200,
    };
    let t0 = std::time::Instant::now();
    let result = calibrate(&spec).unwrap();
    println!(
        "fit: p={:.12e} loss={:.12} evals={} diverged={} elapsed={:?}",
        result.best[0],
        result.loss,
        result.trace.len(),
        result.diverged_count,
        t0.elapsed()
    );
    for r in &result.reference {
        println!("  ref {}: loss={} diverged={}", r.name, r.loss, r.diverged);
    }

    // Fitted trajectory diagnostics for the hockey-stick criteria.
    let (kernel, m0) = spec.resolve(&result.best);
    let initial = EconomyState::anchored(1, m0, y0, l0, mp.beta).unwrap();
    let traj = simulate(&initial, &kernel, &mp, &pop, 2015, SimMode::Deterministic).unwrap();
    println!("fitted run: divergence={:?}", traj.divergence);
    let y_at = |yr: i32| traj.at_year(yr).unwrap().y;
    let m_at = |yr: i32| traj.at_year(yr).unwrap().m;
    println!(
        "M(1)={} M(1000)={} M(1500)={} M(1800)={} M(1900)={} M(2015)={}",
        m_at(1),
        m_at(1000),
        m_at(1500),
        m_at(1800),
        m_at(1900),
        m_at(2015)
    );
    println!(
        "Y(1)={:.4e} Y(1000)={:.4e} Y(1815)={:.4e} Y(2015)={:.4e}",
        y_at(1),
        y_at(1000),
        y_at(1815),
        y_at(2015)
    );
    let early = (y_at(1000) / y_at(1)).ln();
    let late = (y_at(2015) / y_at(1815)).ln();
    println!(
        "log-growth 1815-2015 = {late:.4}, AD1-1000 = {early:.4}, ratio = {:.2}",
        late / early
    );
    // Last-10%-vs-first-50% variant.
    let g_last = (y_at(2015) / y_at(1814)).ln();
    let g_first = (y_at(1008) / y_at(1)).ln();
    println!("last-10% / first-50% ratio = {:.2}", g_last / g_first);
    let takeoff = takeoff_time(&traj, &TakeoffRule::default());
    println!("takeoff year = {takeoff:?}");

    // K shrink diagnostics for both M0 variants at the fitted P.
    let k1 = traj.states[1].k;
    println!("fitted M0=50: K0={:.6e} K1={:.6e} shrank={}", initial.k, k1, k1 < initial.k);

    // Backward extension at tabled P (spec example) and at fitted P.
    for (label, p) in [("tabled", 0.0006), ("fitted", kernel.p)] {
        let kp = KernelParams::new(p, kernel.alpha).unwrap();
        let anchor = EconomyState::anchored(1, 50.0, y0, l0, mp.beta).unwrap();
        match extend_backward(&anchor, &kp, &mp, &pop, -350) {
            Ok(ext) => println!(
                "backward -350 ({label} p={p:.6e}): recovered_m={:.9} residual={:.3e} k_shrank={:?}",
                ext.recovered_m, ext.residual, ext.capital_shrank
            ),
            Err(e) => println!("backward -350 ({label}): {e}"),
        }
    }

    // Stochastic runs at baseline: takeoff year scale.
    let initial50 = EconomyState::anchored(1, 50.0, y0, l0, mp.beta).unwrap();
    for seed in 0..5u64 {
        let traj = simulate(
            &initial50,
            &KernelParams::baseline(),
            &mp,
            &pop,
            2015,
            SimMode::Stochastic { seed },
        )
        .unwrap();
        println!(
            "stochastic seed={seed}: divergence={:?} takeoff={:?}",
            traj.divergence,
            takeoff_time(&traj, &TakeoffRule::default())
        );
    }

    // Full-precision goldens.
    println!("GOLDEN fitted_p = {:.17e}", result.best[0]);
    println!("GOLDEN fitted_loss = {:.17e}", result.loss);

    // Median stochastic M vs deterministic M until det M reaches 1e4.
    use tapgrowth_core::ensemble::run_seed;
    let det = simulate(
        &initial50,
        &KernelParams::baseline(),
        &mp,
        &pop,
        2015,
        SimMode::Deterministic,
    )
    .unwrap();
    let n_runs = 1000usize;
    let trajs: Vec<_> = (0..n_runs as u64)
        .map(|i| {
            simulate(
                &initial50,
                &KernelParams::baseline(),
                &mp,
                &pop,
                2015,
                SimMode::Stochastic {
                    seed: run_seed(4242, i),
                },
            )
            .unwrap()
        })
        .collect();
    for m_cap in [100.0, 300.0, 1000.0, 3000.0, 10_000.0] {
        let mut max_rel: f64 = 0.0;
        let mut at_year = 0;
        for state in &det.states {
            if state.m > m_cap {
                break;
            }
            let mut ms: Vec<f64> = trajs
                .iter()
                .map(|t| t.at_year(state.year).map_or(f64::INFINITY, |s| s.m))
                .collect();
            ms.sort_by(f64::total_cmp);
            let median = ms[n_runs / 2];
            let rel = (median - state.m).abs() / state.m;
            if rel > max_rel {
                max_rel = rel;
                at_year = state.year;
            }
        }
        println!(
            "median-vs-det max rel gap until det M={m_cap}: {:.4} at year {at_year}",
            max_rel
        );
    }
    // Where does det M cross each cap?
    for state in &det.states {
        if state.m > 100.0 && state.m / det.at_year(state.year - 1).unwrap().m > 1.2 {
            println!("det year {} M={:.4e}", state.year, state.m);
        }
    }
}
