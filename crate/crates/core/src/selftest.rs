//! Built-in invariant checks run by the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificates::Verdict;
use crate::controller::{run_closed_loop, run_lti, warm_up, ControllerState};
use crate::error::Result;
use crate::experiment::{certify_log, simulate_seed, steps_csv_string};
use crate::lqr::{is_stabilizing, lqr_cost, lqr_eval, pg_solve, CostWeights, PlantModel, PolicyGain};
use crate::numerics::{op_norm, solve_dare, solve_dlyap, LyapunovForm, Matrix};
use crate::plant::{ModeSchedule, PlantState};
use crate::scenario::{ModeGen, ScenarioConfig};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match run() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0) * scale)
}

/// A random controllable instance with its optimal gain.
fn random_instance(rng: &mut ChaCha8Rng) -> Result<(PlantModel, CostWeights, PolicyGain)> {
    let n = rng.random_range(1..=5);
    let m = rng.random_range(1..=3);
    let model = PlantModel::new(random_matrix(rng, n, n, 0.6), random_matrix(rng, n, m, 1.0))?;
    let w = CostWeights::identity(n, m);
    let k = PolicyGain(solve_dare(&model.a, &model.b, &w.q, &w.r)?.k);
    Ok((model, w, k))
}

fn gradient_check() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let (model, w, k_star) = random_instance(&mut rng)?;
        let (m, n) = k_star.0.shape();
        let k = PolicyGain(&k_star.0 + random_matrix(&mut rng, m, n, 0.05));
        if !is_stabilizing(&model, &k)? {
            continue;
        }
        let g = lqr_eval(&model, &w, &k)?.gradient;
        let h = 1e-6;
        let fd = Matrix::from_fn(m, n, |i, j| {
            let mut e = Matrix::zeros(m, n);
            e[(i, j)] = h;
            let up = lqr_cost(&model, &w, &PolicyGain(&k.0 + &e)).unwrap_or(f64::NAN);
            let dn = lqr_cost(&model, &w, &PolicyGain(&k.0 - &e)).unwrap_or(f64::NAN);
            (up - dn) / (2.0 * h)
        });
        worst = worst.max((&g - &fd).norm() / g.norm().max(1e-12));
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
}

fn solver_check() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lyap = 0.0_f64;
    let mut agree = 0.0_f64;
    for _ in 0..5 {
        let (model, w, k_star) = random_instance(&mut rng)?;
        let a_cl = model.closed_loop(&k_star)?;
        let n = model.n();
        let sigma = solve_dlyap(&a_cl, &Matrix::identity(n, n), LyapunovForm::Covariance)?;
        lyap = lyap.max((&sigma - Matrix::identity(n, n) - &a_cl * &sigma * a_cl.transpose()).norm());
        let k0 = PolicyGain(&k_star.0 * 0.9);
        if !is_stabilizing(&model, &k0)? {
            continue;
        }
        let eta = crate::lqr::default_step_size(&model, &w, &k0)?;
        let sol = pg_solve(&model, &w, &k0, eta, 1e-9, 200_000)?;
        agree = agree.max(op_norm(&(&sol.gain.0 - &k_star.0)));
    }
    Ok((
        lyap <= 1e-10 && agree <= 1e-5,
        format!("Lyapunov residual {lyap:.2e}, policy gradient vs Riccati {agree:.2e}"),
    ))
}

fn reference_check() -> Result<(bool, String)> {
    let cfg = ScenarioConfig::reference();
    let log = simulate_seed(&cfg, cfg.seeds[0])?;
    let outcome = certify_log(&log)?;
    let r = &outcome.report;
    let transitions_ok = r
        .trajectory
        .iter()
        .filter(|p| p.in_transition)
        .all(|p| p.gap.is_some_and(|g| g <= p.gap_bound));
    let ok = outcome.matches_stored
        && r.replay.consistent()
        && r.verdict != Verdict::Inconsistent
        && r.exact_recovery.estimate.violations == 0
        && r.exact_recovery.update.violations == 0
        && r.envelope.violations == 0
        && transitions_ok
        && r.stability.max_reconstruction <= 1e-9;
    Ok((
        ok,
        format!(
            "verdict {:?}, replay {}, transition bound {}, envelope violations {}",
            r.verdict,
            r.replay.consistent(),
            transitions_ok,
            r.envelope.violations
        ),
    ))
}

fn determinism_check() -> Result<(bool, String)> {
    let cfg = ScenarioConfig::reference();
    let a = steps_csv_string(&simulate_seed(&cfg, 42)?);
    let b = steps_csv_string(&simulate_seed(&cfg, 42)?);
    Ok((a == b, format!("{} bytes", a.len())))
}

fn reduction_check() -> Result<(bool, String)> {
    let mut cfg = ScenarioConfig::reference();
    cfg.mode_gen = ModeGen::Explicit {
        modes: Vec::new(),
        switch_times: Vec::new(),
    };
    let seed = 3;
    let model = PlantModel::new(cfg.a0.clone(), cfg.b0.clone())?;
    let schedule = ModeSchedule::single(model.clone(), cfg.t0);
    let make = || {
        ControllerState::new(
            cfg.initial_gain()?,
            cfg.window,
            cfg.eta,
            cfg.steps_per_tick,
            cfg.probe_config(seed),
            cfg.weights(),
        )
    };
    let start = cfg.t0 - cfg.window as i64;
    let mut switched = make()?;
    let (_, x) = warm_up(&schedule, &mut switched, cfg.x0_vector(), start, cfg.window)?;
    let a = run_closed_loop(&schedule, &mut switched, PlantState::new(&schedule, cfg.t0, x.clone())?, cfg.horizon, cfg.blowup_threshold)?;
    let mut plain = make()?;
    let (_, x2) = warm_up(&schedule, &mut plain, cfg.x0_vector(), start, cfg.window)?;
    let b = run_lti(&model, &mut plain, x2, cfg.t0, cfg.horizon)?;
    Ok((a == b, format!("{} steps compared", a.len())))
}

fn config_round_trip() -> Result<(bool, String)> {
    let cfg = ScenarioConfig::reference();
    let back = ScenarioConfig::from_json(&cfg.to_json()?)?;
    Ok((back == cfg, String::new()))
}

/// Run every check; callers exit nonzero when any fails.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check("gradient_vs_finite_differences", gradient_check),
        check("lyapunov_and_riccati_solvers", solver_check),
        check("reference_run_certificate", reference_check),
        check("determinism", determinism_check),
        check("single_mode_reduction", reduction_check),
        check("config_round_trip", config_round_trip),
    ]
}
