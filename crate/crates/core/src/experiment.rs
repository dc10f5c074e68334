//! Seeded batch runs, run logs, CSV emission and log re-certification.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{certify_run, CertificateReport, RunData, Verdict};
use crate::controller::{run_closed_loop, warm_up, ControllerState, Safeguard, StepRecord};
use crate::error::{Error, Result};
use crate::lqr::{is_stabilizing, lqr_cost, PolicyGain};
use crate::numerics::solve_dare;
use crate::plant::{ModeSchedule, PlantState};
use crate::scenario::ScenarioConfig;

/// Environment variable capping the number of seeds run in parallel.
pub const THREADS_ENV: &str = "PGAC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub t: i64,
    pub norm: f64,
}

/// Everything needed to re-derive a run's certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub schedule: ModeSchedule,
    pub delta_norms: Vec<f64>,
    pub warmup: Vec<StepRecord>,
    pub steps: Vec<StepRecord>,
    pub final_gain: PolicyGain,
    /// Set when the state norm crossed the blow-up threshold.
    pub aborted: Option<Abort>,
    /// Absent for aborted runs.
    pub report: Option<CertificateReport>,
}

impl RunLog {
    pub fn run_data(&self) -> RunData<'_> {
        RunData {
            config: &self.config,
            seed: self.seed,
            schedule: &self.schedule,
            warmup: &self.warmup,
            steps: &self.steps,
            final_gain: &self.final_gain,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Run one seed without certifying it.
pub fn run_seed(config: &ScenarioConfig, seed: u64) -> Result<RunLog> {
    config.validate()?;
    let schedule = config.schedule(seed)?;
    let mut controller = ControllerState::new(
        config.initial_gain()?,
        config.window,
        config.eta,
        config.steps_per_tick,
        config.probe_config(seed),
        config.weights(),
    )?;
    let warm_start = config.t0 - config.window as i64;
    let (warmup, x) = warm_up(&schedule, &mut controller, config.x0_vector(), warm_start, config.window)?;
    let initial = PlantState::new(&schedule, config.t0, x)?;
    let (steps, aborted) = match run_closed_loop(&schedule, &mut controller, initial, config.horizon, config.blowup_threshold) {
        Ok(steps) => (steps, None),
        Err(Error::Aborted { t, norm, partial }) => (*partial, Some(Abort { t, norm })),
        Err(e) => return Err(e),
    };
    Ok(RunLog {
        config: config.clone(),
        seed,
        delta_norms: schedule.delta_norms(),
        schedule,
        warmup,
        steps,
        final_gain: controller.gain().clone(),
        aborted,
        report: None,
    })
}

/// Run one seed and attach its certificate (skipped for aborted runs).
pub fn simulate_seed(config: &ScenarioConfig, seed: u64) -> Result<RunLog> {
    let mut log = run_seed(config, seed)?;
    if log.aborted.is_none() {
        log.report = Some(certify_run(&log.run_data())?);
    }
    Ok(log)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::config(THREADS_ENV, format!("not a thread count: {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Domain(e.to_string()))
}

/// Every seed of `config`, run concurrently; results in seed order.
pub fn simulate_all(config: &ScenarioConfig) -> Result<Vec<Result<RunLog>>> {
    let pool = thread_pool()?;
    Ok(pool.install(|| config.seeds.par_iter().map(|&s| simulate_seed(config, s)).collect()))
}

/// Files written for one seed.
#[derive(Debug, Clone)]
pub struct SeedOutput {
    pub seed: u64,
    pub runlog: PathBuf,
    pub steps_csv: PathBuf,
    pub aborted: Option<Abort>,
    pub verdict: Option<Verdict>,
}

pub fn write_run(log: &RunLog, out: &Path) -> Result<SeedOutput> {
    fs::create_dir_all(out)?;
    let runlog = out.join(format!("{}.runlog.json", log.seed));
    let steps_csv = out.join(format!("{}.steps.csv", log.seed));
    fs::write(&runlog, log.to_json()?)?;
    fs::write(&steps_csv, steps_csv_string(log))?;
    Ok(SeedOutput {
        seed: log.seed,
        runlog,
        steps_csv,
        aborted: log.aborted,
        verdict: log.report.as_ref().map(|r| r.verdict),
    })
}

/// `simulate`: run every seed and write its log and steps CSV.
pub fn simulate_to_dir(config: &ScenarioConfig, out: &Path) -> Result<Vec<SeedOutput>> {
    simulate_all(config)?
        .into_iter()
        .map(|log| write_run(&log?, out))
        .collect()
}

fn push_row(buf: &mut String, fields: &[String]) {
    buf.push_str(&fields.join(","));
    buf.push('\n');
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn safeguard_name(s: Safeguard) -> &'static str {
    match s {
        Safeguard::None => "none",
        Safeguard::SkippedRank => "skipped_rank",
        Safeguard::SkippedUnstableEstimate => "skipped_unstable_estimate",
        Safeguard::SkippedNonstabilizingUpdate => "skipped_nonstabilizing_update",
    }
}

/// One row per record (warm-up first). Floats use the shortest decimal that
/// round-trips; gains are flattened row-major.
pub fn steps_csv_string(log: &RunLog) -> String {
    let (n, m) = (log.schedule.n(), log.schedule.m());
    let mut header: Vec<String> = vec!["t".into(), "phase".into(), "mode".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..m).map(|i| format!("u{i}")));
    header.extend((0..m).map(|i| format!("e{i}")));
    header.extend((0..m).flat_map(|i| (0..n).map(move |j| format!("k{i}_{j}"))));
    header.extend((0..n).map(|i| format!("x_next{i}")));
    header.extend(["est_cost".into(), "safeguard".into()]);
    let mut buf = String::new();
    push_row(&mut buf, &header);
    let phases = log.warmup.iter().map(|r| ("warmup", r)).chain(log.steps.iter().map(|r| ("online", r)));
    for (phase, r) in phases {
        let mode = log.schedule.mode_at(r.t).unwrap_or(0);
        let mut row: Vec<String> = vec![r.t.to_string(), phase.into(), mode.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row.extend(r.u.iter().map(f64::to_string));
        row.extend(r.e.iter().map(f64::to_string));
        row.extend((0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| r.k.0[(i, j)].to_string()));
        row.extend(r.x_next.iter().map(f64::to_string));
        row.push(fmt_opt(r.est_cost));
        row.push(safeguard_name(r.safeguard).into());
        push_row(&mut buf, &row);
    }
    buf
}

/// Columns `t, mode, in_transition, gap_true, gap_bound`; `gap_true` is empty
/// when the gain does not stabilize the active mode.
pub fn fig1_csv_string(report: &CertificateReport) -> String {
    let mut buf = String::from("t,mode,in_transition,gap_true,gap_bound\n");
    for p in &report.trajectory {
        let _ = writeln!(
            buf,
            "{},{},{},{},{}",
            p.t,
            p.mode,
            u8::from(p.in_transition),
            fmt_opt(p.gap),
            p.gap_bound
        );
    }
    buf
}

/// Columns `t, state_norm, bound_total, bound_decay_term, bound_probe_term`.
pub fn fig2_csv_string(report: &CertificateReport) -> String {
    let mut buf = String::from("t,state_norm,bound_total,bound_decay_term,bound_probe_term\n");
    for p in &report.envelope.points {
        let _ = writeln!(buf, "{},{},{},{},{}", p.t, p.state_norm, p.total, p.decay_term, p.probe_term);
    }
    buf
}

/// The built-in reference scenario for seed 42, certified.
pub fn reference_run() -> Result<(RunLog, CertificateReport)> {
    let cfg = ScenarioConfig::reference();
    let log = simulate_seed(&cfg, cfg.seeds[0])?;
    let report = log
        .report
        .clone()
        .ok_or_else(|| {
            let a = log.aborted.expect("report is absent only for aborted runs");
            Error::RunAborted { t: a.t, norm: a.norm }
        })?;
    Ok((log, report))
}

pub fn reproduce_fig1(out: &Path) -> Result<PathBuf> {
    let (_, report) = reference_run()?;
    fs::create_dir_all(out)?;
    let path = out.join("fig1.csv");
    fs::write(&path, fig1_csv_string(&report))?;
    Ok(path)
}

pub fn reproduce_fig2(out: &Path) -> Result<PathBuf> {
    let (_, report) = reference_run()?;
    fs::create_dir_all(out)?;
    let path = out.join("fig2.csv");
    fs::write(&path, fig2_csv_string(&report))?;
    Ok(path)
}

/// Result of re-certifying a stored log.
#[derive(Debug, Clone)]
pub struct CertifyOutcome {
    pub report: CertificateReport,
    /// The stored report equals the recomputed one.
    pub matches_stored: bool,
    /// Names of the checks that failed, empty when certification passes.
    pub failed_checks: Vec<String>,
}

impl CertifyOutcome {
    pub fn passed(&self) -> bool {
        self.failed_checks.is_empty()
    }
}

pub fn certify_log(log: &RunLog) -> Result<CertifyOutcome> {
    if let Some(a) = log.aborted {
        return Err(Error::RunAborted { t: a.t, norm: a.norm });
    }
    let report = certify_run(&log.run_data())?;
    let matches_stored = log.report.as_ref() == Some(&report);
    let mut failed_checks = Vec::new();
    if report.is_failure() {
        failed_checks.extend(report.failures.iter().cloned());
        if failed_checks.is_empty() {
            failed_checks.push(format!("verdict {:?}", report.verdict));
        }
    }
    if !matches_stored {
        failed_checks.push("stored_report (differs from recomputation)".into());
    }
    Ok(CertifyOutcome {
        report,
        matches_stored,
        failed_checks,
    })
}

/// Optimality gap `C_i(K_t)/C*_i − 1` of every online step against its
/// true mode; `None` where `K_t` does not stabilize the mode.
pub fn gap_trace(log: &RunLog) -> Result<Vec<(i64, usize, Option<f64>)>> {
    let weights = log.config.weights();
    let c_star: Vec<f64> = log
        .schedule
        .modes()
        .iter()
        .map(|md| Ok(solve_dare(&md.a, &md.b, &weights.q, &weights.r)?.cost))
        .collect::<Result<_>>()?;
    log.steps
        .iter()
        .map(|r| {
            let i = log.schedule.mode_at(r.t)?;
            let model = &log.schedule.modes()[i];
            let gap = match is_stabilizing(model, &r.k) {
                Ok(true) => Some(lqr_cost(model, &weights, &r.k)? / c_star[i] - 1.0),
                _ => None,
            };
            Ok((r.t, i, gap))
        })
        .collect()
}

/// Steps after each switch inside the horizon until the optimality gap
/// first drops to `threshold`; `None` when it does not within the mode
/// (including modes cut short by an abort).
pub fn settling_steps(log: &RunLog, threshold: f64) -> Result<Vec<Option<usize>>> {
    let trace = gap_trace(log)?;
    let end = log.config.t0 + log.config.horizon as i64;
    Ok(log
        .schedule
        .switch_times()
        .iter()
        .enumerate()
        .filter(|&(_, &ts)| ts < end)
        .map(|(s, _)| {
            trace
                .iter()
                .filter(|(_, mode, _)| *mode == s + 1)
                .position(|(_, _, g)| g.is_some_and(|g| g <= threshold))
        })
        .collect())
}

/// Mean of [`settling_steps`], an unsettled switch counting as the full
/// time its mode is active within the horizon.
pub fn mean_settling_steps(log: &RunLog, threshold: f64) -> Result<f64> {
    let steps = settling_steps(log, threshold)?;
    if steps.is_empty() {
        return Ok(0.0);
    }
    let end = log.config.t0 + log.config.horizon as i64;
    let times = log.schedule.switch_times();
    let total: i64 = steps
        .iter()
        .enumerate()
        .map(|(s, st)| match st {
            Some(k) => *k as i64,
            None => times.get(s + 1).copied().unwrap_or(end).min(end) - times[s],
        })
        .sum();
    Ok(total as f64 / steps.len() as f64)
}
