//! Evaluation of the stability bounds on a finished run.
//!
//! [`certify_run`] recomputes everything from the run log: it replays the
//! controller to confirm the log is self-consistent, derives the per-mode
//! constants, checks the identification error bounds, the cost bounds, the
//! strong-stability conditions and the state envelope, and reports which of
//! the hypotheses of the guarantees held.

pub mod bounds;
pub mod envelope;
pub mod poly;
pub mod stability;

use serde::{Deserialize, Serialize};

pub use bounds::{
    admissible_delta, admissible_eta, cost_bound_across_switch, cost_bound_within_mode,
    dwell_time_lower_bound, DwellBound, EtaBound,
};
pub use envelope::{state_envelope, EnvelopePoint, EnvelopeSample, StateEnvelope};
pub use poly::{compute_poly_constants, compute_poly_constants_checked, p1, PolyConstants};
pub use stability::{
    check_sequential_stability, strong_stability_factorize, Factorization, SequenceItem,
    StabilityCert, StepStability,
};

use crate::controller::{policy_update, Safeguard, StepRecord};
use crate::error::{Error, Result};
use crate::lqr::{
    is_stabilizing, lqr_cost, lqr_eval, local_smoothness, optimality_gap,
    strong_stability_params, CostWeights, PlantModel, PolicyGain,
};
use crate::numerics::{op_norm, pinv, solve_dare, Matrix, Vector};
use crate::plant::{probe_sample, ModeSchedule};
use crate::scenario::ScenarioConfig;
use crate::sysid::{ModelEstimate, SlidingWindow};

pub const CERT_SCHEMA: u32 = 1;
/// Relative slack on the identification-error bound.
pub const PROJECTION_SLACK: f64 = 1e-9;
/// Tolerance for exact recovery from single-mode windows.
pub const EXACT_TOL: f64 = 1e-8;
/// Relative slack on cost comparisons.
pub const COST_TOL: f64 = 1e-9;

/// Everything a certificate is derived from.
#[derive(Debug, Clone, Copy)]
pub struct RunData<'a> {
    pub config: &'a ScenarioConfig,
    pub seed: u64,
    pub schedule: &'a ModeSchedule,
    pub warmup: &'a [StepRecord],
    pub steps: &'a [StepRecord],
    /// Gain held by the controller after the last step.
    pub final_gain: &'a PolicyGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// Full row rank of the data matrix at every online step.
    pub informative: bool,
    pub min_singular_value: f64,
    /// Every switch leaves at least `L` steps before the next one.
    pub dwell_ok: bool,
    pub k0_stabilizes_mode0: bool,
    pub eta: f64,
    pub eta_bound: f64,
    pub eta_admissible: bool,
    /// `‖Δ_s‖ ≤ ν₂,ₛ` at every switch.
    pub delta_admissible: bool,
    pub all_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub index: usize,
    pub start: i64,
    /// Switch time ending this mode, if any.
    pub end: Option<i64>,
    pub c_star: f64,
    /// `C_i(K)` for the gain applied at `start`; absent when it does not
    /// stabilize the mode.
    pub c_at_start: Option<f64>,
    /// Largest `C_i(K_t)` from `start` to the end of the transition window
    /// opened by the switch into this mode.
    pub c_entry: Option<f64>,
    /// `max{c_entry, C*_i + 1}`, checked on the steps after the transition.
    pub c_bar: f64,
    pub kappa_bar: f64,
    pub alpha_bar: f64,
    pub l_bar: f64,
    pub bar: PolyConstants,
    pub star: PolyConstants,
    pub eta_bound: EtaBound,
    /// Against the switch ending this mode.
    pub dwell: Option<DwellBound>,
    pub dwell_met: Option<bool>,
    pub max_cost: Option<f64>,
    pub checked_steps: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    pub checked: usize,
    pub violations: usize,
    /// Largest `observed / bound` ratio.
    pub max_ratio: Option<f64>,
}

impl CheckStats {
    fn record(&mut self, observed: f64, bound: f64, slack: f64) {
        self.checked += 1;
        if observed > bound + slack {
            self.violations += 1;
        }
        let ratio = if bound > 0.0 { observed / bound } else { observed / slack.max(f64::MIN_POSITIVE) };
        self.max_ratio = Some(self.max_ratio.map_or(ratio, |r| r.max(ratio)));
    }

    fn fail(&mut self) {
        self.checked += 1;
        self.violations += 1;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionIdStats {
    pub mixed_steps: usize,
    /// Error to the pre-switch mode against `‖Δ‖`.
    pub pre: CheckStats,
    /// Error to the post-switch mode against `‖Δ‖`; reported, not claimed.
    pub post: CheckStats,
    pub post_violation_rate: f64,
    /// `‖D S D†‖` against 1.
    pub projection: CheckStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub index: usize,
    pub time: i64,
    pub delta_norm: f64,
    /// `ν₂ = min{1/(2μ p̄₃ p̄₆), p̄₁}` of the pre-switch mode.
    pub nu2: f64,
    pub p1_bar: f64,
    pub condition_met: bool,
    pub c_bar_pre: f64,
    pub p2_bar: f64,
    /// `C̄_s (1 + p̄₂ ‖Δ_s‖)`.
    pub c_bar_post: f64,
    pub transition_steps: usize,
    /// Pre-switch cost against `C̄_s` during the transition.
    pub pre_cost: CheckStats,
    /// Post-switch cost against `c_bar_post` during the transition.
    pub post_cost: CheckStats,
    pub identification: TransitionIdStats,
    /// Estimated closed loop stable whenever `‖Δ_s‖ ≤ p̄₁`.
    pub p1_safety: CheckStats,
    /// `‖∇Ĉ − ∇C_s‖ ≤ p₃ ‖Δ_s‖` whenever `‖Δ_s‖ ≤ p₁`.
    pub gradient_error: CheckStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactRecovery {
    /// Error of the estimate to the active mode on single-mode windows.
    pub estimate: CheckStats,
    /// Logged update against the update with the true model.
    pub update: CheckStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SafeguardReport {
    pub skipped_rank: usize,
    pub skipped_unstable_estimate: usize,
    pub skipped_nonstabilizing_update: usize,
    pub unstable_estimate_outside_transition: usize,
    /// Steps without a safeguard whose gain (before or after the update)
    /// fails to stabilize the logged estimate.
    pub soundness_violations: usize,
}

impl SafeguardReport {
    pub fn total(&self) -> usize {
        self.skipped_rank + self.skipped_unstable_estimate + self.skipped_nonstabilizing_update
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub schedule: bool,
    pub length: bool,
    pub input_identity: usize,
    pub probe: usize,
    pub plant: usize,
    pub continuity: usize,
    pub warmup_gain: usize,
    pub identification: usize,
    pub update: usize,
    pub first_failure: Option<String>,
}

impl ReplayReport {
    pub fn consistent(&self) -> bool {
        self.schedule
            && self.length
            && self.input_identity == 0
            && self.probe == 0
            && self.plant == 0
            && self.continuity == 0
            && self.warmup_gain == 0
            && self.identification == 0
            && self.update == 0
    }

    fn flag(&mut self, what: &str, t: i64) {
        if self.first_failure.is_none() {
            self.first_failure = Some(format!("replay.{what} at t = {t}"));
        }
    }
}

/// One online step of the optimality-gap trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: i64,
    pub mode: usize,
    pub in_transition: bool,
    /// `C_i(K_t)`; absent when `K_t` does not stabilize the active mode.
    pub cost: Option<f64>,
    pub c_star: f64,
    pub gap: Option<f64>,
    /// `C̄_{s+1}` from the across-switch bound inside transitions, the mode's
    /// `C̄_i` elsewhere.
    pub cost_bound: f64,
    pub gap_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guarantees {
    pub cost_bounds: bool,
    pub strong_stability: bool,
    pub envelope: bool,
    pub true_mode_stable: bool,
    pub no_safeguards: bool,
}

impl Guarantees {
    pub fn all(&self) -> bool {
        self.cost_bounds && self.strong_stability && self.envelope && self.true_mode_stable && self.no_safeguards
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Hypotheses hold and every guarantee was observed.
    Certified,
    /// Some hypothesis fails; guarantees are reported but not claimed.
    Vacuous,
    /// Hypotheses hold but a guarantee was violated.
    Violated,
    /// The log does not replay.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub cert_schema: u32,
    pub seed: u64,
    pub mu: f64,
    pub hypotheses: Hypotheses,
    pub modes: Vec<ModeReport>,
    pub switches: Vec<SwitchReport>,
    /// Largest number of distinct modes seen in one window.
    pub max_modes_in_window: usize,
    pub exact_recovery: ExactRecovery,
    /// One-step descent with residual, using the `μ` surrogate.
    pub descent: CheckStats,
    pub safeguards: SafeguardReport,
    pub stability: StabilityCert,
    pub envelope: StateEnvelope,
    pub trajectory: Vec<TrajectoryPoint>,
    pub replay: ReplayReport,
    pub guarantees: Guarantees,
    pub verdict: Verdict,
    pub failures: Vec<String>,
    /// Observed departures from the identification-error bounds. The
    /// projection bound `||D S D^+|| <= 1` does not hold for general data, so
    /// these are reported without affecting the verdict.
    pub diagnostics: Vec<String>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    /// Problems that make `certify` fail: an inconsistent log, or a
    /// guarantee violated while its hypotheses held.
    pub fn is_failure(&self) -> bool {
        matches!(self.verdict, Verdict::Inconsistent | Verdict::Violated)
    }
}

/// The switch whose transition window `[T_s, T_s + L)` contains `t`.
pub fn transition_of(schedule: &ModeSchedule, t: i64, window: usize) -> Option<usize> {
    let times = schedule.switch_times();
    let s = times.partition_point(|&ts| ts <= t).checked_sub(1)?;
    (t < times[s] + window as i64).then_some(s)
}

/// Mode that generated the triple recorded at time `tau` (warm-up uses mode 0).
fn mode_of_sample(schedule: &ModeSchedule, tau: i64) -> usize {
    schedule.mode_at(tau).unwrap_or(0)
}

fn notes() -> Vec<String> {
    [
        "mu is a configured gradient-dominance surrogate; l_bar is the measured local smoothness at K*_i and at the gain applied at mode start",
        "p7 is the surrogate 1/(2 l_bar); p8_bar is undefined in the analysis and is replaced by p3_bar * max_s ||Delta_s||",
        "p4 and p5 bound ||A - BK|| by ||A|| + ||B|| sqrt(C/sigma(R)), which also covers the closed loop A + BK used here",
        "the displayed dwell-time term log(1/(C_bar - C*)) is nonpositive whenever C_bar >= C* + 1; time_to_c_star_plus_one gives the decay-based reading",
        "switches are indexed 0..N-1; switch s moves mode s to mode s+1 at T_s and its transition window is [T_s, T_s + L)",
        "per-mode C_bar are realized values max{C_i(K at mode start), C_i over the entering transition, C*_i + 1}, checked outside transitions; transition steps use the across-switch bound",
        "descent violations indicate a miscalibrated mu surrogate, not a falsified bound",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn close(observed: f64, bound: f64) -> f64 {
    COST_TOL * (1.0 + bound.abs().max(observed.abs()))
}

struct ModeData {
    c_star: f64,
    k_star: PolicyGain,
}

/// Recompute the certificate for a run.
pub fn certify_run(run: &RunData<'_>) -> Result<CertificateReport> {
    let cfg = run.config;
    let schedule = run.schedule;
    let weights = cfg.weights();
    let (n, m) = (schedule.n(), schedule.m());
    let window_len = cfg.window;
    let steps = run.steps;
    if steps.is_empty() {
        return Err(Error::LogMismatch("no online steps".into()));
    }
    if cfg.n != n || cfg.m != m {
        return Err(Error::LogMismatch(format!(
            "config dimensions ({}, {}) differ from schedule ({n}, {m})",
            cfg.n, cfg.m
        )));
    }
    for r in run.warmup.iter().chain(steps) {
        if r.x.len() != n || r.x_next.len() != n || r.u.len() != m || r.e.len() != m || r.k.0.shape() != (m, n) {
            return Err(Error::LogMismatch(format!("record at t = {} has wrong dimensions", r.t)));
        }
    }
    if run.final_gain.0.shape() != (m, n) {
        return Err(Error::LogMismatch("final gain has wrong dimensions".into()));
    }
    let t0 = schedule.t0();
    let mut failures = Vec::new();

    let replay = replay_log(run, &weights)?;
    if let Some(f) = &replay.first_failure {
        failures.push(f.clone());
    }

    // Per-mode optimal solutions.
    let mode_data: Vec<ModeData> = schedule
        .modes()
        .iter()
        .map(|md| {
            let dare = solve_dare(&md.a, &md.b, &weights.q, &weights.r)?;
            Ok(ModeData {
                c_star: dare.cost,
                k_star: PolicyGain(dare.k),
            })
        })
        .collect::<Result<_>>()?;

    let next_gain = |j: usize| -> &PolicyGain { steps.get(j + 1).map_or(run.final_gain, |r| &r.k) };
    let active: Vec<usize> = steps.iter().map(|r| mode_of_sample(schedule, r.t)).collect();
    let cost_of = |mode: usize, k: &PolicyGain| -> Option<f64> {
        let model = &schedule.modes()[mode];
        match is_stabilizing(model, k) {
            Ok(true) => lqr_cost(model, &weights, k).ok(),
            _ => None,
        }
    };
    let costs: Vec<Option<f64>> = steps.iter().zip(&active).map(|(r, &i)| cost_of(i, &r.k)).collect();
    let transitions: Vec<Option<usize>> = steps.iter().map(|r| transition_of(schedule, r.t, window_len)).collect();
    let entering = |j: usize| active[j] >= 1 && transitions[j] == Some(active[j] - 1);

    // Modes reached by the run.
    let last_mode = *active.last().expect("non-empty");
    let delta_norms = schedule.delta_norms();
    let seen_switches = last_mode;
    let max_delta = delta_norms[..seen_switches].iter().copied().fold(0.0, f64::max);

    let mut modes = Vec::with_capacity(last_mode + 1);
    for i in 0..=last_mode {
        let model = &schedule.modes()[i];
        let md = &mode_data[i];
        let start = schedule.mode_start(i);
        let start_idx = steps.iter().position(|r| r.t >= start).unwrap_or(0);
        let k_start = &steps[start_idx].k;
        let c_at_start = cost_of(i, k_start);
        if c_at_start.is_none() {
            failures.push(format!("mode {i}: gain at mode start does not stabilize the mode"));
        }
        let mut c_entry = c_at_start;
        for j in (0..steps.len()).filter(|&j| active[j] == i && entering(j)) {
            c_entry = match (c_entry, costs[j]) {
                (Some(a), Some(c)) => Some(a.max(c)),
                _ => None,
            };
        }
        let c_bar = cost_bound_within_mode(c_entry.unwrap_or(md.c_star), md.c_star);
        let (kappa_bar, alpha_bar) = strong_stability_params(c_bar, &weights)?;
        let mut l_bar = local_smoothness(model, &weights, &md.k_star)?;
        if c_at_start.is_some() {
            if let Ok(l) = local_smoothness(model, &weights, k_start) {
                l_bar = l_bar.max(l);
            }
        }
        let bar = compute_poly_constants_checked(model, &weights, c_bar, md.c_star, cfg.mu, l_bar)?;
        let star = compute_poly_constants(model, &weights, md.c_star, cfg.mu, l_bar)?;
        let end = schedule.switch_times().get(i).copied();
        let (dwell, dwell_met) = match end {
            Some(e) => {
                let d = dwell_time_lower_bound(cfg.mu, cfg.eta, c_bar, md.c_star, window_len).ok();
                let met = d.map(|d| (e - start) as f64 >= d.value);
                (d, met)
            }
            None => (None, None),
        };
        let mut stats = CheckStats::default();
        let mut max_cost: Option<f64> = None;
        for j in (0..steps.len()).filter(|&j| active[j] == i && !entering(j)) {
            match costs[j] {
                Some(c) => {
                    stats.record(c, c_bar, close(c, c_bar));
                    max_cost = Some(max_cost.map_or(c, |v| v.max(c)));
                }
                None => stats.fail(),
            }
        }
        modes.push(ModeReport {
            index: i,
            start,
            end,
            c_star: md.c_star,
            c_at_start,
            c_entry,
            c_bar,
            kappa_bar,
            alpha_bar,
            l_bar,
            bar,
            star,
            // Filled in below once the post-switch parameters are known.
            eta_bound: admissible_eta(&bar, &star, kappa_bar, alpha_bar, bar.p3 * max_delta),
            dwell,
            dwell_met,
            max_cost,
            checked_steps: stats.checked,
            violations: stats.violations,
        });
    }
    for i in 0..modes.len() {
        let (kappa, alpha) = modes
            .get(i + 1)
            .map_or((modes[i].kappa_bar, modes[i].alpha_bar), |nx| (nx.kappa_bar, nx.alpha_bar));
        let md = &modes[i];
        modes[i].eta_bound = admissible_eta(&md.bar, &md.star, kappa, alpha, md.bar.p3 * max_delta);
    }

    // Windows, identification error and transition checks.
    let mut switches: Vec<SwitchReport> = (0..seen_switches)
        .map(|s| {
            let md = &modes[s];
            let nu2 = admissible_delta(&md.bar);
            SwitchReport {
                index: s,
                time: schedule.switch_times()[s],
                delta_norm: delta_norms[s],
                nu2,
                p1_bar: md.bar.p1,
                condition_met: delta_norms[s] <= nu2,
                c_bar_pre: md.c_bar,
                p2_bar: md.bar.p2,
                c_bar_post: cost_bound_across_switch(md.c_bar, md.bar.p2, delta_norms[s]),
                transition_steps: 0,
                pre_cost: CheckStats::default(),
                post_cost: CheckStats::default(),
                identification: TransitionIdStats::default(),
                p1_safety: CheckStats::default(),
                gradient_error: CheckStats::default(),
            }
        })
        .collect();

    let mut exact_recovery = ExactRecovery::default();
    let mut descent = CheckStats::default();
    let mut safeguards = SafeguardReport::default();
    let mut max_modes_in_window = 1;
    let mut min_singular_value = f64::INFINITY;
    let mut informative_all = true;
    let mut trajectory = Vec::with_capacity(steps.len());
    let first_time = run.warmup.first().map_or(steps[0].t, |r| r.t);

    for (j, r) in steps.iter().enumerate() {
        let i = active[j];
        let transition = transition_of(schedule, r.t, window_len).filter(|&s| s < seen_switches);

        // Window contents at this record: samples at times
        // max(t − L + 1, first_time) ..= t.
        let lo = (r.t - window_len as i64 + 1).max(first_time);
        let window_modes: Vec<usize> = (lo..=r.t).map(|tau| mode_of_sample(schedule, tau)).collect();
        let mut distinct = window_modes.clone();
        distinct.dedup();
        max_modes_in_window = max_modes_in_window.max(distinct.len());

        let estimate = r.estimate.as_ref();
        if let Some(est) = estimate {
            informative_all &= est.informative;
            min_singular_value = min_singular_value.min(est.smallest_singular_value);
        } else {
            informative_all = false;
            min_singular_value = 0.0;
        }

        match r.safeguard {
            Safeguard::None => {}
            Safeguard::SkippedRank => safeguards.skipped_rank += 1,
            Safeguard::SkippedUnstableEstimate => {
                safeguards.skipped_unstable_estimate += 1;
                if transition.is_none() {
                    safeguards.unstable_estimate_outside_transition += 1;
                }
            }
            Safeguard::SkippedNonstabilizingUpdate => safeguards.skipped_nonstabilizing_update += 1,
        }
        if r.safeguard == Safeguard::None {
            let sound = estimate.is_some_and(|est| {
                matches!(is_stabilizing(&est.model, &r.k), Ok(true))
                    && matches!(is_stabilizing(&est.model, next_gain(j)), Ok(true))
            });
            if !sound {
                safeguards.soundness_violations += 1;
            }
        }

        // Single-mode windows: exact recovery and exact update.
        if distinct.len() == 1 {
            if let Some(est) = estimate.filter(|e| e.informative) {
                let truth = &schedule.modes()[distinct[0]];
                let err = op_norm(&(est.model.stacked() - truth.stacked()));
                exact_recovery.estimate.record(err, EXACT_TOL, 0.0);
                if distinct[0] == i {
                    let exact = ModelEstimate {
                        model: truth.clone(),
                        informative: true,
                        smallest_singular_value: est.smallest_singular_value,
                    };
                    let (k_exact, _, _) = policy_update(&exact, &r.k, &weights, cfg.eta, cfg.steps_per_tick);
                    let diff = op_norm(&(&k_exact.0 - &next_gain(j).0));
                    exact_recovery.update.record(diff, EXACT_TOL, 0.0);
                }
            }
        }

        // Mixed windows spanning switch s = i − 1.
        if distinct.len() == 2 && i >= 1 && distinct == [i - 1, i] {
            let s = i - 1;
            let sw = &mut switches[s];
            sw.identification.mixed_steps += 1;
            if let Some(est) = estimate {
                let delta = delta_norms[s];
                let slack = PROJECTION_SLACK * (1.0 + delta);
                let g = est.model.stacked();
                let pre = &schedule.modes()[s];
                let post = &schedule.modes()[i];
                sw.identification.pre.record(op_norm(&(&g - pre.stacked())), delta, slack);
                sw.identification.post.record(op_norm(&(&g - post.stacked())), delta, slack);
                let proj = projection_norm(run, j, lo, &window_modes, i, n, m)?;
                sw.identification.projection.record(proj, 1.0, PROJECTION_SLACK);

                // Gradient error against the pre-switch mode.
                if let Some(c_pre) = cost_of(s, &r.k) {
                    let pc = compute_poly_constants(pre, &weights, c_pre, cfg.mu, modes[s].l_bar)?;
                    if delta <= pc.p1 && matches!(is_stabilizing(&est.model, &r.k), Ok(true)) {
                        let g_hat = lqr_eval(&est.model, &weights, &r.k)?.gradient;
                        let g_true = lqr_eval(pre, &weights, &r.k)?.gradient;
                        let err = op_norm(&(g_hat - g_true));
                        sw.gradient_error.record(err, pc.p3 * delta, 1e-9 * (1.0 + err));
                    }
                }
            }
        }

        if let Some(s) = transition {
            let sw = &mut switches[s];
            sw.transition_steps += 1;
            match cost_of(s, &r.k) {
                Some(c) => sw.pre_cost.record(c, sw.c_bar_pre, close(c, sw.c_bar_pre)),
                None => sw.pre_cost.fail(),
            }
            match costs[j] {
                Some(c) => sw.post_cost.record(c, sw.c_bar_post, close(c, sw.c_bar_post)),
                None => sw.post_cost.fail(),
            }
            if sw.delta_norm <= sw.p1_bar {
                match estimate {
                    Some(est) if matches!(is_stabilizing(&est.model, &r.k), Ok(true)) => {
                        sw.p1_safety.checked += 1
                    }
                    _ => sw.p1_safety.fail(),
                }
            }
        }

        // One-step descent with residual on the active mode.
        let next_mode = active.get(j + 1).copied().unwrap_or(i);
        if r.safeguard == Safeguard::None && next_mode == i {
            if let (Some(c), Some(c_next)) = (costs[j], cost_of(i, next_gain(j))) {
                let md = &modes[i];
                let residual_delta = if distinct.len() == 2 && i >= 1 { delta_norms[i - 1] } else { 0.0 };
                let steps_f = cfg.steps_per_tick as f64;
                let rate = (1.0 - cfg.eta / (2.0 * cfg.mu)).powf(steps_f);
                let rhs = rate * (c - md.c_star)
                    + steps_f * cfg.eta * md.bar.p3 * md.bar.p6 * residual_delta;
                let lhs = c_next - md.c_star;
                descent.record(lhs.max(0.0), rhs.max(0.0), close(c_next, c));
            }
        }

        // Gap trace.
        let md = &modes[i];
        let cost_bound = match transition {
            Some(s) => switches[s].c_bar_post,
            None => md.c_bar,
        };
        trajectory.push(TrajectoryPoint {
            t: r.t,
            mode: i,
            in_transition: transitions[j].is_some(),
            cost: costs[j],
            c_star: md.c_star,
            gap: costs[j].map(|c| optimality_gap(c, md.c_star).unwrap_or(0.0)),
            cost_bound,
            gap_bound: (cost_bound - md.c_star) / md.c_star,
        });
    }
    for sw in &mut switches {
        let checked = sw.identification.post.checked;
        sw.identification.post_violation_rate = if checked > 0 {
            sw.identification.post.violations as f64 / checked as f64
        } else {
            0.0
        };
    }

    // Strong stability of the gain sequence.
    let global_c_bar = modes.iter().map(|md| md.c_bar).fold(0.0, f64::max);
    let seq: Vec<SequenceItem<'_>> = steps
        .iter()
        .zip(&active)
        .map(|(r, &i)| SequenceItem {
            t: r.t,
            mode: i,
            model: &schedule.modes()[i],
            gain: &r.k,
        })
        .collect();
    let stability = check_sequential_stability(&seq, &weights, global_c_bar)?;

    // State envelope.
    let samples: Vec<EnvelopeSample> = steps
        .iter()
        .zip(&active)
        .map(|(r, &i)| EnvelopeSample {
            t: r.t,
            mode: i,
            state_norm: r.x.norm(),
            probe_norm: (&schedule.modes()[i].b * &r.e).norm(),
        })
        .collect();
    let kappas: Vec<f64> = modes.iter().map(|md| md.kappa_bar).collect();
    let alphas: Vec<f64> = modes.iter().map(|md| md.alpha_bar).collect();
    let envelope = state_envelope(&samples, &kappas, &alphas)?;

    // Hypotheses.
    let eta_bound = modes.iter().map(|md| md.eta_bound.value).fold(f64::INFINITY, f64::min);
    let k0_stabilizes_mode0 = matches!(is_stabilizing(&schedule.modes()[0], &steps[0].k), Ok(true)) && steps[0].t == t0;
    let hypotheses = Hypotheses {
        informative: informative_all,
        min_singular_value: if min_singular_value.is_finite() { min_singular_value } else { 0.0 },
        dwell_ok: schedule.dwell_ok(window_len),
        k0_stabilizes_mode0,
        eta: cfg.eta,
        eta_bound,
        eta_admissible: cfg.eta <= eta_bound,
        delta_admissible: switches.iter().all(|s| s.condition_met),
        all_satisfied: false,
    };
    let hypotheses = Hypotheses {
        all_satisfied: hypotheses.informative
            && hypotheses.dwell_ok
            && hypotheses.k0_stabilizes_mode0
            && hypotheses.eta_admissible
            && hypotheses.delta_admissible,
        ..hypotheses
    };

    let cost_bounds = modes.iter().all(|md| md.violations == 0)
        && switches.iter().all(|s| s.pre_cost.violations == 0 && s.post_cost.violations == 0);
    let guarantees = Guarantees {
        cost_bounds,
        strong_stability: stability.all_pass(),
        envelope: envelope.violations == 0,
        true_mode_stable: stability.unstable_steps.is_empty(),
        no_safeguards: safeguards.total() == 0,
    };

    if !guarantees.cost_bounds {
        failures.push("cost_bounds".into());
    }
    if !guarantees.strong_stability {
        failures.push(format!(
            "strong_stability (first failure at t = {})",
            stability.first_failure.map_or("?".into(), |t| t.to_string())
        ));
    }
    if !guarantees.envelope {
        failures.push(format!("envelope ({} steps above the bound)", envelope.violations));
    }
    if !guarantees.true_mode_stable {
        failures.push(format!("true_mode_stability ({} steps)", stability.unstable_steps.len()));
    }
    if !guarantees.no_safeguards {
        failures.push(format!("safeguards ({} fired)", safeguards.total()));
    }
    if safeguards.soundness_violations > 0 {
        failures.push(format!("safeguard_soundness ({} steps)", safeguards.soundness_violations));
    }
    let mut diagnostics = Vec::new();
    for sw in &switches {
        if sw.identification.pre.violations > 0 {
            diagnostics.push(format!(
                "identification error above ||Delta|| at switch {} ({} of {} steps, max ratio {:.4})",
                sw.index,
                sw.identification.pre.violations,
                sw.identification.pre.checked,
                sw.identification.pre.max_ratio.unwrap_or(0.0)
            ));
        }
        if sw.identification.projection.violations > 0 {
            diagnostics.push(format!(
                "||D S D^+|| above 1 at switch {} ({} of {} steps, max {:.4})",
                sw.index,
                sw.identification.projection.violations,
                sw.identification.projection.checked,
                sw.identification.projection.max_ratio.unwrap_or(0.0)
            ));
        }
        if sw.p1_safety.violations > 0 {
            failures.push(format!("p1_safety at switch {}", sw.index));
        }
        if sw.gradient_error.violations > 0 {
            failures.push(format!("gradient_error at switch {}", sw.index));
        }
    }
    if exact_recovery.estimate.violations > 0 || exact_recovery.update.violations > 0 {
        failures.push("exact_recovery".into());
    }

    let verdict = if !replay.consistent() || safeguards.soundness_violations > 0 {
        Verdict::Inconsistent
    } else if !hypotheses.all_satisfied {
        Verdict::Vacuous
    } else if guarantees.all()
        && switches.iter().all(|s| {
            s.p1_safety.violations == 0
                && s.gradient_error.violations == 0
        })
        && exact_recovery.estimate.violations == 0
        && exact_recovery.update.violations == 0
    {
        Verdict::Certified
    } else {
        Verdict::Violated
    };

    Ok(CertificateReport {
        cert_schema: CERT_SCHEMA,
        seed: run.seed,
        mu: cfg.mu,
        hypotheses,
        modes,
        switches,
        max_modes_in_window,
        exact_recovery,
        descent,
        safeguards,
        stability,
        envelope,
        trajectory,
        replay,
        guarantees,
        verdict,
        failures,
        diagnostics,
        notes: notes(),
    })
}

/// `‖D S D†‖` for the window at step `j`, `S` selecting the columns generated
/// by mode `post`.
fn projection_norm(
    run: &RunData<'_>,
    j: usize,
    lo: i64,
    window_modes: &[usize],
    post: usize,
    n: usize,
    m: usize,
) -> Result<f64> {
    let t = run.steps[j].t;
    let records = run.warmup.iter().chain(run.steps.iter()).filter(|r| r.t >= lo && r.t <= t);
    let len = window_modes.len();
    let mut d = Matrix::zeros(m + n, len);
    for (c, r) in records.enumerate() {
        if c >= len {
            return Err(Error::LogMismatch(format!("window at t = {t} is longer than expected")));
        }
        d.view_mut((0, c), (m, 1)).copy_from(&r.u);
        d.view_mut((m, c), (n, 1)).copy_from(&r.x);
    }
    let s = Matrix::from_diagonal(&Vector::from_iterator(
        len,
        window_modes.iter().map(|&md| if md == post { 1.0 } else { 0.0 }),
    ));
    let (d_pinv, _, _) = pinv(&d);
    Ok(op_norm(&(&d * s * d_pinv)))
}

/// Replay the controller and plant from the log and count mismatches.
fn replay_log(run: &RunData<'_>, weights: &CostWeights) -> Result<ReplayReport> {
    let cfg = run.config;
    let schedule = run.schedule;
    let mut rep = ReplayReport {
        schedule: cfg.schedule(run.seed).is_ok_and(|s| &s == schedule),
        length: run.steps.len() == cfg.horizon && run.warmup.len() == cfg.window,
        ..ReplayReport::default()
    };
    if !rep.schedule {
        rep.first_failure = Some("replay.schedule".into());
    }
    if !rep.length && rep.first_failure.is_none() {
        rep.first_failure = Some("replay.length".into());
    }
    let probe = cfg.probe_config(run.seed);
    let m = schedule.m();
    let k0 = cfg.initial_gain()?;
    let mut window = SlidingWindow::new(cfg.window, schedule.n(), m)?;
    let mut prev: Option<&StepRecord> = None;
    let expected_x0: Vector = cfg.x0_vector();
    let expected_start = schedule.t0() - cfg.window as i64;

    for (j, r) in run.warmup.iter().enumerate() {
        if j == 0 && (r.x != expected_x0 || r.t != expected_start) {
            rep.continuity += 1;
            rep.flag("continuity", r.t);
        }
        check_record(&mut rep, r, &probe, m, &schedule.modes()[0], prev);
        if r.k != k0 {
            rep.warmup_gain += 1;
            rep.flag("warmup_gain", r.t);
        }
        window.push(&r.x, &r.u, &r.x_next)?;
        prev = Some(r);
    }
    if run.steps.first().is_some_and(|r| r.k != k0) {
        rep.warmup_gain += 1;
        rep.flag("warmup_gain", run.steps[0].t);
    }
    for (j, r) in run.steps.iter().enumerate() {
        let model = schedule.model_at(r.t).unwrap_or(&schedule.modes()[0]);
        if r.t < schedule.t0() {
            rep.continuity += 1;
            rep.flag("continuity", r.t);
        }
        check_record(&mut rep, r, &probe, m, model, prev);
        window.push(&r.x, &r.u, &r.x_next)?;
        let estimate = window.identify()?;
        if r.estimate.as_ref() != Some(&estimate) {
            rep.identification += 1;
            rep.flag("identification", r.t);
        }
        let (k_next, est_cost, safeguard) =
            policy_update(&estimate, &r.k, weights, cfg.eta, cfg.steps_per_tick);
        let logged_next = run.steps.get(j + 1).map_or(run.final_gain, |nx| &nx.k);
        if &k_next != logged_next || est_cost != r.est_cost || safeguard != r.safeguard {
            rep.update += 1;
            rep.flag("update", r.t);
        }
        prev = Some(r);
    }
    Ok(rep)
}

fn check_record(
    rep: &mut ReplayReport,
    r: &StepRecord,
    probe: &crate::plant::ProbeConfig,
    m: usize,
    model: &PlantModel,
    prev: Option<&StepRecord>,
) {
    if let Some(p) = prev {
        if r.t != p.t + 1 || r.x != p.x_next {
            rep.continuity += 1;
            rep.flag("continuity", r.t);
        }
    }
    if r.e != probe_sample(probe, r.t, m) {
        rep.probe += 1;
        rep.flag("probe", r.t);
    }
    if r.u != &r.k.0 * &r.x + &r.e {
        rep.input_identity += 1;
        rep.flag("input_identity", r.t);
    }
    if r.x_next != &model.a * &r.x + &model.b * &r.u {
        rep.plant += 1;
        rep.flag("plant", r.t);
    }
}
