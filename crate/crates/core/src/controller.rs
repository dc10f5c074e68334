//! The adaptive controller: probe-augmented feedback, sliding-window
//! identification and certainty-equivalent policy-gradient steps, with
//! explicit fallbacks when the identified model cannot be trusted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqr::{is_stabilizing, lqr_eval, CostWeights, PlantModel, PolicyGain};
use crate::numerics::Vector;
use crate::plant::{plant_step, probe_sample, ModeSchedule, PlantState, ProbeConfig};
use crate::sysid::{ModelEstimate, SlidingWindow};

pub const DEFAULT_BLOWUP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Safeguard {
    None,
    /// The window's data matrix lost full row rank.
    SkippedRank,
    /// The current gain does not stabilize the identified model.
    SkippedUnstableEstimate,
    /// A gradient step left the estimate's stabilizing set; rolled back.
    SkippedNonstabilizingUpdate,
}

/// One tick of the closed loop, as applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: i64,
    #[serde(with = "crate::serde_matrix::vector")]
    pub x: Vector,
    #[serde(with = "crate::serde_matrix::vector")]
    pub u: Vector,
    #[serde(with = "crate::serde_matrix::vector")]
    pub e: Vector,
    /// Gain applied at `t`.
    pub k: PolicyGain,
    #[serde(with = "crate::serde_matrix::vector")]
    pub x_next: Vector,
    /// Estimate identified after observing `x_next`; absent during warm-up.
    pub estimate: Option<ModelEstimate>,
    /// `Ĉ(K_t)` under `estimate`, absent when a safeguard fired.
    pub est_cost: Option<f64>,
    pub safeguard: Safeguard,
}

/// Result of feeding one observed triple to the controller.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub estimate: ModelEstimate,
    pub est_cost: Option<f64>,
    pub safeguard: Safeguard,
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    k: PolicyGain,
    window: SlidingWindow,
    eta: f64,
    steps_per_tick: usize,
    probe: ProbeConfig,
    weights: CostWeights,
    last_estimate: Option<ModelEstimate>,
    safeguard_log: Vec<(i64, Safeguard)>,
}

impl ControllerState {
    pub fn new(
        k0: PolicyGain,
        window_len: usize,
        eta: f64,
        steps_per_tick: usize,
        probe: ProbeConfig,
        weights: CostWeights,
    ) -> Result<Self> {
        let (m, n) = k0.0.shape();
        if weights.q.nrows() != n || weights.r.nrows() != m {
            return Err(Error::dim(
                "ControllerState weights",
                format!("Q {n}x{n}, R {m}x{m}"),
                format!("Q {0}x{0}, R {1}x{1}", weights.q.nrows(), weights.r.nrows()),
            ));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("step size must be positive, got {eta}")));
        }
        if steps_per_tick == 0 {
            return Err(Error::Domain("steps_per_tick must be at least 1".into()));
        }
        Ok(Self {
            k: k0,
            window: SlidingWindow::new(window_len, n, m)?,
            eta,
            steps_per_tick,
            probe,
            weights,
            last_estimate: None,
            safeguard_log: Vec::new(),
        })
    }

    pub fn gain(&self) -> &PolicyGain {
        &self.k
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn steps_per_tick(&self) -> usize {
        self.steps_per_tick
    }

    pub fn probe(&self) -> &ProbeConfig {
        &self.probe
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn last_estimate(&self) -> Option<&ModelEstimate> {
        self.last_estimate.as_ref()
    }

    pub fn safeguard_log(&self) -> &[(i64, Safeguard)] {
        &self.safeguard_log
    }

    /// `u = K x + e` with `e` the probe draw for time `t`.
    pub fn control_input(&self, t: i64, x: &Vector) -> Result<(Vector, Vector)> {
        if x.len() != self.k.0.ncols() {
            return Err(Error::dim("control_input", self.k.0.ncols(), x.len()));
        }
        let e = probe_sample(&self.probe, t, self.k.0.nrows());
        let u = &self.k.0 * x + &e;
        Ok((u, e))
    }

    /// Record a triple without identifying or updating (offline data).
    pub fn record_offline(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        self.window.push(x, u, x_next)
    }

    /// Push the triple, identify, and take `steps_per_tick` gradient steps
    /// on the identified model unless a safeguard applies.
    pub fn observe_and_update(
        &mut self,
        t: i64,
        x: &Vector,
        u: &Vector,
        x_next: &Vector,
    ) -> Result<UpdateOutcome> {
        self.window.push(x, u, x_next)?;
        let estimate = self.window.identify()?;
        let (est_cost, safeguard) = self.update_gain(&estimate);
        if safeguard != Safeguard::None {
            self.safeguard_log.push((t, safeguard));
        }
        self.last_estimate = Some(estimate.clone());
        Ok(UpdateOutcome {
            estimate,
            est_cost,
            safeguard,
        })
    }

    fn update_gain(&mut self, estimate: &ModelEstimate) -> (Option<f64>, Safeguard) {
        let (k, est_cost, safeguard) =
            policy_update(estimate, &self.k, &self.weights, self.eta, self.steps_per_tick);
        self.k = k;
        (est_cost, safeguard)
    }
}

/// The gain update performed after identification, as a pure function of the
/// estimate and the current gain. Returns the next gain, `Ĉ(K)` before the
/// first step when no safeguard fired, and the safeguard outcome.
pub fn policy_update(
    estimate: &ModelEstimate,
    k: &PolicyGain,
    weights: &CostWeights,
    eta: f64,
    steps_per_tick: usize,
) -> (PolicyGain, Option<f64>, Safeguard) {
    if !estimate.informative {
        return (k.clone(), None, Safeguard::SkippedRank);
    }
    let model = &estimate.model;
    if !matches!(is_stabilizing(model, k), Ok(true)) {
        return (k.clone(), None, Safeguard::SkippedUnstableEstimate);
    }
    let mut current = k.clone();
    let mut est_cost = None;
    for _ in 0..steps_per_tick {
        let Ok(eval) = lqr_eval(model, weights, &current) else {
            return (current, None, Safeguard::SkippedUnstableEstimate);
        };
        est_cost.get_or_insert(eval.cost);
        let next = &current.0 - eval.gradient * eta;
        match PolicyGain::new(next) {
            Ok(next) if matches!(is_stabilizing(model, &next), Ok(true)) => current = next,
            _ => return (current, None, Safeguard::SkippedNonstabilizingUpdate),
        }
    }
    (current, est_cost, Safeguard::None)
}

/// Run the initial gain with probing for `steps` ticks on mode 0, filling the
/// window with offline data. Times run from `state.t`.
pub fn warm_up(
    schedule: &ModeSchedule,
    controller: &mut ControllerState,
    mut x: Vector,
    t_start: i64,
    steps: usize,
) -> Result<(Vec<StepRecord>, Vector)> {
    let mode0 = &schedule.modes()[0];
    let mut records = Vec::with_capacity(steps);
    for j in 0..steps as i64 {
        let t = t_start + j;
        let (u, e) = controller.control_input(t, &x)?;
        let x_next = &mode0.a * &x + &mode0.b * &u;
        controller.record_offline(&x, &u, &x_next)?;
        records.push(StepRecord {
            t,
            x: x.clone(),
            u,
            e,
            k: controller.gain().clone(),
            x_next: x_next.clone(),
            estimate: None,
            est_cost: None,
            safeguard: Safeguard::None,
        });
        x = x_next;
    }
    Ok((records, x))
}

/// Drive the controller against the switched plant for `horizon` ticks.
pub fn run_closed_loop(
    schedule: &ModeSchedule,
    controller: &mut ControllerState,
    initial: PlantState,
    horizon: usize,
    blowup_threshold: f64,
) -> Result<Vec<StepRecord>> {
    let mut state = initial;
    let mut records = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (u, e) = controller.control_input(state.t, &state.x)?;
        let k = controller.gain().clone();
        let next = plant_step(schedule, &state, &u)?;
        let outcome = controller.observe_and_update(state.t, &state.x, &u, &next.x)?;
        records.push(StepRecord {
            t: state.t,
            x: state.x.clone(),
            u,
            e,
            k,
            x_next: next.x.clone(),
            estimate: Some(outcome.estimate),
            est_cost: outcome.est_cost,
            safeguard: outcome.safeguard,
        });
        let norm = next.x.norm();
        if !(norm <= blowup_threshold) {
            return Err(Error::Aborted {
                t: next.t,
                norm,
                partial: Box::new(records),
            });
        }
        state = next;
    }
    Ok(records)
}

/// The time-invariant loop: the same controller against one fixed `(A, B)`,
/// with no schedule involved.
pub fn run_lti(
    model: &PlantModel,
    controller: &mut ControllerState,
    mut x: Vector,
    t_start: i64,
    horizon: usize,
) -> Result<Vec<StepRecord>> {
    let mut records = Vec::with_capacity(horizon);
    for j in 0..horizon as i64 {
        let t = t_start + j;
        let (u, e) = controller.control_input(t, &x)?;
        let k = controller.gain().clone();
        let x_next = &model.a * &x + &model.b * &u;
        let outcome = controller.observe_and_update(t, &x, &u, &x_next)?;
        records.push(StepRecord {
            t,
            x: x.clone(),
            u,
            e,
            k,
            x_next: x_next.clone(),
            estimate: Some(outcome.estimate),
            est_cost: outcome.est_cost,
            safeguard: outcome.safeguard,
        });
        x = x_next;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::pg_step;
    use crate::numerics::{op_norm, solve_dare, Matrix};
    use crate::scenario::{reference_a0, reference_b0};

    fn iv_model() -> PlantModel {
        PlantModel::new(reference_a0(), reference_b0()).unwrap()
    }

    fn dare_gain(m: &PlantModel) -> PolicyGain {
        let w = CostWeights::identity(m.n(), m.m());
        PolicyGain(solve_dare(&m.a, &m.b, &w.q, &w.r).unwrap().k)
    }

    #[test]
    fn control_input_splits_probe() {
        let m = iv_model();
        let c = ControllerState::new(
            PolicyGain::zeros(2, 4),
            25,
            0.01,
            1,
            ProbeConfig::gaussian(0.1, 3),
            CostWeights::identity(4, 2),
        )
        .unwrap();
        let (u, e) = c.control_input(5, &Vector::from_element(4, 1.0)).unwrap();
        assert_eq!(u, e);
        let off = ControllerState::new(dare_gain(&m), 25, 0.01, 1, ProbeConfig::off(), CostWeights::identity(4, 2)).unwrap();
        let (u, _) = off.control_input(0, &Vector::zeros(4)).unwrap();
        assert_eq!(u, Vector::zeros(2));
        assert!(off.control_input(0, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn rank_safeguard_keeps_gain() {
        let m = iv_model();
        let k0 = dare_gain(&m);
        let mut c = ControllerState::new(k0.clone(), 25, 0.01, 1, ProbeConfig::off(), CostWeights::identity(4, 2)).unwrap();
        let x = Vector::from_element(4, 1.0);
        let (u, _) = c.control_input(0, &x).unwrap();
        let xn = &m.a * &x + &m.b * &u;
        let out = c.observe_and_update(0, &x, &u, &xn).unwrap();
        assert_eq!(out.safeguard, Safeguard::SkippedRank);
        assert_eq!(c.gain(), &k0);
        assert_eq!(c.safeguard_log().len(), 1);
    }

    #[test]
    fn exact_window_matches_model_based_step() {
        let m = iv_model();
        let w = CostWeights::identity(4, 2);
        let k0 = PolicyGain(dare_gain(&m).0 + Matrix::from_element(2, 4, 0.02));
        let mut c = ControllerState::new(k0.clone(), 25, 0.01, 1, ProbeConfig::gaussian(0.1, 1), w.clone()).unwrap();
        let schedule = ModeSchedule::single(m.clone(), 25);
        let (_, x) = warm_up(&schedule, &mut c, Vector::from_element(4, 1.0), 0, 25).unwrap();
        let (u, _) = c.control_input(25, &x).unwrap();
        let xn = &m.a * &x + &m.b * &u;
        let out = c.observe_and_update(25, &x, &u, &xn).unwrap();
        assert_eq!(out.safeguard, Safeguard::None);
        let exact = pg_step(&m, &w, &k0, 0.01).unwrap();
        assert!(op_norm(&(c.gain().0.clone() - exact.0)) <= 1e-8);
    }

    #[test]
    fn equilibrium_stays_put() {
        let m = iv_model();
        let k = dare_gain(&m);
        let schedule = ModeSchedule::single(m.clone(), 0);
        let mut c = ControllerState::new(k.clone(), 25, 0.01, 1, ProbeConfig::off(), CostWeights::identity(4, 2)).unwrap();
        let st = PlantState::new(&schedule, 0, Vector::zeros(4)).unwrap();
        let recs = run_closed_loop(&schedule, &mut c, st, 40, DEFAULT_BLOWUP).unwrap();
        assert_eq!(recs.len(), 40);
        assert!(recs.iter().all(|r| r.x == Vector::zeros(4) && r.k == k));
    }

    #[test]
    fn blowup_aborts_with_partial_log() {
        let m = PlantModel::new(Matrix::identity(1, 1) * 3.0, Matrix::identity(1, 1)).unwrap();
        let schedule = ModeSchedule::single(m, 0);
        let mut c = ControllerState::new(PolicyGain::zeros(1, 1), 5, 0.01, 1, ProbeConfig::off(), CostWeights::identity(1, 1)).unwrap();
        let st = PlantState::new(&schedule, 0, Vector::from_element(1, 1.0)).unwrap();
        match run_closed_loop(&schedule, &mut c, st, 100, 1e3) {
            Err(Error::Aborted { partial, .. }) => assert_eq!(partial.len(), 7),
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
