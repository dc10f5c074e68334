//! Ground-truth switched linear plant, mode schedules and probing noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqr::PlantModel;
use crate::numerics::{op_norm, Matrix, Vector};

/// Modes `0..=N` with switch times `T_0 < … < T_{N−1}`. Mode `i` is active on
/// `[T_{i−1}, T_i)` with `T_{−1} = t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ModeSchedule {
    modes: Vec<PlantModel>,
    switch_times: Vec<i64>,
    t0: i64,
}

#[derive(Deserialize)]
struct RawSchedule {
    modes: Vec<PlantModel>,
    switch_times: Vec<i64>,
    t0: i64,
}

impl TryFrom<RawSchedule> for ModeSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        ModeSchedule::new(raw.modes, raw.switch_times, raw.t0)
    }
}

impl ModeSchedule {
    pub fn new(modes: Vec<PlantModel>, switch_times: Vec<i64>, t0: i64) -> Result<Self> {
        let first = modes
            .first()
            .ok_or_else(|| Error::Domain("schedule needs at least one mode".into()))?;
        let (n, m) = (first.n(), first.m());
        if let Some(bad) = modes.iter().find(|md| md.n() != n || md.m() != m) {
            return Err(Error::dim(
                "ModeSchedule modes",
                format!("n={n}, m={m}"),
                format!("n={}, m={}", bad.n(), bad.m()),
            ));
        }
        if switch_times.len() + 1 != modes.len() {
            return Err(Error::dim(
                "ModeSchedule switch times",
                modes.len() - 1,
                switch_times.len(),
            ));
        }
        if switch_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("switch times must be strictly increasing".into()));
        }
        if switch_times.first().is_some_and(|&t| t <= t0) {
            return Err(Error::Domain("first switch must come after t0".into()));
        }
        Ok(Self {
            modes,
            switch_times,
            t0,
        })
    }

    /// A schedule that never switches.
    pub fn single(model: PlantModel, t0: i64) -> Self {
        Self {
            modes: vec![model],
            switch_times: Vec::new(),
            t0,
        }
    }

    pub fn modes(&self) -> &[PlantModel] {
        &self.modes
    }

    pub fn switch_times(&self) -> &[i64] {
        &self.switch_times
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn n(&self) -> usize {
        self.modes[0].n()
    }

    pub fn m(&self) -> usize {
        self.modes[0].m()
    }

    /// The unique `i` with `T_{i−1} ≤ t < T_i`.
    pub fn mode_at(&self, t: i64) -> Result<usize> {
        if t < self.t0 {
            return Err(Error::Domain(format!("time {t} precedes t0 = {}", self.t0)));
        }
        Ok(self.switch_times.partition_point(|&ts| ts <= t))
    }

    pub fn model_at(&self, t: i64) -> Result<&PlantModel> {
        Ok(&self.modes[self.mode_at(t)?])
    }

    /// First time step at which mode `i` is active.
    pub fn mode_start(&self, i: usize) -> i64 {
        if i == 0 {
            self.t0
        } else {
            self.switch_times[i - 1]
        }
    }

    /// `Δ_i = [B_{i+1}, A_{i+1}] − [B_i, A_i]` for every switch.
    pub fn deltas(&self) -> Vec<Matrix> {
        self.modes
            .windows(2)
            .map(|w| w[1].stacked() - w[0].stacked())
            .collect()
    }

    /// `‖Δ_i‖` (induced 2-norm) for every switch.
    pub fn delta_norms(&self) -> Vec<f64> {
        self.deltas().iter().map(op_norm).collect()
    }

    /// `min_i (T_{i+1} − T_i) ≥ L` and `T_0 − t0 ≥ L`.
    pub fn dwell_ok(&self, window: usize) -> bool {
        let l = window as i64;
        let first_ok = self.switch_times.first().is_none_or(|&t| t - self.t0 >= l);
        first_ok && self.switch_times.windows(2).all(|w| w[1] - w[0] >= l)
    }

    /// Scale every `Δ_i` by `factor` around mode 0, keeping the switch times.
    pub fn scaled_variation(&self, factor: f64) -> Result<Self> {
        let base = &self.modes[0];
        let mut modes = vec![base.clone()];
        let mut a = base.a.clone();
        let mut b = base.b.clone();
        for w in self.modes.windows(2) {
            a += (&w[1].a - &w[0].a) * factor;
            b += (&w[1].b - &w[0].b) * factor;
            modes.push(PlantModel::new(a.clone(), b.clone())?);
        }
        Self::new(modes, self.switch_times.clone(), self.t0)
    }
}

/// Random-walk modes `A_{i+1} = A_i + scale·Ā_i`, `B_{i+1} = B_i + scale·B̄_i`
/// with standard normal entries, switching every `dwell` steps after `t0`.
pub fn random_walk_schedule(
    a0: &Matrix,
    b0: &Matrix,
    scale: f64,
    switches: usize,
    dwell: i64,
    t0: i64,
    seed: u64,
) -> Result<ModeSchedule> {
    if scale < 0.0 || !scale.is_finite() {
        return Err(Error::Domain(format!("random walk scale must be nonnegative, got {scale}")));
    }
    if dwell < 1 {
        return Err(Error::Domain(format!("dwell must be at least 1, got {dwell}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| -> Matrix {
        // Row-major fill order so the stream maps to entries predictably.
        let vals: Vec<f64> = (0..r * c).map(|_| StandardNormal.sample(&mut rng)).collect();
        Matrix::from_row_slice(r, c, &vals)
    };
    let first = PlantModel::new(a0.clone(), b0.clone())?;
    let (n, m) = (first.n(), first.m());
    let mut modes = vec![first];
    for _ in 0..switches {
        let prev = modes.last().expect("non-empty");
        let a_bar = draw(n, n);
        let b_bar = draw(n, m);
        let next = PlantModel::new(&prev.a + a_bar * scale, &prev.b + b_bar * scale)?;
        modes.push(next);
    }
    let switch_times = (0..switches as i64).map(|i| t0 + (i + 1) * dwell).collect();
    ModeSchedule::new(modes, switch_times, t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeDistribution {
    /// Zero-mean normal with standard deviation `scale`.
    Gaussian,
    /// Uniform on `[−scale, scale]`.
    Uniform,
}

/// Probing-noise law for `e_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub distribution: ProbeDistribution,
    pub scale: f64,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn gaussian(scale: f64, seed: u64) -> Self {
        Self {
            distribution: ProbeDistribution::Gaussian,
            scale,
            seed,
        }
    }

    pub fn off() -> Self {
        Self::gaussian(0.0, 0)
    }
}

/// Counter-based probe draw: the value depends only on `(seed, t, coordinate)`.
pub fn probe_sample(config: &ProbeConfig, t: i64, m: usize) -> Vector {
    if config.scale == 0.0 {
        return Vector::zeros(m);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t as u64);
    match config.distribution {
        ProbeDistribution::Gaussian => Vector::from_fn(m, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * config.scale
        }),
        ProbeDistribution::Uniform => {
            let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid bounds");
            Vector::from_fn(m, |_, _| unit.sample(&mut rng) * config.scale)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub t: i64,
    pub x: Vector,
    pub mode_index: usize,
}

impl PlantState {
    pub fn new(schedule: &ModeSchedule, t: i64, x: Vector) -> Result<Self> {
        if x.len() != schedule.n() {
            return Err(Error::dim("PlantState", schedule.n(), x.len()));
        }
        Ok(Self {
            mode_index: schedule.mode_at(t)?,
            t,
            x,
        })
    }
}

/// `x⁺ = A_i x + B_i u` with `i = mode_at(t)`.
pub fn plant_step(schedule: &ModeSchedule, state: &PlantState, u: &Vector) -> Result<PlantState> {
    if u.len() != schedule.m() {
        return Err(Error::dim("plant_step (input)", schedule.m(), u.len()));
    }
    if state.x.len() != schedule.n() {
        return Err(Error::dim("plant_step (state)", schedule.n(), state.x.len()));
    }
    let model = schedule.model_at(state.t)?;
    let x = &model.a * &state.x + &model.b * u;
    let t = state.t + 1;
    Ok(PlantState {
        mode_index: schedule.mode_at(t)?,
        t,
        x,
    })
}
