//! Scenario configuration: everything needed to reproduce a batch of runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqr::{CostWeights, PlantModel, PolicyGain};
use crate::numerics::{matrix_from_rows, solve_dare, Matrix, Vector};
use crate::plant::{random_walk_schedule, ModeSchedule, ProbeConfig, ProbeDistribution};

/// Mixed into each seed to decorrelate the probe stream from the mode draws.
const PROBE_SEED_SALT: u64 = 0x5851_F42D_4C95_7F2D;

pub fn reference_a0() -> Matrix {
    Matrix::from_row_slice(
        4,
        4,
        &[
            -0.13, 0.14, -0.29, 0.28, //
            0.48, 0.09, 0.41, 0.30, //
            -0.01, 0.04, 0.17, 0.43, //
            0.14, 0.31, -0.29, -0.10,
        ],
    )
}

pub fn reference_b0() -> Matrix {
    Matrix::from_row_slice(
        4,
        2,
        &[
            1.63, 0.93, //
            0.26, 1.79, //
            1.46, 1.18, //
            0.77, 0.11,
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeGen {
    /// Modes after the first, with their switch times.
    Explicit {
        modes: Vec<PlantModel>,
        switch_times: Vec<i64>,
    },
    RandomWalk {
        scale: f64,
        switches: usize,
        dwell: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGain {
    DareOfMode0,
    Explicit(#[serde(with = "crate::serde_matrix")] Matrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub distribution: ProbeDistribution,
    pub scale: f64,
}

fn default_blowup() -> f64 {
    crate::controller::DEFAULT_BLOWUP
}

fn default_mu() -> f64 {
    1.0
}

fn default_steps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A0", with = "crate::serde_matrix")]
    pub a0: Matrix,
    #[serde(rename = "B0", with = "crate::serde_matrix")]
    pub b0: Matrix,
    pub mode_gen: ModeGen,
    #[serde(rename = "L")]
    pub window: usize,
    pub eta: f64,
    #[serde(default = "default_steps")]
    pub steps_per_tick: usize,
    pub probe: ProbeSpec,
    #[serde(rename = "Q", with = "crate::serde_matrix")]
    pub q: Matrix,
    #[serde(rename = "R", with = "crate::serde_matrix")]
    pub r: Matrix,
    #[serde(rename = "K0")]
    pub k0: InitialGain,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// State at the start of the warm-up phase.
    pub x0: Vec<f64>,
    /// First online time step; warm-up occupies `[t0 − L, t0)`.
    pub t0: i64,
    /// Gradient-dominance surrogate used by the certificates.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Post-transition convergence budget reported next to the dwell-time bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_budget: Option<i64>,
}

impl ScenarioConfig {
    /// The built-in reference scenario: printed `(A₀, B₀)`, `Q = R = I`,
    /// `L = 25`, dwell 30, random-walk scale 0.1, ten switches.
    pub fn reference() -> Self {
        Self {
            name: Some("reference".into()),
            n: 4,
            m: 2,
            a0: reference_a0(),
            b0: reference_b0(),
            mode_gen: ModeGen::RandomWalk {
                scale: 0.1,
                switches: 10,
                dwell: 30,
            },
            window: 25,
            eta: 0.025,
            steps_per_tick: 1,
            probe: ProbeSpec {
                distribution: ProbeDistribution::Gaussian,
                scale: 0.1,
            },
            q: Matrix::identity(4, 4),
            r: Matrix::identity(2, 2),
            k0: InitialGain::DareOfMode0,
            horizon: 330,
            seeds: vec![42],
            blowup_threshold: default_blowup(),
            x0: vec![1.0, 1.0, 1.0, 1.0],
            t0: 25,
            mu: 1.0,
            convergence_budget: Some(5),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        if self.a0.shape() != (n, n) {
            return Err(Error::config("A0", format!("expected {n}x{n}")));
        }
        if self.b0.shape() != (n, m) {
            return Err(Error::config("B0", format!("expected {n}x{m}")));
        }
        if self.q.shape() != (n, n) {
            return Err(Error::config("Q", format!("expected {n}x{n}")));
        }
        if self.r.shape() != (m, m) {
            return Err(Error::config("R", format!("expected {m}x{m}")));
        }
        CostWeights::new(self.q.clone(), self.r.clone())
            .map_err(|e| Error::config("Q/R", e.to_string()))?;
        if self.window < n + m {
            return Err(Error::config("L", format!("must be at least n + m = {}", n + m)));
        }
        if self.horizon <= self.window {
            return Err(Error::config("horizon", "must exceed L"));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::config("eta", "must be positive"));
        }
        if self.steps_per_tick == 0 {
            return Err(Error::config("steps_per_tick", "must be at least 1"));
        }
        if !(self.probe.scale >= 0.0) {
            return Err(Error::config("probe.scale", "must be nonnegative"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::config("blowup_threshold", "must be positive"));
        }
        if self.x0.len() != n {
            return Err(Error::config("x0", format!("expected length {n}")));
        }
        if !(self.mu > 0.0) {
            return Err(Error::config("mu", "must be positive"));
        }
        match &self.mode_gen {
            ModeGen::RandomWalk { scale, dwell, .. } => {
                if !(*scale >= 0.0) {
                    return Err(Error::config("mode_gen.scale", "must be nonnegative"));
                }
                if *dwell < 1 {
                    return Err(Error::config("mode_gen.dwell", "must be at least 1"));
                }
            }
            ModeGen::Explicit {
                modes,
                switch_times,
            } => {
                if modes.len() != switch_times.len() {
                    return Err(Error::config(
                        "mode_gen.switch_times",
                        "need one switch time per additional mode",
                    ));
                }
                if modes.iter().any(|md| md.n() != n || md.m() != m) {
                    return Err(Error::config("mode_gen.modes", "mode dimensions differ from (n, m)"));
                }
            }
        }
        if let InitialGain::Explicit(k) = &self.k0 {
            if k.shape() != (m, n) {
                return Err(Error::config("K0", format!("expected {m}x{n}")));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights {
            q: self.q.clone(),
            r: self.r.clone(),
        }
    }

    pub fn probe_config(&self, seed: u64) -> ProbeConfig {
        ProbeConfig {
            distribution: self.probe.distribution,
            scale: self.probe.scale,
            seed: seed ^ PROBE_SEED_SALT,
        }
    }

    pub fn schedule(&self, seed: u64) -> Result<ModeSchedule> {
        match &self.mode_gen {
            ModeGen::RandomWalk {
                scale,
                switches,
                dwell,
            } => random_walk_schedule(&self.a0, &self.b0, *scale, *switches, *dwell, self.t0, seed),
            ModeGen::Explicit {
                modes,
                switch_times,
            } => {
                let mut all = vec![PlantModel::new(self.a0.clone(), self.b0.clone())?];
                all.extend(modes.iter().cloned());
                ModeSchedule::new(all, switch_times.clone(), self.t0)
            }
        }
    }

    pub fn initial_gain(&self) -> Result<PolicyGain> {
        match &self.k0 {
            InitialGain::DareOfMode0 => Ok(PolicyGain(solve_dare(&self.a0, &self.b0, &self.q, &self.r)?.k)),
            InitialGain::Explicit(k) => PolicyGain::new(k.clone()),
        }
    }

    pub fn x0_vector(&self) -> Vector {
        Vector::from_vec(self.x0.clone())
    }

    /// Replace the mode variation scale (random-walk scenarios only).
    pub fn with_variation_scale(mut self, new_scale: f64) -> Self {
        if let ModeGen::RandomWalk { scale, .. } = &mut self.mode_gen {
            *scale = new_scale;
        }
        self
    }
}

/// Parse a matrix given as row-major nested rows; convenience for examples.
pub fn rows(rows: &[&[f64]]) -> Result<Matrix> {
    matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}
