//! Scalar bound calculus: per-mode cost bounds, admissible variation and step
//! size, and the dwell-time condition.

use serde::{Deserialize, Serialize};

use super::poly::PolyConstants;
use crate::error::{Error, Result};

/// `C̄ = max{C(K at the switch), C* + 1}`.
pub fn cost_bound_within_mode(c_at_switch: f64, c_star: f64) -> f64 {
    c_at_switch.max(c_star + 1.0)
}

/// `C̄_{i+1} = C̄_i (1 + p̄₂ ‖Δ_i‖)`.
pub fn cost_bound_across_switch(c_bar: f64, p2_bar: f64, delta_norm: f64) -> f64 {
    c_bar * (1.0 + p2_bar * delta_norm)
}

/// `ν₂ = min{1/(2μ p̄₃ p̄₆), p̄₁}`.
pub fn admissible_delta(bar: &PolyConstants) -> f64 {
    (1.0 / (2.0 * bar.mu * bar.p3 * bar.p6)).min(bar.p1)
}

/// The candidate terms of the step-size condition. Terms divided by `p̄₈`
/// are absent when `p̄₈ = 0` (no variation), since they are then unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaBound {
    /// `ᾱ / (2 κ̄² p̄₅ p̄₈)`.
    pub strong_stability: Option<f64>,
    /// `1 / l̄`.
    pub smoothness: f64,
    /// `p₄* / p̄₈`.
    pub perturbation: Option<f64>,
    /// `p̄₇`.
    pub step_polynomial: f64,
    /// The stand-in used for `p̄₈`.
    pub p8_bar: f64,
    pub value: f64,
}

pub fn admissible_eta(
    bar: &PolyConstants,
    star: &PolyConstants,
    kappa: f64,
    alpha: f64,
    p8_bar: f64,
) -> EtaBound {
    let (strong_stability, perturbation) = if p8_bar > 0.0 {
        (
            Some(alpha / (2.0 * kappa * kappa * bar.p5 * p8_bar)),
            Some(star.p4 / p8_bar),
        )
    } else {
        (None, None)
    };
    let smoothness = 1.0 / bar.l;
    let step_polynomial = bar.p7;
    let value = [strong_stability, perturbation]
        .into_iter()
        .flatten()
        .fold(smoothness.min(step_polynomial), f64::min);
    EtaBound {
        strong_stability,
        smoothness,
        perturbation,
        step_polynomial,
        p8_bar,
        value,
    }
}

/// Both readings of the dwell-time condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellBound {
    /// `(2μ/η) log(1/(C̄ − C*)) + L`.
    pub approx: f64,
    /// `log(1/(C̄ − C*)) / (−log(1 − η/2μ)) + L`.
    pub exact: f64,
    /// The value checked against the dwell time: `exact`.
    pub value: f64,
    /// Steps of the noiseless recursion needed to bring `C̄ − C*` down to 1,
    /// plus `L`.
    pub time_to_c_star_plus_one: f64,
}

pub fn dwell_time_lower_bound(
    mu: f64,
    eta: f64,
    c_bar: f64,
    c_star: f64,
    window: usize,
) -> Result<DwellBound> {
    let gap = c_bar - c_star;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!(
            "dwell-time bound needs C̄ > C*, got C̄ = {c_bar}, C* = {c_star}"
        )));
    }
    let ratio = eta / (2.0 * mu);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("dwell-time bound needs 0 < η < 2μ, got η/2μ = {ratio}")));
    }
    let l = window as f64;
    let log_term = (1.0 / gap).ln();
    let rate = -(1.0 - ratio).ln();
    let approx = log_term / ratio + l;
    let exact = log_term / rate + l;
    let value = exact;
    let time_to_c_star_plus_one = (gap.ln() / rate).max(0.0).ceil() + l;
    Ok(DwellBound {
        approx,
        exact,
        value,
        time_to_c_star_plus_one,
    })
}
