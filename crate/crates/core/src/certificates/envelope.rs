//! The two-term state-norm envelope: a geometric decay from `‖x_{t0}‖` plus a
//! uniform probing-noise term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: i64,
    pub mode: usize,
    pub state_norm: f64,
    pub decay_term: f64,
    pub probe_term: f64,
    pub total: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEnvelope {
    pub x0_norm: f64,
    /// Values at the last step: `ν₁ = Π κ̄_j`, `ν₂ = min ᾱ_j`, `ν₃ = max κ̄_j`
    /// over the modes seen so far.
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub points: Vec<EnvelopePoint>,
    pub violations: usize,
}

/// One online step as the envelope sees it.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeSample {
    pub t: i64,
    pub mode: usize,
    pub state_norm: f64,
    /// `‖B_{mode} e_t‖` of the probe applied at `t`.
    pub probe_norm: f64,
}

/// `bound(t) = ν₁ (1 − ν₂/2)^{t − t0 − i} ‖x_{t0}‖ + (2ν₃/ν₂) max_{t0 ≤ j < t} ‖B_j e_j‖`
/// with `i` the active mode index, evaluated at every sample (sorted by `t`,
/// the first one at `t0`).
pub fn state_envelope(
    samples: &[EnvelopeSample],
    kappas: &[f64],
    alphas: &[f64],
) -> Result<StateEnvelope> {
    if kappas.len() != alphas.len() {
        return Err(Error::dim("state_envelope", kappas.len(), alphas.len()));
    }
    let Some(first) = samples.first() else {
        return Ok(StateEnvelope {
            x0_norm: 0.0,
            nu1: 1.0,
            nu2: 1.0,
            nu3: 1.0,
            points: Vec::new(),
            violations: 0,
        });
    };
    if let Some(s) = samples.iter().find(|s| s.mode >= kappas.len()) {
        return Err(Error::dim("state_envelope (mode)", kappas.len(), s.mode + 1));
    }
    let t0 = first.t;
    let x0_norm = first.state_norm;
    let mut points = Vec::with_capacity(samples.len());
    let mut probe_max = 0.0_f64;
    let mut violations = 0;
    let (mut nu1, mut nu2, mut nu3) = (1.0, 1.0, 1.0);
    for s in samples {
        let seen = 0..=s.mode;
        nu1 = kappas[seen.clone()].iter().product::<f64>();
        nu2 = alphas[seen.clone()].iter().copied().fold(f64::INFINITY, f64::min);
        nu3 = kappas[seen].iter().copied().fold(0.0, f64::max);
        let exponent = (s.t - t0 - s.mode as i64) as f64;
        let decay_term = nu1 * (1.0 - nu2 / 2.0).powf(exponent) * x0_norm;
        let probe_term = 2.0 * nu3 / nu2 * probe_max;
        let total = decay_term + probe_term;
        let ok = s.state_norm <= total * (1.0 + 1e-12);
        if !ok {
            violations += 1;
        }
        points.push(EnvelopePoint {
            t: s.t,
            mode: s.mode,
            state_norm: s.state_norm,
            decay_term,
            probe_term,
            total,
            ok,
        });
        probe_max = probe_max.max(s.probe_norm);
    }
    Ok(StateEnvelope {
        x0_norm,
        nu1,
        nu2,
        nu3,
        points,
        violations,
    })
}
