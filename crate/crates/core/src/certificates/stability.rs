//! Sequential strong stability of a gain sequence against its true modes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lqr::{lqr_cost, strong_stability_params, CostWeights, PlantModel, PolicyGain};
use crate::numerics::{op_norm, solve_dlyap, spectral_radius, sqrtm_psd, LyapunovForm, Matrix};

/// Slack applied to every norm comparison.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Factorization {
    pub sigma: Matrix,
    pub h: Matrix,
    pub h_inv: Matrix,
    pub l: Matrix,
}

/// `A_cl = H L H⁻¹` with `H = Σ^{1/2}`, `Σ = I + A_cl Σ A_clᵀ`.
pub fn strong_stability_factorize(a_cl: &Matrix) -> Result<Factorization> {
    let n = a_cl.nrows();
    let sigma = solve_dlyap(a_cl, &Matrix::identity(n, n), LyapunovForm::Covariance)?;
    let h = sqrtm_psd(&sigma)?;
    let h_inv = h
        .clone()
        .try_inverse()
        .ok_or_else(|| crate::Error::Domain("Σ^{1/2} is singular".into()))?;
    let l = &h_inv * a_cl * &h;
    Ok(Factorization { sigma, h, h_inv, l })
}

/// Norms entering the three conditions at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStability {
    pub t: i64,
    pub mode: usize,
    /// Per-policy parameters from the true cost at `t`.
    pub kappa_t: f64,
    pub alpha_t: f64,
    pub norm_l: f64,
    pub norm_k: f64,
    pub norm_h: f64,
    pub norm_h_inv: f64,
    /// `‖H_{t+1}⁻¹ H_t‖`; absent at the last step.
    pub norm_transition: Option<f64>,
    /// `‖H L H⁻¹ − A_cl‖`.
    pub reconstruction: f64,
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_iii: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCert {
    pub kappa_bar: f64,
    pub alpha_bar: f64,
    /// Reference cost the global parameters were derived from.
    pub c_bar: f64,
    pub steps: Vec<StepStability>,
    /// Steps whose gain does not stabilize the true mode.
    pub unstable_steps: Vec<i64>,
    pub cond_i_pass: bool,
    pub cond_ii_pass: bool,
    pub cond_iii_pass: bool,
    pub first_failure: Option<i64>,
    pub max_reconstruction: f64,
}

impl StabilityCert {
    pub fn all_pass(&self) -> bool {
        self.unstable_steps.is_empty() && self.cond_i_pass && self.cond_ii_pass && self.cond_iii_pass
    }
}

/// One element of the sequence: time, active mode index, true model, gain.
pub struct SequenceItem<'a> {
    pub t: i64,
    pub mode: usize,
    pub model: &'a PlantModel,
    pub gain: &'a PolicyGain,
}

/// Evaluate the three sequential strong-stability conditions with the global `(κ̄, ᾱ)` derived
/// from `c_bar`.
pub fn check_sequential_stability(
    run: &[SequenceItem<'_>],
    weights: &CostWeights,
    c_bar: f64,
) -> Result<StabilityCert> {
    let (kappa_bar, alpha_bar) = strong_stability_params(c_bar, weights)?;
    let mut factors: Vec<Option<(Factorization, f64)>> = Vec::with_capacity(run.len());
    let mut unstable_steps = Vec::new();
    for item in run {
        let a_cl = item.model.closed_loop(item.gain)?;
        if spectral_radius(&a_cl)? >= 1.0 {
            unstable_steps.push(item.t);
            factors.push(None);
            continue;
        }
        let f = strong_stability_factorize(&a_cl)?;
        let rec = op_norm(&(&f.h * &f.l * &f.h_inv - &a_cl));
        factors.push(Some((f, rec)));
    }

    let mut steps = Vec::with_capacity(run.len());
    let mut first_failure = unstable_steps.first().copied();
    let (mut c1, mut c2, mut c3) = (true, true, true);
    let mut max_reconstruction = 0.0_f64;
    for (j, item) in run.iter().enumerate() {
        let Some((f, rec)) = &factors[j] else { continue };
        let cost = lqr_cost(item.model, weights, item.gain)?;
        let (kappa_t, alpha_t) = strong_stability_params(cost, weights)?;
        let norm_l = op_norm(&f.l);
        let norm_k = item.gain.norm();
        let norm_h = op_norm(&f.h);
        let norm_h_inv = op_norm(&f.h_inv);
        let norm_transition = factors
            .get(j + 1)
            .and_then(Option::as_ref)
            .map(|(next, _)| op_norm(&(&next.h_inv * &f.h)));
        let cond_i = norm_l <= 1.0 - alpha_bar + STABILITY_TOL && norm_k <= kappa_bar + STABILITY_TOL;
        let cond_ii = norm_h <= kappa_bar + STABILITY_TOL && norm_h_inv <= 1.0 + STABILITY_TOL;
        let cond_iii = norm_transition.is_none_or(|v| v <= 1.0 + alpha_bar / 2.0 + STABILITY_TOL);
        if !(cond_i && cond_ii && cond_iii) && first_failure.is_none_or(|t| item.t < t) {
            first_failure = Some(item.t);
        }
        c1 &= cond_i;
        c2 &= cond_ii;
        c3 &= cond_iii;
        max_reconstruction = max_reconstruction.max(*rec);
        steps.push(StepStability {
            t: item.t,
            mode: item.mode,
            kappa_t,
            alpha_t,
            norm_l,
            norm_k,
            norm_h,
            norm_h_inv,
            norm_transition,
            reconstruction: *rec,
            cond_i,
            cond_ii,
            cond_iii,
        });
    }
    Ok(StabilityCert {
        kappa_bar,
        alpha_bar,
        c_bar,
        steps,
        unstable_steps,
        cond_i_pass: c1,
        cond_ii_pass: c2,
        cond_iii_pass: c3,
        first_failure,
        max_reconstruction,
    })
}
