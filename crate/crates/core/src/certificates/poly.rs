//! The polynomial constants `p₁ … p₇` of the perturbation analysis, evaluated
//! from norm bounds that depend only on a reference cost and the mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqr::{CostWeights, PlantModel};
use crate::numerics::op_norm;

/// `p₁(a) = σ(Q) / (4a (1 + a/σ(Q)) (1 + sqrt(a/σ(R))))`.
pub fn p1(a: f64, sigma_q: f64, sigma_r: f64) -> f64 {
    sigma_q / (4.0 * a * (1.0 + a / sigma_q) * (1.0 + (a / sigma_r).sqrt()))
}

/// Constants evaluated at one reference cost `c_ref` for one mode.
///
/// `p7` and `l` are measured surrogates and `mu` is configured; see the
/// report notes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyConstants {
    pub c_ref: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub p6: f64,
    pub p7: f64,
    pub mu: f64,
    pub l: f64,
}

/// Norm bounds valid for every gain whose cost on `model` is at most `c`.
#[derive(Debug, Clone, Copy)]
struct NormBounds {
    /// `‖Σ‖ ≤ C/σ(Q)`.
    sigma: f64,
    /// `‖P‖ ≤ C`.
    p: f64,
    /// `‖K‖ ≤ sqrt(C/σ(R))`.
    k: f64,
    /// `‖A ± BK‖ ≤ ‖A‖ + ‖B‖ sqrt(C/σ(R))`, covering both sign conventions.
    a_cl: f64,
    b: f64,
    r: f64,
}

impl NormBounds {
    fn new(model: &PlantModel, weights: &CostWeights, c: f64) -> Self {
        let (sq, sr) = (weights.sigma_min_q(), weights.sigma_min_r());
        let a = op_norm(&model.a);
        let b = op_norm(&model.b);
        let k = (c / sr).sqrt();
        Self {
            sigma: c / sq,
            p: c,
            k,
            a_cl: a + b * k,
            b,
            r: op_norm(&weights.r),
        }
    }
}

/// `p₃` assembled along the gradient-error argument:
/// `‖∇Ĉ − ∇C‖ ≤ 2‖E‖‖Σ − Σ̂‖ + 2‖Ê − E‖‖Σ̂‖`, with
/// `‖E‖² ≤ Tr(EᵀE) ≤ ‖R + BᵀPB‖ (C − C*)`, `‖Σ − Σ̂‖ ≤ p₂‖Δ‖`, `‖Σ̂‖ ≤ 2C/σ(Q)`
/// and the two-term expansion of `E − Ê`.
fn assemble_p3(nb: &NormBounds, c: f64, p1: f64, p2: f64) -> f64 {
    // ‖R + BᵀPB‖ (C − C*) with C − C* ≤ C. The square root is the sharp
    // bound on ‖E‖; the unsquared product is kept as a floor so the result
    // never undercuts the displayed form.
    let e_sq = (nb.r + nb.b * nb.b * nb.p) * c;
    let e_norm = e_sq.max(e_sq.sqrt());
    let sigma_term = 2.0 * e_norm * p2;

    let bt_p = nb.b * nb.p;
    let first = bt_p * (1.0 + nb.k);
    let bt_p_diff = (nb.b + p1) * c * p2 + nb.p;
    let a_cl_hat = nb.a_cl + (1.0 + nb.k) * p1;
    let e_diff = first + bt_p_diff * a_cl_hat;
    let sigma_hat = 2.0 * nb.sigma;
    sigma_term + 2.0 * e_diff * sigma_hat
}

/// Every constant at reference cost `c_ref`. `mu` and `l` are supplied by the
/// caller; `p₇ = 1/(2l)`.
pub fn compute_poly_constants(
    model: &PlantModel,
    weights: &CostWeights,
    c_ref: f64,
    mu: f64,
    l: f64,
) -> Result<PolyConstants> {
    if !(c_ref > 0.0) || !c_ref.is_finite() {
        return Err(Error::Domain(format!("reference cost must be positive, got {c_ref}")));
    }
    if !(mu > 0.0) || !(l > 0.0) {
        return Err(Error::Domain(format!("μ and l must be positive, got {mu}, {l}")));
    }
    let (sq, sr) = (weights.sigma_min_q(), weights.sigma_min_r());
    let nb = NormBounds::new(model, weights, c_ref);
    let p1 = p1(c_ref, sq, sr);
    let p2 = c_ref / (sq * p1);
    let p3 = assemble_p3(&nb, c_ref, p1, p2);
    let p4 = sq * mu / (4.0 * c_ref * nb.b * (nb.a_cl + 1.0));
    let p5 = 4.0 * (c_ref / sq).powi(2) * nb.b * (nb.a_cl + 1.0) / mu;
    let p6 = p5 * c_ref;
    let p7 = 0.5 / l;
    Ok(PolyConstants {
        c_ref,
        p1,
        p2,
        p3,
        p4,
        p5,
        p6,
        p7,
        mu,
        l,
    })
}

/// As [`compute_poly_constants`], additionally rejecting `c_ref < C*`.
pub fn compute_poly_constants_checked(
    model: &PlantModel,
    weights: &CostWeights,
    c_ref: f64,
    c_star: f64,
    mu: f64,
    l: f64,
) -> Result<PolyConstants> {
    if c_ref < c_star * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "reference cost {c_ref} is below the optimal cost {c_star}"
        )));
    }
    compute_poly_constants(model, weights, c_ref, mu, l)
}
