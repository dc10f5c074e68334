//! LQR cost as a function of the feedback gain, its exact gradient, and
//! gradient-descent policy updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    min_sym_eigenvalue, op_norm, solve_dlyap, spectral_radius, LyapunovForm, Matrix,
};

/// One mode's `(A, B)` pair, either ground truth or an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    #[serde(with = "crate::serde_matrix")]
    pub a: Matrix,
    #[serde(with = "crate::serde_matrix")]
    pub b: Matrix,
}

impl PlantModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(
                "PlantModel (A)",
                "square",
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::dim("PlantModel (B rows)", a.nrows(), b.nrows()));
        }
        crate::numerics::ensure_finite(&a, "PlantModel (A)")?;
        crate::numerics::ensure_finite(&b, "PlantModel (B)")?;
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `A + B K`.
    pub fn closed_loop(&self, k: &PolicyGain) -> Result<Matrix> {
        self.check_gain(k)?;
        Ok(&self.a + &self.b * &k.0)
    }

    /// The stacked parameter matrix `[B, A]` used by identification.
    pub fn stacked(&self) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let mut g = Matrix::zeros(n, m + n);
        g.columns_mut(0, m).copy_from(&self.b);
        g.columns_mut(m, n).copy_from(&self.a);
        g
    }

    /// Inverse of [`PlantModel::stacked`].
    pub fn from_stacked(g: &Matrix, m: usize) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n + m {
            return Err(Error::dim("PlantModel::from_stacked", n + m, g.ncols()));
        }
        Self::new(g.columns(m, n).into_owned(), g.columns(0, m).into_owned())
    }

    fn check_gain(&self, k: &PolicyGain) -> Result<()> {
        if k.0.shape() != (self.m(), self.n()) {
            return Err(Error::dim(
                "policy gain",
                format!("{}x{}", self.m(), self.n()),
                format!("{}x{}", k.0.nrows(), k.0.ncols()),
            ));
        }
        Ok(())
    }
}

/// Positive definite weighting matrices of the quadratic cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    #[serde(with = "crate::serde_matrix")]
    pub q: Matrix,
    #[serde(with = "crate::serde_matrix")]
    pub r: Matrix,
}

impl CostWeights {
    pub fn new(q: Matrix, r: Matrix) -> Result<Self> {
        for (name, w) in [("Q", &q), ("R", &r)] {
            if !w.is_square() {
                return Err(Error::dim("CostWeights", "square", name));
            }
            if (w - w.transpose()).norm() > 1e-12 * (1.0 + w.norm()) {
                return Err(Error::Domain(format!("{name} is not symmetric")));
            }
            let min = min_sym_eigenvalue(w);
            if min <= 1e-12 {
                return Err(Error::Domain(format!(
                    "{name} is not positive definite (min eigenvalue {min:e})"
                )));
            }
        }
        Ok(Self { q, r })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            q: Matrix::identity(n, n),
            r: Matrix::identity(m, m),
        }
    }

    pub fn sigma_min_q(&self) -> f64 {
        min_sym_eigenvalue(&self.q)
    }

    pub fn sigma_min_r(&self) -> f64 {
        min_sym_eigenvalue(&self.r)
    }
}

/// State-feedback gain `K` in the convention `u = K x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyGain(#[serde(with = "crate::serde_matrix")] pub Matrix);

impl PolicyGain {
    pub fn new(k: Matrix) -> Result<Self> {
        crate::numerics::ensure_finite(&k, "PolicyGain")?;
        Ok(Self(k))
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self(Matrix::zeros(m, n))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.0)
    }
}

/// Everything `lqr_eval` computes for one gain.
#[derive(Debug, Clone)]
pub struct LqrEval {
    /// Closed-loop covariance `Σ_K = I + (A+BK) Σ_K (A+BK)ᵀ`.
    pub sigma: Matrix,
    /// Value matrix `P = Q + KᵀRK + (A+BK)ᵀ P (A+BK)`.
    pub p: Matrix,
    pub cost: f64,
    pub gradient: Matrix,
}

pub fn is_stabilizing(model: &PlantModel, k: &PolicyGain) -> Result<bool> {
    Ok(spectral_radius(&model.closed_loop(k)?)? < 1.0)
}

/// Cost only; one Lyapunov solve.
pub fn lqr_cost(model: &PlantModel, weights: &CostWeights, k: &PolicyGain) -> Result<f64> {
    let a_cl = model.closed_loop(k)?;
    let n = model.n();
    let sigma = solve_dlyap(&a_cl, &Matrix::identity(n, n), LyapunovForm::Covariance)?;
    Ok(((&weights.q + k.0.transpose() * &weights.r * &k.0) * sigma).trace())
}

pub fn lqr_eval(model: &PlantModel, weights: &CostWeights, k: &PolicyGain) -> Result<LqrEval> {
    let a_cl = model.closed_loop(k)?;
    let n = model.n();
    let stage = &weights.q + k.0.transpose() * &weights.r * &k.0;
    let sigma = solve_dlyap(&a_cl, &Matrix::identity(n, n), LyapunovForm::Covariance)?;
    let p = solve_dlyap(&a_cl, &stage, LyapunovForm::Cost)?;
    let cost = (&stage * &sigma).trace();
    let bt_p = model.b.transpose() * &p;
    let gradient =
        ((&weights.r + &bt_p * &model.b) * &k.0 + &bt_p * &model.a) * &sigma * 2.0;
    Ok(LqrEval {
        sigma,
        p,
        cost,
        gradient,
    })
}

/// One gradient step `K − η ∇C(K)`. The result is not checked for stability.
pub fn pg_step(
    model: &PlantModel,
    weights: &CostWeights,
    k: &PolicyGain,
    eta: f64,
) -> Result<PolicyGain> {
    let eval = lqr_eval(model, weights, k)?;
    PolicyGain::new(&k.0 - eval.gradient * eta)
}

#[derive(Debug, Clone)]
pub struct PgSolution {
    pub gain: PolicyGain,
    /// `C(K_j)` for every visited iterate, starting with `K0`.
    pub cost_trace: Vec<f64>,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Iterate [`pg_step`] until `‖∇C‖_F ≤ tol` or `max_iters` steps.
pub fn pg_solve(
    model: &PlantModel,
    weights: &CostWeights,
    k0: &PolicyGain,
    eta: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PgSolution> {
    let mut k = k0.clone();
    let mut eval = lqr_eval(model, weights, &k)?;
    let mut cost_trace = vec![eval.cost];
    for iterations in 0..max_iters {
        let gnorm = eval.gradient.norm();
        if gnorm <= tol {
            return Ok(PgSolution {
                gain: k,
                cost_trace,
                gradient_norm: gnorm,
                converged: true,
            });
        }
        let next = PolicyGain::new(&k.0 - &eval.gradient * eta)?;
        match lqr_eval(model, weights, &next) {
            Ok(e) => {
                k = next;
                eval = e;
                cost_trace.push(eval.cost);
            }
            Err(Error::Unstable { .. }) => {
                return Err(Error::Divergence {
                    iterations,
                    last_stabilizing: Box::new(k),
                })
            }
            Err(e) => return Err(e),
        }
    }
    let gradient_norm = eval.gradient.norm();
    Ok(PgSolution {
        converged: gradient_norm <= tol,
        gain: k,
        cost_trace,
        gradient_norm,
    })
}

/// `(C − C*) / C*`, clamped at zero within a `1e-9` relative slack.
pub fn optimality_gap(cost: f64, cost_star: f64) -> Result<f64> {
    if cost_star <= 0.0 || !cost_star.is_finite() {
        return Err(Error::Domain(format!("optimal cost must be positive, got {cost_star}")));
    }
    let gap = (cost - cost_star) / cost_star;
    if gap < -1e-9 {
        return Err(Error::Domain(format!(
            "cost {cost} is below the optimal cost {cost_star}"
        )));
    }
    Ok(gap.max(0.0))
}

/// `(κ, α)` with `κ = sqrt(C / min{σ(R), σ(Q)})` and `α = 1 − sqrt(1 − 1/κ²)`.
pub fn strong_stability_params(cost: f64, weights: &CostWeights) -> Result<(f64, f64)> {
    let floor = weights.sigma_min_q().min(weights.sigma_min_r());
    let kappa_sq = cost / floor;
    if !(kappa_sq >= 1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "cost {cost} is below min{{σ(Q), σ(R)}} = {floor}, so κ < 1"
        )));
    }
    let kappa_sq = kappa_sq.max(1.0);
    let kappa = kappa_sq.sqrt();
    let alpha = 1.0 - (1.0 - 1.0 / kappa_sq).max(0.0).sqrt();
    Ok((kappa, alpha))
}

/// Numerical local smoothness `l̂ = max ‖∇C(K+δ) − ∇C(K)‖_F / ‖δ‖_F` over a
/// probe set made of the coordinate directions and a few power-iteration
/// directions of the finite-difference Hessian.
pub fn local_smoothness(model: &PlantModel, weights: &CostWeights, k: &PolicyGain) -> Result<f64> {
    let (m, n) = (model.m(), model.n());
    let base = lqr_eval(model, weights, k)?.gradient;
    let h = 1e-5 * (1.0 + k.0.norm());
    let probe = |dir: &Matrix| -> Result<(f64, Matrix)> {
        let shifted = PolicyGain(&k.0 + dir * h);
        let diff = lqr_eval(model, weights, &shifted)?.gradient - &base;
        Ok((diff.norm() / (h * dir.norm()), diff))
    };

    let mut best = 0.0_f64;
    for i in 0..m {
        for j in 0..n {
            let mut e = Matrix::zeros(m, n);
            e[(i, j)] = 1.0;
            best = best.max(probe(&e)?.0);
        }
    }
    let mut v = Matrix::from_element(m, n, 1.0);
    v /= v.norm();
    for _ in 0..25 {
        let (ratio, diff) = probe(&v)?;
        best = best.max(ratio);
        let dn = diff.norm();
        if dn == 0.0 {
            break;
        }
        v = diff / dn;
    }
    Ok(best)
}

/// The default admissible step `1 / (2 l̂)` at `K`.
pub fn default_step_size(model: &PlantModel, weights: &CostWeights, k: &PolicyGain) -> Result<f64> {
    Ok(0.5 / local_smoothness(model, weights, k)?)
}
