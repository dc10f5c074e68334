//! Dense matrix primitives and the solvers the rest of the crate is built on:
//! discrete Lyapunov equations (Smith doubling), the discrete algebraic
//! Riccati equation (value iteration), row-space least squares through a
//! rank-revealing pseudoinverse, and the PSD square root.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Residual tolerance for the Lyapunov solver, relative to `1 + ‖X‖`.
pub const LYAP_RESIDUAL_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_FLOOR` are treated as zero.
pub const PSD_FLOOR: f64 = 1e-10;
/// Singular values below `RANK_CUTOFF * σ_max` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;
pub const MAX_ITERS: usize = 10_000;
/// Successive-iterate tolerance for the Riccati value iteration.
pub const DARE_TOL: f64 = 1e-12;

/// Build a matrix from row-major nested rows, rejecting ragged or non-finite input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::dim("matrix_from_rows", "non-empty rows", "empty"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dim("matrix_from_rows", ncols, bad.len()));
    }
    let m = Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix_from_rows")?;
    Ok(m)
}

/// Row-major nested representation, the inverse of [`matrix_from_rows`].
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn ensure_finite(m: &Matrix, context: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn ensure_square(m: &Matrix, context: &'static str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::dim(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}

/// Induced 2-norm (largest singular value).
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

pub fn max_sym_eigenvalue(m: &Matrix) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

/// `max |λ_i(M)|` over the (complex) eigenvalues of a square matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    ensure_square(m, "spectral_radius")?;
    ensure_finite(m, "spectral_radius")?;
    Ok(m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Which of the two discrete Lyapunov equations to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovForm {
    /// `X = W + M X Mᵀ` (closed-loop state covariance).
    Covariance,
    /// `X = W + Mᵀ X M` (value matrix).
    Cost,
}

/// Solve a discrete Lyapunov equation by Smith doubling.
///
/// Requires `ρ(M) < 1`. The result is symmetrized and checked against the
/// residual contract `‖X − W − M X Mᵀ‖ ≤ 1e-10 (1 + ‖X‖)`.
pub fn solve_dlyap(m: &Matrix, w: &Matrix, form: LyapunovForm) -> Result<Matrix> {
    ensure_square(m, "solve_dlyap")?;
    if w.shape() != m.shape() {
        return Err(Error::dim(
            "solve_dlyap",
            format!("{}x{}", m.nrows(), m.ncols()),
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    ensure_finite(w, "solve_dlyap")?;
    let rho = spectral_radius(m)?;
    if rho >= 1.0 {
        return Err(Error::Unstable {
            spectral_radius: rho,
        });
    }
    // Both forms reduce to X = W + F X Fᵀ.
    let f = match form {
        LyapunovForm::Covariance => m.clone(),
        LyapunovForm::Cost => m.transpose(),
    };

    let mut x = symmetrize(w);
    let mut fk = f.clone();
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let incr = &fk * &x * fk.transpose();
        x += &incr;
        let incr_norm = incr.norm();
        if incr_norm <= 1e-3 * f64::EPSILON * x.norm() || fk.iter().all(|v| *v == 0.0) {
            converged = true;
            break;
        }
        fk = &fk * &fk;
        if !fk.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    // One fixed-point sweep polishes the doubling result.
    x = symmetrize(&(symmetrize(w) + &f * &x * f.transpose()));

    let residual = lyap_residual(&f, w, &x);
    let bound = LYAP_RESIDUAL_TOL * (1.0 + x.norm());
    if !converged || residual > bound || !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Convergence {
            solver: "solve_dlyap",
            iterations: MAX_ITERS,
            residual,
        });
    }
    Ok(x)
}

/// Frobenius norm of `X − W − F X Fᵀ`.
fn lyap_residual(f: &Matrix, w: &Matrix, x: &Matrix) -> f64 {
    (x - w - f * x * f.transpose()).norm()
}

/// Moore–Penrose pseudoinverse with singular-value cutoff `1e-12 · σ_max`.
/// Also returns the numerical rank and the singular values (descending).
pub fn pinv(d: &Matrix) -> (Matrix, usize, Vec<f64>) {
    let svd = d.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let cutoff = RANK_CUTOFF * sigma_max;
    let mut inv = Matrix::zeros(d.ncols(), d.nrows());
    let mut rank = 0;
    for (k, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            inv += v_t.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    let mut values: Vec<f64> = sigma.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    (inv, rank, values)
}

/// `G = Y D†`, the minimizer of `‖Y − G D‖_F`.
pub fn least_squares_rowspace(y: &Matrix, d: &Matrix) -> Result<Matrix> {
    if y.ncols() != d.ncols() {
        return Err(Error::dim("least_squares_rowspace", d.ncols(), y.ncols()));
    }
    let (d_pinv, _, _) = pinv(d);
    Ok(y * d_pinv)
}

/// Output of the Riccati solver.
#[derive(Debug, Clone)]
pub struct DareSolution {
    pub p: Matrix,
    /// Optimal gain in the `u = K x` convention.
    pub k: Matrix,
    /// `C(K*) = Tr((Q + K*ᵀ R K*) Σ_{K*})`.
    pub cost: f64,
    pub iterations: usize,
}

/// Discrete algebraic Riccati equation by value iteration from `P₀ = Q`.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<DareSolution> {
    ensure_square(a, "solve_dare")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::dim("solve_dare (B rows)", n, b.nrows()));
    }
    let m = b.ncols();
    if q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dim(
            "solve_dare (Q, R)",
            format!("{n}x{n}, {m}x{m}"),
            format!(
                "{}x{}, {}x{}",
                q.nrows(),
                q.ncols(),
                r.nrows(),
                r.ncols()
            ),
        ));
    }

    let gain = |p: &Matrix| -> Result<Matrix> {
        let s = r + b.transpose() * p * b;
        let chol = s
            .cholesky()
            .ok_or_else(|| Error::Infeasible("R + BᵀPB is not positive definite".into()))?;
        Ok(-chol.solve(&(b.transpose() * p * a)))
    };

    let mut p = q.clone();
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < MAX_ITERS {
        iterations += 1;
        let k = gain(&p)?;
        // Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA, written with K = −(R+BᵀPB)⁻¹BᵀPA.
        let next = symmetrize(&(q + a.transpose() * &p * a + a.transpose() * &p * b * &k));
        change = (&next - &p).norm();
        p = next;
        if !p.iter().all(|v| v.is_finite()) || p.norm() > 1e14 {
            return Err(Error::Infeasible(
                "Riccati iterates diverge: (A, B) is not stabilizable".into(),
            ));
        }
        if change <= DARE_TOL * p.norm().max(1.0) {
            break;
        }
    }
    if change > DARE_TOL * p.norm().max(1.0) {
        return Err(Error::Convergence {
            solver: "solve_dare",
            iterations,
            residual: change,
        });
    }
    let k = gain(&p)?;
    let a_cl = a + b * &k;
    let sigma = solve_dlyap(&a_cl, &Matrix::identity(n, n), LyapunovForm::Covariance)
        .map_err(|_| Error::Infeasible("Riccati gain does not stabilize (A, B)".into()))?;
    let cost = ((q + k.transpose() * r * &k) * sigma).trace();
    Ok(DareSolution {
        p,
        k,
        cost,
        iterations,
    })
}

/// Symmetric PSD square root through the symmetric eigendecomposition.
pub fn sqrtm_psd(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "sqrtm_psd")?;
    ensure_finite(m, "sqrtm_psd")?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let floor = PSD_FLOOR * m.norm().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -floor {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * Matrix::from_diagonal(&roots) * v.transpose())))
}
