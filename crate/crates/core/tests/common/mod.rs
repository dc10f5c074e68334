//! Independent reference computations for the integration tests. Lyapunov
//! equations are solved through the Kronecker-vectorized linear system, not
//! by iteration, so they share no code path with the library solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = DMatrix<f64>;

/// `X = W + F X Fᵀ` through `(I − F ⊗ F) vec X = vec W`.
pub fn kron_lyapunov(f: &Mat, w: &Mat) -> Mat {
    let n = f.nrows();
    let kron = f.kronecker(f);
    let lhs = Mat::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(w.as_slice());
    let x = lhs.lu().solve(&rhs).expect("I − F⊗F is singular");
    let x = Mat::from_column_slice(n, n, x.as_slice());
    (&x + x.transpose()) * 0.5
}

pub fn spectral_radius(m: &Mat) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Tr((Q + KᵀRK) Σ)` with `Σ = I + A_cl Σ A_clᵀ`, `A_cl = A + BK`.
pub fn cost(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat) -> f64 {
    let a_cl = a + b * k;
    assert!(spectral_radius(&a_cl) < 1.0, "gain is not stabilizing");
    let n = a.nrows();
    let sigma = kron_lyapunov(&a_cl, &Mat::identity(n, n));
    ((q + k.transpose() * r * k) * sigma).trace()
}

/// Cost with `None` for non-stabilizing gains.
pub fn try_cost(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat) -> Option<f64> {
    (spectral_radius(&(a + b * k)) < 1.0).then(|| cost(a, b, q, r, k))
}

/// `2((R + BᵀPB)K + BᵀPA) Σ`.
pub fn gradient(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat) -> Mat {
    let a_cl = a + b * k;
    let n = a.nrows();
    let sigma = kron_lyapunov(&a_cl, &Mat::identity(n, n));
    let p = kron_lyapunov(&a_cl.transpose(), &(q + k.transpose() * r * k));
    ((r + b.transpose() * &p * b) * k + b.transpose() * &p * a) * sigma * 2.0
}

/// Central finite differences of [`cost`] with step `h`.
pub fn fd_gradient(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat, h: f64) -> Mat {
    let (m, n) = k.shape();
    Mat::from_fn(m, n, |i, j| {
        let mut e = Mat::zeros(m, n);
        e[(i, j)] = h;
        (cost(a, b, q, r, &(k + &e)) - cost(a, b, q, r, &(k - &e))) / (2.0 * h)
    })
}

pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0) * scale)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ordinary least squares `Y D†` through the normal equations.
pub fn ols(y: &Mat, d: &Mat) -> Mat {
    let gram = d * d.transpose();
    let sol = gram.cholesky().expect("data matrix is rank deficient").solve(&(d * y.transpose()));
    sol.transpose()
}
