//! Strong-stability factorization of a closed loop and the per-policy
//! parameters implied by its cost.

use nalgebra::DMatrix;
use pgac::certificates::strong_stability_factorize;
use pgac::lqr::{lqr_cost, strong_stability_params, CostWeights, PlantModel, PolicyGain};
use pgac::numerics::{op_norm, solve_dare};

fn main() -> pgac::Result<()> {
    let model = PlantModel::new(
        DMatrix::from_row_slice(2, 2, &[1.1, 0.3, 0.0, 0.8]),
        DMatrix::from_row_slice(2, 1, &[0.5, 1.0]),
    )?;
    let w = CostWeights::identity(2, 1);
    let k = PolicyGain(solve_dare(&model.a, &model.b, &w.q, &w.r)?.k);
    let cost = lqr_cost(&model, &w, &k)?;
    let (kappa, alpha) = strong_stability_params(cost, &w)?;
    let f = strong_stability_factorize(&model.closed_loop(&k)?)?;
    println!("C(K) = {cost:.4}  kappa = {kappa:.4}  alpha = {alpha:.4}");
    println!("|L| = {:.4} <= 1 - alpha = {:.4}", op_norm(&f.l), 1.0 - alpha);
    println!("|H| = {:.4} <= kappa, |H^-1| = {:.4} <= 1", op_norm(&f.h), op_norm(&f.h_inv));
    println!("|K| = {:.4} <= kappa", k.norm());
    Ok(())
}
