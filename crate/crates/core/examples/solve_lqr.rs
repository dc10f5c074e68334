//! Policy gradient on a known model against the Riccati solution.

use nalgebra::DMatrix;
use pgac::lqr::{default_step_size, lqr_eval, pg_solve, CostWeights, PlantModel, PolicyGain};
use pgac::numerics::{op_norm, solve_dare};

fn main() -> pgac::Result<()> {
    let model = PlantModel::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.9]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
    )?;
    let w = CostWeights::identity(2, 1);
    let dare = solve_dare(&model.a, &model.b, &w.q, &w.r)?;
    let k0 = PolicyGain(&dare.k * 0.8);
    let eval = lqr_eval(&model, &w, &k0)?;
    println!("C(K0) = {:.6}  |grad| = {:.3e}", eval.cost, eval.gradient.norm());
    let eta = default_step_size(&model, &w, &k0)?;
    let sol = pg_solve(&model, &w, &k0, eta, 1e-10, 1_000_000)?;
    let pg_cost = sol.cost_trace.last().copied().unwrap_or(f64::NAN);
    println!("eta = {eta:.4}  PG cost {pg_cost:.9}  Riccati cost {:.9}  converged {}", dare.cost, sol.converged);
    println!("|K_pg - K*| = {:.3e}", op_norm(&(&sol.gain.0 - &dare.k)));
    Ok(())
}
