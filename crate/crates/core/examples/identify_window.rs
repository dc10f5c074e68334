//! Sliding-window least squares on a mode switch: biased while the window
//! mixes both modes, exact once it holds post-switch data only.

use nalgebra::{DMatrix, DVector};
use pgac::numerics::op_norm;
use pgac::sysid::SlidingWindow;

fn main() -> pgac::Result<()> {
    let (n, m, len) = (2, 1, 6);
    let a = [DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.0, 0.7]), DMatrix::from_row_slice(2, 2, &[0.8, 0.3, -0.1, 0.7])];
    let b = [DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), DMatrix::from_row_slice(2, 1, &[0.1, 1.0])];
    let stacked = |i: usize| {
        let mut g = DMatrix::zeros(n, m + n);
        g.columns_mut(0, m).copy_from(&b[i]);
        g.columns_mut(m, n).copy_from(&a[i]);
        g
    };
    let switch = 10;
    let mut window = SlidingWindow::new(len, n, m)?;
    let mut x = DVector::from_vec(vec![1.0, -1.0]);
    for t in 0..20 {
        let mode = usize::from(t >= switch);
        let u = DVector::from_vec(vec![(0.7 * t as f64).sin()]);
        let x_next = &a[mode] * &x + &b[mode] * &u;
        window.push(&x, &u, &x_next)?;
        x = x_next;
        if window.is_full() {
            let est = window.identify()?;
            let g = est.model.stacked();
            println!(
                "t {t:2}  error to pre {:.2e}  to post {:.2e}  sigma_min {:.3e}",
                op_norm(&(&g - stacked(0))),
                op_norm(&(&g - stacked(1))),
                est.smallest_singular_value
            );
        }
    }
    Ok(())
}
