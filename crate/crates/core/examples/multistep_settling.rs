//! Compare post-switch settling with one and several gradient steps per tick.

use pgac::experiment::{mean_settling_steps, simulate_seed};
use pgac::scenario::ScenarioConfig;

fn main() -> pgac::Result<()> {
    let mut args = std::env::args().skip(1);
    let eta: f64 = args.next().map_or(ScenarioConfig::reference().eta, |s| s.parse().expect("eta"));
    let seeds: u64 = args.next().map_or(20, |s| s.parse().expect("seed count"));
    let mut totals = [0.0, 0.0];
    for seed in 0..seeds {
        let mut row = Vec::new();
        for (slot, steps) in [1, 5].into_iter().enumerate() {
            let mut cfg = ScenarioConfig::reference();
            cfg.eta = eta;
            cfg.steps_per_tick = steps;
            let log = simulate_seed(&cfg, seed)?;
            match &log.report {
                Some(r) => row.push(format!("{steps}x: {:3} safeguards", r.safeguards.total())),
                None => row.push(format!("{steps}x: aborted     ")),
            }
            let mean = mean_settling_steps(&log, 1e-2)?;
            row.push(format!("mean {mean:6.2}"));
            totals[slot] += mean;
        }
        println!("seed {seed:2}  {}", row.join("  "));
    }
    let n = seeds as f64;
    println!("mean settling steps: 1 step/tick {:.3}, 5 steps/tick {:.3}", totals[0] / n, totals[1] / n);
    Ok(())
}
