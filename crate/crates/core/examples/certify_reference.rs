//! Run the reference scenario and summarize its certificate.
//!
//! Usage: `certify_reference [eta] [seed]`

use pgac::experiment::simulate_seed;
use pgac::scenario::ScenarioConfig;

fn main() -> pgac::Result<()> {
    let mut cfg = ScenarioConfig::reference();
    if let Some(eta) = std::env::args().nth(1) {
        cfg.eta = eta.parse().expect("eta");
    }
    let seed = std::env::args().nth(2).map_or(cfg.seeds[0], |s| s.parse().expect("seed"));
    let log = simulate_seed(&cfg, seed)?;
    let Some(report) = log.report else {
        println!("aborted: {:?}", log.aborted);
        return Ok(());
    };
    println!("verdict: {:?}", report.verdict);
    let h = &report.hypotheses;
    println!(
        "hypotheses: informative {} dwell {} K0 stabilizing {} eta {} <= {:.4e}: {} delta admissible {}",
        h.informative, h.dwell_ok, h.k0_stabilizes_mode0, h.eta, h.eta_bound, h.eta_admissible, h.delta_admissible
    );
    for md in &report.modes {
        println!(
            "mode {:2} start {:3}  C* {:8.4}  C_bar {:9.4}  max C {:>10}  cost violations {}/{}",
            md.index,
            md.start,
            md.c_star,
            md.c_bar,
            md.max_cost.map_or("-".into(), |c| format!("{c:.4}")),
            md.violations,
            md.checked_steps,
        );
    }
    for sw in &report.switches {
        println!(
            "switch {:2} at {:3}  |delta| {:.4}  nu2 {:.3e}  post bound {:.4e}  post violations {}",
            sw.index, sw.time, sw.delta_norm, sw.nu2, sw.c_bar_post, sw.post_cost.violations
        );
    }
    let env = &report.envelope;
    println!("envelope violations {}  nu = ({:.3}, {:.3e}, {:.3})", env.violations, env.nu1, env.nu2, env.nu3);
    println!("strong stability: {}  first failure {:?}", report.stability.all_pass(), report.stability.first_failure);
    println!("replay consistent: {}", report.replay.consistent());
    println!("failures: {:?}", report.failures);
    println!("diagnostics: {:?}", report.diagnostics);
    Ok(())
}
