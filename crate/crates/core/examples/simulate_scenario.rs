//! Simulate a scenario from a JSON config and write run logs and step CSVs.
//!
//! Usage: `simulate_scenario [config.json] [out_dir]`

use pgac::experiment::simulate_to_dir;
use pgac::scenario::ScenarioConfig;

fn main() -> pgac::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::reference(),
    };
    let out = args.next().unwrap_or_else(|| "runs".into());
    for s in simulate_to_dir(&cfg, out.as_ref())? {
        println!("seed {}: {:?} aborted {:?} -> {}", s.seed, s.verdict, s.aborted, s.steps_csv.display());
    }
    Ok(())
}
