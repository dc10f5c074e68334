//! Print the built-in reference scenario as a JSON config.

use pgac::scenario::ScenarioConfig;

fn main() -> pgac::Result<()> {
    println!("{}", ScenarioConfig::reference().to_json()?);
    Ok(())
}
