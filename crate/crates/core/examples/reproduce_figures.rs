//! Write the gap trace and the state-norm envelope of the reference run as
//! CSV files.

use std::path::PathBuf;

use pgac::experiment::{reproduce_fig1, reproduce_fig2};

fn main() -> pgac::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("figures"), PathBuf::from);
    println!("{}", reproduce_fig1(&out)?.display());
    println!("{}", reproduce_fig2(&out)?.display());
    Ok(())
}
