//! Writes the synthetic 40,000-row GDELT-style export to a file.
//!
//! cargo run --example make_fixture -- fixture.csv

use gdelt_geoclass::store::write_atomic;
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};

fn main() -> gdelt_geoclass::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixture.csv".into());
    let cfg = FixtureConfig::default();
    write_atomic(path.as_ref(), &fixture_csv(&cfg)?)?;
    println!("wrote {} rows (seed {}, label noise {}) to {path}", cfg.points, cfg.seed, cfg.label_noise);
    Ok(())
}
