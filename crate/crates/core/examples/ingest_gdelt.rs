//! Ingests a GDELT export (the bundled fixture when no path is given) and
//! prints the per-class record counts.
//!
//! cargo run --example ingest_gdelt [-- export.csv]

use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};

fn main() -> gdelt_geoclass::Result<()> {
    let (bytes, source) = match std::env::args().nth(1) {
        Some(path) => (std::fs::read(&path).map_err(|e| gdelt_geoclass::Error::Io { path: path.clone().into(), source: e })?, path),
        None => (fixture_csv(&FixtureConfig::default())?, "synthetic fixture".to_string()),
    };
    let out = ingest(bytes.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), &source)?;
    println!("{}", out.report);
    for r in out.rejects.iter().take(5) {
        println!("rejected line {}: {}", r.line, r.reason);
    }
    println!("\nprovenance: {}", out.dataset.provenance);
    println!("content hash: {}", out.dataset.content_hash());
    Ok(())
}
