//! Runs the full 104-experiment grid on the synthetic fixture and prints the
//! ranking and the selected model.
//!
//! cargo run --release --example experiment_grid [-- POINTS]

use std::time::Instant;

use gdelt_geoclass::grid::{run_grid, select_best, GridConfig};
use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};
use gdelt_geoclass::Algorithm;

fn main() -> gdelt_geoclass::Result<()> {
    let points = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40_000);
    let csv = fixture_csv(&FixtureConfig { points, ..FixtureConfig::default() })?;
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")?.dataset;

    let start = Instant::now();
    let grid = run_grid(&full, &GridConfig::default())?;
    println!("{} experiments in {:.1?}, {} failed", grid.results.len(), start.elapsed(), grid.failures());

    for alg in Algorithm::ALL {
        let best = grid
            .results
            .iter()
            .filter(|r| r.spec.algorithm == alg)
            .filter_map(|r| r.report())
            .map(|r| r.min_f1())
            .fold(f64::NEG_INFINITY, f64::max);
        println!("{:<20} best min-F1 {best:.4}", alg.as_str());
    }
    if let Some(best) = select_best(&grid.results) {
        let r = best.report().unwrap();
        println!(
            "Selected: {} on {{{}}} (min F1 {:.4}, accuracy {:.4})",
            best.spec.algorithm.title(),
            best.spec.dataset_id,
            r.min_f1(),
            r.accuracy
        );
    }
    Ok(())
}
