//! 10-fold cross-validation of every classifier on one combination.

use gdelt_geoclass::dataset::materialize_combination;
use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::metrics::cross_validate;
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};
use gdelt_geoclass::{Algorithm, EventClass, Hyperparameters};

fn main() -> gdelt_geoclass::Result<()> {
    let csv = fixture_csv(&FixtureConfig { points: 10_000, ..FixtureConfig::default() })?;
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")?.dataset;
    let data = materialize_combination(&full, &[EventClass::HumanitarianAid, EventClass::ArtilleryFight])?;
    for alg in Algorithm::ALL {
        let cv = cross_validate(alg, &data, &Hyperparameters::default(), 10, 42)?;
        println!(
            "{:<20} mean accuracy {:.4} ± {:.4}",
            alg.as_str(),
            cv.mean_accuracy,
            cv.std_accuracy
        );
    }
    Ok(())
}
