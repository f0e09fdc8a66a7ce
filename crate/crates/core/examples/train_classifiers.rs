//! Trains all four classifiers on refugees vs. artillery fights from the
//! fixture and prints their evaluation tables.

use gdelt_geoclass::dataset::{materialize_combination, split_train_test};
use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};
use gdelt_geoclass::{evaluate, train, Algorithm, EventClass, Hyperparameters};

fn main() -> gdelt_geoclass::Result<()> {
    let csv = fixture_csv(&FixtureConfig::default())?;
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")?.dataset;
    let data = materialize_combination(&full, &[EventClass::Refugees, EventClass::ArtilleryFight])?;
    let split = split_train_test(&data, 0.7, 42, false)?;
    println!("{}: {} training / {} test points\n", data.id, split.train.len(), split.test.len());
    for alg in Algorithm::ALL {
        let model = train(alg, &split.train, &Hyperparameters::default(), 42)?;
        let report = evaluate(&model, &split.test)?;
        println!("{}\n", report.render(&format!("Results of the {} algorithm - {}", alg.title(), data.id)));
    }
    Ok(())
}
