//! Saves one model per family to a temporary store, lists the store and
//! checks that reloaded models predict identically.

use gdelt_geoclass::dataset::{materialize_combination, split_train_test};
use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::store::ModelStore;
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};
use gdelt_geoclass::{evaluate, train, Algorithm, Classifier, EventClass, Hyperparameters};

fn main() -> gdelt_geoclass::Result<()> {
    let csv = fixture_csv(&FixtureConfig { points: 8_000, ..FixtureConfig::default() })?;
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")?.dataset;
    let data = materialize_combination(&full, &[EventClass::Refugees, EventClass::ArtilleryFight])?;
    let split = split_train_test(&data, 0.7, 42, false)?;

    let dir = tempfile::tempdir().map_err(|e| gdelt_geoclass::Error::Io { path: "tempdir".into(), source: e })?;
    let store = ModelStore::new(dir.path());
    for alg in Algorithm::ALL {
        let model = train(alg, &split.train, &Hyperparameters::default(), 42)?;
        let report = evaluate(&model, &split.test)?;
        let path = store.save(&model, Some(&report))?;
        let back = store.load(model.id())?;
        let same = split
            .test
            .points
            .iter()
            .all(|p| back.predict_proba(p.lat, p.lon) == model.predict_proba(p.lat, p.lon));
        println!("{} ({} bytes) identical after reload: {same}", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    }
    for m in store.list()? {
        println!("{:<12} {:<20} accuracy {:.4}", m.id, m.algorithm.as_str(), m.metrics.map(|x| x.accuracy).unwrap_or(f64::NAN));
    }
    Ok(())
}
