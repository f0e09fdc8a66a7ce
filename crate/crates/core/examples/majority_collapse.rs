//! Two classes with identical spatial distributions and 85/15 priors:
//! naive Bayes and logistic regression predict only the majority class and
//! still report about 0.85 accuracy.

use gdelt_geoclass::dataset::split_train_test;
use gdelt_geoclass::synth::overlapping_two_class;
use gdelt_geoclass::{evaluate, train, Algorithm, EventClass, Hyperparameters};

fn main() -> gdelt_geoclass::Result<()> {
    let data = overlapping_two_class(10_000, EventClass::HumanitarianAid, EventClass::MassKilling, 0.15, 3);
    let split = split_train_test(&data, 0.7, 42, false)?;
    for alg in Algorithm::ALL {
        let model = train(alg, &split.train, &Hyperparameters::default(), 42)?;
        let report = evaluate(&model, &split.test)?;
        println!("{}\n", report.render(&format!("{} - {}", alg.title(), data.id)));
    }
    Ok(())
}
