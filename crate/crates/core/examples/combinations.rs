//! Enumerates the class combinations and their record counts using the
//! Iraq 2012-2015 class totals.

use gdelt_geoclass::dataset::{binomial, combination_id, enumerate_combinations};
use gdelt_geoclass::synth::IRAQ_CLASS_COUNTS;
use gdelt_geoclass::EventClass;

fn main() -> gdelt_geoclass::Result<()> {
    let spec = enumerate_combinations(&EventClass::ALL, &[2, 3, 4])?;
    println!("{:<4} {:<18} {:>8}", "no", "events", "records");
    for (i, subset) in spec.subsets.iter().enumerate() {
        let n: usize = IRAQ_CLASS_COUNTS
            .iter()
            .filter(|(c, _)| subset.contains(c))
            .map(|(_, n)| n)
            .sum();
        println!("{:<4} {:<18} {:>8}", i + 1, combination_id(subset), n);
    }
    let with_all = enumerate_combinations(&EventClass::ALL, &[2, 3, 4, 5])?;
    println!(
        "\nC(5,2)+C(5,3)+C(5,4) = {}, plus the full set = {} datasets, x4 algorithms = {} experiments",
        binomial(5, 2) + binomial(5, 3) + binomial(5, 4),
        with_all.subsets.len(),
        with_all.subsets.len() * 4
    );
    Ok(())
}
