//! Prints the BigQuery export statement for every event class.

use gdelt_geoclass::ingest::generate_query;
use gdelt_geoclass::{BoundingBox, EventClass};

fn main() -> gdelt_geoclass::Result<()> {
    for class in EventClass::ALL {
        println!("-- {} ({})", class.description(), class.source_code());
        println!("{}", generate_query(class, 2012, 2015, &BoundingBox::IRAQ)?);
    }
    Ok(())
}
