//! Synthetic GDELT-style data for tests, examples and benchmarks.
//!
//! [`FixtureConfig`] produces an export shaped like the Iraq query result:
//! each event class is reported from a set of geocoded sites (GDELT places
//! events at city or district centroids, so many rows share coordinates)
//! drawn around a few class-specific regions, class frequencies follow the
//! 2012-2015 Iraq totals, and a fraction of labels is replaced by a
//! different class. A share of every class is geocoded to a handful of
//! major city centroids with class-specific weights, so those locations
//! carry a mix of event types.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::ingest::{BoundingBox, EventClass, RawEventRecord};

/// Iraq 2012-2015 record counts per class, in label order.
pub const IRAQ_CLASS_COUNTS: [(EventClass, usize); 5] = [
    (EventClass::Refugees, 13_476),
    (EventClass::HumanitarianAid, 10_414),
    (EventClass::ViolentProtest, 3_068),
    (EventClass::ArtilleryFight, 13_247),
    (EventClass::MassKilling, 1_822),
];

/// Region centres (lat, lon) each class's sites are scattered around.
fn regions(class: EventClass) -> &'static [(f64, f64)] {
    match class {
        // Duhok, Erbil, Sulaymaniyah, Karbala
        EventClass::Refugees => &[(36.87, 42.99), (36.19, 44.01), (35.56, 45.43), (32.62, 44.02)],
        // Baghdad, Basra, Najaf
        EventClass::HumanitarianAid => &[(33.31, 44.37), (30.51, 47.78), (32.00, 44.33)],
        // Baghdad, Nasiriyah, Kut
        EventClass::ViolentProtest => &[(33.33, 44.42), (31.05, 46.26), (32.50, 45.82)],
        // Ramadi, Kirkuk, Mosul, Fallujah
        EventClass::ArtilleryFight => &[(33.42, 43.30), (35.47, 44.39), (36.34, 43.13), (33.35, 43.78)],
        // Sinjar, Tikrit, Mosul
        EventClass::MassKilling => &[(36.32, 41.87), (34.60, 43.68), (36.30, 43.20)],
    }
}

/// Major city centroids shared by all classes.
pub const SHARED_CITIES: [(&str, f64, f64); 6] = [
    ("Baghdad", 33.3152, 44.3661),
    ("Mosul", 36.335, 43.1189),
    ("Kirkuk", 35.4681, 44.3922),
    ("Basra", 30.5085, 47.7804),
    ("Erbil", 36.1911, 44.0092),
    ("Ramadi", 33.4258, 43.2992),
];

/// Per-class weights over [`SHARED_CITIES`], in label order.
const CITY_WEIGHTS: [[f64; 6]; 5] = [
    [1.0, 1.0, 1.0, 0.0, 3.0, 0.0],
    [3.0, 0.0, 0.0, 2.0, 1.0, 0.0],
    [3.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 2.0, 0.0, 0.0, 3.0],
    [0.0, 3.0, 1.0, 0.0, 0.0, 1.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub points: usize,
    pub label_noise: f64,
    pub sites_per_class: usize,
    /// Standard deviation, in degrees, of sites around their region centre.
    pub site_spread: f64,
    /// Fraction of each class's events placed at a shared city.
    pub city_fraction: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            points: 40_000,
            label_noise: 0.25,
            sites_per_class: 12,
            site_spread: 0.35,
            city_fraction: 0.3,
            seed: 42,
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn sites(cfg: &FixtureConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<(f64, f64)>> {
    let spread = Normal::new(0.0, cfg.site_spread).expect("positive spread");
    let inner = BoundingBox::new(29.2, 37.2, 39.3, 48.4).unwrap();
    EventClass::ALL
        .iter()
        .map(|&class| {
            let centres = regions(class);
            (0..cfg.sites_per_class)
                .map(|s| {
                    let (clat, clon) = centres[s % centres.len()];
                    loop {
                        let lat = round4(clat + spread.sample(rng));
                        let lon = round4(clon + spread.sample(rng));
                        if inner.contains(lat, lon) {
                            break (lat, lon);
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// Generates the fixture as GDELT rows (all inside the Iraq filter).
pub fn fixture_records(cfg: &FixtureConfig) -> Result<Vec<RawEventRecord>> {
    if cfg.sites_per_class == 0
        || !(0.0..1.0).contains(&cfg.label_noise)
        || !(0.0..=1.0).contains(&cfg.city_fraction)
    {
        return Err(Error::invalid(
            "fixture needs sites, a noise rate in [0, 1) and a city fraction in [0, 1]",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sites = sites(cfg, &mut rng);
    let total: usize = IRAQ_CLASS_COUNTS.iter().map(|c| c.1).sum();

    let other_actors = ["", "GOV", "MIL", "CVL", "REB"];
    let other_codes = ["010", "043", "051", "190", "1823"];
    let mut records = Vec::with_capacity(cfg.points);
    for _ in 0..cfg.points {
        let mut pick = rng.random_range(0..total);
        let true_idx = IRAQ_CLASS_COUNTS
            .iter()
            .position(|&(_, n)| {
                if pick < n {
                    true
                } else {
                    pick -= n;
                    false
                }
            })
            .unwrap();
        let (lat, lon) = if rng.random_bool(cfg.city_fraction) {
            let w = &CITY_WEIGHTS[true_idx];
            let mut r = rng.random_range(0.0..w.iter().sum::<f64>());
            let city = w
                .iter()
                .position(|&x| {
                    r -= x;
                    r < 0.0
                })
                .unwrap_or(w.len() - 1);
            (SHARED_CITIES[city].1, SHARED_CITIES[city].2)
        } else {
            sites[true_idx][rng.random_range(0..cfg.sites_per_class)]
        };

        let mut label_idx = true_idx;
        if rng.random_bool(cfg.label_noise) {
            let shift = rng.random_range(1..EventClass::ALL.len());
            label_idx = (true_idx + shift) % EventClass::ALL.len();
        }
        let label = EventClass::ALL[label_idx];
        let (actor, code) = match label {
            EventClass::Refugees => ("REF".to_string(), other_codes[rng.random_range(0..5)].to_string()),
            c => (
                other_actors[rng.random_range(0..5)].to_string(),
                c.source_code().to_string(),
            ),
        };
        records.push(RawEventRecord {
            actor1_type_code: actor,
            year: rng.random_range(2012..=2015),
            action_country_code: "IZ".into(),
            actor1_lat: lat,
            actor1_lon: lon,
            event_code: code,
        });
    }
    Ok(records)
}

/// Writes records as a GDELT-style CSV (with one extra, ignored column).
pub fn write_gdelt_csv<W: Write>(records: &[RawEventRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "GLOBALEVENTID",
        "Actor1Type1Code",
        "Year",
        "ActionGeo_CountryCode",
        "Actor1Geo_Lat",
        "Actor1Geo_Long",
        "EventCode",
    ])?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            (400_000_000 + i).to_string(),
            r.actor1_type_code.clone(),
            r.year.to_string(),
            r.action_country_code.clone(),
            r.actor1_lat.to_string(),
            r.actor1_lon.to_string(),
            r.event_code.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<gdelt csv>", e))?;
    Ok(())
}

/// The full fixture as CSV bytes.
pub fn fixture_csv(cfg: &FixtureConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_gdelt_csv(&fixture_records(cfg)?, &mut buf)?;
    Ok(buf)
}

/// Two classes with identical uniform spatial distributions over the Iraq
/// box; `minority_fraction` of the points carry `minority`.
pub fn overlapping_two_class(
    n: usize,
    majority: EventClass,
    minority: EventClass,
    minority_fraction: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_min = (n as f64 * minority_fraction).round() as usize;
    let mut labels: Vec<EventClass> = (0..n)
        .map(|i| if i < n_min { minority } else { majority })
        .collect();
    labels.shuffle(&mut rng);
    let b = BoundingBox::IRAQ;
    let points = labels
        .into_iter()
        .map(|label| {
            let lat = rng.random_range(b.lat_min..b.lat_max);
            let lon = rng.random_range(b.lon_min..b.lon_max);
            LabeledPoint::new(lat, lon, label)
        })
        .collect();
    Dataset::from_points(
        format!("{}-{}", majority.label().min(minority.label()), majority.label().max(minority.label())),
        points,
    )
    .with_bbox(b)
}

/// Uniform in-box points with exact per-class counts.
pub fn with_class_counts(counts: &[(EventClass, usize)], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = BoundingBox::IRAQ;
    let mut points = Vec::new();
    for &(c, n) in counts {
        for _ in 0..n {
            let lat = rng.random_range(b.lat_min..b.lat_max);
            let lon = rng.random_range(b.lon_min..b.lon_max);
            points.push(LabeledPoint::new(lat, lon, c));
        }
    }
    Dataset::from_points("full", points).with_bbox(b)
}
