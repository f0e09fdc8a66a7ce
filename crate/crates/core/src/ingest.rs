//! GDELT export ingestion.
//!
//! Rows are read from a CSV export whose header names the six event columns
//! (`Actor1Type1Code`, `Year`, `ActionGeo_CountryCode`, `Actor1Geo_Lat`,
//! `Actor1Geo_Long`, `EventCode`). Columns are matched by name, so their order
//! in the file does not matter and extra columns are ignored. Rows that cannot
//! be parsed are returned as [`RejectedRow`]s rather than dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabeledPoint};
use crate::error::{Error, Result};

/// Strict latitude/longitude rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    /// Extreme points of Iraq used for data collection.
    pub const IRAQ: BoundingBox = BoundingBox {
        lat_min: 29.12,
        lat_max: 37.29,
        lon_min: 39.22,
        lon_max: 48.48,
    };

    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let finite = [lat_min, lat_max, lon_min, lon_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || lat_min >= lat_max || lon_min >= lon_max {
            return Err(Error::invalid(format!(
                "degenerate bounding box ({lat_min}, {lat_max}, {lon_min}, {lon_max})"
            )));
        }
        Ok(Self {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    /// Strict containment on both axes.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat > self.lat_min && lat < self.lat_max && lon > self.lon_min && lon < self.lon_max
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self::IRAQ
    }
}

/// The five studied event classes.
///
/// The integer label is what the classifiers see; it is serialized as that
/// integer everywhere (CSV, JSON, model files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    Refugees,
    HumanitarianAid,
    ViolentProtest,
    ArtilleryFight,
    MassKilling,
}

impl EventClass {
    /// All classes in ascending label order.
    pub const ALL: [EventClass; 5] = [
        EventClass::Refugees,
        EventClass::HumanitarianAid,
        EventClass::ViolentProtest,
        EventClass::ArtilleryFight,
        EventClass::MassKilling,
    ];

    pub fn label(self) -> u16 {
        match self {
            EventClass::Refugees => 0,
            EventClass::HumanitarianAid => 73,
            EventClass::ViolentProtest => 145,
            EventClass::ArtilleryFight => 194,
            EventClass::MassKilling => 202,
        }
    }

    /// The GDELT code the class is queried by: an actor type code for
    /// refugees, a CAMEO event code for the rest.
    pub fn source_code(self) -> &'static str {
        match self {
            EventClass::Refugees => "REF",
            EventClass::HumanitarianAid => "073",
            EventClass::ViolentProtest => "145",
            EventClass::ArtilleryFight => "194",
            EventClass::MassKilling => "202",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventClass::Refugees => "Refugees",
            EventClass::HumanitarianAid => "HumanitarianAid",
            EventClass::ViolentProtest => "ViolentProtest",
            EventClass::ArtilleryFight => "ArtilleryFight",
            EventClass::MassKilling => "MassKilling",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            EventClass::Refugees => "Refugees",
            EventClass::HumanitarianAid => "Provide humanitarian aid",
            EventClass::ViolentProtest => "Violent protests",
            EventClass::ArtilleryFight => "Fight with artillery and tanks",
            EventClass::MassKilling => "Engage in mass killings",
        }
    }

    pub fn from_label(label: i64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| i64::from(c.label()) == label)
            .ok_or(Error::UnknownLabel(label))
    }

    /// Inverse of [`EventClass::source_code`].
    pub fn from_source_code(code: &str) -> Option<Self> {
        let code = code.trim();
        Self::ALL.into_iter().find(|c| c.source_code() == code)
    }

    /// Matches a CAMEO event code to one of the four event-coded classes.
    /// Codes exported as integers ("73") are accepted alongside the padded form.
    fn from_event_code(code: &str) -> Option<Self> {
        let code = code.trim();
        if code.is_empty() || !code.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let value: u32 = code.parse().ok()?;
        Self::ALL
            .into_iter()
            .filter(|c| *c != EventClass::Refugees)
            .find(|c| u32::from(c.label()) == value)
    }

    /// Parses either a label ("194"), a source code ("REF", "073") or a name.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(c) = Self::from_source_code(t) {
            return Ok(c);
        }
        if let Some(c) = Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
        {
            return Ok(c);
        }
        match t.parse::<i64>() {
            Ok(v) => Self::from_label(v),
            Err(_) => Err(Error::invalid(format!("unknown event class `{t}`"))),
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for EventClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u16(self.label())
    }
}

impl<'de> Deserialize<'de> for EventClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        EventClass::from_label(v).map_err(serde::de::Error::custom)
    }
}

/// One parsed row of a GDELT export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEventRecord {
    pub actor1_type_code: String,
    pub year: i32,
    pub action_country_code: String,
    pub actor1_lat: f64,
    pub actor1_lon: f64,
    pub event_code: String,
}

impl RawEventRecord {
    /// True when the row is both a refugee actor and one of the studied event
    /// codes; such rows are labeled as refugees.
    pub fn is_collision(&self) -> bool {
        self.actor1_type_code.trim() == "REF"
            && EventClass::from_event_code(&self.event_code).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// Line number in the source, header being line 1.
    pub line: u64,
    pub reason: String,
}

/// Header names of the six columns that are read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdeltSchema {
    pub actor1_type_code: String,
    pub year: String,
    pub action_country_code: String,
    pub actor1_lat: String,
    pub actor1_lon: String,
    pub event_code: String,
}

impl Default for GdeltSchema {
    fn default() -> Self {
        Self {
            actor1_type_code: "Actor1Type1Code".into(),
            year: "Year".into(),
            action_country_code: "ActionGeo_CountryCode".into(),
            actor1_lat: "Actor1Geo_Lat".into(),
            actor1_lon: "Actor1Geo_Long".into(),
            event_code: "EventCode".into(),
        }
    }
}

impl GdeltSchema {
    fn columns(&self) -> [&str; 6] {
        [
            &self.actor1_type_code,
            &self.year,
            &self.action_country_code,
            &self.actor1_lat,
            &self.actor1_lon,
            &self.event_code,
        ]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedEvents {
    pub records: Vec<RawEventRecord>,
    pub rejects: Vec<RejectedRow>,
}

impl ParsedEvents {
    pub fn rows(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

/// True when the header row names every column of `schema`.
pub fn is_gdelt_header(header: &[&str], schema: &GdeltSchema) -> bool {
    schema
        .columns()
        .iter()
        .all(|c| header.iter().any(|h| h.trim() == *c))
}

/// Parses a GDELT-format CSV export.
pub fn parse_gdelt_csv<R: Read>(source: R, schema: &GdeltSchema) -> Result<ParsedEvents> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header = reader.byte_headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(schema.columns()) {
        *slot = header
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim().trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut parsed = ParsedEvents::default();
    let mut row = csv::ByteRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                // Malformed quoting and similar: the reader resumes on the next record.
                parsed.rejects.push(RejectedRow {
                    line,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        }
        let line = row.position().map_or(line, |p| p.line());
        match parse_row(&row, &index) {
            Ok(rec) => parsed.records.push(rec),
            Err(reason) => parsed.rejects.push(RejectedRow {
                line,
                reason: reason.to_string(),
            }),
        }
    }
    Ok(parsed)
}

fn field(row: &csv::ByteRecord, idx: usize) -> std::result::Result<&str, &'static str> {
    match row.get(idx) {
        None => Ok(""),
        Some(bytes) => std::str::from_utf8(bytes)
            .map(str::trim)
            .map_err(|_| "invalid utf-8"),
    }
}

fn parse_coord(
    text: &str,
    limit: f64,
    missing: &'static str,
    bad: &'static str,
    range: &'static str,
) -> std::result::Result<f64, &'static str> {
    if text.is_empty() {
        return Err(missing);
    }
    let v: f64 = text.parse().map_err(|_| bad)?;
    if !v.is_finite() {
        return Err(bad);
    }
    if v.abs() > limit {
        return Err(range);
    }
    Ok(v)
}

fn parse_row(
    row: &csv::ByteRecord,
    idx: &[usize; 6],
) -> std::result::Result<RawEventRecord, &'static str> {
    let actor = field(row, idx[0])?;
    let year = field(row, idx[1])?;
    let country = field(row, idx[2])?;
    let lat = field(row, idx[3])?;
    let lon = field(row, idx[4])?;
    let code = field(row, idx[5])?;

    let actor1_lat = parse_coord(
        lat,
        90.0,
        "missing latitude",
        "unparseable latitude",
        "latitude out of range",
    )?;
    let actor1_lon = parse_coord(
        lon,
        180.0,
        "missing longitude",
        "unparseable longitude",
        "longitude out of range",
    )?;
    if year.is_empty() {
        return Err("missing year");
    }
    let year: i32 = year.parse().map_err(|_| "non-numeric year")?;
    if !(1000..=9999).contains(&year) {
        return Err("year is not a 4-digit positive integer");
    }

    Ok(RawEventRecord {
        actor1_type_code: actor.to_string(),
        year,
        action_country_code: country.to_string(),
        actor1_lat,
        actor1_lon,
        event_code: code.to_string(),
    })
}

/// Row filter: strict box containment, inclusive year range, country match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFilter {
    pub bbox: BoundingBox,
    pub year_min: i32,
    pub year_max: i32,
    pub country_code: String,
}

impl RecordFilter {
    pub fn new(bbox: BoundingBox, year_min: i32, year_max: i32, country_code: &str) -> Result<Self> {
        if year_min > year_max {
            return Err(Error::invalid(format!(
                "year range {year_min}..{year_max} is empty"
            )));
        }
        Ok(Self {
            bbox,
            year_min,
            year_max,
            country_code: country_code.to_string(),
        })
    }

    /// Iraq, 2012 through 2015.
    pub fn iraq() -> Self {
        Self {
            bbox: BoundingBox::IRAQ,
            year_min: 2012,
            year_max: 2015,
            country_code: "IZ".into(),
        }
    }

    pub fn accepts(&self, r: &RawEventRecord) -> bool {
        self.bbox.contains(r.actor1_lat, r.actor1_lon)
            && (self.year_min..=self.year_max).contains(&r.year)
            && r.action_country_code == self.country_code
    }
}

pub fn filter_records(records: &[RawEventRecord], filter: &RecordFilter) -> Vec<RawEventRecord> {
    records.iter().filter(|r| filter.accepts(r)).cloned().collect()
}

/// Maps a record to its event class. A `REF` actor type wins over the event code.
pub fn encode_label(record: &RawEventRecord) -> Result<EventClass> {
    if record.actor1_type_code.trim() == "REF" {
        return Ok(EventClass::Refugees);
    }
    EventClass::from_event_code(&record.event_code).ok_or_else(|| Error::UnknownEventCode {
        actor_type: record.actor1_type_code.clone(),
        event_code: record.event_code.clone(),
    })
}

/// Builds a BigQuery statement selecting one event class from the GDELT
/// events table, in the same shape as the query used for the Iraq export.
pub fn generate_query(
    event: EventClass,
    year_min: i32,
    year_max: i32,
    bbox: &BoundingBox,
) -> Result<String> {
    if year_min > year_max {
        return Err(Error::invalid(format!(
            "year range {year_min}..{year_max} is empty"
        )));
    }
    let predicate = match event {
        EventClass::Refugees => format!("Actor1Type1Code=\"{}\"", event.source_code()),
        _ => format!("EventCode=\"{}\"", event.source_code()),
    };
    Ok(format!(
        "SELECT Actor1Type1Code,Year,\n\
         ActionGeo_CountryCode, Actor1Geo_Lat,\n\
         Actor1Geo_Long, EventCode\n\
         \n\
         FROM [gdelt-bq:full.events]\n\
         \n\
         WHERE {predicate}\n\
         \n\
         AND (Year> {y0} AND Year < {y1})\n\
         AND (Actor1Geo_Lat > {lat0}\n\
         AND Actor1Geo_Lat < {lat1})\n\
         AND (Actor1Geo_Long > {lon0}\n\
         AND Actor1Geo_Long < {lon1})\n\
         AND Actor1Geo_Lat IS NOT NULL\n\
         AND Actor1Geo_Long IS NOT NULL\n",
        y0 = year_min - 1,
        y1 = year_max + 1,
        lat0 = bbox.lat_min,
        lat1 = bbox.lat_max,
        lon0 = bbox.lon_min,
        lon1 = bbox.lon_max,
    ))
}

/// Counters collected while turning an export into a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub records: usize,
    pub rejected: usize,
    pub rejected_by_reason: BTreeMap<String, usize>,
    pub filtered_out: usize,
    pub unknown_code: usize,
    /// Rows carrying both `REF` and a studied event code.
    pub ref_collisions: usize,
    pub per_class: BTreeMap<u16, usize>,
}

impl IngestReport {
    pub fn points(&self) -> usize {
        self.per_class.values().sum()
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read        {:>8}", self.rows)?;
        writeln!(f, "records parsed   {:>8}", self.records)?;
        writeln!(f, "rows rejected    {:>8}", self.rejected)?;
        for (reason, n) in &self.rejected_by_reason {
            writeln!(f, "  {reason:<30} {n:>8}")?;
        }
        writeln!(f, "outside filter   {:>8}", self.filtered_out)?;
        writeln!(f, "unknown code     {:>8}", self.unknown_code)?;
        writeln!(f, "REF collisions   {:>8}", self.ref_collisions)?;
        writeln!(f, "{:<6} {:<32} {:>8}", "Event", "Description", "Count")?;
        for class in EventClass::ALL {
            let n = self.per_class.get(&class.label()).copied().unwrap_or(0);
            writeln!(f, "{:<6} {:<32} {:>8}", class.source_code(), class.description(), n)?;
        }
        write!(f, "{:<39} {:>8}", "Total number of records", self.points())
    }
}

/// Output of [`ingest`].
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub report: IngestReport,
    pub rejects: Vec<RejectedRow>,
}

/// Parse, filter and label an export in one pass.
pub fn ingest<R: Read>(
    source: R,
    schema: &GdeltSchema,
    filter: &RecordFilter,
    provenance: &str,
) -> Result<Ingested> {
    let parsed = parse_gdelt_csv(source, schema)?;
    let mut report = IngestReport {
        rows: parsed.rows(),
        records: parsed.records.len(),
        rejected: parsed.rejects.len(),
        ..IngestReport::default()
    };
    for r in &parsed.rejects {
        *report.rejected_by_reason.entry(r.reason.clone()).or_default() += 1;
    }

    let kept = filter_records(&parsed.records, filter);
    report.filtered_out = parsed.records.len() - kept.len();

    let mut points = Vec::with_capacity(kept.len());
    for rec in &kept {
        match encode_label(rec) {
            Ok(class) => {
                if rec.is_collision() {
                    report.ref_collisions += 1;
                }
                *report.per_class.entry(class.label()).or_default() += 1;
                points.push(LabeledPoint::new(rec.actor1_lat, rec.actor1_lon, class));
            }
            Err(_) => report.unknown_code += 1,
        }
    }

    let provenance = format!(
        "{provenance}; box ({}, {}, {}, {}); years {}-{}; country {}",
        filter.bbox.lat_min,
        filter.bbox.lat_max,
        filter.bbox.lon_min,
        filter.bbox.lon_max,
        filter.year_min,
        filter.year_max,
        filter.country_code
    );
    let dataset = Dataset::from_points("full", points)
        .with_bbox(filter.bbox)
        .with_provenance(provenance);
    Ok(Ingested {
        dataset,
        report,
        rejects: parsed.rejects,
    })
}
