//! Labeled point datasets, class-subset combinations and train/test splits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{BoundingBox, EventClass};

/// A (lat, lon) feature pair with its event class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub lat: f64,
    pub lon: f64,
    pub label: EventClass,
}

impl LabeledPoint {
    pub fn new(lat: f64, lon: f64, label: EventClass) -> Self {
        Self { lat, lon, label }
    }

    pub fn features(&self) -> [f64; 2] {
        [self.lat, self.lon]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    /// Sorted by label.
    pub classes: Vec<EventClass>,
    pub points: Vec<LabeledPoint>,
    pub provenance: String,
    pub bbox: Option<BoundingBox>,
}

/// Canonical id for a class subset, e.g. `0-194`.
pub fn combination_id(classes: &[EventClass]) -> String {
    classes
        .iter()
        .map(|c| c.label().to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Parses `0,194` or `0-194` into a sorted, deduplicated class list.
pub fn parse_class_list(text: &str) -> Result<Vec<EventClass>> {
    let mut out = text
        .split([',', '-'])
        .filter(|s| !s.trim().is_empty())
        .map(EventClass::parse)
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn sorted_unique(classes: impl IntoIterator<Item = EventClass>) -> Vec<EventClass> {
    let mut v: Vec<_> = classes.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

impl Dataset {
    /// Dataset whose class set is exactly the labels present.
    pub fn from_points(id: impl Into<String>, points: Vec<LabeledPoint>) -> Self {
        let classes = sorted_unique(points.iter().map(|p| p.label));
        Self {
            id: id.into(),
            classes,
            points,
            provenance: String::new(),
            bbox: None,
        }
    }

    /// Dataset with an explicit class set; every label must belong to it.
    pub fn new(
        id: impl Into<String>,
        classes: impl IntoIterator<Item = EventClass>,
        points: Vec<LabeledPoint>,
    ) -> Result<Self> {
        let classes = sorted_unique(classes);
        if let Some(p) = points.iter().find(|p| !classes.contains(&p.label)) {
            return Err(Error::invalid(format!(
                "point label {} is not among the dataset classes",
                p.label.label()
            )));
        }
        Ok(Self {
            id: id.into(),
            classes,
            points,
            provenance: String::new(),
            bbox: None,
        })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_bbox(mut self, bbox: BoundingBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_counts(&self) -> BTreeMap<EventClass, usize> {
        let mut counts: BTreeMap<EventClass, usize> =
            self.classes.iter().map(|c| (*c, 0)).collect();
        for p in &self.points {
            *counts.entry(p.label).or_default() += 1;
        }
        counts
    }

    /// Keeps the points at `indices`, in that order.
    pub fn select(&self, id: impl Into<String>, indices: &[usize]) -> Dataset {
        Dataset {
            id: id.into(),
            classes: self.classes.clone(),
            points: indices.iter().map(|&i| self.points[i]).collect(),
            provenance: self.provenance.clone(),
            bbox: self.bbox,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lat", "lon", "label"])?;
        for p in &self.points {
            w.write_record([
                p.lat.to_string(),
                p.lon.to_string(),
                p.label.label().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing csv into memory cannot fail");
        buf
    }

    /// Reads the `lat,lon,label` layout written by [`Dataset::write_csv`].
    pub fn read_csv<R: Read>(id: impl Into<String>, source: R) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(source);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptyInput);
        }
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (ilat, ilon, ilabel) = (col("lat")?, col("lon")?, col("label")?);
        let mut points = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |i: usize, what: &str| -> Result<f64> {
                rec.get(i)
                    .map(str::trim)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("row {}: bad {what}", row + 2)))
            };
            let lat = num(ilat, "lat")?;
            let lon = num(ilon, "lon")?;
            let label = rec
                .get(ilabel)
                .map(str::trim)
                .and_then(|s| s.parse::<i64>().ok())
                .ok_or_else(|| Error::invalid(format!("row {}: bad label", row + 2)))?;
            points.push(LabeledPoint::new(lat, lon, EventClass::from_label(label)?));
        }
        Ok(Dataset::from_points(id, points))
    }

    /// SHA-256 over the canonical CSV form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_bytes()))
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            id: self.id.clone(),
            classes: self.classes.clone(),
            class_counts: self
                .class_counts()
                .into_iter()
                .map(|(c, n)| (c.label(), n))
                .collect(),
            instances: self.len(),
            provenance: self.provenance.clone(),
            content_hash: self.content_hash(),
        }
    }

    /// Seeded sample of at most `limit` points, in dataset order.
    pub fn downsample(&self, limit: usize, seed: u64) -> Vec<LabeledPoint> {
        if limit >= self.len() {
            return self.points.clone();
        }
        let mut idx = permutation(self.len(), seed);
        idx.truncate(limit);
        idx.sort_unstable();
        idx.into_iter().map(|i| self.points[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub id: String,
    pub classes: Vec<EventClass>,
    pub class_counts: BTreeMap<u16, usize>,
    pub instances: usize,
    pub provenance: String,
    pub content_hash: String,
}

/// `n choose r`.
pub fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All class subsets of the requested sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombinationSpec {
    pub n: usize,
    pub sizes: Vec<usize>,
    pub subsets: Vec<Vec<EventClass>>,
}

/// Enumerates subsets in ascending size, lexicographic by label within a size.
pub fn enumerate_combinations(classes: &[EventClass], sizes: &[usize]) -> Result<CombinationSpec> {
    let classes = sorted_unique(classes.iter().copied());
    let n = classes.len();
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(Error::invalid("no combination sizes requested"));
    }
    if let Some(bad) = sizes.iter().find(|&&r| r < 2 || r > n) {
        return Err(Error::invalid(format!(
            "combination size {bad} is outside 2..={n}"
        )));
    }

    let mut subsets = Vec::new();
    for &r in &sizes {
        let mut idx: Vec<usize> = (0..r).collect();
        loop {
            subsets.push(idx.iter().map(|&i| classes[i]).collect());
            // advance to the next r-combination of 0..n
            let Some(pos) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(CombinationSpec { n, sizes, subsets })
}

/// Restriction of `full` to the points whose label is in `subset`.
pub fn materialize_combination(full: &Dataset, subset: &[EventClass]) -> Result<Dataset> {
    let subset = sorted_unique(subset.iter().copied());
    if subset.is_empty() {
        return Err(Error::invalid("empty class subset"));
    }
    if let Some(c) = subset.iter().find(|c| !full.classes.contains(c)) {
        return Err(Error::invalid(format!(
            "class {} is not in dataset `{}`",
            c.label(),
            full.id
        )));
    }
    let points = full
        .points
        .iter()
        .filter(|p| subset.contains(&p.label))
        .copied()
        .collect();
    let mut out = Dataset::new(combination_id(&subset), subset, points)?;
    out.provenance = format!("{} restricted to {{{}}}", full.id, combination_id(&out.classes));
    out.bbox = full.bbox;
    Ok(out)
}

/// Seeded uniform permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

fn train_size(n: usize, ratio: f64) -> usize {
    // guard against 0.7 * 30 landing a hair under 21
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Index form of [`split_train_test`].
pub fn split_indices(
    data: &Dataset,
    ratio: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} is not in (0, 1)")));
    }
    let n = data.len();
    let n_train = train_size(n, ratio);
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "ratio {ratio} on {n} points leaves an empty partition"
        )));
    }

    let perm = permutation(n, seed);
    if !stratified {
        let test = perm[n_train..].to_vec();
        let mut train = perm;
        train.truncate(n_train);
        return Ok((train, test));
    }

    // Per-class pools in permutation order.
    let mut pools: BTreeMap<EventClass, Vec<usize>> = BTreeMap::new();
    for &i in &perm {
        pools.entry(data.points[i].label).or_default().push(i);
    }
    if let Some((c, pool)) = pools.iter().find(|(_, p)| p.len() < 2) {
        return Err(Error::invalid(format!(
            "stratified split needs at least 2 points of class {}, found {}",
            c.label(),
            pool.len()
        )));
    }
    // Largest-remainder allocation keeps the total at floor(ratio * n).
    let mut quotas: Vec<(EventClass, usize, f64)> = pools
        .iter()
        .map(|(c, p)| {
            let exact = ratio * p.len() as f64;
            let q = exact.floor() as usize;
            (*c, q, exact - q as f64)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut extra = n_train.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(a.cmp(&b)));
    for i in order {
        if extra == 0 {
            break;
        }
        if quotas[i].1 < pools[&quotas[i].0].len() {
            quotas[i].1 += 1;
            extra -= 1;
        }
    }
    let quota: BTreeMap<EventClass, usize> = quotas.iter().map(|q| (q.0, q.1)).collect();

    let mut taken: BTreeMap<EventClass, usize> = BTreeMap::new();
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for &i in &perm {
        let c = data.points[i].label;
        let t = taken.entry(c).or_default();
        if *t < quota[&c] {
            *t += 1;
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// Seeded train/test partition; `|train| = floor(ratio * n)`.
pub fn split_train_test(data: &Dataset, ratio: f64, seed: u64, stratified: bool) -> Result<SplitPair> {
    let (train, test) = split_indices(data, ratio, seed, stratified)?;
    Ok(SplitPair {
        train: data.select(format!("{}.train", data.id), &train),
        test: data.select(format!("{}.test", data.id), &test),
        ratio,
        seed,
        stratified,
    })
}
