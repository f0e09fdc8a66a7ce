//! Model file format.
//!
//! A model file is three newline-terminated lines of UTF-8:
//!
//! ```text
//! {"format":"gdelt-geoclass-model","format_version":1,"algorithm":...,"classes":[...],...}
//! {"algorithm":"decision_tree","model":{...}}
//! sha256:<hex digest of the two lines above, newlines included>
//! ```
//!
//! The header is readable without the payload. Floats are written in
//! shortest round-trip form and parsed back exactly, so a reloaded model
//! predicts bit-identically.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::knn::KnnPayload;
use super::{
    Algorithm, DecisionTree, GaussianNb, KnnModel, LogisticModel, ModelMeta, ModelParams,
    TrainedModel,
};
use crate::error::{Error, Result};
use crate::ingest::EventClass;

pub const FORMAT_MAGIC: &str = "gdelt-geoclass-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub classes: Vec<EventClass>,
    pub hyperparameters: serde_json::Value,
    pub seed: u64,
    pub id: String,
    pub dataset_id: String,
    pub trained_at: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "model", rename_all = "snake_case")]
enum Payload {
    Knn(KnnPayload),
    NaiveBayes(GaussianNb),
    DecisionTree(DecisionTree),
    LogisticRegression(LogisticModel),
}

fn digest(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

pub fn serialize_model(model: &TrainedModel) -> Vec<u8> {
    let m = &model.meta;
    let header = ModelHeader {
        format: FORMAT_MAGIC.into(),
        format_version: FORMAT_VERSION,
        algorithm: m.algorithm,
        classes: m.classes.clone(),
        hyperparameters: model.params.hyperparameters(),
        seed: m.seed,
        id: m.id.clone(),
        dataset_id: m.dataset_id.clone(),
        trained_at: m.trained_at.clone(),
    };
    let payload = match &model.params {
        ModelParams::Knn(k) => Payload::Knn(KnnPayload::from(k)),
        ModelParams::NaiveBayes(nb) => Payload::NaiveBayes(nb.clone()),
        ModelParams::DecisionTree(t) => Payload::DecisionTree(t.clone()),
        ModelParams::LogisticRegression(lr) => Payload::LogisticRegression(lr.clone()),
    };
    let mut body = serde_json::to_vec(&header).expect("header serializes");
    body.push(b'\n');
    serde_json::to_writer(&mut body, &payload).expect("payload serializes");
    body.push(b'\n');
    let footer = format!("sha256:{}\n", digest(&body));
    body.extend_from_slice(footer.as_bytes());
    body
}

/// Reads only the header line.
pub fn read_header(bytes: &[u8]) -> Result<ModelHeader> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Corrupted("missing header line".into()))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes[..end])
        .map_err(|e| Error::Corrupted(format!("unreadable header: {e}")))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_MAGIC) {
        return Err(Error::Corrupted("not a model file".into()));
    }
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupted("header has no format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::FormatVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Corrupted(format!("bad header: {e}")))
}

pub fn deserialize_model(bytes: &[u8]) -> Result<TrainedModel> {
    let header = read_header(bytes)?;

    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
    let payload_end = bytes[header_end..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| header_end + p + 1)
        .ok_or_else(|| Error::Corrupted("truncated payload".into()))?;
    let footer = std::str::from_utf8(&bytes[payload_end..])
        .map_err(|_| Error::Corrupted("footer is not utf-8".into()))?;
    let stored = footer
        .strip_prefix("sha256:")
        .and_then(|f| f.strip_suffix('\n'))
        .ok_or_else(|| Error::Corrupted("missing checksum footer".into()))?;
    if stored != digest(&bytes[..payload_end]) {
        return Err(Error::Corrupted("checksum mismatch".into()));
    }

    let payload: Payload = serde_json::from_slice(&bytes[header_end..payload_end - 1])
        .map_err(|e| Error::Corrupted(format!("bad payload: {e}")))?;
    let params = match payload {
        Payload::Knn(p) => ModelParams::Knn(KnnModel::try_from(p)?),
        Payload::NaiveBayes(m) => ModelParams::NaiveBayes(m),
        Payload::DecisionTree(m) => ModelParams::DecisionTree(m),
        Payload::LogisticRegression(m) => ModelParams::LogisticRegression(m),
    };
    if params.algorithm() != header.algorithm {
        return Err(Error::Corrupted(format!(
            "header says {} but payload holds {}",
            header.algorithm,
            params.algorithm()
        )));
    }
    if params.hyperparameters() != header.hyperparameters {
        return Err(Error::Corrupted("header hyperparameters disagree with payload".into()));
    }
    Ok(TrainedModel {
        meta: ModelMeta {
            id: header.id,
            dataset_id: header.dataset_id,
            algorithm: header.algorithm,
            classes: header.classes,
            seed: header.seed,
            trained_at: header.trained_at,
        },
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, Classifier, Hyperparameters};
    use crate::dataset::{Dataset, LabeledPoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = (0..300)
            .map(|_| {
                let lat = rng.random_range(29.2..37.2);
                let lon = rng.random_range(39.3..48.4);
                let c = if lat + rng.random_range(-1.0..1.0) > 33.0 {
                    EventClass::Refugees
                } else {
                    EventClass::ArtilleryFight
                };
                LabeledPoint::new(lat, lon, c)
            })
            .collect();
        Dataset::from_points("0-194", pts)
    }

    #[test]
    fn roundtrip_predicts_identically() {
        let d = data();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in Algorithm::ALL {
            let m = train(a, &d, &Hyperparameters::default(), 42).unwrap();
            let bytes = serialize_model(&m);
            let back = deserialize_model(&bytes).unwrap();
            assert_eq!(back.meta, m.meta);
            assert_eq!(serialize_model(&back), bytes);
            for _ in 0..200 {
                let (lat, lon) = (rng.random_range(29.0..37.5), rng.random_range(39.0..48.6));
                assert_eq!(back.predict(lat, lon), m.predict(lat, lon));
                let (p, q) = (back.predict_proba(lat, lon), m.predict_proba(lat, lon));
                assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }

    #[test]
    fn truncation_and_tampering() {
        let m = train(Algorithm::DecisionTree, &data(), &Hyperparameters::default(), 42).unwrap();
        let bytes = serialize_model(&m);
        for cut in [10, bytes.len() / 2, bytes.len() - 5] {
            assert!(matches!(deserialize_model(&bytes[..cut]), Err(Error::Corrupted(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        let mid = bytes.len() / 2;
        flipped[mid] = if flipped[mid] == b'1' { b'2' } else { b'1' };
        assert!(matches!(deserialize_model(&flipped), Err(Error::Corrupted(_))));
        assert!(matches!(deserialize_model(b"hello\n"), Err(Error::Corrupted(_))));
    }

    #[test]
    fn future_version_is_reported() {
        let m = train(Algorithm::NaiveBayes, &data(), &Hyperparameters::default(), 42).unwrap();
        let text = String::from_utf8(serialize_model(&m)).unwrap();
        let future = text.replacen("\"format_version\":1", "\"format_version\":7", 1);
        match deserialize_model(future.as_bytes()) {
            Err(Error::FormatVersion { found, supported }) => assert_eq!((found, supported), (7, 1)),
            other => panic!("expected version error, got {other:?}"),
        }
    }
}
