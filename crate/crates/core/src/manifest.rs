//! Line-delimited dataset manifests.
//!
//! The first non-empty line is the header `{"schema_version":1}`; every
//! following line is one JSON-encoded [`SampleRecord`]. File references are
//! resolved relative to the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::embedding::{l2_norm, Embedding};
use crate::error::{Error, Result};
use crate::geometry::IrisGeometry;

pub const SCHEMA_VERSION: u32 = 1;

/// One eye image and everything known about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub class_id: String,
    pub image_path: PathBuf,
    pub geometry: IrisGeometry,
    pub occlusion_path: PathBuf,
    pub embedding: Embedding,
    pub is_enrollment: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dfs_label: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_quality: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
}

/// Embedding as written on disk, before the norm policy is applied.
#[derive(Deserialize)]
struct RawRecord {
    sample_id: String,
    class_id: String,
    image_path: PathBuf,
    geometry: IrisGeometry,
    occlusion_path: PathBuf,
    embedding: Vec<f64>,
    is_enrollment: bool,
    #[serde(default)]
    dfs_label: Option<f64>,
    #[serde(default)]
    predicted_quality: Option<f64>,
}

/// Norms in this range are renormalized with a warning; others are rejected.
const RENORMALIZE_RANGE: (f64, f64) = (0.5, 2.0);

fn accept_embedding(values: Vec<f64>, sample_id: &str) -> Result<Embedding> {
    let norm = l2_norm(&values);
    if !norm.is_finite() || norm < RENORMALIZE_RANGE.0 || norm > RENORMALIZE_RANGE.1 {
        return Err(Error::InvalidEmbedding(format!(
            "sample `{sample_id}` has embedding norm {norm}"
        )));
    }
    if (norm - 1.0).abs() > crate::embedding::UNIT_TOLERANCE {
        warn!("sample `{sample_id}`: embedding norm {norm:.6}, renormalized");
    }
    Embedding::new(values)
}

fn check_unit_interval(value: Option<f64>, field: &str, sample_id: &str) -> Result<()> {
    match value {
        Some(v) if !(0.0..=1.0).contains(&v) => Err(Error::Config(format!(
            "sample `{sample_id}`: {field} {v} outside [0, 1]"
        ))),
        _ => Ok(()),
    }
}

/// Checks every per-record and cross-record invariant.
pub fn validate_records(records: &[SampleRecord]) -> Result<()> {
    let mut ids = HashSet::new();
    let mut enrollments: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        if !ids.insert(r.sample_id.as_str()) {
            return Err(Error::DuplicateSampleId(r.sample_id.clone()));
        }
        r.geometry.validate()?;
        check_unit_interval(r.dfs_label, "dfs_label", &r.sample_id)?;
        check_unit_interval(r.predicted_quality, "predicted_quality", &r.sample_id)?;
        let count = enrollments.entry(r.class_id.as_str()).or_default();
        if r.is_enrollment {
            *count += 1;
            if let Some(label) = r.dfs_label {
                if label != 1.0 {
                    return Err(Error::Config(format!(
                        "enrollment `{}` has dfs_label {label}, expected 1.0",
                        r.sample_id
                    )));
                }
            }
        }
    }
    for (class_id, count) in enrollments {
        match count {
            1 => {}
            0 => return Err(Error::MissingEnrollment(class_id.to_string())),
            n => {
                return Err(Error::MultipleEnrollments {
                    class_id: class_id.to_string(),
                    count: n,
                })
            }
        }
    }
    Ok(())
}

/// Parses manifest text. An empty document yields an empty list.
pub fn parse_manifest(text: &str) -> Result<Vec<SampleRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let Some((line, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let header: Header = serde_json::from_str(header).map_err(|e| Error::ManifestParse {
        line,
        message: format!("bad header: {e}"),
    })?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::ManifestParse {
            line,
            message: format!("unsupported schema_version {}", header.schema_version),
        });
    }
    let mut records = Vec::new();
    for (line, text) in lines {
        let raw: RawRecord = serde_json::from_str(text).map_err(|e| Error::ManifestParse {
            line,
            message: e.to_string(),
        })?;
        let embedding = accept_embedding(raw.embedding, &raw.sample_id)?;
        records.push(SampleRecord {
            sample_id: raw.sample_id,
            class_id: raw.class_id,
            image_path: raw.image_path,
            geometry: raw.geometry,
            occlusion_path: raw.occlusion_path,
            embedding,
            is_enrollment: raw.is_enrollment,
            dfs_label: raw.dfs_label,
            predicted_quality: raw.predicted_quality,
        });
    }
    validate_records(&records)?;
    Ok(records)
}

pub fn render_manifest(records: &[SampleRecord]) -> Result<String> {
    let mut out = serde_json::to_string(&Header {
        schema_version: SCHEMA_VERSION,
    })
    .expect("header serializes");
    out.push('\n');
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

/// Validates `records` and writes them atomically.
pub fn save_manifest(records: &[SampleRecord], path: impl AsRef<Path>) -> Result<()> {
    validate_records(records)?;
    crate::fsutil::write_atomic(path, render_manifest(records)?.as_bytes())
}

/// Resolves a record's file reference against the manifest location.
pub fn resolve(manifest_path: &Path, reference: &Path) -> PathBuf {
    if reference.is_absolute() {
        return reference.to_path_buf();
    }
    manifest_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(reference)
}
