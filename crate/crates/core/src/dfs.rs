//! Feature-space quality labels.
//!
//! A probe's label is its cosine similarity to the enrollment embedding of
//! its own class, mapped affinely from `[-1, 1]` onto `[0, 1]`. An image
//! whose embedding coincides with the enrollment gets 1.0.

use std::collections::BTreeMap;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::manifest::SampleRecord;

/// Dot product of two unit embeddings, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok(a.dot(b)?.clamp(-1.0, 1.0))
}

/// Verification score of a probe against a gallery template.
pub fn match_score(probe: &Embedding, gallery: &Embedding) -> Result<f64> {
    cosine_similarity(probe, gallery)
}

/// Maps cosine similarity `s` to `(s + 1) / 2`.
pub fn similarity_to_label(similarity: f64) -> f64 {
    (similarity + 1.0) / 2.0
}

/// Quality label of `probe` against its class enrollment.
pub fn dfs_label(probe: &Embedding, enrollment: &Embedding) -> Result<f64> {
    Ok(similarity_to_label(cosine_similarity(probe, enrollment)?))
}

/// Records with every `dfs_label` populated.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub records: Vec<SampleRecord>,
    /// class_id -> sample_id of the enrollment record.
    pub enrollment_index: BTreeMap<String, String>,
}

/// Maps each class to the index of its single enrollment record.
pub fn enrollment_positions(records: &[SampleRecord]) -> Result<BTreeMap<&str, usize>> {
    let mut found: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let slot = found.entry(r.class_id.as_str()).or_default();
        if r.is_enrollment {
            slot.push(i);
        }
    }
    found
        .into_iter()
        .map(|(class, idx)| match idx.as_slice() {
            [one] => Ok((class, *one)),
            [] => Err(Error::MissingEnrollment(class.to_string())),
            many => Err(Error::MultipleEnrollments {
                class_id: class.to_string(),
                count: many.len(),
            }),
        })
        .collect()
}

/// Labels every record against its class enrollment.
pub fn build_labels(records: &[SampleRecord]) -> Result<LabeledDataset> {
    let positions = enrollment_positions(records)?;
    let mut out = records.to_vec();
    for r in out.iter_mut() {
        let enrollment = &records[positions[r.class_id.as_str()]];
        r.dfs_label = Some(if r.is_enrollment {
            1.0
        } else {
            dfs_label(&r.embedding, &enrollment.embedding)?
        });
    }
    let enrollment_index = positions
        .into_iter()
        .map(|(class, i)| (class.to_string(), records[i].sample_id.clone()))
        .collect();
    Ok(LabeledDataset {
        records: out,
        enrollment_index,
    })
}
