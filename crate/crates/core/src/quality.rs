//! Selecting a per-probe quality column from a dataset.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::factors::{factor_report, Factor, FactorReport};
use crate::geometry::read_mask;
use crate::image::read_image;
use crate::manifest::{resolve, SampleRecord};

/// Where a quality value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QualityField {
    DfsLabel,
    PredictedQuality,
    Factor(Factor),
}

impl QualityField {
    pub fn name(self) -> &'static str {
        match self {
            QualityField::DfsLabel => "dfs_label",
            QualityField::PredictedQuality => "predicted_quality",
            QualityField::Factor(f) => f.name(),
        }
    }

    pub fn is_factor(self) -> bool {
        matches!(self, QualityField::Factor(_))
    }

    /// Reads the field from a record, computing it from `factors` for
    /// hand-crafted factors.
    pub fn value(self, record: &SampleRecord, factors: Option<&FactorReport>) -> Result<f64> {
        let missing = || Error::MissingValue(format!("{} of `{}`", self.name(), record.sample_id));
        match self {
            QualityField::DfsLabel => record.dfs_label.ok_or_else(missing),
            QualityField::PredictedQuality => record.predicted_quality.ok_or_else(missing),
            QualityField::Factor(f) => factors.map(|r| r.get(f)).ok_or_else(missing),
        }
    }
}

impl fmt::Display for QualityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QualityField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dfs_label" => Ok(QualityField::DfsLabel),
            "predicted_quality" => Ok(QualityField::PredictedQuality),
            other => Factor::from_name(other)
                .map(QualityField::Factor)
                .ok_or_else(|| Error::Config(format!("unknown quality field `{other}`"))),
        }
    }
}

/// Loads a record's image and mask and computes its factors.
pub fn record_factors(record: &SampleRecord, manifest_path: &Path) -> Result<FactorReport> {
    let image = read_image(resolve(manifest_path, &record.image_path))?;
    let mask = read_mask(resolve(manifest_path, &record.occlusion_path))?;
    record
        .geometry
        .validate_within(image.width(), image.height())?;
    factor_report(&image, &record.geometry, &mask)
}

/// Quality values of the given records, in order.
pub fn column(
    records: &[SampleRecord],
    indices: impl IntoIterator<Item = usize>,
    field: QualityField,
    factors: Option<&[FactorReport]>,
) -> Result<Vec<f64>> {
    indices
        .into_iter()
        .map(|i| {
            let report = match (field, factors) {
                (QualityField::Factor(_), Some(all)) => Some(&all[i]),
                _ => None,
            };
            field.value(&records[i], report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!(
            "dfs_label".parse::<QualityField>().unwrap(),
            QualityField::DfsLabel
        );
        assert_eq!(
            "usable_area".parse::<QualityField>().unwrap(),
            QualityField::Factor(Factor::UsableArea)
        );
        assert!("blur".parse::<QualityField>().is_err());
        for f in Factor::ALL {
            let q = QualityField::Factor(f);
            assert_eq!(q.to_string().parse::<QualityField>().unwrap(), q);
        }
    }
}
