use std::path::Path;

use irisq::evaluation::{Gate, VerificationSet};
use irisq::factors::FactorReport;
use irisq::quality::{column, record_factors, QualityField};
use irisq::{load_manifest, SampleRecord};
use rayon::prelude::*;

use crate::args::GateKind;
use crate::failure::{CliResult, Failure};

pub fn parse_field(name: &str) -> CliResult<QualityField> {
    name.trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("unknown quality field `{name}`")))
}

/// Factor reports of every record, in record order.
pub fn all_factor_reports(
    records: &[SampleRecord],
    manifest: &Path,
) -> CliResult<Vec<FactorReport>> {
    Ok(records
        .par_iter()
        .map(|r| record_factors(r, manifest))
        .collect::<irisq::Result<_>>()?)
}

/// Records of a manifest, with factor reports when a requested field needs
/// them.
pub struct Dataset {
    pub records: Vec<SampleRecord>,
    pub factors: Option<Vec<FactorReport>>,
}

impl Dataset {
    pub fn load(path: &Path, fields: &[QualityField]) -> CliResult<Self> {
        let records = load_manifest(path)?;
        let factors = if fields.iter().any(|f| f.is_factor()) {
            Some(all_factor_reports(&records, path)?)
        } else {
            None
        };
        Ok(Self { records, factors })
    }

    pub fn column(&self, field: QualityField, indices: &[usize]) -> CliResult<Vec<f64>> {
        Ok(column(
            &self.records,
            indices.iter().copied(),
            field,
            self.factors.as_deref(),
        )?)
    }

    /// Mean of `field` over every record.
    pub fn mean(&self, field: QualityField) -> CliResult<f64> {
        let all: Vec<usize> = (0..self.records.len()).collect();
        let values = self.column(field, &all)?;
        if values.is_empty() {
            return Err(irisq::Error::InsufficientData("empty manifest".into()).into());
        }
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Chooses the gate for a field. Band gates are centred on the mean of the
/// field over `reference`.
pub fn gate_for(field: QualityField, kind: GateKind, reference: &Dataset) -> CliResult<Gate> {
    let band = match kind {
        GateKind::Auto => field.is_factor(),
        GateKind::Band => true,
        GateKind::LowerTail => false,
    };
    Ok(if band {
        Gate::Band {
            mu: reference.mean(field)?,
        }
    } else {
        Gate::LowerTail
    })
}

pub struct Probes {
    pub set: VerificationSet,
    pub indices: Vec<usize>,
}

impl Probes {
    pub fn new(data: &Dataset) -> CliResult<Self> {
        let set = VerificationSet::from_records(&data.records)?;
        let indices = set.probe_record_indices().collect();
        Ok(Self { set, indices })
    }
}

pub fn gate_name(gate: Gate) -> String {
    match gate {
        Gate::LowerTail => "lower_tail".into(),
        Gate::Band { mu } => format!("band(mu={mu})"),
    }
}
