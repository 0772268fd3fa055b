use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use irisq::dfs::build_labels;
use irisq::evaluation::{correlation_report, eer_at_irr, irr_eer_curve, CorrelationReport};
use irisq::factors::Factor;
use irisq::predictor::{
    load_checkpoint, load_training_samples, predict, save_checkpoint, train, ModelConfig,
    TrainConfig,
};
use irisq::quality::QualityField;
use irisq::synth::{gen_dataset, SynthConfig};
use irisq::{load_manifest, read_image};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{
    EvalArgs, FactorsArgs, LabelArgs, PredictArgs, ReportArgs, SynthArgs, TrainArgs,
};
use crate::failure::{CliResult, Failure};
use crate::output::{
    csv_text, print_resolved, read_toml, refuse_overwrite, save_manifest_from, write_output,
};
use crate::probes::{all_factor_reports, gate_for, gate_name, parse_field, Dataset, Probes};

/// IRR targets of the EER@IRR table.
pub const IRR_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.95];

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let mut config: SynthConfig = read_toml(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    print_resolved("synth", &args, Some(&config));
    config.validate()?;
    let manifest = gen_dataset(&config, &args.out)?;
    let rendered = toml::to_string(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    write_output(&args.out.join("synth.toml"), rendered.as_bytes())?;
    println!("{}", manifest.display());
    Ok(())
}

pub fn label(args: LabelArgs) -> CliResult<()> {
    print_resolved::<_, ()>("label", &args, None);
    refuse_overwrite(&args.manifest, &args.out)?;
    let records = load_manifest(&args.manifest)?;
    let labeled = build_labels(&records)?;
    save_manifest_from(labeled.records, &args.manifest, &args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn factors(args: FactorsArgs) -> CliResult<()> {
    print_resolved::<_, ()>("factors", &args, None);
    refuse_overwrite(&args.manifest, &args.out)?;
    let records = load_manifest(&args.manifest)?;
    let reports = all_factor_reports(&records, &args.manifest)?;
    let mut header = vec!["sample_id", "class_id"];
    header.extend(Factor::ALL.iter().map(|f| f.name()));
    let rows: Vec<Vec<String>> = records
        .iter()
        .zip(&reports)
        .map(|(r, rep)| {
            let mut row = vec![r.sample_id.clone(), r.class_id.clone()];
            row.extend(Factor::ALL.iter().map(|&f| num(rep.get(f))));
            row
        })
        .collect();
    write_output(&args.out, csv_text(&header, &rows)?.as_bytes())?;
    println!("{}", args.out.display());
    Ok(())
}

/// Contents of a `train --config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn default_log_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".loss.csv");
    checkpoint.with_file_name(name)
}

pub fn train_cmd(args: TrainArgs) -> CliResult<()> {
    let mut config: TrainFile = read_toml(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    print_resolved("train", &args, Some(&config));
    config.model.validate()?;
    config.train.validate()?;
    refuse_overwrite(&args.manifest, &args.out_checkpoint)?;
    let records = load_manifest(&args.manifest)?;
    let samples = load_training_samples(&records, &args.manifest)?;
    let outcome = train(&samples, config.model, &config.train)?;

    let header = ["epoch", "lambda", "lr", "loss", "mask_loss", "dfs_loss"];
    let rows: Vec<Vec<String>> = outcome
        .log
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                num(e.lambda),
                num(e.lr),
                num(e.loss),
                num(e.mask_loss),
                num(e.dfs_loss),
            ]
        })
        .collect();
    let log_path = args
        .out_log
        .clone()
        .unwrap_or_else(|| default_log_path(&args.out_checkpoint));
    if let Some(parent) = args
        .out_checkpoint
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
    {
        irisq::fsutil::ensure_dir(parent)?;
    }
    save_checkpoint(&outcome.params, &config.train, &args.out_checkpoint)?;
    write_output(&log_path, csv_text(&header, &rows)?.as_bytes())?;
    println!("{}", args.out_checkpoint.display());
    Ok(())
}

pub fn predict_cmd(args: PredictArgs) -> CliResult<()> {
    print_resolved::<_, ()>("predict", &args, None);
    refuse_overwrite(&args.manifest, &args.out)?;
    let (params, _) = load_checkpoint(&args.checkpoint)?;
    let mut records = load_manifest(&args.manifest)?;
    let qualities: Vec<f64> = records
        .par_iter()
        .map(|r| {
            let image = read_image(irisq::manifest::resolve(&args.manifest, &r.image_path))?;
            Ok(predict(&params, &image)?.quality)
        })
        .collect::<irisq::Result<_>>()?;
    for (r, q) in records.iter_mut().zip(qualities) {
        r.predicted_quality = Some(q);
    }
    save_manifest_from(records, &args.manifest, &args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

/// The evaluated dataset and the one whose means centre band gates.
fn load_with_reference(
    manifest: &Path,
    train_manifest: Option<&Path>,
    fields: &[QualityField],
) -> CliResult<(Dataset, Option<Dataset>)> {
    let data = Dataset::load(manifest, fields)?;
    let reference = match train_manifest {
        Some(path) => Some(Dataset::load(path, fields)?),
        None => None,
    };
    Ok((data, reference))
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    print_resolved::<_, ()>("eval", &args, None);
    refuse_overwrite(&args.manifest, &args.out)?;
    let field = parse_field(&args.quality_field)?;
    let (data, reference) =
        load_with_reference(&args.manifest, args.train_manifest.as_deref(), &[field])?;
    let gate = gate_for(field, args.gate, reference.as_ref().unwrap_or(&data))?;
    let probes = Probes::new(&data)?;
    let quality = data.column(field, &probes.indices)?;
    let curve = irr_eer_curve(&probes.set, &quality, gate, args.steps)?;
    if let Some(note) = &curve.note {
        eprintln!("{note}");
    }
    eprintln!("gate: {}", gate_name(gate));
    write_output(&args.out, curve.to_csv().as_bytes())?;
    println!("{}", args.out.display());
    Ok(())
}

fn correlation_row(quality: &[f64], reference: &[f64]) -> CliResult<Option<CorrelationReport>> {
    match correlation_report(quality, reference) {
        Ok(r) => Ok(Some(r)),
        Err(irisq::Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

struct ReportRow {
    field: QualityField,
    gate: String,
    correlation: Option<CorrelationReport>,
    eers: Vec<Option<f64>>,
}

fn fmt_opt(v: Option<f64>, text: bool) -> String {
    match (v, text) {
        (Some(v), true) => format!("{v:.4}"),
        (Some(v), false) => num(v),
        (None, _) => "NaN".into(),
    }
}

fn render_text(rows: &[ReportRow], probes: usize) -> String {
    let mut s = String::new();
    let width = rows
        .iter()
        .map(|r| r.field.name().len())
        .max()
        .unwrap_or(0)
        .max("field".len());
    let _ = writeln!(s, "Correlation with dfs_label over {probes} probes");
    let _ = writeln!(
        s,
        "{:<width$}  {:>8}  {:>8}  {:>8}",
        "field", "LCC", "SROCC", "MSE"
    );
    for r in rows {
        let c = r.correlation;
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}  {:>8}",
            r.field.name(),
            fmt_opt(c.map(|c| c.lcc), true),
            fmt_opt(c.map(|c| c.srocc), true),
            fmt_opt(c.map(|c| c.mse), true),
        );
    }
    let _ = writeln!(s, "\nEER@IRR");
    let mut header = format!("{:<width$}", "field");
    for irr in IRR_GRID {
        let _ = write!(header, "  {:>8}", irr);
    }
    let _ = writeln!(s, "{header}");
    for r in rows {
        let mut line = format!("{:<width$}", r.field.name());
        for e in &r.eers {
            let _ = write!(line, "  {:>8}", fmt_opt(*e, true));
        }
        let _ = writeln!(s, "{line}");
    }
    s
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    print_resolved::<_, ()>("report", &args, None);
    let fields: Vec<QualityField> = args
        .quality_fields
        .iter()
        .filter(|f| !f.trim().is_empty())
        .map(|f| parse_field(f))
        .collect::<CliResult<_>>()?;
    if fields.is_empty() {
        return Err(Failure::Usage("no quality fields given".into()));
    }
    let (data, reference) =
        load_with_reference(&args.manifest, args.train_manifest.as_deref(), &fields)?;
    let probes = Probes::new(&data)?;
    let labels = data.column(QualityField::DfsLabel, &probes.indices)?;

    let mut rows = Vec::with_capacity(fields.len());
    for &field in &fields {
        let quality = data.column(field, &probes.indices)?;
        let gate = gate_for(
            field,
            crate::args::GateKind::Auto,
            reference.as_ref().unwrap_or(&data),
        )?;
        let mut eers = Vec::with_capacity(IRR_GRID.len());
        for target in IRR_GRID {
            eers.push(match eer_at_irr(&probes.set, &quality, gate, target) {
                Ok(p) => Some(p.eer),
                Err(irisq::Error::InsufficientData(_)) => None,
                Err(e) => return Err(e.into()),
            });
        }
        rows.push(ReportRow {
            field,
            gate: gate_name(gate),
            correlation: correlation_row(&quality, &labels)?,
            eers,
        });
    }

    let corr: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let c = r.correlation;
            vec![
                r.field.name().to_string(),
                fmt_opt(c.map(|c| c.lcc), false),
                fmt_opt(c.map(|c| c.srocc), false),
                fmt_opt(c.map(|c| c.mse), false),
            ]
        })
        .collect();
    let grid_header: Vec<String> = IRR_GRID.iter().map(|v| format!("eer@{v}")).collect();
    let mut header = vec!["field", "gate"];
    header.extend(grid_header.iter().map(String::as_str));
    let grid: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.field.name().to_string(), r.gate.clone()];
            row.extend(r.eers.iter().map(|e| fmt_opt(*e, false)));
            row
        })
        .collect();
    let text = render_text(&rows, probes.indices.len());

    write_output(
        &args.out.join("correlation.csv"),
        csv_text(&["field", "lcc", "srocc", "mse"], &corr)?.as_bytes(),
    )?;
    write_output(
        &args.out.join("eer_at_irr.csv"),
        csv_text(&header, &grid)?.as_bytes(),
    )?;
    write_output(&args.out.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
