//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use irisq::dfs::build_labels;
use irisq::evaluation::{eer, eer_at_irr, lcc, srocc, Gate, ScorePairs, VerificationSet};
use irisq::factors::{factor_report, gray_level_spread, sharpness, Factor, FactorReport};
use irisq::predictor::{
    attention_pool, forward, loss_and_gradients, mask_target, predict, train, ModelConfig,
    ModelParams, TrainConfig, TrainingSample,
};
use irisq::synth::{gen_dataset_in_memory, SynthConfig, SynthDataset};
use irisq::{FeatureMap, GrayImage, IrisGeometry, RealGrid, SampleRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL_TOL: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
/// Gradients below this magnitude are compared absolutely.
const GRAD_FLOOR: f64 = 1e-6;
const MAX_GRAD_PARAMS: usize = 5000;
const EER_TOL: f64 = 0.005;
const TIE_TOL: f64 = 1e-12;
const FACTOR_TOL: f64 = 1e-9;

const TRAIN_SEED: u64 = 7;
const TEST_SEED: u64 = 1007;
const MAX_TRAIN_IMAGES: usize = 500;
const MAX_EPOCHS: usize = 200;
const EPOCHS: usize = 60;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

// 1
fn pooling_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w, h, c) = (
            rng.gen_range(1..33),
            rng.gen_range(1..33),
            rng.gen_range(1..17),
        );
        let values: Vec<f64> = (0..w * h * c).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let f = FeatureMap::new(w, h, c, values).map_err(|e| e.to_string())?;
        let level = rng.gen_range(0.01..3.0);
        let pooled = attention_pool(&f, &RealGrid::filled(w, h, level).unwrap())
            .map_err(|e| e.to_string())?;
        for (z, q) in pooled.iter().enumerate() {
            let mut mean = 0.0;
            for y in 0..h {
                for x in 0..w {
                    mean += f.get(x, y, z);
                }
            }
            mean /= (w * h) as f64;
            worst = worst.max((q - mean).abs() / mean.abs().max(1.0));
        }
    }
    check(
        worst <= POOL_TOL,
        format!("max relative error {worst:.2e} over 100 maps"),
    )
}

// 2
fn pooling_scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w, h, c) = (
            rng.gen_range(1..33),
            rng.gen_range(1..33),
            rng.gen_range(1..17),
        );
        let f = FeatureMap::new(
            w,
            h,
            c,
            (0..w * h * c).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        )
        .unwrap();
        let heat =
            RealGrid::new(w, h, (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let base = attention_pool(&f, &heat).map_err(|e| e.to_string())?;
        for k in [0.1, 1.0, 10.0] {
            let scaled = attention_pool(&f, &heat.scaled(k).unwrap()).map_err(|e| e.to_string())?;
            for (a, b) in base.iter().zip(&scaled) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(
        worst <= POOL_TOL,
        format!("max deviation {worst:.2e} for k in {{0.1, 1, 10}}"),
    )
}

// 3
fn gradient_correctness() -> Outcome {
    let configs = [
        [4, 6, 6],
        [3, 5, 7],
        [8, 16, 16],
        [2, 4, 4],
        [6, 8, 10],
        [5, 5, 5],
    ];
    let mut worst = 0.0f64;
    for (seed, channels) in configs.iter().enumerate() {
        let seed = seed as u64 + 100;
        let params = ModelParams::init(
            ModelConfig {
                channels: *channels,
            },
            seed,
        )
        .unwrap();
        if params.len() > MAX_GRAD_PARAMS {
            return Err(format!("model with {} parameters", params.len()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let image = GrayImage::from_fn(16, 12, |_, _| rng.gen()).unwrap();
        let target_mask = RealGrid::new(
            4,
            3,
            (0..12).map(|_| f64::from(rng.gen_range(0..2u8))).collect(),
        )
        .unwrap();
        let t: f64 = rng.gen();
        let lambda: f64 = rng.gen_range(0.05..0.95);
        let loss_at = |p: &ModelParams| {
            let cache = forward(p, &image).unwrap();
            let mut g = vec![0.0; p.len()];
            loss_and_gradients(p, &cache, t, &target_mask, lambda, &mut g)
                .unwrap()
                .total
        };
        let cache = forward(&params, &image).map_err(|e| e.to_string())?;
        let mut analytic = vec![0.0; params.len()];
        loss_and_gradients(&params, &cache, t, &target_mask, lambda, &mut analytic)
            .map_err(|e| e.to_string())?;
        for (i, &a) in analytic.iter().enumerate() {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus.values[i] += FD_STEP;
            minus.values[i] -= FD_STEP;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * FD_STEP);
            let scale = a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    check(
        worst < GRAD_TOL,
        format!(
            "max relative error {worst:.2e} over {} models",
            configs.len()
        ),
    )
}

// 4
fn schedule_exactness() -> Outcome {
    let g = IrisGeometry::concentric((8.0, 8.0), 2.0, 6.0).unwrap();
    let image = GrayImage::from_fn(16, 16, |x, y| ((x * 29 + y * 13) % 256) as u8).unwrap();
    let mask = irisq::OcclusionMask::full_annulus(16, 16, &g);
    let sample = TrainingSample {
        image,
        dfs_target: 0.6,
        mask_target: mask_target(&g, &mask).unwrap(),
    };
    let config = TrainConfig {
        epochs: 120,
        batch_size: 1,
        ..TrainConfig::default()
    };
    let out = train(
        &[sample],
        ModelConfig {
            channels: [1, 1, 1],
        },
        &config,
    )
    .map_err(|e| e.to_string())?;
    let log = &out.log;
    let lambda_ok = log.len() == 120
        && log
            .iter()
            .all(|e| e.lambda == 0.8 / f64::from(1u32 << (e.epoch / 50)))
        && log[49].lambda == 0.8
        && log[50].lambda == 0.4
        && log[100].lambda == 0.2;
    let changes: Vec<(f64, f64)> = log
        .windows(2)
        .filter(|w| w[0].lr != w[1].lr)
        .map(|w| (w[0].lr, w[1].lr))
        .collect();
    let lr_ok = log[0].lr == 4e-4
        && changes.len() == 4
        && changes.iter().all(|&(a, b)| b == a / 2.0)
        && log.last().unwrap().lr == 4e-4 / 16.0;
    check(
        lambda_ok && lr_ok,
        format!(
            "lambda at 0/50/100 = {}/{}/{}, {} lr halvings ending at {:e}",
            log[0].lambda,
            log[50].lambda,
            log[100].lambda,
            changes.len(),
            log.last().unwrap().lr
        ),
    )
}

fn eer_midpoint_oracle(genuine: &[f64], impostor: &[f64]) -> f64 {
    let mut all: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    all.sort_by(f64::total_cmp);
    let mut thresholds = vec![all[0] - 1.0, all[all.len() - 1] + 1.0];
    thresholds.extend(all.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    let mut best = (f64::INFINITY, 0.0);
    for t in thresholds {
        let far = impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64;
        let frr = genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64;
        if (far - frr).abs() < best.0 {
            best = ((far - frr).abs(), (far + frr) / 2.0);
        }
    }
    best.1
}

// 5
fn eer_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let ng = rng.gen_range(200..=400);
        let ni = rng.gen_range(200..=1000 - ng);
        let sep = rng.gen_range(0.0..2.0);
        let coarse = rng.gen_bool(0.3);
        let draw = |rng: &mut ChaCha8Rng, shift: f64| {
            let v: f64 = rng.gen::<f64>() + rng.gen::<f64>() + shift;
            if coarse {
                (v * 10.0).round() / 10.0
            } else {
                v
            }
        };
        let genuine: Vec<f64> = (0..ng).map(|_| draw(&mut rng, sep)).collect();
        let impostor: Vec<f64> = (0..ni).map(|_| draw(&mut rng, 0.0)).collect();
        let oracle = eer_midpoint_oracle(&genuine, &impostor);
        let got = eer(&ScorePairs::new(genuine, impostor).unwrap())
            .map_err(|e| e.to_string())?
            .eer;
        worst = worst.max((got - oracle).abs());
    }
    check(
        worst <= EER_TOL,
        format!("max |eer - oracle| {worst:.4} over 50 instances"),
    )
}

fn rank_oracle(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

// 6
fn analytic_metric_values() -> Outcome {
    let x: Vec<f64> = (0..50).map(f64::from).collect();
    let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
    let down: Vec<f64> = x.iter().map(|v| 100.0 - 2.0 * v).collect();
    let curved: Vec<f64> = x.iter().map(|v| (v / 7.0).exp()).collect();
    let falling: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
    let exact = [
        lcc(&x, &up),
        lcc(&x, &down),
        srocc(&x, &curved),
        srocc(&x, &falling),
    ]
    .map(|r| r.unwrap_or(f64::NAN));
    let exact_ok = exact == [1.0, -1.0, 1.0, -1.0];

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a: Vec<f64> = (0..40).map(|_| f64::from(rng.gen_range(0..6u8))).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| v * 0.5 + f64::from(rng.gen_range(0..4u8)))
            .collect();
        let got = srocc(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((got - pearson_oracle(&rank_oracle(&a), &rank_oracle(&b))).abs());
    }
    check(
        exact_ok && worst <= TIE_TOL,
        format!("monotone values {exact:?}, tie deviation {worst:.2e}"),
    )
}

fn sharpness_oracle(img: &GrayImage) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let px = |x: isize, y: isize| {
        f64::from(img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize))
    };
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let p = px(x + i as isize - 1, y + j as isize - 1);
                    gx += kx[j][i] * p;
                    gy += ky[j][i] * p;
                }
            }
            sum += (gx * gx + gy * gy).sqrt();
        }
    }
    sum / (w * h) as f64
}

fn entropy_oracle(img: &GrayImage, g: &IrisGeometry) -> f64 {
    let mut counts = [0usize; 256];
    let mut n = 0usize;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let r = (x as f64 + 0.5 - g.iris_center.0).hypot(y as f64 + 0.5 - g.iris_center.1);
            if r >= g.pupil_radius && r < g.iris_radius {
                counts[img.get(x, y) as usize] += 1;
                n += 1;
            }
        }
    }
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n as f64;
            h -= p * p.log2();
        }
    }
    h
}

// 7
fn factor_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut ws, mut we) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let (w, h) = (rng.gen_range(16..80), rng.gen_range(16..64));
        let levels = if i % 2 == 0 { 256 } else { 17 };
        let img = GrayImage::from_fn(w, h, |_, _| {
            (rng.gen_range(0..levels) * (255 / (levels - 1))) as u8
        })
        .unwrap();
        let c = (
            w as f64 / 2.0 + rng.gen_range(-1.0..1.0),
            h as f64 / 2.0 + rng.gen_range(-1.0..1.0),
        );
        let outer = (w.min(h) as f64 / 2.0 - 1.5).max(4.0);
        let g = IrisGeometry::concentric(c, outer * rng.gen_range(0.2..0.6), outer).unwrap();
        let s = sharpness(&img);
        let e = gray_level_spread(&img, &g).map_err(|e| e.to_string())?;
        let (so, eo) = (sharpness_oracle(&img), entropy_oracle(&img, &g));
        ws = ws.max((s - so).abs() / so.abs().max(f64::MIN_POSITIVE));
        we = we.max((e - eo).abs() / eo.abs().max(f64::MIN_POSITIVE));
    }
    check(
        ws <= FACTOR_TOL && we <= FACTOR_TOL,
        format!("sharpness rel err {ws:.2e}, gray_level_spread rel err {we:.2e} over 20 images"),
    )
}

fn labeled(seed: u64) -> Result<(SynthDataset, Vec<SampleRecord>), String> {
    let ds = gen_dataset_in_memory(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let records = build_labels(&ds.records)
        .map_err(|e| e.to_string())?
        .records;
    Ok((ds, records))
}

// 8
fn curve_shape() -> Outcome {
    let (_, records) = labeled(TRAIN_SEED)?;
    let set = VerificationSet::from_records(&records).map_err(|e| e.to_string())?;
    let q: Vec<f64> = set
        .probe_record_indices()
        .map(|i| records[i].dfs_label.unwrap())
        .collect();
    let at = |t: f64| {
        eer_at_irr(&set, &q, Gate::LowerTail, t)
            .map(|p| p.eer)
            .map_err(|e| e.to_string())
    };
    let (e0, e25, e50, e75) = (at(0.0)?, at(0.25)?, at(0.5)?, at(0.75)?);
    check(
        e50 <= e0 && e75 <= e25,
        format!("eer@0 {e0:.4}, @0.25 {e25:.4}, @0.5 {e50:.4}, @0.75 {e75:.4}"),
    )
}

struct Comparison {
    predictor_srocc: f64,
    factor_srocc: Vec<(Factor, f64)>,
    predictor_eer: f64,
    factor_eer: Vec<(Factor, f64)>,
}

fn factor_reports(
    ds: &SynthDataset,
    records: &[SampleRecord],
) -> Result<Vec<FactorReport>, String> {
    records
        .iter()
        .zip(&ds.samples)
        .map(|(r, s)| factor_report(&s.image, &r.geometry, &s.mask).map_err(|e| e.to_string()))
        .collect()
}

fn train_and_compare() -> Result<Comparison, String> {
    let (train_ds, train_records) = labeled(TRAIN_SEED)?;
    let (test_ds, test_records) = labeled(TEST_SEED)?;
    if train_records.len() > MAX_TRAIN_IMAGES || EPOCHS > MAX_EPOCHS {
        return Err("training budget exceeded".into());
    }
    let samples: Vec<TrainingSample> = train_records
        .iter()
        .zip(&train_ds.samples)
        .map(|(r, s)| TrainingSample {
            image: s.image.clone(),
            dfs_target: r.dfs_label.unwrap(),
            mask_target: mask_target(&r.geometry, &s.mask).unwrap(),
        })
        .collect();
    let config = TrainConfig {
        epochs: EPOCHS,
        seed: TRAIN_SEED,
        ..TrainConfig::default()
    };
    let params = train(&samples, ModelConfig::default(), &config)
        .map_err(|e| e.to_string())?
        .params;

    let set = VerificationSet::from_records(&test_records).map_err(|e| e.to_string())?;
    let probes: Vec<usize> = set.probe_record_indices().collect();
    let labels: Vec<f64> = probes
        .iter()
        .map(|&i| test_records[i].dfs_label.unwrap())
        .collect();
    let predicted: Vec<f64> = probes
        .iter()
        .map(|&i| predict(&params, &test_ds.samples[i].image).map(|p| p.quality))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;

    let train_factors = factor_reports(&train_ds, &train_records)?;
    let test_factors = factor_reports(&test_ds, &test_records)?;
    let mut factor_srocc = Vec::new();
    let mut factor_eer = Vec::new();
    for f in Factor::ALL {
        let column: Vec<f64> = probes.iter().map(|&i| test_factors[i].get(f)).collect();
        let mu = train_factors.iter().map(|r| r.get(f)).sum::<f64>() / train_factors.len() as f64;
        factor_srocc.push((f, srocc(&column, &labels).map_err(|e| e.to_string())?));
        let e = eer_at_irr(&set, &column, Gate::Band { mu }, 0.5).map_err(|e| e.to_string())?;
        factor_eer.push((f, e.eer));
    }
    Ok(Comparison {
        predictor_srocc: srocc(&predicted, &labels).map_err(|e| e.to_string())?,
        factor_srocc,
        predictor_eer: eer_at_irr(&set, &predicted, Gate::LowerTail, 0.5)
            .map_err(|e| e.to_string())?
            .eer,
        factor_eer,
    })
}

// 9
fn table5_pattern(c: &Comparison) -> Outcome {
    let (best, best_abs) = c
        .factor_srocc
        .iter()
        .map(|&(f, s)| (f, s.abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    check(
        c.predictor_srocc > best_abs,
        format!(
            "predictor SROCC {:.4} vs best factor |SROCC| {:.4} ({})",
            c.predictor_srocc,
            best_abs,
            best.name()
        ),
    )
}

// 10
fn table6_pattern(c: &Comparison) -> Outcome {
    let (best, best_eer) = c
        .factor_eer
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    check(
        c.predictor_eer <= best_eer,
        format!(
            "EER@0.5 predictor {:.4} vs best band-gated factor {:.4} ({})",
            c.predictor_eer,
            best_eer,
            best.name()
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_irisq"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "irisq {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn pipeline(root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    fs::write(
        root.join("synth.toml"),
        "n_classes = 6\nsamples_per_class = 8\nseed = 11\n",
    )
    .map_err(|e| e.to_string())?;
    fs::write(
        root.join("train.toml"),
        "[model]\nchannels = [4, 8, 8]\n[train]\nepochs = 4\nbatch_size = 4\n",
    )
    .map_err(|e| e.to_string())?;
    run_cli(&["synth", "--config", &p("synth.toml"), "--out", &p("data")])?;
    run_cli(&[
        "label",
        "--manifest",
        &p("data/manifest.jsonl"),
        "--out",
        &p("labeled.jsonl"),
    ])?;
    run_cli(&[
        "train",
        "--manifest",
        &p("labeled.jsonl"),
        "--config",
        &p("train.toml"),
        "--out-checkpoint",
        &p("model/checkpoint.json"),
    ])?;
    run_cli(&[
        "predict",
        "--manifest",
        &p("labeled.jsonl"),
        "--checkpoint",
        &p("model/checkpoint.json"),
        "--out",
        &p("predicted.jsonl"),
    ])?;
    run_cli(&[
        "eval",
        "--manifest",
        &p("predicted.jsonl"),
        "--quality-field",
        "predicted_quality",
        "--out",
        &p("curve.csv"),
    ])?;
    run_cli(&[
        "factors",
        "--manifest",
        &p("labeled.jsonl"),
        "--out",
        &p("factors.csv"),
    ])?;
    run_cli(&[
        "report",
        "--manifest",
        &p("predicted.jsonl"),
        "--out",
        &p("report"),
    ])
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

// 11
fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    if fa != fb {
        return Err("runs produced different file sets".into());
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| fs::read(a.path().join(f)).ok() != fs::read(b.path().join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} output files byte-identical across two runs", fa.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "[{}] criterion {id:>2} {name}: {detail} ({elapsed:.2?})",
            if ok { "PASS" } else { "FAIL" }
        );
    };

    report(1, "pooling identity", secs(1), &mut pooling_identity);
    report(
        2,
        "pooling scale invariance",
        secs(1),
        &mut pooling_scale_invariance,
    );
    report(
        3,
        "gradient correctness",
        secs(120),
        &mut gradient_correctness,
    );
    report(4, "schedule exactness", secs(1), &mut schedule_exactness);
    report(
        5,
        "EER oracle equivalence",
        secs(30),
        &mut eer_oracle_equivalence,
    );
    report(
        6,
        "analytic metric values",
        secs(1),
        &mut analytic_metric_values,
    );
    report(
        7,
        "factor oracle equivalence",
        secs(30),
        &mut factor_oracle_equivalence,
    );
    report(8, "IRR-EER curve shape", secs(120), &mut curve_shape);

    let start = Instant::now();
    let comparison = train_and_compare();
    let trained_in = start.elapsed();
    let budget = secs(600).saturating_sub(trained_in);
    match &comparison {
        Ok(c) => {
            report(
                9,
                "predictor beats single factors (SROCC)",
                budget,
                &mut || table5_pattern(c),
            );
            report(
                10,
                "predictor gating beats band gating",
                budget,
                &mut || table6_pattern(c),
            );
        }
        Err(e) => {
            for (id, name) in [
                (9, "predictor beats single factors (SROCC)"),
                (10, "predictor gating beats band gating"),
            ] {
                report(id, name, budget, &mut || Err(e.clone()));
            }
        }
    }
    println!("           training and scoring took {trained_in:.1?}");
    report(11, "pipeline determinism", secs(900), &mut determinism);

    if failures == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
