//! Quality gating and the IRR-EER curve.
//!
//! A gate discards probe images; the image rejection rate (IRR) is the
//! discarded fraction and the EER is recomputed on the survivors. Sweeping
//! the gate traces how much recognition error a quality measure buys back
//! per discarded image.

use serde::{Deserialize, Serialize};

use super::verification::{eer, VerificationSet};
use crate::error::{Error, Result};

/// Fraction of captured images that were discarded.
pub fn irr(discarded: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::InsufficientData("no captured images".into()));
    }
    if discarded > total {
        return Err(Error::Config(format!(
            "{discarded} discarded out of {total}"
        )));
    }
    Ok(discarded as f64 / total as f64)
}

/// Keeps `v` iff `mu - delta <= v < mu + delta`. The closed lower bound
/// also keeps `v == mu` when `delta == 0`.
pub fn band_threshold(values: &[f64], mu: f64, delta: f64) -> Vec<bool> {
    values
        .iter()
        .map(|&v| mu - delta <= v && (v < mu + delta || v <= mu))
        .collect()
}

/// How a quality value decides whether a probe survives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    /// Discard probes with quality below a threshold.
    LowerTail,
    /// Discard probes outside `[mu - delta, mu + delta)`.
    Band { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub irr: f64,
    pub eer: f64,
    /// Lower-tail gates: the quality cutoff. Band gates: the half-width delta.
    pub quality_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrEerCurve {
    pub points: Vec<CurvePoint>,
    /// Why the sweep stopped early, if it did.
    pub note: Option<String>,
}

impl IrrEerCurve {
    /// The last point whose IRR does not exceed `target`.
    pub fn at_irr(&self, target: f64) -> Option<&CurvePoint> {
        self.points
            .iter()
            .take_while(|p| p.irr <= target + 1e-12)
            .last()
    }

    /// CSV with header `irr,eer,threshold`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("irr,eer,threshold\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.irr, p.eer, p.quality_threshold));
        }
        s
    }
}

/// Fewest surviving probes at which an EER is still reported.
pub const MIN_SURVIVORS: usize = 2;

/// The most probes that may be discarded at `target` IRR.
fn discard_budget(target: f64, total: usize) -> usize {
    ((target * total as f64) + 1e-9).floor() as usize
}

/// Survivor mask for a gate tuned to discard at most `budget` probes, and
/// the threshold used.
fn gate_at(quality: &[f64], gate: Gate, budget: usize) -> (Vec<bool>, f64) {
    let n = quality.len();
    match gate {
        Gate::LowerTail => {
            let mut sorted = quality.to_vec();
            sorted.sort_by(f64::total_cmp);
            let cutoff = sorted[budget.min(n - 1)];
            (quality.iter().map(|&q| q >= cutoff).collect(), cutoff)
        }
        Gate::Band { mu } => {
            // smallest half-width that keeps each value, before rounding
            let mut needed: Vec<f64> = quality
                .iter()
                .map(|&v| if v <= mu { mu - v } else { (v - mu).next_up() })
                .collect();
            needed.sort_by(f64::total_cmp);
            let keep = n - budget.min(n - 1);
            // rounding in mu +- delta can drop a value the candidate was meant
            // to keep; move to the next candidate until the budget holds
            for &delta in &needed[keep - 1..] {
                let mask = band_threshold(quality, mu, delta);
                if mask.iter().filter(|&&k| k).count() >= keep {
                    return (mask, delta);
                }
            }
            (vec![true; n], f64::MAX)
        }
    }
}

/// Validates a per-probe quality column.
fn check_quality(set: &VerificationSet, quality: &[f64]) -> Result<()> {
    if quality.len() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} quality values for {} probes",
            quality.len(),
            set.len()
        )));
    }
    if quality.iter().any(|q| !q.is_finite()) {
        return Err(Error::NonFinite("quality value".into()));
    }
    Ok(())
}

/// EER after gating at (at most) `target` IRR. Returns the point actually
/// reached, whose IRR may fall short of the target when values tie.
pub fn eer_at_irr(
    set: &VerificationSet,
    quality: &[f64],
    gate: Gate,
    target: f64,
) -> Result<CurvePoint> {
    check_quality(set, quality)?;
    let n = set.len();
    let (keep, threshold) = gate_at(quality, gate, discard_budget(target, n));
    let survivors = keep.iter().filter(|&&k| k).count();
    if survivors < MIN_SURVIVORS.min(n) {
        return Err(Error::InsufficientData(format!(
            "{survivors} probes survive at IRR {target}"
        )));
    }
    let pairs = set.pairs_where(|i| keep[i]);
    Ok(CurvePoint {
        irr: irr(n - survivors, n)?,
        eer: eer(&pairs)?.eer,
        quality_threshold: threshold,
    })
}

/// Sweeps target IRRs `k / steps` for `k = 0..steps`. Points that do not
/// advance the IRR (tied quality values) are skipped, so IRR is strictly
/// increasing along the curve.
pub fn irr_eer_curve(
    set: &VerificationSet,
    quality: &[f64],
    gate: Gate,
    steps: usize,
) -> Result<IrrEerCurve> {
    if steps < 2 {
        return Err(Error::Config(format!("steps = {steps}, need at least 2")));
    }
    check_quality(set, quality)?;
    let mut points: Vec<CurvePoint> = Vec::with_capacity(steps);
    let mut note = None;
    for k in 0..steps {
        let target = k as f64 / steps as f64;
        let point = match eer_at_irr(set, quality, gate, target) {
            Ok(p) => p,
            Err(Error::InsufficientData(msg)) => {
                note = Some(format!("truncated: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        if points.last().is_some_and(|last| point.irr <= last.irr) {
            continue;
        }
        points.push(point);
    }
    Ok(IrrEerCurve { points, note })
}
