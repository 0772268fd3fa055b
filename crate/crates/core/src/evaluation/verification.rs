//! Genuine/impostor score sets and the error rates computed from them.

use std::collections::BTreeMap;

use crate::dfs::{enrollment_positions, match_score};
use crate::error::{Error, Result};
use crate::manifest::SampleRecord;

/// Match scores split by ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScorePairs {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScorePairs {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Result<Self> {
        if genuine.iter().chain(&impostor).any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("match score".into()));
        }
        Ok(Self { genuine, impostor })
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::InsufficientData(format!(
                "{} genuine and {} impostor scores",
                self.genuine.len(),
                self.impostor.len()
            )));
        }
        Ok(())
    }
}

/// False accept and false reject rates at `threshold`; a score is accepted
/// iff it is `>= threshold`.
pub fn far_frr(pairs: &ScorePairs, threshold: f64) -> Result<(f64, f64)> {
    pairs.check_nonempty()?;
    let accepted = pairs.impostor.iter().filter(|&&s| s >= threshold).count();
    let rejected = pairs.genuine.iter().filter(|&&s| s < threshold).count();
    Ok((
        accepted as f64 / pairs.impostor.len() as f64,
        rejected as f64 / pairs.genuine.len() as f64,
    ))
}

/// Equal error rate and the threshold where it is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    /// Every score is identical, so no threshold separates anything.
    pub degenerate: bool,
}

/// Sweeps every distinct score as a threshold and interpolates linearly
/// between the two thresholds where `far - frr` changes sign.
pub fn eer(pairs: &ScorePairs) -> Result<EerResult> {
    pairs.check_nonempty()?;
    let mut genuine = pairs.genuine.clone();
    let mut impostor = pairs.impostor.clone();
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let degenerate = thresholds.len() == 1;
    // one threshold above every score, where nothing is accepted
    let top = *thresholds.last().expect("nonempty");
    thresholds.push(if top.abs() < 1.0 {
        top + 1.0
    } else {
        top + top.abs()
    });

    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    // far/frr at threshold t via partition points over the sorted lists
    let rates = |t: f64| {
        let rejected = genuine.partition_point(|&s| s < t) as f64;
        let accepted = ni - impostor.partition_point(|&s| s < t) as f64;
        (accepted / ni, rejected / ng)
    };

    let mut prev = (thresholds[0], rates(thresholds[0]));
    for &t in &thresholds {
        let (far, frr) = rates(t);
        let diff = far - frr;
        if diff == 0.0 {
            return Ok(EerResult {
                eer: far,
                threshold: t,
                degenerate,
            });
        }
        if diff < 0.0 {
            let (t0, (far0, frr0)) = prev;
            let d0 = far0 - frr0;
            let alpha = d0 / (d0 - diff);
            let eer = far0 + alpha * (far - far0);
            return Ok(EerResult {
                eer,
                threshold: t0 + alpha * (t - t0),
                degenerate,
            });
        }
        prev = (t, (far, frr));
    }
    unreachable!("far - frr reaches -1 at the top threshold")
}

/// Per-probe scores against every enrollment, computed once and filtered
/// cheaply when a quality gate discards probes.
#[derive(Debug, Clone)]
pub struct VerificationSet {
    probes: Vec<ProbeScores>,
    class_count: usize,
}

#[derive(Debug, Clone)]
struct ProbeScores {
    record_index: usize,
    genuine: f64,
    impostor: Vec<f64>,
}

impl VerificationSet {
    /// Genuine score: probe vs its own class enrollment. Impostor scores:
    /// probe vs every other class's enrollment. Enrollment records are
    /// gallery only and never probes.
    pub fn from_records(records: &[SampleRecord]) -> Result<Self> {
        let positions = enrollment_positions(records)?;
        if positions.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} class(es); verification needs at least 2",
                positions.len()
            )));
        }
        let gallery: BTreeMap<&str, &SampleRecord> =
            positions.iter().map(|(c, &i)| (*c, &records[i])).collect();
        let mut probes = Vec::new();
        for (record_index, r) in records.iter().enumerate() {
            if r.is_enrollment {
                continue;
            }
            let mut genuine = None;
            let mut impostor = Vec::with_capacity(gallery.len() - 1);
            for (class, g) in &gallery {
                let s = match_score(&r.embedding, &g.embedding)?;
                if *class == r.class_id {
                    genuine = Some(s);
                } else {
                    impostor.push(s);
                }
            }
            let genuine = genuine.expect("every class has an enrollment");
            probes.push(ProbeScores {
                record_index,
                genuine,
                impostor,
            });
        }
        if probes.is_empty() {
            return Err(Error::InsufficientData("no probe records".into()));
        }
        Ok(Self {
            probes,
            class_count: gallery.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Record indices of the probes, in probe order.
    pub fn probe_record_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.probes.iter().map(|p| p.record_index)
    }

    /// Score pairs of the probes for which `keep(probe_position)` holds.
    pub fn pairs_where(&self, mut keep: impl FnMut(usize) -> bool) -> ScorePairs {
        let mut pairs = ScorePairs::default();
        for (i, p) in self.probes.iter().enumerate() {
            if keep(i) {
                pairs.genuine.push(p.genuine);
                pairs.impostor.extend_from_slice(&p.impostor);
            }
        }
        pairs
    }

    pub fn all_pairs(&self) -> ScorePairs {
        self.pairs_where(|_| true)
    }
}
