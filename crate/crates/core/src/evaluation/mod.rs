//! Biometric evaluation: error rates, IRR-EER curves and correlation
//! criteria.

mod correlation;
mod curve;
mod verification;

pub use correlation::{average_ranks, correlation_report, lcc, mse, srocc, CorrelationReport};
pub use curve::{
    band_threshold, eer_at_irr, irr, irr_eer_curve, CurvePoint, Gate, IrrEerCurve, MIN_SURVIVORS,
};
pub use verification::{eer, far_frr, EerResult, ScorePairs, VerificationSet};
