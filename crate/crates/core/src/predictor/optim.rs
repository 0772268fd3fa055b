use serde::{Deserialize, Serialize};

use super::train::TrainConfig;
use crate::error::{Error, Result};

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
    config: &TrainConfig,
) -> Result<()> {
    if grad.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "{} params, {} gradients, {} moments",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient[{i}] = {} at step {}",
            grad[i],
            state.step + 1
        )));
    }
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grad)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + config.adam_epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.25, -1.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 1e-3, &TrainConfig::default()).unwrap();
        assert_eq!(p, vec![0.25, -1.0]);
    }

    #[test]
    fn first_step_hand_trace() {
        let cfg = TrainConfig::default();
        let (lr, g) = (4e-4, 0.3);
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[g], &mut s, lr, &cfg).unwrap();
        // m_hat = g, v_hat = g^2
        let expected = 1.0 - lr * g / (g + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((s.m[0] - 0.1 * g).abs() < 1e-15);
        assert!((s.v[0] - 0.01 * g * g).abs() < 1e-15);

        // second step, same gradient
        adam_step(&mut p, &[g], &mut s, lr, &cfg).unwrap();
        let m = 0.9 * 0.1 * g + 0.1 * g;
        let v = 0.99 * 0.01 * g * g + 0.01 * g * g;
        let second = expected - lr * (m / (1.0 - 0.81)) / ((v / (1.0 - 0.9801)).sqrt() + 1e-8);
        assert!((p[0] - second).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = vec![0.0; 3];
        let mut s = AdamState::new(3);
        let err = adam_step(
            &mut p,
            &[0.0, f64::NAN, 1.0],
            &mut s,
            1e-3,
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains("gradient[1]")));
        assert_eq!(p, vec![0.0; 3]);
    }
}
