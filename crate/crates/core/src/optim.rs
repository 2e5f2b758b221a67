//! AdamW with decoupled weight decay over the model's parameter blocks.

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// First moments, one buffer per parameter block.
    pub m: Vec<Vec<f64>>,
    /// Second moments.
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|b| vec![0.0; b.data.len()]).collect();
        OptimizerState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One AdamW update. The decay term `lr·λ·θ` uses the pre-update weights and
/// skips bias blocks; moment buffers are never decayed.
pub fn adamw_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
    lambda: f64,
) -> Result<()> {
    let next = state.step + 1;
    for (p, g) in params.blocks().iter().zip(grads.blocks()) {
        if p.data.len() != g.data.len() {
            return Err(Error::Shape(format!(
                "gradient for {} has {} entries, parameter has {}",
                p.name,
                g.data.len(),
                p.data.len()
            )));
        }
        if g.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                param: p.name.to_string(),
                step: next,
            });
        }
    }
    state.step = next;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);

    let blocks = params.blocks_mut();
    for (i, (block, grad)) in blocks.into_iter().zip(grads.blocks()).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        let decay = if block.decay { lr * lambda } else { 0.0 };
        for (j, theta) in block.data.iter_mut().enumerate() {
            let g = grad.data[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps) + decay * *theta;
        }
    }
    params.version += 1;
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut ModelParams, max_norm: f64) -> f64 {
    let norm = grads
        .blocks()
        .iter()
        .flat_map(|b| b.data.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for b in grads.blocks_mut() {
            b.data.iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;

    fn params() -> ModelParams {
        ModelParams::init(
            ModelDims {
                d_w: 2,
                d_h: 3,
                d_t: 4,
                num_types: 3,
            },
            0.0,
            3,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = params();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &g, &mut s, 0.1, 0.0).unwrap();
        for (a, b) in p.blocks().iter().zip(before.blocks()) {
            assert_eq!(a.data, b.data);
        }
        assert_eq!(s.step, 1);
        assert_eq!(p.version, before.version + 1);
    }

    #[test]
    fn zero_gradient_decay_is_pure_shrink() {
        let mut p = params();
        p.scorer.b1 = vec![0.5; 3];
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = OptimizerState::new(&p);
        let (lr, lambda) = (0.1, 0.2);
        adamw_step(&mut p, &g, &mut s, lr, lambda).unwrap();
        for (a, b) in p.blocks().iter().zip(before.blocks()) {
            for (x, y) in a.data.iter().zip(b.data) {
                let expected = if a.decay { y * (1.0 - lr * lambda) } else { *y };
                assert!((x - expected).abs() < 1e-15, "{}", a.name);
            }
        }
        assert_eq!(p.scorer.b1, vec![0.5; 3]);
        assert!(s.m.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = params();
        let before = p.relation.0[0];
        let mut g = p.zeros_like();
        g.relation.0[0] = 1.0;
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &g, &mut s, 0.1, 0.0).unwrap();
        // m̂ = 1, v̂ = 1 ⇒ Δ = 0.1 / (1 + 1e-8)
        assert!((before - p.relation.0[0] - 0.1).abs() < 1e-8);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = params();
        let before = p.clone();
        let mut g = p.zeros_like();
        g.scorer.w2.as_mut_slice()[1] = f64::NAN;
        let mut s = OptimizerState::new(&p);
        match adamw_step(&mut p, &g, &mut s, 0.1, 0.0) {
            Err(Error::NonFiniteGradient { param, step }) => {
                assert_eq!(param, "W2");
                assert_eq!(step, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, before);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn clipping() {
        let p = params();
        let mut g = p.zeros_like();
        g.relation.0[0] = 3.0;
        g.scorer.b2[0] = 4.0;
        assert_eq!(clip_global_norm(&mut g, 10.0), 5.0);
        assert_eq!(g.relation.0[0], 3.0);
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g.relation.0[0] - 0.6).abs() < 1e-15);
        assert!((g.scorer.b2[0] - 0.8).abs() < 1e-15);
    }
}
