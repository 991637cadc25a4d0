use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamGrads};

/// Adam moments for every parameter tensor, in [`ModelParams::tensors`] order.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut ModelParams, grads: &ParamGrads, lr: f64) -> Result<()> {
        let gs = grads.tensors();
        let ps = params.tensors_mut();
        if gs.len() != self.m.len() || ps.len() != self.m.len() {
            return Err(Error::Shape(
                "optimizer state does not match the parameters".into(),
            ));
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(&mut self.m).zip(&mut self.v) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Shape(
                    "tensor length changed between optimizer steps".into(),
                ));
            }
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, layer_plan, ModelConfig, VariantName};
    use crate::numerics::Rng;

    fn params() -> ModelParams {
        let cfg = ModelConfig::new(layer_plan(VariantName::End));
        init_params(6, 3, &cfg, &mut Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = params();
        let before = p.clone();
        let mut adam = AdamState::new(&p);
        let g = p.zeros_like();
        adam.step(&mut p, &g, 0.1).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = params();
        let before = p.clone();
        let mut adam = AdamState::new(&p);
        let mut g = p.zeros_like();
        g.embeddings.set(0, 0, 3.0);
        g.embeddings.set(1, 2, -0.5);
        adam.step(&mut p, &g, 0.01).unwrap();
        assert!((before.embeddings.get(0, 0) - p.embeddings.get(0, 0) - 0.01).abs() < 1e-9);
        assert!((p.embeddings.get(1, 2) - before.embeddings.get(1, 2) - 0.01).abs() < 1e-9);
        assert_eq!(p.embeddings.get(2, 2), before.embeddings.get(2, 2));
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = params();
        let mut adam = AdamState::new(&p);
        for _ in 0..3000 {
            let g = p.clone(); // gradient of |p|^2 / 2
            adam.step(&mut p, &g, 0.01).unwrap();
        }
        assert!(p
            .tensors()
            .iter()
            .flat_map(|t| t.iter())
            .all(|v| v.abs() < 1e-2));
        assert_eq!(adam.steps(), 3000);
    }
}
