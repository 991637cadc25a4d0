//! Gumbel-max sampling and the straight-through Gumbel-softmax relaxation.

use super::rng::Rng;

/// Uniform draws are clamped to `[GUMBEL_CLAMP, 1 - GUMBEL_CLAMP]` before the
/// double log.
pub const GUMBEL_CLAMP: f64 = 1e-12;

#[inline]
pub(crate) fn gumbel_from_uniform(u: f64) -> f64 {
    let u = u.clamp(GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP);
    -(-u.ln()).ln()
}

/// `n` i.i.d. draws from the standard Gumbel distribution.
pub fn gumbel_sample(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gumbel_from_uniform(rng.uniform())).collect()
}

/// Max-subtracted softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// One two-way gate draw: forward uses `hard`, backward differentiates `soft`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSample {
    pub logits: [f64; 2],
    pub noise: [f64; 2],
    pub soft: [f64; 2],
    pub hard: [f64; 2],
}

impl GateSample {
    /// Index of the selected branch.
    #[inline]
    pub fn choice(&self) -> usize {
        if self.hard[0] == 1.0 {
            0
        } else {
            1
        }
    }
}

#[inline]
fn argmax2(v: [f64; 2]) -> usize {
    if v[1] > v[0] {
        1
    } else {
        0
    }
}

/// Straight-through Gumbel-softmax over two logits. Ties go to index 0.
pub fn stgs(logits: [f64; 2], tau: f64, rng: &mut Rng) -> GateSample {
    let noise = [
        gumbel_from_uniform(rng.uniform()),
        gumbel_from_uniform(rng.uniform()),
    ];
    stgs_with_noise(logits, noise, tau)
}

/// [`stgs`] with caller-supplied Gumbel noise.
pub fn stgs_with_noise(logits: [f64; 2], noise: [f64; 2], tau: f64) -> GateSample {
    debug_assert!(tau > 0.0);
    let perturbed = [logits[0] + noise[0], logits[1] + noise[1]];
    let s = softmax(&[perturbed[0] / tau, perturbed[1] / tau]);
    let mut hard = [0.0; 2];
    hard[argmax2(perturbed)] = 1.0;
    GateSample {
        logits,
        noise,
        soft: [s[0], s[1]],
        hard,
    }
}
