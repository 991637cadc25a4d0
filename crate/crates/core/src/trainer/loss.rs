use crate::model::{ModelParams, ParamGrads};
use crate::numerics::{log_sigmoid, sigmoid};

use super::Triplet;

/// Mean BPR ranking loss of a batch and its derivatives w.r.t. each score.
#[derive(Clone, Debug, PartialEq)]
pub struct BprLoss {
    pub value: f64,
    pub d_pos: Vec<f64>,
    pub d_neg: Vec<f64>,
}

/// `mean(-ln sigma(pos - neg))`.
pub fn bpr_loss(pos: &[f64], neg: &[f64]) -> BprLoss {
    assert_eq!(pos.len(), neg.len(), "score vectors differ in length");
    let b = pos.len().max(1) as f64;
    let mut value = 0.0;
    let mut d_pos = Vec::with_capacity(pos.len());
    let mut d_neg = Vec::with_capacity(pos.len());
    for (&p, &n) in pos.iter().zip(neg) {
        let delta = p - n;
        value -= log_sigmoid(delta);
        let s = sigmoid(-delta) / b;
        d_pos.push(-s);
        d_neg.push(s);
    }
    BprLoss {
        value: value / b,
        d_pos,
        d_neg,
    }
}

/// `lambda * mean_t(|e_u|^2 + |e_i|^2 + |e_j|^2) + lambda * |gating params|^2`.
pub fn l2_penalty(
    params: &ModelParams,
    triplets: &[Triplet],
    num_users: usize,
    lambda: f64,
) -> f64 {
    let b = triplets.len().max(1) as f64;
    let e = &params.embeddings;
    let sq = |r: usize| e.row(r).iter().map(|v| v * v).sum::<f64>();
    let ego: f64 = triplets
        .iter()
        .map(|t| sq(t.user) + sq(num_users + t.pos) + sq(num_users + t.neg))
        .sum();
    lambda * (ego / b + params.gate_squared_norm())
}

/// Adds the gradient of [`l2_penalty`] into `grads`.
pub fn add_l2_grad(
    params: &ModelParams,
    triplets: &[Triplet],
    num_users: usize,
    lambda: f64,
    grads: &mut ParamGrads,
) {
    let b = triplets.len().max(1) as f64;
    let c = 2.0 * lambda / b;
    for t in triplets {
        for r in [t.user, num_users + t.pos, num_users + t.neg] {
            let src = params.embeddings.row(r);
            for (g, v) in grads.embeddings.row_mut(r).iter_mut().zip(src) {
                *g += c * v;
            }
        }
    }
    let src = params.tensors();
    for (g, p) in grads.tensors_mut().into_iter().zip(src).skip(1) {
        for (gv, pv) in g.iter_mut().zip(p) {
            *gv += 2.0 * lambda * pv;
        }
    }
}
