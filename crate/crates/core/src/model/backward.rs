//! Reverse-mode pass through the gated propagation.
//!
//! Rules per layer, walking from the top layer down:
//!
//! - the adjacency is symmetric, so the gradient of `A * X` w.r.t. `X` is `A * dY`;
//! - the activation multiplies element-wise by `phi'` at the cached aggregate;
//! - a gate routes the row gradient to the selected branch (the hard one-hot
//!   is the forward value) and sends `<dG, branch>` through the soft relaxation
//!   `dy/dl = (diag(y) - y y^T) / tau` into the gating MLP;
//! - bypass layers hand the non-linear gradient to the layer below untouched.

use super::forward::{ForwardMode, ForwardTrace, GatedOutput};
use super::params::{GatingMlp, ModelParams, ParamGrads};
use super::variant::{NonLinearMode, BETA, NUM_LAYERS};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::{dense_dot, Activation, DenseMatrix};

/// Upstream derivative of the loss w.r.t. one predicted score `r(user, item)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreGrad {
    pub user: usize,
    pub item: usize,
    pub grad: f64,
}

fn add_score_grads(
    trace: &ForwardTrace,
    layer: usize,
    upstream: &[ScoreGrad],
    out: &mut DenseMatrix,
) {
    let g = trace.gated(layer);
    let nu = trace.num_users();
    for s in upstream {
        if s.grad == 0.0 {
            continue;
        }
        let v = nu + s.item;
        let scale = BETA * s.grad;
        for c in 0..g.cols() {
            let (eu, ev) = (g.get(s.user, c), g.get(v, c));
            out.row_mut(s.user)[c] += scale * ev;
            out.row_mut(v)[c] += scale * eu;
        }
    }
}

/// Straight-through gate backward for one node; accumulates into the branch
/// gradients and the MLP gradient.
#[allow(clippy::too_many_arguments)]
fn gate_node_backward(
    mlp: &GatingMlp,
    grad_mlp: &mut GatingMlp,
    hidden_pre: Option<&[f64]>,
    soft: [f64; 2],
    hard: [f64; 2],
    tau: f64,
    e_l: &[f64],
    e_n: &[f64],
    d_out: &[f64],
    d_l: &mut [f64],
    d_n: &mut [f64],
) {
    let d = e_l.len();
    for c in 0..d {
        d_l[c] += hard[0] * d_out[c];
        d_n[c] += hard[1] * d_out[c];
    }
    let dy = [dense_dot(d_out, e_l), dense_dot(d_out, e_n)];
    let dl0 = soft[0] * soft[1] * (dy[0] - dy[1]) / tau;
    let d_logits = [dl0, -dl0];

    let mut x = Vec::with_capacity(2 * d);
    x.extend_from_slice(e_l);
    x.extend_from_slice(e_n);
    let mut dx = vec![0.0; 2 * d];
    match (&mlp.hidden, hidden_pre) {
        (Some(hidden), Some(pre)) => {
            let h: Vec<f64> = pre
                .iter()
                .map(|&a| Activation::LeakyRelu.apply_scalar(a))
                .collect();
            let mut dh = vec![0.0; h.len()];
            mlp.out.backward(&h, &d_logits, &mut grad_mlp.out, &mut dh);
            for (g, &a) in dh.iter_mut().zip(pre) {
                *g *= Activation::LeakyRelu.derivative_scalar(a);
            }
            let grad_hidden = grad_mlp
                .hidden
                .as_mut()
                .expect("grad layout mirrors params");
            hidden.backward(&x, &dh, grad_hidden, &mut dx);
        }
        _ => mlp.out.backward(&x, &d_logits, &mut grad_mlp.out, &mut dx),
    }
    for c in 0..d {
        d_l[c] += dx[c];
        d_n[c] += dx[d + c];
    }
}

/// Gradients of a scalar loss w.r.t. the ego embeddings and every gating MLP,
/// given the loss derivatives w.r.t. individual scores.
pub fn backward(
    trace: &ForwardTrace,
    adj: &NormalizedAdjacency,
    params: &ModelParams,
    upstream: &[ScoreGrad],
) -> Result<ParamGrads> {
    let n = trace.num_users() + trace.num_items();
    let d = params.dim();
    if adj.n() != n || params.num_nodes() != n || trace.layers().len() != NUM_LAYERS {
        return Err(Error::Trace(
            "trace, adjacency and parameters disagree on size".into(),
        ));
    }
    let num_mixed = trace
        .layers()
        .iter()
        .filter(|l| matches!(l.gated, GatedOutput::Mixed { .. }))
        .count();
    if num_mixed != params.gates.len() {
        return Err(Error::Trace(format!(
            "trace has {num_mixed} gated layers, params have {} gating MLPs",
            params.gates.len()
        )));
    }
    if num_mixed > 0 && trace.mode() != ForwardMode::Train {
        return Err(Error::Trace(
            "backward through gates needs a train-mode trace".into(),
        ));
    }
    for s in upstream {
        if s.user >= trace.num_users() || s.item >= trace.num_items() {
            return Err(Error::Trace(format!(
                "score ({}, {}) out of range",
                s.user, s.item
            )));
        }
    }

    let mut grads = params.zeros_like();
    let mut gate_index = num_mixed;
    // d loss / d G_l, accumulated from the layer above.
    let mut d_gated = DenseMatrix::zeros(n, d);
    // d loss / d N_l arriving through bypass layers above.
    let mut d_nonlinear_carry = DenseMatrix::zeros(n, d);

    for l in (1..=NUM_LAYERS).rev() {
        let layer = &trace.layers()[l - 1];
        add_score_grads(trace, l, upstream, &mut d_gated);

        let mut d_nonlinear = std::mem::replace(&mut d_nonlinear_carry, DenseMatrix::zeros(n, d));
        let mut d_linear = DenseMatrix::zeros(n, d);
        match &layer.gated {
            GatedOutput::Linear => d_linear = d_gated,
            GatedOutput::NonLinear => d_nonlinear.add_scaled(1.0, &d_gated)?,
            GatedOutput::Mixed { gates, .. } => {
                gate_index -= 1;
                let mlp = &params.gates[gate_index];
                let grad_mlp = &mut grads.gates[gate_index];
                let e_l = trace.linear(l);
                let e_n = trace.nonlinear(l);
                for (r, gate) in gates.iter().enumerate() {
                    let d_out = d_gated.row(r);
                    if d_out.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let sample = gate
                        .sample
                        .as_ref()
                        .ok_or_else(|| Error::Trace("gated node without a gate sample".into()))?;
                    let mut dl_row = vec![0.0; d];
                    let mut dn_row = vec![0.0; d];
                    gate_node_backward(
                        mlp,
                        grad_mlp,
                        gate.hidden_pre.as_deref(),
                        sample.soft,
                        sample.hard,
                        trace.tau(),
                        e_l.row(r),
                        e_n.row(r),
                        d_out,
                        &mut dl_row,
                        &mut dn_row,
                    );
                    for (a, b) in d_linear.row_mut(r).iter_mut().zip(&dl_row) {
                        *a += b;
                    }
                    for (a, b) in d_nonlinear.row_mut(r).iter_mut().zip(&dn_row) {
                        *a += b;
                    }
                }
            }
        }

        // Gradient w.r.t. the aggregate A * G_{l-1}.
        let mut d_aggregate = d_linear;
        match layer.plan.mode {
            NonLinearMode::Propagate => {
                let phi = trace.activation();
                for ((g, &pre), &dn) in d_aggregate
                    .data_mut()
                    .iter_mut()
                    .zip(layer.aggregated.data())
                    .zip(d_nonlinear.data())
                {
                    *g += phi.derivative_scalar(pre) * dn;
                }
            }
            NonLinearMode::Bypass => d_nonlinear_carry = d_nonlinear,
        }
        d_gated = adj.spmm(&d_aggregate)?;
    }

    add_score_grads(trace, 0, upstream, &mut d_gated);
    d_gated.add_scaled(1.0, &d_nonlinear_carry)?;
    grads.embeddings = d_gated;
    Ok(grads)
}
