use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{GatingMlp, ModelConfig, ModelParams};
use super::variant::{GateType, LayerPlan, NonLinearMode, BETA, NUM_LAYERS};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::{gumbel_sample, Activation, DenseMatrix, GateSample, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardMode {
    /// Stochastic straight-through gates.
    Train,
    /// Noiseless argmax gates; needs no randomness.
    Eval,
}

/// Branch chosen by a gate. The discriminant is the branch's position in the
/// gate's two-way output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Linear = 0,
    NonLinear = 1,
}

impl Branch {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    fn from_index(i: usize) -> Self {
        if i == 0 {
            Branch::Linear
        } else {
            Branch::NonLinear
        }
    }
}

/// Per-node gate record kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeGate {
    pub logits: [f64; 2],
    pub choice: Branch,
    /// Present in train mode only.
    pub sample: Option<GateSample>,
    /// Pre-activation of the optional hidden gate layer.
    pub hidden_pre: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GatedOutput {
    /// Layer output is the linear embedding.
    Linear,
    /// Layer output is the current non-linear embedding.
    NonLinear,
    /// Per-node selection.
    Mixed {
        output: DenseMatrix,
        gates: Vec<NodeGate>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrace {
    pub plan: LayerPlan,
    /// `A * G_prev`: the linear embedding of this layer and the
    /// pre-activation of the non-linear one.
    pub aggregated: DenseMatrix,
    /// `phi(aggregated)` on propagate layers; `None` on bypass layers, whose
    /// non-linear state is inherited from the previous layer.
    pub nonlinear: Option<DenseMatrix>,
    pub gated: GatedOutput,
}

/// Every intermediate of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    num_users: usize,
    num_items: usize,
    mode: ForwardMode,
    tau: f64,
    activation: Activation,
    ego: DenseMatrix,
    layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn mode(&self) -> ForwardMode {
        self.mode
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[LayerTrace] {
        &self.layers
    }

    /// `E_L` of layer `layer` (1-based).
    pub fn linear(&self, layer: usize) -> &DenseMatrix {
        assert!(
            (1..=NUM_LAYERS).contains(&layer),
            "linear embeddings exist for layers 1..=K"
        );
        &self.layers[layer - 1].aggregated
    }

    /// `E_N` of layer `layer`; layer 0 is the ego embedding.
    pub fn nonlinear(&self, layer: usize) -> &DenseMatrix {
        let mut l = layer;
        while l > 0 {
            if let Some(n) = &self.layers[l - 1].nonlinear {
                return n;
            }
            l -= 1;
        }
        &self.ego
    }

    /// `E_G` of layer `layer`; layer 0 is the ego embedding.
    pub fn gated(&self, layer: usize) -> &DenseMatrix {
        if layer == 0 {
            return &self.ego;
        }
        match &self.layers[layer - 1].gated {
            GatedOutput::Linear => self.linear(layer),
            GatedOutput::NonLinear => self.nonlinear(layer),
            GatedOutput::Mixed { output, .. } => output,
        }
    }

    /// Residual prediction `beta * sum_i <G_i[u], G_i[item]>`.
    pub fn score(&self, user: usize, item: usize) -> f64 {
        let v = self.num_users + item;
        BETA * (0..=NUM_LAYERS)
            .map(|l| {
                let g = self.gated(l);
                crate::numerics::dense_dot(g.row(user), g.row(v))
            })
            .sum::<f64>()
    }

    pub fn scorer(&self) -> Scorer {
        let n = self.num_users + self.num_items;
        let d = self.ego.cols();
        let mut stacked = DenseMatrix::zeros(n, (NUM_LAYERS + 1) * d);
        for l in 0..=NUM_LAYERS {
            let g = self.gated(l);
            for r in 0..n {
                stacked.row_mut(r)[l * d..(l + 1) * d].copy_from_slice(g.row(r));
            }
        }
        Scorer {
            num_users: self.num_users,
            num_items: self.num_items,
            stacked,
        }
    }

    /// `beta * sum_i G_i`, a single-vector summary of every layer.
    pub fn residual_mean_embeddings(&self) -> DenseMatrix {
        let mut out = self.ego.clone();
        for l in 1..=NUM_LAYERS {
            out.add_scaled(1.0, self.gated(l))
                .expect("layer shapes agree");
        }
        out.scale(BETA);
        out
    }

    /// Decisions of every gated layer.
    pub fn decisions(&self) -> GateDecisionLog {
        let mut layers = Vec::new();
        let mut decisions = Vec::new();
        for (l, t) in self.layers.iter().enumerate() {
            if let GatedOutput::Mixed { gates, .. } = &t.gated {
                layers.push(l + 1);
                decisions.push(gates.iter().map(|g| g.choice).collect());
            }
        }
        GateDecisionLog {
            num_nodes: self.num_users + self.num_items,
            layers,
            decisions,
        }
    }

    /// Linear / non-linear share per layer, in percent. Fixed layers report 100/0 or 0/100.
    pub fn selection_ratios(&self) -> Vec<LayerSelection> {
        let n = (self.num_users + self.num_items).max(1) as f64;
        self.layers
            .iter()
            .enumerate()
            .map(|(l, t)| {
                let linear = match &t.gated {
                    GatedOutput::Linear => 100.0,
                    GatedOutput::NonLinear => 0.0,
                    GatedOutput::Mixed { gates, .. } => {
                        100.0 * gates.iter().filter(|g| g.choice == Branch::Linear).count() as f64
                            / n
                    }
                };
                LayerSelection {
                    layer: l + 1,
                    gated: t.plan.gate == GateType::Gating,
                    linear,
                    nonlinear: 100.0 - linear,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSelection {
    pub layer: usize,
    pub gated: bool,
    pub linear: f64,
    pub nonlinear: f64,
}

/// Per-node branch choice at every gated layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GateDecisionLog {
    pub num_nodes: usize,
    /// 1-based layer numbers of the gated layers.
    pub layers: Vec<usize>,
    /// `decisions[k][node]` for gated layer `layers[k]`.
    pub decisions: Vec<Vec<Branch>>,
}

/// Frozen per-layer embeddings concatenated per node, for fast scoring.
#[derive(Clone, Debug)]
pub struct Scorer {
    num_users: usize,
    num_items: usize,
    stacked: DenseMatrix,
}

impl Scorer {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn score(&self, user: usize, item: usize) -> f64 {
        BETA * crate::numerics::dense_dot(
            self.stacked.row(user),
            self.stacked.row(self.num_users + item),
        )
    }

    pub fn user_scores(&self, user: usize) -> Vec<f64> {
        (0..self.num_items).map(|i| self.score(user, i)).collect()
    }
}

/// Linear propagation: `A * G_prev`.
pub fn propagate_linear(
    adj: &NormalizedAdjacency,
    gated_prev: &DenseMatrix,
) -> Result<DenseMatrix> {
    adj.spmm(gated_prev)
}

/// Non-linear propagation: the previous state on bypass, `phi(A * G_prev)` otherwise.
pub fn propagate_nonlinear(
    adj: &NormalizedAdjacency,
    gated_prev: &DenseMatrix,
    nonlinear_prev: &DenseMatrix,
    mode: NonLinearMode,
    phi: Activation,
) -> Result<DenseMatrix> {
    gated_prev.check_same_shape(nonlinear_prev)?;
    match mode {
        NonLinearMode::Bypass => Ok(nonlinear_prev.clone()),
        NonLinearMode::Propagate => Ok(phi.apply(&adj.spmm(gated_prev)?)),
    }
}

fn gate_logits(mlp: &GatingMlp, e_l: &[f64], e_n: &[f64]) -> ([f64; 2], Option<Vec<f64>>) {
    let mut x = Vec::with_capacity(e_l.len() + e_n.len());
    x.extend_from_slice(e_l);
    x.extend_from_slice(e_n);
    let mut logits = [0.0; 2];
    match &mlp.hidden {
        None => {
            mlp.out.apply(&x, &mut logits);
            (logits, None)
        }
        Some(hidden) => {
            let mut pre = vec![0.0; hidden.fan_out()];
            hidden.apply(&x, &mut pre);
            let h: Vec<f64> = pre
                .iter()
                .map(|&a| Activation::LeakyRelu.apply_scalar(a))
                .collect();
            mlp.out.apply(&h, &mut logits);
            (logits, Some(pre))
        }
    }
}

/// Per-node selection between `e_l` and `e_n` rows.
fn gate_nodes(
    e_l: &DenseMatrix,
    e_n: &DenseMatrix,
    mlp: &GatingMlp,
    tau: f64,
    mode: ForwardMode,
    rng: Option<&mut Rng>,
) -> Result<(DenseMatrix, Vec<NodeGate>)> {
    e_l.check_same_shape(e_n)?;
    if mlp.input_dim() != 2 * e_l.cols() {
        return Err(Error::Shape(format!(
            "gating MLP expects input {}, embeddings give {}",
            mlp.input_dim(),
            2 * e_l.cols()
        )));
    }
    let n = e_l.rows();
    // Noise is drawn sequentially so the stream does not depend on threading.
    let noise = match mode {
        ForwardMode::Train => {
            if tau.is_nan() || tau <= 0.0 {
                return Err(Error::Config(format!(
                    "temperature must be positive, got {tau}"
                )));
            }
            let rng =
                rng.ok_or_else(|| Error::Config("train-mode gating needs a random stream".into()))?;
            Some(gumbel_sample(rng, 2 * n))
        }
        ForwardMode::Eval => None,
    };

    let gates: Vec<NodeGate> = (0..n)
        .into_par_iter()
        .map(|r| {
            let (logits, hidden_pre) = gate_logits(mlp, e_l.row(r), e_n.row(r));
            match &noise {
                Some(g) => {
                    let sample =
                        crate::numerics::stgs_with_noise(logits, [g[2 * r], g[2 * r + 1]], tau);
                    NodeGate {
                        logits,
                        choice: Branch::from_index(sample.choice()),
                        sample: Some(sample),
                        hidden_pre,
                    }
                }
                None => NodeGate {
                    logits,
                    choice: if logits[1] > logits[0] {
                        Branch::NonLinear
                    } else {
                        Branch::Linear
                    },
                    sample: None,
                    hidden_pre,
                },
            }
        })
        .collect();

    let mut output = DenseMatrix::zeros(n, e_l.cols());
    for (r, g) in gates.iter().enumerate() {
        let src = match g.choice {
            Branch::Linear => e_l.row(r),
            Branch::NonLinear => e_n.row(r),
        };
        output.row_mut(r).copy_from_slice(src);
    }
    Ok((output, gates))
}

/// Gating module for one layer. Fixed gate types copy the designated branch;
/// `Gating` requires an MLP and picks a branch per node.
pub fn gate_layer(
    e_l: &DenseMatrix,
    e_n: &DenseMatrix,
    mlp: Option<&GatingMlp>,
    tau: f64,
    xi: GateType,
    mode: ForwardMode,
    rng: Option<&mut Rng>,
) -> Result<(DenseMatrix, Vec<NodeGate>)> {
    e_l.check_same_shape(e_n)?;
    match xi {
        GateType::Linear => Ok((e_l.clone(), Vec::new())),
        GateType::NonLinear => Ok((e_n.clone(), Vec::new())),
        GateType::Gating => {
            let mlp =
                mlp.ok_or_else(|| Error::Config("gated layer without a gating MLP".into()))?;
            gate_nodes(e_l, e_n, mlp, tau, mode, rng)
        }
    }
}

/// Runs all layers of the configured variant.
///
/// `rng` is required only in train mode when the variant has gated layers.
pub fn forward(
    adj: &NormalizedAdjacency,
    params: &ModelParams,
    config: &ModelConfig,
    tau: f64,
    mode: ForwardMode,
    mut rng: Option<&mut Rng>,
) -> Result<ForwardTrace> {
    if adj.n() != params.num_nodes() {
        return Err(Error::Shape(format!(
            "adjacency has {} nodes, embeddings have {}",
            adj.n(),
            params.num_nodes()
        )));
    }
    params.check_against(config)?;

    let mut trace = ForwardTrace {
        num_users: adj.num_users(),
        num_items: adj.num_items(),
        mode,
        tau,
        activation: config.activation,
        ego: params.embeddings.clone(),
        layers: Vec::with_capacity(NUM_LAYERS),
    };
    let mut gate_params = params.gates.iter();

    for (l, plan) in config.variant.layers.iter().enumerate() {
        let aggregated = propagate_linear(adj, trace.gated(l))?;
        let nonlinear = match plan.mode {
            NonLinearMode::Bypass => None,
            NonLinearMode::Propagate => Some(config.activation.apply(&aggregated)),
        };
        let mut layer = LayerTrace {
            plan: *plan,
            aggregated,
            nonlinear,
            gated: GatedOutput::Linear,
        };
        layer.gated = match plan.gate {
            GateType::Linear => GatedOutput::Linear,
            GateType::NonLinear => GatedOutput::NonLinear,
            GateType::Gating => {
                let mlp = gate_params.next().expect("checked gate count");
                let e_n = match &layer.nonlinear {
                    Some(n) => n,
                    None => trace.nonlinear(l),
                };
                let (output, gates) =
                    gate_nodes(&layer.aggregated, e_n, mlp, tau, mode, rng.as_deref_mut())?;
                GatedOutput::Mixed { output, gates }
            }
        };
        trace.layers.push(layer);
    }
    Ok(trace)
}
