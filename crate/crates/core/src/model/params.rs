use super::variant::VariantSpec;
use crate::error::{Error, Result};
use crate::numerics::{Activation, DenseMatrix, Rng};

/// Standard deviation of the initial embedding entries.
pub const EMBEDDING_INIT_STD: f64 = 0.1;

/// Static model settings that are not learned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub variant: VariantSpec,
    pub activation: Activation,
    /// Adds a width-`D` leaky-ReLU hidden layer to every gating MLP.
    pub hidden_gate: bool,
}

impl ModelConfig {
    pub fn new(variant: VariantSpec) -> Self {
        ModelConfig {
            variant,
            activation: Activation::LeakyRelu,
            hidden_gate: false,
        }
    }
}

/// `x -> x W + b` with `W` stored `in x out`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineLayer {
    pub w: DenseMatrix,
    pub b: Vec<f64>,
}

impl AffineLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        AffineLayer {
            w: DenseMatrix::zeros(fan_in, fan_out),
            b: vec![0.0; fan_out],
        }
    }

    fn xavier(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        AffineLayer {
            w: DenseMatrix::from_fn(fan_in, fan_out, |_, _| (2.0 * rng.uniform() - 1.0) * limit),
            b: vec![0.0; fan_out],
        }
    }

    #[inline]
    pub fn fan_in(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn fan_out(&self) -> usize {
        self.w.cols()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.w.row(k)) {
                *o += xk * w;
            }
        }
    }

    /// Accumulates `dW += x dy^T`, `db += dy` into `grad` and writes `W dy` into `dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut AffineLayer, dx: &mut [f64]) {
        for (k, &xk) in x.iter().enumerate() {
            for (g, d) in grad.w.row_mut(k).iter_mut().zip(dy) {
                *g += xk * d;
            }
        }
        for (g, d) in grad.b.iter_mut().zip(dy) {
            *g += d;
        }
        for (k, o) in dx.iter_mut().enumerate() {
            *o = self.w.row(k).iter().zip(dy).map(|(w, d)| w * d).sum();
        }
    }
}

/// Gate scorer mapping `[e_L ; e_N]` (length `2D`) to two logits,
/// index 0 = linear branch, index 1 = non-linear branch.
#[derive(Clone, Debug, PartialEq)]
pub struct GatingMlp {
    pub hidden: Option<AffineLayer>,
    pub out: AffineLayer,
}

impl GatingMlp {
    pub fn zeros(dim: usize, hidden: bool) -> Self {
        GatingMlp {
            hidden: hidden.then(|| AffineLayer::zeros(2 * dim, dim)),
            out: AffineLayer::zeros(if hidden { dim } else { 2 * dim }, 2),
        }
    }

    fn init(dim: usize, hidden: bool, rng: &mut Rng) -> Self {
        let hidden_layer = hidden.then(|| AffineLayer::xavier(2 * dim, dim, rng));
        let out = AffineLayer::xavier(if hidden { dim } else { 2 * dim }, 2, rng);
        GatingMlp {
            hidden: hidden_layer,
            out,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.as_ref().unwrap_or(&self.out).fan_in()
    }

    fn layers(&self) -> impl Iterator<Item = &AffineLayer> {
        self.hidden.iter().chain(std::iter::once(&self.out))
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut AffineLayer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.out))
    }
}

/// Learned parameters: the initial embedding table for users then items, and
/// one gating MLP per gated layer (in layer order).
///
/// The same type doubles as the gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub embeddings: DenseMatrix,
    pub gates: Vec<GatingMlp>,
}

/// Gradients share the parameter layout.
pub type ParamGrads = ModelParams;

impl ModelParams {
    #[inline]
    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            embeddings: DenseMatrix::zeros(self.num_nodes(), self.dim()),
            gates: self
                .gates
                .iter()
                .map(|g| GatingMlp::zeros(self.dim(), g.hidden.is_some()))
                .collect(),
        }
    }

    /// Flat views of every tensor in a fixed order: embeddings, then for each
    /// gate its hidden `w`, `b` (if any) and output `w`, `b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embeddings.data()];
        for g in &self.gates {
            for l in g.layers() {
                out.push(l.w.data());
                out.push(&l.b);
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embeddings.data_mut()];
        for g in &mut self.gates {
            for l in g.layers_mut() {
                out.push(l.w.data_mut());
                out.push(&mut l.b);
            }
        }
        out
    }

    /// Squared L2 norm of all gating parameters (weights and biases).
    pub fn gate_squared_norm(&self) -> f64 {
        self.tensors()[1..]
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn check_against(&self, config: &ModelConfig) -> Result<()> {
        let gated = config.variant.num_gated();
        if self.gates.len() != gated {
            return Err(Error::Shape(format!(
                "variant {} has {gated} gated layers but params carry {} gating MLPs",
                config.variant.name,
                self.gates.len()
            )));
        }
        let d = self.dim();
        for g in &self.gates {
            if g.input_dim() != 2 * d
                || g.hidden.is_some() != config.hidden_gate
                || g.out.fan_out() != 2
            {
                return Err(Error::Shape(
                    "gating MLP shape disagrees with config".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Random initial parameters: embeddings i.i.d. `N(0, 0.1^2)`, gating weights
/// Xavier-uniform, gating biases zero.
pub fn init_params(
    num_nodes: usize,
    dim: usize,
    config: &ModelConfig,
    rng: &mut Rng,
) -> Result<ModelParams> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let embeddings = DenseMatrix::from_fn(num_nodes, dim, |_, _| {
        EMBEDDING_INIT_STD * rng.standard_normal()
    });
    let gates = (0..config.variant.num_gated())
        .map(|_| GatingMlp::init(dim, config.hidden_gate, rng))
        .collect();
    Ok(ModelParams { embeddings, gates })
}
