//! The gated four-layer propagation model: forward pass, hand-derived
//! backward pass and the binary checkpoint format.

mod backward;
mod checkpoint;
mod forward;
mod params;
mod variant;

pub use backward::{backward, ScoreGrad};
pub use checkpoint::{
    checkpoint_id, read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use forward::{
    forward, gate_layer, propagate_linear, propagate_nonlinear, Branch, ForwardMode, ForwardTrace,
    GateDecisionLog, GatedOutput, LayerSelection, LayerTrace, NodeGate, Scorer,
};
pub use params::{
    init_params, AffineLayer, GatingMlp, ModelConfig, ModelParams, ParamGrads, EMBEDDING_INIT_STD,
};
pub use variant::{
    layer_plan, GateType, LayerPlan, NonLinearMode, VariantName, VariantSpec, BETA, NUM_LAYERS,
};
