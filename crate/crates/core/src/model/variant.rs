use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of propagation layers.
pub const NUM_LAYERS: usize = 4;

/// Residual-prediction weight `1 / (K + 1)`.
pub const BETA: f64 = 1.0 / (NUM_LAYERS as f64 + 1.0);

/// What the non-linear branch does at a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonLinearMode {
    /// Carry the previous non-linear state forward unchanged.
    Bypass,
    /// `phi(A * G_prev)`.
    Propagate,
}

/// Which embedding a layer emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateType {
    Linear,
    NonLinear,
    Gating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub mode: NonLinearMode,
    pub gate: GateType,
}

impl LayerPlan {
    const fn new(mode: NonLinearMode, gate: GateType) -> Self {
        LayerPlan { mode, gate }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantName {
    All,
    Front,
    Middle,
    End,
    /// Every layer emits the linear branch: plain four-layer linear propagation.
    ForcedLinear,
    /// Every layer propagates and emits the non-linear branch.
    ForcedNonLinear,
}

impl VariantName {
    pub const GATED: [VariantName; 4] = [
        VariantName::All,
        VariantName::Front,
        VariantName::Middle,
        VariantName::End,
    ];

    pub fn tag(self) -> u8 {
        match self {
            VariantName::All => 0,
            VariantName::Front => 1,
            VariantName::Middle => 2,
            VariantName::End => 3,
            VariantName::ForcedLinear => 4,
            VariantName::ForcedNonLinear => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => VariantName::All,
            1 => VariantName::Front,
            2 => VariantName::Middle,
            3 => VariantName::End,
            4 => VariantName::ForcedLinear,
            5 => VariantName::ForcedNonLinear,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariantName::All => "All",
            VariantName::Front => "Front",
            VariantName::Middle => "Middle",
            VariantName::End => "End",
            VariantName::ForcedLinear => "forced-linear",
            VariantName::ForcedNonLinear => "forced-nonlinear",
        }
    }
}

impl fmt::Display for VariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all" => Ok(VariantName::All),
            "front" => Ok(VariantName::Front),
            "middle" => Ok(VariantName::Middle),
            "end" => Ok(VariantName::End),
            "forced-linear" | "linear" => Ok(VariantName::ForcedLinear),
            "forced-nonlinear" | "forced-non-linear" | "nonlinear" => Ok(VariantName::ForcedNonLinear),
            _ => Err(Error::Config(format!(
                "unknown variant '{s}' (expected All, Front, Middle, End, forced-linear or forced-nonlinear)"
            ))),
        }
    }
}

/// Per-layer plan for layers `1..=NUM_LAYERS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: VariantName,
    pub layers: [LayerPlan; NUM_LAYERS],
}

impl VariantSpec {
    /// 0-based indices of gated layers, in order.
    pub fn gated_layers(&self) -> Vec<usize> {
        (0..NUM_LAYERS)
            .filter(|&l| self.layers[l].gate == GateType::Gating)
            .collect()
    }

    pub fn num_gated(&self) -> usize {
        self.gated_layers().len()
    }
}

impl FromStr for VariantSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(layer_plan(s.parse()?))
    }
}

/// Layer plan for a named variant.
pub fn layer_plan(name: VariantName) -> VariantSpec {
    use GateType::*;
    use NonLinearMode::*;
    let fixed = LayerPlan::new(Bypass, Linear);
    let gated = LayerPlan::new(Propagate, Gating);
    let layers = match name {
        VariantName::All => [gated; 4],
        VariantName::Front => [gated, gated, fixed, fixed],
        VariantName::Middle => [fixed, gated, gated, fixed],
        VariantName::End => [fixed, fixed, gated, gated],
        VariantName::ForcedLinear => [fixed; 4],
        VariantName::ForcedNonLinear => [LayerPlan::new(Propagate, NonLinear); 4],
    };
    VariantSpec { name, layers }
}
