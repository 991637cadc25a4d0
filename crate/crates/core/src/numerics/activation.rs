use std::fmt;
use std::str::FromStr;

use super::dense::DenseMatrix;
use crate::error::Error;

pub const LEAKY_RELU_SLOPE: f64 = 0.01;
pub const ELU_ALPHA: f64 = 1.0;

/// Element-wise non-linearity used on the non-linear propagation branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    LeakyRelu,
    Elu,
}

impl Activation {
    #[inline]
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    LEAKY_RELU_SLOPE * x
                }
            }
            Activation::Elu => {
                if x >= 0.0 {
                    x
                } else {
                    ELU_ALPHA * x.exp_m1()
                }
            }
        }
    }

    /// Derivative; at 0 both kinds take the right-hand value 1.
    #[inline]
    pub fn derivative_scalar(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    LEAKY_RELU_SLOPE
                }
            }
            Activation::Elu => {
                if x >= 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * x.exp()
                }
            }
        }
    }

    pub fn apply(self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = x.clone();
        out.data_mut()
            .iter_mut()
            .for_each(|v| *v = self.apply_scalar(*v));
        out
    }

    pub fn grad(self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = x.clone();
        out.data_mut()
            .iter_mut()
            .for_each(|v| *v = self.derivative_scalar(*v));
        out
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::LeakyRelu => 0,
            Activation::Elu => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::LeakyRelu),
            1 => Some(Activation::Elu),
            _ => None,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "leakyrelu" => Ok(Activation::LeakyRelu),
            "elu" => Ok(Activation::Elu),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::LeakyRelu => "leaky_relu",
            Activation::Elu => "elu",
        })
    }
}
