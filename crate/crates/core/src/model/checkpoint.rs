//! Binary checkpoint layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HMLT"
//! 4       4     format version (u32) = 1
//! 8       8     number of users (u64)
//! 16      8     number of items (u64)
//! 24      4     embedding dimension D (u32)
//! 28      4     number of layers K (u32) = 4
//! 32      1     variant tag (u8): 0 All, 1 Front, 2 Middle, 3 End,
//!               4 forced-linear, 5 forced-nonlinear
//! 33      1     flags (u8): bit 0 activation (0 leaky-ReLU, 1 ELU),
//!               bit 1 gating MLP has a hidden layer
//! 34      ...   embeddings, (users + items) x D f64, row-major
//!         ...   per gated layer, in layer order:
//!                 [hidden w (2D x D), hidden b (D)]   if bit 1 is set
//!                 w (in x 2), b (2)                    in = D with hidden, else 2D
//! ```

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::params::{AffineLayer, GatingMlp, ModelConfig, ModelParams};
use super::variant::{layer_plan, VariantName, NUM_LAYERS};
use crate::error::{Error, Result};
use crate::numerics::{Activation, DenseMatrix};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HMLT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub num_users: usize,
    pub num_items: usize,
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, self).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let ckpt = read_checkpoint(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                cursor.len()
            )));
        }
        Ok(ckpt)
    }
}

/// Short content hash used to tag reports with the checkpoint they came from.
pub fn checkpoint_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn write_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint(mut w: impl Write, ckpt: &Checkpoint) -> Result<()> {
    let params = &ckpt.params;
    if params.num_nodes() != ckpt.num_users + ckpt.num_items {
        return Err(Error::Checkpoint(
            "embedding rows disagree with user/item counts".into(),
        ));
    }
    params.check_against(&ckpt.config)?;
    let flags = ckpt.config.activation.tag() | if ckpt.config.hidden_gate { 0b10 } else { 0 };

    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(ckpt.num_users as u64).to_le_bytes())?;
    w.write_all(&(ckpt.num_items as u64).to_le_bytes())?;
    w.write_all(&(params.dim() as u32).to_le_bytes())?;
    w.write_all(&(NUM_LAYERS as u32).to_le_bytes())?;
    w.write_all(&[ckpt.config.variant.name.tag(), flags])?;
    for t in params.tensors() {
        write_f64s(&mut w, t)?;
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(buf)
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Checkpoint(format!("truncated payload: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_affine(r: &mut impl Read, fan_in: usize, fan_out: usize) -> Result<AffineLayer> {
    let w = DenseMatrix::from_vec(fan_in, fan_out, read_f64s(r, fan_in * fan_out)?)?;
    let b = read_f64s(r, fan_out)?;
    Ok(AffineLayer { w, b })
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Checkpoint> {
    if &read_array::<4>(&mut r)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let num_users = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let num_items = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let layers = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if layers != NUM_LAYERS {
        return Err(Error::Checkpoint(format!(
            "expected {NUM_LAYERS} layers, found {layers}"
        )));
    }
    if dim == 0 {
        return Err(Error::Checkpoint("zero embedding dimension".into()));
    }
    let [tag, flags] = read_array::<2>(&mut r)?;
    let name = VariantName::from_tag(tag)
        .ok_or_else(|| Error::Checkpoint(format!("unknown variant tag {tag}")))?;
    let activation = Activation::from_tag(flags & 1).expect("one-bit tag");
    if flags & !0b11 != 0 {
        return Err(Error::Checkpoint(format!("unknown flag bits {flags:#04x}")));
    }
    let config = ModelConfig {
        variant: layer_plan(name),
        activation,
        hidden_gate: flags & 0b10 != 0,
    };

    let n = num_users + num_items;
    let embeddings = DenseMatrix::from_vec(n, dim, read_f64s(&mut r, n * dim)?)?;
    let mut gates = Vec::new();
    for _ in 0..config.variant.num_gated() {
        let hidden = if config.hidden_gate {
            Some(read_affine(&mut r, 2 * dim, dim)?)
        } else {
            None
        };
        let fan_in = if config.hidden_gate { dim } else { 2 * dim };
        let out = read_affine(&mut r, fan_in, 2)?;
        gates.push(GatingMlp { hidden, out });
    }
    Ok(Checkpoint {
        num_users,
        num_items,
        config,
        params: ModelParams { embeddings, gates },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;
    use crate::numerics::Rng;

    fn sample(name: VariantName, hidden: bool) -> Checkpoint {
        let mut config = ModelConfig::new(layer_plan(name));
        config.hidden_gate = hidden;
        config.activation = Activation::Elu;
        let params = init_params(5, 3, &config, &mut Rng::seed_from_u64(1)).unwrap();
        Checkpoint {
            num_users: 2,
            num_items: 3,
            config,
            params,
        }
    }

    #[test]
    fn header_layout() {
        let bytes = sample(VariantName::End, false).to_bytes();
        assert_eq!(&bytes[..4], b"HMLT");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 4);
        assert_eq!(bytes[32], 3);
        assert_eq!(bytes[33], 1);
        // header + 5x3 embeddings + 2 gates of (6x2 + 2)
        assert_eq!(bytes.len(), 34 + 8 * (15 + 2 * 14));
    }

    #[test]
    fn roundtrip_all_variants() {
        for name in [
            VariantName::All,
            VariantName::Middle,
            VariantName::ForcedLinear,
        ] {
            for hidden in [false, true] {
                let ckpt = sample(name, hidden);
                assert_eq!(Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap(), ckpt);
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = sample(VariantName::End, false).to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes).is_err());
        let mut bytes = sample(VariantName::End, false).to_bytes();
        bytes[32] = 42;
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    #[test]
    fn id_is_stable() {
        let bytes = sample(VariantName::End, false).to_bytes();
        assert_eq!(checkpoint_id(&bytes), checkpoint_id(&bytes));
        assert_eq!(checkpoint_id(&bytes).len(), 16);
    }
}
