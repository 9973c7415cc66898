//! Named parameter collections and the `NDK1` flat container encoding.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "NDK1" | version: u32
//! repeated until end of input:
//!   name_len: u64 | name: UTF-8 bytes | rank: u64 | dims: rank x u64 | values: prod(dims) x f64
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::graph::{Graph, Var};
use super::{Tensor, TensorError};

pub const PARAMS_MAGIC: &[u8; 4] = b"NDK1";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    /// Buffers such as batch-norm running statistics are not trainable.
    pub trainable: bool,
}

/// Ordered, uniquely named parameter set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams {
    entries: Vec<Param>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, trainable: bool) -> usize {
        assert!(self.index_of(name).is_none(), "duplicate parameter {name}");
        self.entries.push(Param {
            name: name.to_string(),
            value,
            trainable,
        });
        self.entries.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries
            .iter()
            .find(|p| p.name == name)
            .map(|p| &p.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|p| p.name == name)
            .map(|p| &mut p.value)
    }

    pub fn entry(&self, i: usize) -> &Param {
        &self.entries[i]
    }

    pub fn entry_mut(&mut self, i: usize) -> &mut Param {
        &mut self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.numel())
            .sum()
    }

    /// Registers every entry as a graph leaf; trainable entries require grad.
    pub fn bind(&self, g: &mut Graph) -> Vec<Var> {
        self.entries
            .iter()
            .map(|p| g.leaf(p.value.clone(), p.trainable))
            .collect()
    }

    /// Copies values from `other` by name; every entry here must be present
    /// there with the same shape.
    pub fn load_from(&mut self, other: &ModelParams) -> Result<(), TensorError> {
        for p in &mut self.entries {
            let src = other
                .get(&p.name)
                .ok_or_else(|| TensorError::Param(format!("missing {}", p.name)))?;
            if src.shape() != p.value.shape() {
                return Err(TensorError::Param(format!(
                    "{}: expected shape {:?}, found {:?}",
                    p.name,
                    p.value.shape(),
                    src.shape()
                )));
            }
            p.value = src.clone();
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PARAMS_MAGIC);
        out.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
        for p in &self.entries {
            out.extend_from_slice(&(p.name.len() as u64).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.value.rank() as u64).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes an `NDK1` container. Entries are marked trainable; use
    /// [`ModelParams::load_from`] to restore into a model's own layout.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TensorError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != PARAMS_MAGIC {
            return Err(TensorError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != PARAMS_VERSION {
            return Err(TensorError::Format(format!(
                "unsupported version {version}"
            )));
        }
        let mut params = ModelParams::new();
        while r.pos < bytes.len() {
            let name_len = r.u64()? as usize;
            let name = core::str::from_utf8(r.take(name_len)?)
                .map_err(|_| TensorError::Format("name is not UTF-8".into()))?
                .to_string();
            let rank = r.u64()? as usize;
            if rank == 0 || rank > 8 {
                return Err(TensorError::Format(format!(
                    "{name}: unsupported rank {rank}"
                )));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| TensorError::Format(format!("{name}: shape overflow")))?;
            let raw = r.take(
                n.checked_mul(8)
                    .ok_or_else(|| TensorError::Format("size overflow".into()))?,
            )?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if params.index_of(&name).is_some() {
                return Err(TensorError::Format(format!("duplicate parameter {name}")));
            }
            let value = Tensor::new(shape, data)
                .map_err(|e| TensorError::Format(format!("{name}: {e}")))?;
            params.insert(&name, value, true);
        }
        Ok(params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                TensorError::Format(format!("truncated: need {n} bytes at offset {}", self.pos))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, TensorError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelParams {
        let mut p = ModelParams::new();
        p.insert(
            "conv.weight",
            Tensor::from_fn(&[2, 1, 1, 3], |i| i as f64 * 0.5),
            true,
        );
        p.insert("bn.running_var", Tensor::full(&[2], 1.0), false);
        p
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"NDK1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 11);
        assert_eq!(&bytes[16..27], b"conv.weight");
        assert_eq!(u64::from_le_bytes(bytes[27..35].try_into().unwrap()), 4);
    }

    #[test]
    fn decode_then_load_restores_values() {
        let src = sample();
        let decoded = ModelParams::from_bytes(&src.to_bytes()).unwrap();
        let mut dst = sample();
        dst.get_mut("conv.weight").unwrap().data_mut()[0] = 42.0;
        dst.load_from(&decoded).unwrap();
        assert_eq!(dst, src);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            ModelParams::from_bytes(&bytes[..bytes.len() - 3]),
            Err(TensorError::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ModelParams::from_bytes(&bad).is_err());
    }

    #[test]
    fn load_rejects_shape_mismatch() {
        let mut other = ModelParams::new();
        other.insert("conv.weight", Tensor::zeros(&[6]), true);
        other.insert("bn.running_var", Tensor::zeros(&[2]), false);
        let mut dst = sample();
        assert!(dst.load_from(&other).is_err());
    }
}
