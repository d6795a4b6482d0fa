//! `DIF1` container: JSON metadata plus named little-endian f32 tensors.
//!
//! Layout: magic, u32 version, u64 metadata length, metadata bytes, u32
//! tensor count, the shape directory (name, rank, dims per tensor), then the
//! raw payload of every tensor in directory order.

use std::path::Path;

use dif_nn::{build, Model, ModelSpec, Tensor};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{DifError, Result};

pub const MAGIC: &[u8; 4] = b"DIF1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: Value,
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn new(kind: &str, mut metadata: Value) -> Self {
        if let Value::Object(map) = &mut metadata {
            map.insert("type".into(), Value::String(kind.into()));
        }
        Self {
            metadata,
            tensors: Vec::new(),
        }
    }

    pub fn kind(&self) -> Option<&str> {
        self.metadata.get("type").and_then(Value::as_str)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        match self.kind() {
            Some(k) if k == kind => Ok(()),
            other => Err(DifError::Data(format!("expected a {kind} checkpoint, found {other:?}"))),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor<f32>) {
        self.tensors.push((name.into(), t));
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor<f32>> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| DifError::Data(format!("checkpoint has no tensor '{name}'")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.metadata)?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
        }
        for (_, t) in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(DifError::Data("not a DIF1 checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(DifError::Data(format!("unsupported checkpoint version {version}")));
        }
        let meta_len = r.u64()? as usize;
        let metadata: Value = serde_json::from_slice(r.take(meta_len)?)?;
        let count = r.u32()? as usize;
        let mut dir = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| DifError::Data("tensor name is not UTF-8".into()))?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            dir.push((name, shape));
        }
        let mut tensors = Vec::with_capacity(dir.len());
        for (name, shape) in dir {
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| DifError::Data(format!("shape of '{name}' overflows")))?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| DifError::Data("payload size overflows".into()))?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push((name, Tensor::from_vec(&shape, data)?));
        }
        if r.pos != bytes.len() {
            return Err(DifError::Data(format!(
                "{} trailing bytes after checkpoint payload",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { metadata, tensors })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| DifError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| DifError::io(path, e))?)
    }

    /// SHA-256 of the serialized bytes, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_bytes()?))
    }
}

/// Append a model's state under `prefix` and record its spec in the metadata.
pub fn push_model(ckpt: &mut Checkpoint, prefix: &str, model: &Model<f32>) -> Result<()> {
    if let Value::Object(map) = &mut ckpt.metadata {
        map.insert(format!("{prefix}spec"), serde_json::to_value(&model.spec)?);
    }
    for (name, t) in model.state() {
        ckpt.push(format!("{prefix}{name}"), t.clone());
    }
    Ok(())
}

/// Rebuild a model stored by [`push_model`].
pub fn load_model(ckpt: &Checkpoint, prefix: &str) -> Result<Model<f32>> {
    let spec_value = ckpt
        .metadata
        .get(format!("{prefix}spec"))
        .ok_or_else(|| DifError::Data(format!("checkpoint has no '{prefix}spec'")))?;
    let spec: ModelSpec = serde_json::from_value(spec_value.clone())?;
    let mut model = build::<f32>(&spec)?;
    let state: Vec<(String, Tensor<f32>)> = ckpt
        .tensors
        .iter()
        .filter_map(|(n, t)| n.strip_prefix(prefix).map(|s| (s.to_string(), t.clone())))
        .filter(|(n, _)| n.starts_with("layer"))
        .collect();
    model.load_state(&state)?;
    Ok(model)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| DifError::Data(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut a = [0u8; 8];
        a.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(a))
    }
}
