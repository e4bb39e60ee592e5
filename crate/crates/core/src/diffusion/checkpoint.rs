//! Little-endian tensor container shared by policy checkpoints and demo
//! dumps.
//!
//! ```text
//! "EVST" | version u32 | action_dim u32 | context_dim u32 | steps u32
//!        | beta_start f64 | beta_end f64 | tensor_count u32
//!        | { name_len u32 | name | rank u32 | dims u32* | data f64* }*
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{DenoiserModel, DiffusionError, NoiseSchedule, Result};
use crate::numerics::{Activation, Layer, Mat, Mlp};

pub const MAGIC: &[u8; 4] = b"EVST";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorHeader {
    pub action_dim: u32,
    pub context_dim: u32,
    pub steps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<u32>, data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            dims,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub header: TensorHeader,
    pub tensors: Vec<Tensor>,
}

impl TensorFile {
    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| DiffusionError::Checkpoint(format!("missing tensor {name:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [
            FORMAT_VERSION,
            self.header.action_dim,
            self.header.context_dim,
            self.header.steps,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.header.beta_start.to_le_bytes());
        out.extend_from_slice(&self.header.beta_end.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for d in &t.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(DiffusionError::Checkpoint("bad magic, not an EVST file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(DiffusionError::Checkpoint(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let header = TensorHeader {
            action_dim: r.u32()?,
            context_dim: r.u32()?,
            steps: r.u32()?,
            beta_start: r.f64()?,
            beta_end: r.f64()?,
        };
        let count = r.u32()?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| DiffusionError::Checkpoint("tensor name is not UTF-8".into()))?;
            let rank = r.u32()?;
            let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let numel = dims.iter().map(|&d| d as usize).product::<usize>();
            let data = (0..numel).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            tensors.push(Tensor { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(DiffusionError::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { header, tensors })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| DiffusionError::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_tensor_file(path: &Path, file: &TensorFile) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&file.to_bytes())?;
    Ok(())
}

pub fn read_tensor_file(path: &Path) -> Result<TensorFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    TensorFile::from_bytes(&bytes)
}

impl DenoiserModel {
    pub fn to_tensor_file(&self) -> TensorFile {
        let s = self.schedule();
        let mut tensors = vec![
            Tensor::new("schedule.betas", vec![s.steps() as u32], s.betas().to_vec()),
            Tensor::new("arch.embed_width", vec![1], vec![self.embed_width() as f64]),
            Tensor::new(
                "arch.activations",
                vec![self.mlp().layers().len() as u32],
                self.mlp()
                    .layers()
                    .iter()
                    .map(|l| l.activation.code() as f64)
                    .collect(),
            ),
        ];
        for (i, l) in self.mlp().layers().iter().enumerate() {
            let (rows, cols) = l.weight.dims();
            tensors.push(Tensor::new(
                format!("layer{i}.weight"),
                vec![rows as u32, cols as u32],
                l.weight.data().to_vec(),
            ));
            tensors.push(Tensor::new(
                format!("layer{i}.bias"),
                vec![rows as u32],
                l.bias.clone(),
            ));
        }
        TensorFile {
            header: TensorHeader {
                action_dim: self.action_dim() as u32,
                context_dim: self.context_dim() as u32,
                steps: s.steps() as u32,
                beta_start: s.beta_start(),
                beta_end: s.beta_end(),
            },
            tensors,
        }
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        let h = &file.header;
        let betas = file.get("schedule.betas")?;
        if betas.data.len() != h.steps as usize {
            return Err(DiffusionError::Checkpoint(
                "schedule length disagrees with header".into(),
            ));
        }
        let schedule = NoiseSchedule::from_betas(betas.data.clone())?;
        let embed = file.get("arch.embed_width")?.data.first().copied().unwrap_or(0.0) as usize;
        let acts = &file.get("arch.activations")?.data;
        let mut layers = Vec::with_capacity(acts.len());
        for (i, &code) in acts.iter().enumerate() {
            let activation = Activation::from_code(code as u8)
                .ok_or_else(|| DiffusionError::Checkpoint(format!("unknown activation code {code}")))?;
            let w = file.get(&format!("layer{i}.weight"))?;
            if w.dims.len() != 2 {
                return Err(DiffusionError::Checkpoint(format!(
                    "layer{i}.weight must be rank 2"
                )));
            }
            let weight = Mat::from_vec(w.dims[0] as usize, w.dims[1] as usize, w.data.clone())?;
            let bias = file.get(&format!("layer{i}.bias"))?.data.clone();
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        let mlp = Mlp::from_layers(layers)?;
        DenoiserModel::from_parts(
            mlp,
            h.action_dim as usize,
            h.context_dim as usize,
            embed,
            schedule,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_tensor_file(path, &self.to_tensor_file())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensor_file(&read_tensor_file(path)?)
    }
}
