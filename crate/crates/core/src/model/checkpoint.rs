//! Versioned binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "SBERTCKP"
//! version      u32
//! config hash  32 bytes SHA-256 of the config JSON below
//! vocab hash   32 bytes SHA-256 of the vocabulary file
//! step         u64      completed optimizer steps
//! adam t       u64      optimizer step counter
//! config       u32 length + UTF-8 JSON {"model": …, "training": …}
//! tensors      u32 count, then per tensor:
//!                u16 name length + UTF-8 name, u64 rows, u64 cols,
//!                rows × cols f64 values
//! ```
//!
//! Tensors are the model parameters (`param.<name>`) followed by the AdamW
//! moments (`adam.m.<name>`, `adam.v.<name>`), in the fixed parameter order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::{EncoderParams, ModelConfig};
use super::tensor::Matrix;
use super::train::{AdamW, TrainState, TrainingConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SBERTCKP";
pub const VERSION: u32 = 1;

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub training: TrainingConfig,
    /// Hex SHA-256 of the vocabulary the model was trained with.
    pub vocab_digest: String,
    pub state: TrainState,
}

#[derive(Serialize, Deserialize)]
struct ConfigBlock {
    model: ModelConfig,
    training: TrainingConfig,
}

impl Checkpoint {
    pub fn params(&self) -> &EncoderParams {
        &self.state.params
    }

    pub fn step(&self) -> u64 {
        self.state.step
    }

    fn config_json(&self) -> String {
        serde_json::to_string(&ConfigBlock {
            model: self.state.params.config.clone(),
            training: self.training.clone(),
        })
        .expect("configs serialize")
    }

    /// Hex SHA-256 of the model and training configuration.
    pub fn config_digest(&self) -> String {
        hex(&Sha256::digest(self.config_json().as_bytes()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let config = self.config_json();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&Sha256::digest(config.as_bytes()));
        out.extend_from_slice(&unhex(&self.vocab_digest).unwrap_or([0; 32]));
        out.extend_from_slice(&self.state.step.to_le_bytes());
        out.extend_from_slice(&self.state.optimizer.t.to_le_bytes());
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        let tensors = named(&self.state);
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::validation("not a checkpoint file (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let config_hash = r.take(32)?.to_vec();
        let vocab_digest = hex(r.take(32)?);
        let step = r.u64()?;
        let adam_t = r.u64()?;
        let config_len = r.u32()? as usize;
        let config_bytes = r.take(config_len)?;
        if Sha256::digest(config_bytes).as_slice() != config_hash.as_slice() {
            return Err(Error::validation(
                "checkpoint config digest does not match its contents",
            ));
        }
        let block: ConfigBlock = serde_json::from_slice(config_bytes)
            .map_err(|e| Error::validation(format!("checkpoint config is unreadable: {e}")))?;
        let params = EncoderParams::zeros(&block.model)?;
        let mut state = TrainState {
            optimizer: AdamW::new(&params),
            params,
            step,
        };
        state.optimizer.t = adam_t;
        let count = r.u32()? as usize;
        let mut slots = named_mut(&mut state);
        if count != slots.len() {
            return Err(Error::validation(format!(
                "checkpoint holds {count} tensors, the configuration needs {}",
                slots.len()
            )));
        }
        for (expect_name, slot) in slots.iter_mut() {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::validation("tensor name is not UTF-8"))?;
            if name != expect_name {
                return Err(Error::validation(format!(
                    "expected tensor {expect_name}, found {name}"
                )));
            }
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            if (rows, cols) != slot.shape() {
                return Err(Error::validation(format!(
                    "tensor {name} has shape {rows}x{cols}, expected {}x{}",
                    slot.rows(),
                    slot.cols()
                )));
            }
            for x in slot.data_mut() {
                *x = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::validation("trailing bytes after the last tensor"));
        }
        Ok(Self {
            training: block.training,
            vocab_digest,
            state,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn named(state: &TrainState) -> Vec<(String, &Matrix)> {
    let mut out: Vec<(String, &Matrix)> = state
        .params
        .tensors()
        .into_iter()
        .map(|(n, t)| (format!("param.{n}"), t))
        .collect();
    out.extend(
        state
            .optimizer
            .m
            .tensors()
            .into_iter()
            .map(|(n, t)| (format!("adam.m.{n}"), t)),
    );
    out.extend(
        state
            .optimizer
            .v
            .tensors()
            .into_iter()
            .map(|(n, t)| (format!("adam.v.{n}"), t)),
    );
    out
}

fn named_mut(state: &mut TrainState) -> Vec<(String, &mut Matrix)> {
    let mut out: Vec<(String, &mut Matrix)> = state
        .params
        .tensors_mut()
        .into_iter()
        .map(|(n, t)| (format!("param.{n}"), t))
        .collect();
    out.extend(
        state
            .optimizer
            .m
            .tensors_mut()
            .into_iter()
            .map(|(n, t)| (format!("adam.m.{n}"), t)),
    );
    out.extend(
        state
            .optimizer
            .v
            .tensors_mut()
            .into_iter()
            .map(|(n, t)| (format!("adam.v.{n}"), t)),
    );
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::validation("checkpoint is truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}
