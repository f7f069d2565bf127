//! Binary checkpoints: `PDEF1`, u64 header length, canonical JSON header,
//! u64 tensor count, then per tensor: u32 name length, name, u32 rank, u64
//! dims, f64 values. All integers and floats little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DefModel, DefModelConfig};
use crate::error::{Error, Result};
use crate::neural::{ParamStore, Tensor};
use crate::textprep::Vocabulary;

pub const MAGIC: &[u8; 5] = b"PDEF1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: u32,
    pub config: DefModelConfig,
    pub vocab_digest: String,
    pub char_vocab_digest: String,
}

pub fn write_checkpoint(model: &DefModel) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        format: FORMAT_VERSION,
        config: model.config.clone(),
        vocab_digest: model.vocab.digest(),
        char_vocab_digest: model.char_vocab.digest(),
    };
    // serde_json::Value keeps object keys sorted, which makes the header canonical
    let json = serde_json::to_vec(&serde_json::to_value(&header)?)?;
    let mut out = Vec::with_capacity(64 + json.len() + 8 * model.params.num_values());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for (name, t) in model.params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint(model: &DefModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(model)?).map_err(|e| Error::io(path, e))
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
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("length overflows".into()))
    }
}

fn header_from(r: &mut Reader) -> Result<CheckpointHeader> {
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let n = r.len()?;
    let header: CheckpointHeader = serde_json::from_slice(r.take(n)?)?;
    if header.format != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint format {}", header.format)));
    }
    Ok(header)
}

pub fn read_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    header_from(&mut Reader { bytes, pos: 0 })
}

fn check_digest(expected: &str, vocab: &Vocabulary) -> Result<()> {
    let found = vocab.digest();
    if found != expected {
        return Err(Error::DigestMismatch {
            expected: expected.to_string(),
            found,
        });
    }
    Ok(())
}

/// Parses a checkpoint and binds it to the given vocabularies, which must
/// match the digests recorded at save time.
pub fn read_checkpoint(bytes: &[u8], vocab: Vocabulary, char_vocab: Vocabulary) -> Result<DefModel> {
    let mut r = Reader { bytes, pos: 0 };
    let header = header_from(&mut r)?;
    check_digest(&header.vocab_digest, &vocab)?;
    check_digest(&header.char_vocab_digest, &char_vocab)?;
    let count = r.len()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.len()).collect::<Result<Vec<usize>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("tensor {name} is too large")))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format(format!("tensor {name} has non-finite values")));
        }
        if store.id(&name).is_some() {
            return Err(Error::Format(format!("duplicate tensor {name}")));
        }
        store.add(&name, Tensor::new(shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after last tensor".into()));
    }
    DefModel::from_params(header.config, vocab, char_vocab, store)
}

pub fn load_checkpoint(path: &Path, vocab: Vocabulary, char_vocab: Vocabulary) -> Result<DefModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes, vocab, char_vocab)
}
