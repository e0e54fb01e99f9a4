//! Binary model file. All integers and floats are little-endian.
//!
//! ```text
//! magic "LIGHTEMB" | u32 version | u32 dim | u32 vocab_size
//! f64 learning_rate | f64 margin | u32 epochs | u32 batch_size | u64 seed | f64 init_scale
//! vocab_size x (u32 len, utf-8 bytes)
//! vocab_size * dim f32, row-major
//! u32 phrase_count | phrase_count x (u8 kind, u32 len, utf-8 bytes)
//! ```

use std::path::Path;

use super::{AgentError, EmbeddingModel, Hyperparams, PhraseKind};

pub const MODEL_MAGIC: &[u8; 8] = b"LIGHTEMB";
const MODEL_VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AgentError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| AgentError::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], AgentError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, AgentError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, AgentError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, AgentError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32(&mut self) -> Result<f32, AgentError> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, AgentError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| AgentError::ModelFormat(e.to_string()))
    }
}

fn put_string(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u32).to_le_bytes());
    out.extend(s.as_bytes());
}

impl EmbeddingModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let hp = &self.hyperparams;
        let mut out = Vec::with_capacity(64 + self.matrix.len() * 4);
        out.extend(MODEL_MAGIC);
        out.extend(MODEL_VERSION.to_le_bytes());
        out.extend((self.dim as u32).to_le_bytes());
        out.extend((self.vocab.len() as u32).to_le_bytes());
        out.extend(hp.learning_rate.to_le_bytes());
        out.extend(hp.margin.to_le_bytes());
        out.extend((hp.epochs as u32).to_le_bytes());
        out.extend((hp.batch_size as u32).to_le_bytes());
        out.extend(hp.seed.to_le_bytes());
        out.extend(hp.init_scale.to_le_bytes());
        for t in &self.vocab {
            put_string(&mut out, t);
        }
        for x in &self.matrix {
            out.extend(x.to_le_bytes());
        }
        out.extend((self.registry.len() as u32).to_le_bytes());
        for (kind, phrase) in &self.registry {
            out.push(kind.code());
            put_string(&mut out, phrase);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, AgentError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != MODEL_MAGIC {
            return Err(AgentError::ModelFormat("not a model file".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(AgentError::ModelFormat(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let vocab_size = r.u32()? as usize;
        let hyperparams = Hyperparams {
            dim,
            learning_rate: r.f64()?,
            margin: r.f64()?,
            epochs: r.u32()? as usize,
            batch_size: r.u32()? as usize,
            seed: r.u64()?,
            init_scale: r.f64()?,
        };
        let vocab = (0..vocab_size).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
        let n = vocab_size.checked_mul(dim).ok_or_else(|| AgentError::ModelFormat("matrix too large".into()))?;
        let matrix = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(AgentError::ModelFormat("non-finite matrix entry".into()));
        }
        let count = r.u32()? as usize;
        let mut registry = Vec::new();
        for _ in 0..count {
            let code = r.take(1)?[0];
            let kind = PhraseKind::from_code(code).ok_or_else(|| AgentError::ModelFormat(format!("bad phrase kind {code}")))?;
            registry.push((kind, r.string()?));
        }
        if r.pos != buf.len() {
            return Err(AgentError::ModelFormat("trailing bytes".into()));
        }
        Ok(EmbeddingModel::from_parts(vocab, dim, matrix, hyperparams, registry))
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
