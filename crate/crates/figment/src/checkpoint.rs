//! Binary checkpoints: every parameter matrix by name, plus the string
//! tables needed to rebuild the model (types, vocabularies, dimensions).
//!
//! Layout, all integers little-endian `u64` unless noted:
//!
//! ```text
//! magic "FGMTCKPT" | version u32 | kind | config_hash | config toml
//! meta:   count, then (key, n, n strings)
//! params: count, then (name, rows, cols, rows*cols f64 LE)
//! ```
//!
//! Strings are length-prefixed UTF-8. Meta keys are written sorted.

use std::collections::BTreeMap;
use std::path::Path;

use figment_core::tensor::Parameters;
use figment_core::Matrix;

use crate::error::{Error, Result};
use crate::formats::ensure_parent;

const MAGIC: &[u8; 8] = b"FGMTCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub config_hash: String,
    pub config: String,
    pub meta: BTreeMap<String, Vec<String>>,
    pub params: Vec<(String, Matrix)>,
}

impl Checkpoint {
    /// Snapshot of the parameter values of `model`, in visit order.
    pub fn capture<M: Parameters + ?Sized>(
        kind: &str,
        config_hash: &str,
        config: &str,
        meta: BTreeMap<String, Vec<String>>,
        model: &M,
    ) -> Self {
        let mut params = Vec::new();
        model.visit(&mut |name, p| params.push((name.to_string(), p.value.clone())));
        Checkpoint {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            config: config.to_string(),
            meta,
            params,
        }
    }

    /// Copies stored values into `model`; names, order and shapes must match.
    pub fn restore<M: Parameters + ?Sized>(&self, model: &mut M) -> Result<()> {
        let mut i = 0;
        let mut problem: Option<String> = None;
        model.visit_mut(&mut |name, p| {
            if problem.is_some() {
                return;
            }
            match self.params.get(i) {
                Some((n, m)) if n == name && m.shape() == p.value.shape() => p.value = m.clone(),
                Some((n, m)) => {
                    problem = Some(format!(
                        "parameter {i}: stored `{n}` {:?}, model expects `{name}` {:?}",
                        m.shape(),
                        p.value.shape()
                    ))
                }
                None => problem = Some(format!("missing parameter `{name}`")),
            }
            i += 1;
        });
        if problem.is_none() && i != self.params.len() {
            problem = Some(format!("{} stored parameters, model has {i}", self.params.len()));
        }
        match problem {
            Some(message) => Err(Error::Checkpoint { path: Default::default(), message }),
            None => Ok(()),
        }
    }

    pub fn meta(&self, key: &str) -> Result<&[String]> {
        self.meta.get(key).map(Vec::as_slice).ok_or_else(|| Error::Checkpoint {
            path: Default::default(),
            message: format!("no `{key}` table"),
        })
    }

    /// A single-valued numeric meta entry.
    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        let bad = || Error::Checkpoint { path: Default::default(), message: format!("`{key}` is not a count") };
        match self.meta(key)? {
            [v] => v.parse().map_err(|_| bad()),
            _ => Err(bad()),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.kind);
        put_str(&mut out, &self.config_hash);
        put_str(&mut out, &self.config);
        put_u64(&mut out, self.meta.len());
        for (k, vs) in &self.meta {
            put_str(&mut out, k);
            put_u64(&mut out, vs.len());
            for v in vs {
                put_str(&mut out, v);
            }
        }
        put_u64(&mut out, self.params.len());
        for (name, m) in &self.params {
            put_str(&mut out, name);
            put_u64(&mut out, m.rows());
            put_u64(&mut out, m.cols());
            for x in m.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(String::from("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        let kind = r.string()?;
        let config_hash = r.string()?;
        let config = r.string()?;
        let mut meta = BTreeMap::new();
        for _ in 0..r.u64()? {
            let key = r.string()?;
            let n = r.u64()?;
            let values = (0..n).map(|_| r.string()).collect::<std::result::Result<Vec<_>, _>>()?;
            meta.insert(key, values);
        }
        let count = r.u64()?;
        let mut params = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name = r.string()?;
            let (rows, cols) = (r.u64()?, r.u64()?);
            let n = rows.checked_mul(cols).ok_or("matrix size overflows")?;
            let raw = r.take(n.checked_mul(8).ok_or("matrix size overflows")?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            params.push((name, Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())?));
        }
        if r.pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - r.pos));
        }
        Ok(Checkpoint { kind, config_hash, config, meta, params })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        ensure_parent(path)?;
        std::fs::write(path, self.to_bytes()).map_err(Error::io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io(path))?;
        Self::from_bytes(&bytes).map_err(|message| Error::Checkpoint { path: path.to_path_buf(), message })
    }
}

fn put_u64(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u64).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u64(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated checkpoint")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> std::result::Result<usize, String> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| String::from("length does not fit in memory"))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let n = self.u64()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| String::from("invalid UTF-8 string"))
    }
}
