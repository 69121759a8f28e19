//! `RGCK1` checkpoint files.
//!
//! ```text
//! magic "RGCK1\0\0\0" | version u32
//! config      u32 length | NetConfig as JSON
//! scaling     velocity, cube, gripper: (u32 n | n mean f64 | n std f64) each
//!             | u32 joints | joints x (lo f64, hi f64)
//! params      u64 count | count f64
//! optimizer   step u64 | count f64 first moments | count f64 second moments
//! trailer     crc32 of every preceding byte, u32
//! ```
//! All values little-endian.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::adam::AdamState;
use super::config::NetConfig;
use super::model::ControllerNet;
use super::train::{Normalization, TrainOutcome};
use super::NetError;
use crate::dataset::Moments;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RGCK1\0\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: NetConfig,
    pub normalization: Normalization,
    pub params: Vec<f64>,
    pub adam: AdamState,
}

impl From<&TrainOutcome> for Checkpoint {
    fn from(t: &TrainOutcome) -> Self {
        Self {
            config: t.net.config.clone(),
            normalization: t.normalization.clone(),
            params: t.net.params.clone(),
            adam: t.adam.clone(),
        }
    }
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_moments(out: &mut Vec<u8>, m: &Moments) {
    out.extend_from_slice(&(m.mean.len() as u32).to_le_bytes());
    put_f64s(out, &m.mean);
    put_f64s(out, &m.std);
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        if self.buf.len() - self.at < n {
            return Err(NetError::CorruptCheckpoint(format!("truncated at byte {}", self.at)));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NetError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| NetError::CorruptCheckpoint("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn moments(&mut self) -> Result<Moments, NetError> {
        let n = self.u32()? as usize;
        Ok(Moments {
            mean: self.f64s(n)?,
            std: self.f64s(n)?,
        })
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let cfg = serde_json::to_vec(&self.config).expect("config serialises");
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg);
        let n = &self.normalization;
        put_moments(&mut out, &n.velocity);
        put_moments(&mut out, &n.cube);
        put_moments(&mut out, &n.gripper);
        out.extend_from_slice(&(n.joint_limits.len() as u32).to_le_bytes());
        for (lo, hi) in &n.joint_limits {
            put_f64s(&mut out, &[*lo, *hi]);
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        put_f64s(&mut out, &self.params);
        out.extend_from_slice(&self.adam.step.to_le_bytes());
        put_f64s(&mut out, &self.adam.m);
        put_f64s(&mut out, &self.adam.v);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let corrupt = |m: &str| NetError::CorruptCheckpoint(m.to_string());
        if bytes.len() < CHECKPOINT_MAGIC.len() + 8 {
            return Err(corrupt("file too short"));
        }
        if &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(trailer.try_into().unwrap()) {
            return Err(corrupt("checksum mismatch (truncated or damaged)"));
        }
        let mut c = Cursor { buf: body, at: 8 };
        let version = c.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(NetError::CorruptCheckpoint(format!("unsupported version {version}")));
        }
        let len = c.u32()? as usize;
        let config: NetConfig =
            serde_json::from_slice(c.take(len)?).map_err(|e| NetError::CorruptCheckpoint(format!("config: {e}")))?;
        let velocity = c.moments()?;
        let cube = c.moments()?;
        let gripper = c.moments()?;
        let joints = c.u32()? as usize;
        let limits = c.f64s(2 * joints)?;
        let joint_limits = limits.chunks(2).map(|p| (p[0], p[1])).collect();
        let count = c.u64()? as usize;
        let params = c.f64s(count)?;
        let step = c.u64()?;
        let m = c.f64s(count)?;
        let v = c.f64s(count)?;
        if c.at != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        let ck = Self {
            config,
            normalization: Normalization {
                velocity,
                cube,
                gripper,
                joint_limits,
            },
            params,
            adam: AdamState { m, v, step },
        };
        ck.net()?;
        Ok(ck)
    }

    /// Network with these parameters and zeroed recurrent state.
    pub fn net(&self) -> Result<ControllerNet, NetError> {
        ControllerNet::with_params(self.config.clone(), self.params.clone())
    }
}

/// Writes atomically: a temporary file next to `path` is renamed into place.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), NetError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(&ck.to_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NetError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
