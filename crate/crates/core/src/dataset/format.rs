use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::{Dataset, DatasetError, DatasetHeader, DatasetSummary, EpisodeRecord, StepRecord};
use crate::control::{GripperAction, StageId};
use crate::mathkin::Vec3;
use crate::render::Image;
use crate::scene::Basket;

pub const DATASET_MAGIC: [u8; 8] = *b"RGDS1\0\0\0";
pub const DATASET_VERSION: u32 = 1;
const HEADER_LEN: u64 = 8 + 4 * 3 + 8 * 3;
const EPISODE_FIXED: usize = 8 + 8 + 1 + 4 + 8 * (3 + 3 + 2 + 1 + 1 + 3);

fn step_len(width: u32, height: u32) -> usize {
    2 + 8 * (6 + 6 + 3 + 3) + (width * height * 3) as usize
}

fn corrupt(m: impl Into<String>) -> DatasetError {
    DatasetError::CorruptDataset(m.into())
}

/// Writer that also feeds every byte to a running CRC.
struct CrcWriter<W: Write> {
    inner: W,
    crc: crc32fast::Hasher,
}

impl<W: Write> Write for CrcWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.crc.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode_episode(e: &EpisodeRecord) -> Vec<u8> {
    let mut out = Vec::with_capacity(EPISODE_FIXED);
    out.extend_from_slice(&e.scene_seed.to_le_bytes());
    out.extend_from_slice(&e.attempt.to_le_bytes());
    out.push(e.success as u8);
    out.extend_from_slice(&(e.steps.len() as u32).to_le_bytes());
    put_f64s(&mut out, e.final_cube_position.as_slice());
    let b = &e.basket;
    put_f64s(&mut out, b.position.as_slice());
    put_f64s(&mut out, &b.half_extents);
    put_f64s(&mut out, &[b.depth, b.wall]);
    put_f64s(&mut out, &b.color);
    out
}

fn encode_step(s: &StepRecord, out: &mut Vec<u8>) {
    out.push(s.stage_id.index() as u8);
    out.push(s.gripper_action.index() as u8);
    put_f64s(out, &s.joint_angles);
    put_f64s(out, &s.motor_velocities);
    put_f64s(out, s.cube_position.as_slice());
    put_f64s(out, s.gripper_position.as_slice());
    out.extend_from_slice(&s.image.pixels);
}

/// Streaming dataset writer. Episode blocks go to a scratch file next to the
/// destination; `finish` assembles header, index and payload into a second
/// scratch file that atomically replaces the destination.
pub struct DatasetWriter {
    path: PathBuf,
    payload: BufWriter<NamedTempFile>,
    offsets: Vec<u64>,
    payload_len: u64,
    width: Option<(u32, u32)>,
    steps: u64,
    config_hash: u64,
}

fn scratch_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

impl DatasetWriter {
    pub fn create(path: &Path, config_hash: u64) -> Result<Self, DatasetError> {
        let payload = NamedTempFile::new_in(scratch_dir(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            payload: BufWriter::new(payload),
            offsets: Vec::new(),
            payload_len: 0,
            width: None,
            steps: 0,
            config_hash,
        })
    }

    pub fn push(&mut self, e: &EpisodeRecord) -> Result<(), DatasetError> {
        e.validate()?;
        let dims = (e.steps[0].image.width, e.steps[0].image.height);
        let dims = *self.width.get_or_insert(dims);
        let mut buf = encode_episode(e);
        for s in &e.steps {
            if (s.image.width, s.image.height) != dims {
                return Err(DatasetError::InvariantViolation(format!(
                    "image {}x{} in a {}x{} dataset",
                    s.image.width, s.image.height, dims.0, dims.1
                )));
            }
            encode_step(s, &mut buf);
        }
        self.offsets.push(self.payload_len);
        self.payload.write_all(&buf)?;
        self.payload_len += buf.len() as u64;
        self.steps += e.steps.len() as u64;
        Ok(())
    }

    pub fn finish(self) -> Result<DatasetSummary, DatasetError> {
        let mut payload = self.payload.into_inner().map_err(|e| e.into_error())?;
        payload.as_file_mut().seek(SeekFrom::Start(0))?;
        let (width, height) = self.width.unwrap_or((0, 0));
        let episodes = self.offsets.len() as u64;
        let out = NamedTempFile::new_in(scratch_dir(&self.path))?;
        let mut w = CrcWriter {
            inner: BufWriter::new(out),
            crc: crc32fast::Hasher::new(),
        };
        w.write_all(&DATASET_MAGIC)?;
        for v in [DATASET_VERSION, width, height] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [episodes, self.steps, self.config_hash] {
            w.write_all(&v.to_le_bytes())?;
        }
        let base = HEADER_LEN + 8 * episodes;
        for off in &self.offsets {
            w.write_all(&(base + off).to_le_bytes())?;
        }
        std::io::copy(payload.as_file_mut(), &mut w)?;
        let crc = w.crc.finalize();
        let mut inner = w.inner;
        inner.write_all(&crc.to_le_bytes())?;
        let file = inner.into_inner().map_err(|e| e.into_error())?;
        file.as_file().sync_all()?;
        file.persist(&self.path).map_err(|e| e.error)?;
        Ok(DatasetSummary {
            episodes,
            steps: self.steps,
        })
    }
}

/// Writes every episode of the stream; the image resolution is taken from the first episode.
pub fn write_dataset<I>(episodes: I, path: &Path, config_hash: u64) -> Result<DatasetSummary, DatasetError>
where
    I: IntoIterator<Item = EpisodeRecord>,
{
    let mut w = DatasetWriter::create(path, config_hash)?;
    for e in episodes {
        w.push(&e)?;
    }
    w.finish()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let s = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or_else(|| corrupt("block ends early"))?;
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DatasetError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s<const N: usize>(&mut self) -> Result<[f64; N], DatasetError> {
        let mut out = [0.0; N];
        for v in out.iter_mut() {
            *v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        }
        Ok(out)
    }
}

/// Random-access reader over a verified dataset file.
pub struct DatasetReader {
    file: BufReader<File>,
    header: DatasetHeader,
    offsets: Vec<u64>,
    end: u64,
}

impl DatasetReader {
    /// Opens the file and verifies size, magic and trailing checksum.
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let mut file = BufReader::with_capacity(1 << 20, File::open(path)?);
        let len = file.get_ref().metadata()?.len();
        if len < HEADER_LEN + 4 {
            return Err(corrupt("file shorter than header"));
        }
        let mut crc = crc32fast::Hasher::new();
        let mut remaining = len - 4;
        let mut chunk = vec![0u8; 1 << 20];
        while remaining > 0 {
            let n = remaining.min(chunk.len() as u64) as usize;
            file.read_exact(&mut chunk[..n])?;
            crc.update(&chunk[..n]);
            remaining -= n as u64;
        }
        let mut tail = [0u8; 4];
        file.read_exact(&mut tail)?;
        if crc.finalize() != u32::from_le_bytes(tail) {
            return Err(corrupt("checksum mismatch (truncated or modified file)"));
        }

        file.seek(SeekFrom::Start(0))?;
        let mut head = vec![0u8; HEADER_LEN as usize];
        file.read_exact(&mut head)?;
        if head[..8] != DATASET_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut c = Cursor { buf: &head[8..], pos: 0 };
        let version = c.u32()?;
        if version != DATASET_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let header = DatasetHeader {
            version,
            width: c.u32()?,
            height: c.u32()?,
            episodes: c.u64()?,
            steps: c.u64()?,
            config_hash: c.u64()?,
        };
        let index_len = header
            .episodes
            .checked_mul(8)
            .filter(|n| HEADER_LEN + n + 4 <= len)
            .ok_or_else(|| corrupt("index table exceeds file"))?;
        let mut index = vec![0u8; index_len as usize];
        file.read_exact(&mut index)?;
        let offsets: Vec<u64> = index
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let end = len - 4;
        let mut prev = HEADER_LEN + index_len;
        for &o in &offsets {
            if o < prev || o >= end {
                return Err(corrupt("episode offsets out of order"));
            }
            prev = o;
        }
        Ok(Self {
            file,
            header,
            offsets,
            end,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn episode(&mut self, i: usize) -> Result<EpisodeRecord, DatasetError> {
        let start = *self.offsets.get(i).ok_or_else(|| corrupt(format!("no episode {i}")))?;
        let stop = self.offsets.get(i + 1).copied().unwrap_or(self.end);
        let mut buf = vec![0u8; (stop - start) as usize];
        self.file.seek(SeekFrom::Start(start))?;
        self.file.read_exact(&mut buf)?;
        let (w, h) = (self.header.width, self.header.height);
        let mut c = Cursor { buf: &buf, pos: 0 };
        let scene_seed = c.u64()?;
        let attempt = c.u64()?;
        let success = c.u8()? != 0;
        let n = c.u32()? as usize;
        let final_cube_position = Vec3::from(c.f64s::<3>()?);
        let basket = Basket {
            position: Vec3::from(c.f64s::<3>()?),
            half_extents: c.f64s::<2>()?,
            depth: c.f64s::<1>()?[0],
            wall: c.f64s::<1>()?[0],
            color: c.f64s::<3>()?,
        };
        if buf.len() != EPISODE_FIXED + n * step_len(w, h) {
            return Err(corrupt(format!("episode {i} block has the wrong length")));
        }
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            let stage_id = StageId::from_index(c.u8()? as usize).ok_or_else(|| corrupt("bad stage id"))?;
            let gripper_action =
                GripperAction::from_index(c.u8()? as usize).ok_or_else(|| corrupt("bad gripper action"))?;
            let joint_angles = c.f64s::<6>()?;
            let motor_velocities = c.f64s::<6>()?;
            let cube_position = Vec3::from(c.f64s::<3>()?);
            let gripper_position = Vec3::from(c.f64s::<3>()?);
            let pixels = c.take((w * h * 3) as usize)?.to_vec();
            steps.push(StepRecord {
                image: Image::from_pixels(w, h, pixels).map_err(|e| corrupt(e.to_string()))?,
                joint_angles,
                motor_velocities,
                gripper_action,
                cube_position,
                gripper_position,
                stage_id,
            });
        }
        Ok(EpisodeRecord {
            steps,
            scene_seed,
            attempt,
            success,
            final_cube_position,
            basket,
        })
    }
}

/// Reads a whole dataset into memory, checking the header counts against the payload.
pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let mut r = DatasetReader::open(path)?;
    let mut episodes = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        episodes.push(r.episode(i)?);
    }
    let steps: u64 = episodes.iter().map(|e| e.steps.len() as u64).sum();
    if steps != r.header.steps {
        return Err(corrupt(format!("header claims {} steps, payload has {steps}", r.header.steps)));
    }
    Ok(Dataset {
        header: r.header,
        episodes,
    })
}
