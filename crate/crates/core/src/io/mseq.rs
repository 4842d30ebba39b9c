//! `.mseq` body motion container.
//!
//! Layout, all little-endian: magic `MSEQ1`; `u32` vertex count; `u32` face
//! count; three `u32` per face; `f64` fps; `u32` frame count; then per frame
//! and vertex three `f64` coordinates.

use std::fs;
use std::path::Path;

use crate::Vec3;

use super::IoError;

const MAGIC: &[u8; 5] = b"MSEQ1";

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub faces: Vec<[usize; 3]>,
    pub frames: Vec<Vec<Vec3>>,
    pub fps: f64,
    /// Vertex count of every frame.
    pub vertex_count: usize,
}

impl MotionSequence {
    pub fn validate(&self) -> Result<(), IoError> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(IoError::CountMismatch(format!("fps must be positive, got {}", self.fps)));
        }
        if let Some((k, f)) = self.frames.iter().enumerate().find(|(_, f)| f.len() != self.vertex_count) {
            return Err(IoError::CountMismatch(format!(
                "frame {k} has {} vertices, topology has {}",
                f.len(),
                self.vertex_count
            )));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&v| v >= self.vertex_count)) {
            return Err(IoError::CountMismatch(format!("face {f:?} exceeds vertex count {}", self.vertex_count)));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, IoError> {
        self.validate()?;
        let count = |n: usize, what: &str| {
            u32::try_from(n).map_err(|_| IoError::CountMismatch(format!("{what} count {n} exceeds u32")))
        };
        let mut out = Vec::with_capacity(32 + 12 * self.faces.len() + 24 * self.vertex_count * self.frames.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&count(self.vertex_count, "vertex")?.to_le_bytes());
        out.extend_from_slice(&count(self.faces.len(), "face")?.to_le_bytes());
        for f in &self.faces {
            for &v in f {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        out.extend_from_slice(&self.fps.to_le_bytes());
        out.extend_from_slice(&count(self.frames.len(), "frame")?.to_le_bytes());
        for frame in &self.frames {
            for p in frame {
                for c in p.iter() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IoError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(IoError::BadMagic);
        }
        let vertex_count = r.u32("vertex count")? as usize;
        let face_count = r.u32("face count")? as usize;
        let mut faces = Vec::with_capacity(face_count.min(bytes.len() / 12));
        for _ in 0..face_count {
            faces.push([r.u32("faces")? as usize, r.u32("faces")? as usize, r.u32("faces")? as usize]);
        }
        let fps = r.f64("fps")?;
        let frame_count = r.u32("frame count")? as usize;
        let expected = frame_count
            .checked_mul(vertex_count)
            .and_then(|n| n.checked_mul(24))
            .ok_or_else(|| IoError::CountMismatch("frame data size overflows".into()))?;
        let remaining = bytes.len() - r.pos;
        if remaining < expected {
            return Err(IoError::TruncatedFile { what: "frames" });
        }
        if remaining > expected {
            return Err(IoError::CountMismatch(format!(
                "{} trailing bytes after {frame_count} frames",
                remaining - expected
            )));
        }
        let mut frames = Vec::with_capacity(frame_count);
        for _ in 0..frame_count {
            let mut frame = Vec::with_capacity(vertex_count);
            for _ in 0..vertex_count {
                frame.push(Vec3::new(r.f64("frames")?, r.f64("frames")?, r.f64("frames")?));
            }
            frames.push(frame);
        }
        let seq = MotionSequence {
            faces,
            frames,
            fps,
            vertex_count,
        };
        seq.validate()?;
        Ok(seq)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], IoError> {
        if self.bytes.len() - self.pos < n {
            return Err(IoError::TruncatedFile { what });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn read_motion_sequence(path: &Path) -> Result<MotionSequence, IoError> {
    let bytes = fs::read(path).map_err(IoError::at(path))?;
    MotionSequence::from_bytes(&bytes)
}

pub fn write_motion_sequence(path: &Path, seq: &MotionSequence) -> Result<(), IoError> {
    fs::write(path, seq.to_bytes()?).map_err(IoError::at(path))
}
