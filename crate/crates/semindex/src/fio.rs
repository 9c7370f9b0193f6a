//! Offset-tracking binary reader/writer for the on-disk formats.
//!
//! Every file starts with the magic `SIDX`, a format version and a kind byte.
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SIDX";
pub const VERSION: u32 = 1;

pub const KIND_FEATURES: u8 = 1;
pub const KIND_LABELS: u8 = 2;
pub const KIND_INDEX: u8 = 3;
pub const KIND_PQ: u8 = 4;

pub struct FmtReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> FmtReader<R> {
    pub fn new(inner: R) -> Self {
        FmtReader { inner, offset: 0 }
    }

    /// Byte offset of the next unread byte.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(Error::format(
                self.offset,
                "unexpected end of file (truncated payload)",
            )),
            Err(e) => Err(e.into()),
        }
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b)?;
        Ok(b[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.fill(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    /// Reads `count` f32 values into `out`.
    pub fn f32_into(&mut self, out: &mut Vec<f32>, count: usize) -> Result<()> {
        let mut buf = vec![0u8; count * 4];
        self.fill(&mut buf)?;
        out.reserve(count);
        for chunk in buf.chunks_exact(4) {
            out.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        Ok(())
    }

    /// Validates the common `SIDX | version | kind` header.
    pub fn header(&mut self, expected_kind: u8) -> Result<()> {
        let at = self.offset;
        let mut magic = [0u8; 4];
        self.fill(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::format(at, format!("bad magic {:?}", magic)));
        }
        let at = self.offset;
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::format(
                at,
                format!("unsupported format version {version}"),
            ));
        }
        let at = self.offset;
        let kind = self.u8()?;
        if kind != expected_kind {
            return Err(Error::format(
                at,
                format!("wrong file kind {kind}, expected {expected_kind}"),
            ));
        }
        Ok(())
    }

    /// Errors unless the stream is exhausted.
    pub fn expect_eof(&mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read_exact(&mut b) {
            Ok(()) => Err(Error::format(self.offset, "trailing bytes after payload")),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(()),
            Err(e) => Err(e.into()),
        }
    }
}

pub struct FmtWriter<W> {
    inner: W,
}

impl<W: Write> FmtWriter<W> {
    pub fn new(inner: W) -> Self {
        FmtWriter { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        Ok(())
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32_slice(&mut self, vs: &[f32]) -> Result<()> {
        for v in vs {
            self.f32(*v)?;
        }
        Ok(())
    }

    pub fn header(&mut self, kind: u8) -> Result<()> {
        self.bytes(&MAGIC)?;
        self.u32(VERSION)?;
        self.u8(kind)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Writes a file atomically: the payload goes to `<path>.tmp` first and is
/// renamed into place only after a successful flush, so a failed run never
/// leaves a partial file behind.
pub fn write_atomic(
    path: &std::path::Path,
    write: impl FnOnce(&mut FmtWriter<std::io::BufWriter<std::fs::File>>) -> Result<()>,
) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    let file = std::fs::File::create(&tmp)?;
    let mut w = FmtWriter::new(std::io::BufWriter::new(file));
    match write(&mut w).and_then(|()| w.flush()) {
        Ok(()) => {
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}
