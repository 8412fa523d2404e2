//! Binary container shared by every filter kind.
//!
//! Layout: magic `ADBF`, format version (u16), kind tag (u8), then a
//! kind-specific parameter block of little-endian integers and `f64`s,
//! followed by the packed bit array(s).

use crate::bits::BitVector;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ADBF";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum FilterKind {
    Standard = 0x01,
    Learned = 0x02,
    Sandwiched = 0x03,
    Ada = 0x04,
    Disjoint = 0x05,
}

impl TryFrom<u8> for FilterKind {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        Ok(match tag {
            0x01 => FilterKind::Standard,
            0x02 => FilterKind::Learned,
            0x03 => FilterKind::Sandwiched,
            0x04 => FilterKind::Ada,
            0x05 => FilterKind::Disjoint,
            other => {
                return Err(Error::Decode(format!(
                    "unknown filter kind tag {other:#04x}"
                )))
            }
        })
    }
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: FilterKind) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.push(kind as u8);
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    /// Length in bits (u64) followed by the packed bytes.
    pub fn bits(&mut self, bv: &BitVector) -> &mut Self {
        self.u64(bv.len());
        self.buf.extend_from_slice(&bv.to_bytes());
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates the header and returns the reader positioned at the parameter block.
    pub fn open(buf: &'a [u8]) -> Result<(FilterKind, Self)> {
        if buf.len() < 7 || &buf[..4] != MAGIC {
            return Err(Error::Decode("missing ADBF magic".into()));
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "unsupported format version {version}"
            )));
        }
        let kind = FilterKind::try_from(buf[6])?;
        Ok((kind, Self { buf, pos: 7 }))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Decode("unexpected end of input".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bits(&mut self) -> Result<BitVector> {
        let len = self.u64()?;
        let n_bytes = usize::try_from(len.div_ceil(8))
            .map_err(|_| Error::Decode("bit vector too large".into()))?;
        let bytes = self.take(n_bytes)?;
        BitVector::from_bytes(len, bytes)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes after filter payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let mut w = Writer::new(FilterKind::Ada);
        w.u32(7).f64(0.25);
        let bytes = w.finish();
        assert_eq!(&bytes[..7], &[b'A', b'D', b'B', b'F', 1, 0, 0x04]);
        let (kind, mut r) = Reader::open(&bytes).unwrap();
        assert_eq!(kind, FilterKind::Ada);
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.f64().unwrap(), 0.25);
        r.finish().unwrap();
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(Reader::open(b"NOPE\x01\x00\x01").is_err());
        assert!(Reader::open(b"ADBF\x02\x00\x01").is_err());
        assert!(Reader::open(b"ADBF\x01\x00\x09").is_err());
        assert!(Reader::open(b"ADB").is_err());
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let bytes = Writer::new(FilterKind::Standard).finish();
        let (_, mut r) = Reader::open(&bytes).unwrap();
        assert!(r.u64().is_err());
    }
}
