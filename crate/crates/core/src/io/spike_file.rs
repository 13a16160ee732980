//! Spike stream files and headerless camera dumps.
//!
//! A spike file is a 36-byte little-endian header followed by the packed
//! payload exactly as [`SpikeStream`] stores it:
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 8    | magic `SPIKEV01`       |
//! | 8      | 4    | width                  |
//! | 12     | 4    | height                 |
//! | 16     | 8    | length (ticks)         |
//! | 24     | 8    | tick duration, ns      |
//! | 32     | 4    | flags, must be zero    |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::{frame_bytes, SpikeStream};
use crate::wavelet::PYRAMID_ALIGN;

pub const SPIKE_MAGIC: [u8; 8] = *b"SPIKEV01";
const MAGIC_PREFIX: &[u8] = b"SPIKEV";
pub const HEADER_LEN: usize = 36;
pub const DEFAULT_TICK_NS: u64 = 50_000;

/// Sensor size of the real camera's raw dumps.
pub const RAW_WIDTH: usize = 400;
pub const RAW_HEIGHT: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeFileHeader {
    pub width: u32,
    pub height: u32,
    pub length: u64,
    pub tick_nanoseconds: u64,
    pub flags: u32,
}

impl SpikeFileHeader {
    pub fn for_stream(stream: &SpikeStream, tick_nanoseconds: u64) -> Result<Self> {
        let narrow = |v: usize, what: &str| {
            u32::try_from(v)
                .map_err(|_| Error::format(format!("{what} {v} does not fit in 32 bits")))
        };
        Ok(Self {
            width: narrow(stream.width(), "width")?,
            height: narrow(stream.height(), "height")?,
            length: stream.length() as u64,
            tick_nanoseconds,
            flags: 0,
        })
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..8].copy_from_slice(&SPIKE_MAGIC);
        b[8..12].copy_from_slice(&self.width.to_le_bytes());
        b[12..16].copy_from_slice(&self.height.to_le_bytes());
        b[16..24].copy_from_slice(&self.length.to_le_bytes());
        b[24..32].copy_from_slice(&self.tick_nanoseconds.to_le_bytes());
        b[32..36].copy_from_slice(&self.flags.to_le_bytes());
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(format!(
                "spike file header needs {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if bytes[..8] != SPIKE_MAGIC {
            if bytes.starts_with(MAGIC_PREFIX) {
                return Err(Error::format(format!(
                    "unsupported spike file version {:?}",
                    String::from_utf8_lossy(&bytes[6..8])
                )));
            }
            return Err(Error::format("not a spike file (bad magic)"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let header = Self {
            width: u32_at(8),
            height: u32_at(12),
            length: u64_at(16),
            tick_nanoseconds: u64_at(24),
            flags: u32_at(32),
        };
        if header.flags != 0 {
            return Err(Error::format(format!(
                "unknown header flags {:#x}",
                header.flags
            )));
        }
        if header.tick_nanoseconds == 0 {
            return Err(Error::format("tick duration is zero"));
        }
        Ok(header)
    }

    /// Payload size in bytes, or an error if it overflows.
    pub fn payload_len(&self) -> Result<usize> {
        let overflow = || Error::format("stream dimensions overflow");
        let pixels = (self.width as usize)
            .checked_mul(self.height as usize)
            .ok_or_else(overflow)?;
        usize::try_from(self.length)
            .ok()
            .and_then(|l| frame_bytes(pixels).checked_mul(l))
            .ok_or_else(overflow)
    }
}

pub fn encode_stream(stream: &SpikeStream, tick_nanoseconds: u64) -> Result<Vec<u8>> {
    let header = SpikeFileHeader::for_stream(stream, tick_nanoseconds)?;
    let mut out = Vec::with_capacity(HEADER_LEN + stream.as_bytes().len());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(stream.as_bytes());
    Ok(out)
}

pub fn decode_stream(mut bytes: Vec<u8>) -> Result<(SpikeFileHeader, SpikeStream)> {
    let header = SpikeFileHeader::parse(&bytes)?;
    let expected = header.payload_len()?;
    let got = bytes.len() - HEADER_LEN;
    if got != expected {
        return Err(Error::format(format!(
            "payload is {got} bytes, header implies {expected}"
        )));
    }
    bytes.drain(..HEADER_LEN);
    let stream = SpikeStream::from_packed(
        header.width as usize,
        header.height as usize,
        header.length as usize,
        bytes,
    )?;
    Ok((header, stream))
}

pub fn write_stream_with_tick(
    stream: &SpikeStream,
    tick_nanoseconds: u64,
    path: &Path,
) -> Result<()> {
    fs::write(path, encode_stream(stream, tick_nanoseconds)?).map_err(|e| Error::io(path, e))
}

pub fn write_stream(stream: &SpikeStream, path: &Path) -> Result<()> {
    write_stream_with_tick(stream, DEFAULT_TICK_NS, path)
}

pub fn read_stream_with_header(path: &Path) -> Result<(SpikeFileHeader, SpikeStream)> {
    decode_stream(fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_stream(path: &Path) -> Result<SpikeStream> {
    read_stream_with_header(path).map(|(_, s)| s)
}

/// Bit order of pixels within a byte of a raw dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitOrder {
    /// Lowest pixel index in the least significant bit.
    #[default]
    Lsb,
    Msb,
}

/// Parses a headerless dump of `width x height` frames. The length is
/// inferred from the byte count, which must be a whole number of frames.
pub fn decode_raw(
    mut bytes: Vec<u8>,
    width: usize,
    height: usize,
    order: BitOrder,
) -> Result<SpikeStream> {
    let fb = frame_bytes(width * height);
    if fb == 0 || bytes.len() % fb != 0 {
        return Err(Error::format(format!(
            "{} bytes is not a whole number of {width}x{height} frames",
            bytes.len()
        )));
    }
    if order == BitOrder::Msb {
        bytes.iter_mut().for_each(|b| *b = b.reverse_bits());
    }
    let length = bytes.len() / fb;
    SpikeStream::from_packed(width, height, length, bytes)
}

/// Centered crop to the largest size the restoration pyramid accepts.
pub fn crop_for_pyramid(stream: &SpikeStream) -> Result<SpikeStream> {
    let (w, h) = (stream.width(), stream.height());
    let (cw, ch) = (w - w % PYRAMID_ALIGN, h - h % PYRAMID_ALIGN);
    if cw == 0 || ch == 0 {
        return Err(Error::dim(format!("{w}x{h} is too small to crop")));
    }
    if (cw, ch) == (w, h) {
        return Ok(stream.clone());
    }
    stream.crop((w - cw) / 2, (h - ch) / 2, cw, ch)
}

/// Reads a raw camera dump. With `crop` set the stream is center-cropped so
/// both sides are multiples of 8 (400x250 becomes 400x248, dropping the
/// first and last rows).
pub fn import_raw(
    path: &Path,
    width: usize,
    height: usize,
    order: BitOrder,
    crop: bool,
) -> Result<SpikeStream> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let stream = decode_raw(bytes, width, height, order)?;
    if crop {
        crop_for_pyramid(&stream)
    } else {
        Ok(stream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lsb_first_payload() {
        let a = SpikeStream::from_fn(8, 1, 1, |x, _, _| x == 0);
        assert_eq!(
            &encode_stream(&a, DEFAULT_TICK_NS).unwrap()[HEADER_LEN..],
            &[0x01]
        );
        let b = SpikeStream::from_fn(8, 1, 1, |x, _, _| x == 7);
        assert_eq!(
            &encode_stream(&b, DEFAULT_TICK_NS).unwrap()[HEADER_LEN..],
            &[0x80]
        );
    }

    #[test]
    fn header_layout() {
        let s = SpikeStream::zeros(3, 2, 5);
        let bytes = encode_stream(&s, DEFAULT_TICK_NS).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 5);
        assert_eq!(&bytes[..8], b"SPIKEV01");
        assert_eq!(&bytes[8..12], &[3, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[2, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &[5, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            u64::from_le_bytes(bytes[24..32].try_into().unwrap()),
            50_000
        );
        assert_eq!(&bytes[32..36], &[0; 4]);
    }

    #[test]
    fn rejects_malformed() {
        let s = SpikeStream::from_fn(5, 3, 4, |x, y, t| (x + y + t) % 2 == 0);
        let good = encode_stream(&s, DEFAULT_TICK_NS).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_stream(bad), Err(Error::Format(m)) if m.contains("magic")));
        let mut v2 = good.clone();
        v2[7] = b'2';
        assert!(matches!(decode_stream(v2), Err(Error::Format(m)) if m.contains("version")));
        assert!(decode_stream(good[..good.len() - 1].to_vec()).is_err());
        assert!(decode_stream(good[..20].to_vec()).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(decode_stream(extra).is_err());
        let mut flags = good.clone();
        flags[32] = 1;
        assert!(decode_stream(flags).is_err());
        let mut huge = good;
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_stream(huge), Err(Error::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.dat");
        let s = SpikeStream::from_fn(13, 7, 9, |x, y, t| (x * y + t) % 3 == 1);
        write_stream_with_tick(&s, 25_000, &path).unwrap();
        let (h, back) = read_stream_with_header(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(h.tick_nanoseconds, 25_000);
        assert!(matches!(
            read_stream(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn raw_import_and_crop() {
        let s = SpikeStream::from_fn(RAW_WIDTH, RAW_HEIGHT, 3, |x, y, t| (x + 2 * y + t) % 5 == 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.dat");
        fs::write(&path, s.as_bytes()).unwrap();
        let full = import_raw(&path, RAW_WIDTH, RAW_HEIGHT, BitOrder::Lsb, false).unwrap();
        assert_eq!(full, s);
        let cropped = import_raw(&path, RAW_WIDTH, RAW_HEIGHT, BitOrder::Lsb, true).unwrap();
        assert_eq!(
            (cropped.width(), cropped.height(), cropped.length()),
            (400, 248, 3)
        );
        assert_eq!(cropped.get(7, 0, 2).unwrap(), s.get(7, 1, 2).unwrap());
        assert_eq!(
            cropped.get(399, 247, 1).unwrap(),
            s.get(399, 248, 1).unwrap()
        );
        assert!(decode_raw(vec![0; 7], 8, 2, BitOrder::Lsb).is_err());
    }

    #[test]
    fn msb_raw_order() {
        let s = decode_raw(vec![0x80], 8, 1, BitOrder::Msb).unwrap();
        assert!(s.get(0, 0, 0).unwrap());
        assert!(!s.get(7, 0, 0).unwrap());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            w in 1usize..20, h in 1usize..10, len in 0usize..12, seed in any::<u64>(),
        ) {
            let s = SpikeStream::from_fn(w, h, len, |x, y, t| {
                crate::rng::split_seed(seed, (x + w * (y + h * t)) as u64) & 1 == 1
            });
            let (_, back) = decode_stream(encode_stream(&s, DEFAULT_TICK_NS).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
