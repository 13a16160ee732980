//! Bit-packed spike streams.
//!
//! Storage mirrors the on-disk payload: frames in time order, each frame
//! row-major from the top-left pixel, eight pixels per byte with the least
//! significant bit holding the lowest pixel index. Padding bits of a frame's
//! last byte (when `width * height` is not a multiple of 8) are always zero.

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct SpikeStream {
    width: usize,
    height: usize,
    length: usize,
    bits: Vec<u8>,
}

impl std::fmt::Debug for SpikeStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpikeStream")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("length", &self.length)
            .field("bytes", &self.bits.len())
            .finish()
    }
}

/// Bytes needed for one frame of `pixels` spikes.
pub fn frame_bytes(pixels: usize) -> usize {
    pixels.div_ceil(8)
}

impl SpikeStream {
    pub fn zeros(width: usize, height: usize, length: usize) -> Self {
        Self {
            width,
            height,
            length,
            bits: vec![0; length * frame_bytes(width * height)],
        }
    }

    /// Wraps a packed payload. Padding bits are cleared.
    pub fn from_packed(
        width: usize,
        height: usize,
        length: usize,
        mut bits: Vec<u8>,
    ) -> Result<Self> {
        let pixels = width
            .checked_mul(height)
            .ok_or_else(|| Error::dim("width * height overflows"))?;
        let fb = frame_bytes(pixels);
        let expected = fb
            .checked_mul(length)
            .ok_or_else(|| Error::dim("stream size overflows"))?;
        if bits.len() != expected {
            return Err(Error::dim(format!(
                "{width}x{height}x{length} stream needs {expected} bytes, got {}",
                bits.len()
            )));
        }
        let pad = fb * 8 - pixels;
        if pad > 0 {
            let keep = 0xffu8 >> pad;
            for frame in bits.chunks_mut(fb) {
                frame[fb - 1] &= keep;
            }
        }
        Ok(Self {
            width,
            height,
            length,
            bits,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        length: usize,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Self {
        let mut b = SpikeStreamBuilder::new(width, height, length);
        for t in 0..length {
            for y in 0..height {
                for x in 0..width {
                    if f(x, y, t) {
                        b.set(x, y, t);
                    }
                }
            }
        }
        b.build()
    }

    /// Builds a stream from one sample per `(t, y, x)` in that nesting order.
    pub fn from_bools(
        width: usize,
        height: usize,
        length: usize,
        samples: &[bool],
    ) -> Result<Self> {
        let n = width * height;
        if samples.len() != n * length {
            return Err(Error::dim(format!(
                "expected {} samples, got {}",
                n * length,
                samples.len()
            )));
        }
        let fb = frame_bytes(n);
        let mut bits = vec![0u8; fb * length];
        for (t, frame) in samples.chunks(n.max(1)).enumerate().take(length) {
            for (p, &s) in frame.iter().enumerate() {
                if s {
                    bits[t * fb + p / 8] |= 1 << (p % 8);
                }
            }
        }
        Ok(Self {
            width,
            height,
            length,
            bits,
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        let n = self.pixels();
        let mut out = Vec::with_capacity(n * self.length);
        for t in 0..self.length {
            out.extend((0..n).map(|p| self.bit(p, t)));
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn frame_bytes(&self) -> usize {
        frame_bytes(self.pixels())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bits
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let fb = self.frame_bytes();
        &self.bits[t * fb..(t + 1) * fb]
    }

    #[inline]
    pub(crate) fn bit(&self, pixel: usize, t: usize) -> bool {
        let byte = self.bits[t * self.frame_bytes() + pixel / 8];
        byte >> (pixel % 8) & 1 == 1
    }

    pub fn get(&self, x: usize, y: usize, t: usize) -> Result<bool> {
        if x >= self.width || y >= self.height || t >= self.length {
            return Err(Error::OutOfBounds {
                x,
                y,
                t,
                width: self.width,
                height: self.height,
                length: self.length,
            });
        }
        Ok(self.bit(y * self.width + x, t))
    }

    /// Intersects `[start, start + window)` with `[0, length)`.
    pub fn clip_window(&self, start: i64, window: usize) -> Result<(usize, usize)> {
        let end = start.saturating_add(window as i64);
        let lo = start.max(0);
        let hi = end.min(self.length as i64);
        if window == 0 || lo >= hi {
            return Err(Error::EmptyWindow {
                start,
                end,
                length: self.length,
            });
        }
        Ok((lo as usize, hi as usize))
    }

    /// Number of spikes of one pixel in `[t0, t1)`; bounds must be valid.
    #[inline]
    pub(crate) fn count_pixel(&self, pixel: usize, t0: usize, t1: usize) -> u32 {
        let fb = self.frame_bytes();
        let (byte, shift) = (pixel / 8, pixel % 8);
        let mut idx = t0 * fb + byte;
        let mut n = 0u32;
        for _ in t0..t1 {
            n += u32::from(self.bits[idx] >> shift & 1);
            idx += fb;
        }
        n
    }

    /// Fraction of ticks with a spike at `(x, y)` over `[t_start, t_start + window)`,
    /// clipped to the stream.
    pub fn spike_density(&self, x: usize, y: usize, t_start: i64, window: usize) -> Result<f64> {
        if x >= self.width || y >= self.height {
            return Err(Error::OutOfBounds {
                x,
                y,
                t: t_start.max(0) as usize,
                width: self.width,
                height: self.height,
                length: self.length,
            });
        }
        let (t0, t1) = self.clip_window(t_start, window)?;
        let n = self.count_pixel(y * self.width + x, t0, t1);
        Ok(f64::from(n) / (t1 - t0) as f64)
    }

    /// Per-pixel spike counts over `[t0, t1)`, row-major.
    pub fn count_map(&self, t0: usize, t1: usize) -> Vec<u32> {
        let n = self.pixels();
        let mut counts = vec![0u32; n];
        for t in t0..t1.min(self.length) {
            for (b, &byte) in self.frame(t).iter().enumerate() {
                let mut v = byte;
                while v != 0 {
                    let bit = v.trailing_zeros() as usize;
                    counts[b * 8 + bit] += 1;
                    v &= v - 1;
                }
            }
        }
        counts
    }

    /// Ticks at which pixel `(x, y)` fired, ascending.
    pub fn spike_times(&self, x: usize, y: usize) -> Vec<usize> {
        let p = y * self.width + x;
        (0..self.length).filter(|&t| self.bit(p, t)).collect()
    }

    /// Fraction of pixels that fired in frame `t`.
    pub fn frame_density(&self, t: usize) -> f64 {
        let ones: u32 = self.frame(t).iter().map(|b| b.count_ones()).sum();
        f64::from(ones) / self.pixels().max(1) as f64
    }

    /// Extracts a spatial window `[x0, x0 + width) x [y0, y0 + height)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::dim(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut b = SpikeStreamBuilder::new(width, height, self.length);
        for t in 0..self.length {
            for y in 0..height {
                for x in 0..width {
                    if self.bit((y0 + y) * self.width + x0 + x, t) {
                        b.set(x, y, t);
                    }
                }
            }
        }
        Ok(b.build())
    }
}

/// Mutable staging area for a [`SpikeStream`].
#[derive(Debug, Clone)]
pub struct SpikeStreamBuilder {
    inner: SpikeStream,
}

impl SpikeStreamBuilder {
    pub fn new(width: usize, height: usize, length: usize) -> Self {
        Self {
            inner: SpikeStream::zeros(width, height, length),
        }
    }

    /// Panics when out of range.
    pub fn set(&mut self, x: usize, y: usize, t: usize) {
        let s = &mut self.inner;
        assert!(
            x < s.width && y < s.height && t < s.length,
            "spike index out of range"
        );
        let p = y * s.width + x;
        let fb = s.frame_bytes();
        s.bits[t * fb + p / 8] |= 1 << (p % 8);
    }

    /// Writes the eight pixels `8 * byte .. 8 * byte + 8` of frame `t` at once.
    pub(crate) fn set_byte(&mut self, byte: usize, t: usize, value: u8) {
        let fb = self.inner.frame_bytes();
        self.inner.bits[t * fb + byte] = value;
    }

    pub fn build(self) -> SpikeStream {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_stream_reads_zero() {
        let s = SpikeStream::zeros(4, 3, 5);
        assert!(!s.get(3, 2, 4).unwrap());
        assert!(!s.get(0, 0, 0).unwrap());
    }

    #[test]
    fn single_bit() {
        let mut b = SpikeStreamBuilder::new(4, 2, 3);
        b.set(0, 0, 0);
        let s = b.build();
        assert!(s.get(0, 0, 0).unwrap());
        assert!(!s.get(1, 0, 0).unwrap());
        assert!(!s.get(0, 0, 1).unwrap());
    }

    #[test]
    fn out_of_range_is_error() {
        let s = SpikeStream::zeros(4, 2, 3);
        assert!(matches!(s.get(4, 0, 0), Err(Error::OutOfBounds { .. })));
        assert!(matches!(s.get(0, 2, 0), Err(Error::OutOfBounds { .. })));
        assert!(matches!(s.get(0, 0, 3), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn storage_size() {
        let s = SpikeStream::zeros(400, 250, 7);
        assert_eq!(s.as_bytes().len(), 7 * 400 * 250 / 8);
    }

    #[test]
    fn density_examples() {
        let periodic = SpikeStream::from_fn(1, 1, 64, |_, _, t| t % 4 == 3);
        assert_eq!(periodic.spike_density(0, 0, 0, 32).unwrap(), 0.25);
        let ones = SpikeStream::from_fn(2, 2, 10, |_, _, _| true);
        assert_eq!(ones.spike_density(1, 1, 3, 4).unwrap(), 1.0);
        let zeros = SpikeStream::zeros(2, 2, 10);
        assert_eq!(zeros.spike_density(1, 0, 0, 10).unwrap(), 0.0);
    }

    #[test]
    fn density_clips_and_rejects_empty() {
        let ones = SpikeStream::from_fn(1, 1, 10, |_, _, _| true);
        assert_eq!(ones.spike_density(0, 0, -5, 8).unwrap(), 1.0);
        assert!(matches!(
            ones.spike_density(0, 0, 10, 4),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            ones.spike_density(0, 0, -8, 8),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn padding_bits_are_cleared() {
        let s = SpikeStream::from_packed(3, 1, 2, vec![0xff, 0xff]).unwrap();
        assert_eq!(s.as_bytes(), &[0x07, 0x07]);
        assert_eq!(s.count_map(0, 2), vec![2, 2, 2]);
    }

    #[test]
    fn crop_keeps_bits() {
        let s = SpikeStream::from_fn(5, 4, 3, |x, y, t| (x + y + t) % 3 == 0);
        let c = s.crop(1, 1, 3, 2).unwrap();
        for t in 0..3 {
            for y in 0..2 {
                for x in 0..3 {
                    assert_eq!(c.get(x, y, t).unwrap(), s.get(x + 1, y + 1, t).unwrap());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(w in 1usize..6, h in 1usize..6, len in 1usize..5, seed in any::<u64>()) {
            let w8 = w * 8;
            let n = w8 * h * len / 8;
            let bytes: Vec<u8> = (0..n).map(|i| (seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(i as u32 % 64) >> 7) as u8 ^ i as u8).collect();
            let s = SpikeStream::from_packed(w8, h, len, bytes.clone()).unwrap();
            let again = SpikeStream::from_bools(w8, h, len, &s.to_bools()).unwrap();
            prop_assert_eq!(again.as_bytes(), &bytes[..]);
        }

        #[test]
        fn density_is_mean_of_samples(bits in proptest::collection::vec(any::<bool>(), 40), start in 0i64..30, w in 1usize..20) {
            let s = SpikeStream::from_bools(1, 1, 40, &bits).unwrap();
            let d = s.spike_density(0, 0, start, w).unwrap();
            let end = (start as usize + w).min(40);
            let ones = (start as usize..end).filter(|&t| s.get(0, 0, t).unwrap()).count();
            prop_assert_eq!(d, ones as f64 / (end - start as usize) as f64);
        }
    }
}
