//! Texture-from-playback (windowed spike count) and texture-from-interval
//! (inverse inter-spike interval) reconstructions.

use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};
use crate::stream::SpikeStream;

/// Start tick of a window of `len` ticks centered on `t`.
pub(crate) fn centered_start(t: usize, len: usize) -> i64 {
    t as i64 - (len / 2) as i64
}

/// `255 * count / window` over the window of `w` ticks centered on `t`,
/// clipped to the stream.
pub fn tfp(stream: &SpikeStream, t: usize, w: usize) -> Result<IntensityImage> {
    if w == 0 {
        return Err(Error::domain("TFP window must be at least one tick"));
    }
    let (t0, t1) = stream.clip_window(centered_start(t, w), w)?;
    let len = (t1 - t0) as f64;
    let counts = stream.count_map(t0, t1);
    IntensityImage::from_vec(
        stream.width(),
        stream.height(),
        counts
            .into_iter()
            .map(|c| MAX_INTENSITY * f64::from(c) / len)
            .collect(),
    )
}

/// `255 / ISI` where the ISI is taken between the last spike at or before
/// `t` and the first spike after it. When one side is missing the two
/// nearest spikes on the other side are used; pixels with fewer than two
/// spikes read 0.
pub fn tfi(stream: &SpikeStream, t: usize) -> Result<IntensityImage> {
    let len = stream.length();
    let t = t.min(len.saturating_sub(1));
    let values = (0..stream.pixels())
        .map(|p| {
            let mut before = (0..=t).rev().filter(|&s| s < len && stream.bit(p, s));
            let mut after = (t + 1..len).filter(|&s| stream.bit(p, s));
            let isi = match (before.next(), after.next()) {
                (Some(a), Some(b)) => Some(b - a),
                (Some(a), None) => before.next().map(|z| a - z),
                (None, Some(b)) => after.next().map(|c| c - b),
                (None, None) => None,
            };
            isi.map_or(0.0, |d| MAX_INTENSITY / d as f64)
        })
        .collect();
    IntensityImage::from_vec(stream.width(), stream.height(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::simulate_ideal;

    #[test]
    fn tfp_examples() {
        let periodic = SpikeStream::from_fn(2, 1, 100, |_, _, t| t % 4 == 0);
        assert!(tfp(&periodic, 50, 32).unwrap().pixels().all(|v| v == 63.75));
        let ones = SpikeStream::from_fn(2, 2, 40, |_, _, _| true);
        assert!(tfp(&ones, 3, 16).unwrap().pixels().all(|v| v == 255.0));
        let img = IntensityImage::filled(8, 1, 51.0).unwrap();
        let s = simulate_ideal(&img, 1.0, 200).unwrap();
        for t in [20, 77, 150] {
            assert!(tfp(&s, t, 40).unwrap().pixels().all(|v| v == 51.0));
        }
    }

    #[test]
    fn tfp_window_errors() {
        let s = SpikeStream::zeros(1, 1, 10);
        assert!(tfp(&s, 5, 0).is_err());
        assert!(matches!(tfp(&s, 40, 8), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn tfi_examples() {
        let ones = SpikeStream::from_fn(1, 1, 20, |_, _, _| true);
        assert_eq!(tfi(&ones, 7).unwrap().get(0, 0), 255.0);
        let pair = SpikeStream::from_fn(1, 1, 30, |_, _, t| t == 10 || t == 14);
        assert_eq!(tfi(&pair, 12).unwrap().get(0, 0), 63.75);
        assert_eq!(tfi(&pair, 14).unwrap().get(0, 0), 63.75);
        assert_eq!(tfi(&pair, 2).unwrap().get(0, 0), 63.75);
        assert_eq!(tfi(&pair, 25).unwrap().get(0, 0), 63.75);
        let silent = SpikeStream::zeros(1, 1, 30);
        assert_eq!(tfi(&silent, 12).unwrap().get(0, 0), 0.0);
        let single = SpikeStream::from_fn(1, 1, 30, |_, _, t| t == 3);
        assert_eq!(tfi(&single, 12).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn baselines_are_pure() {
        let s = SpikeStream::from_fn(4, 4, 64, |x, y, t| (x * 3 + y * 5 + t) % 7 == 0);
        assert_eq!(tfp(&s, 30, 16).unwrap(), tfp(&s, 30, 16).unwrap());
        assert_eq!(tfi(&s, 30).unwrap(), tfi(&s, 30).unwrap());
    }
}
