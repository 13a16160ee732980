//! Density-adaptive spike windows and the fixed-pattern inverse model.

use ndarray::{Array2, Zip};

use super::baseline::centered_start;
use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};
use crate::stream::SpikeStream;

pub const MIN_AST_WINDOW: usize = 8;
pub const MAX_AST_WINDOW: usize = 256;

/// Window length for a pixel of the given spike density:
/// `floor(257 - 249 / (1 + exp(-75 * density + 7.5)))`, in `[8, 256]`.
/// Dark pixels get long windows, bright pixels short ones.
pub fn ast_window(density: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::domain(format!(
            "spike density must lie in [0, 1], got {density}"
        )));
    }
    let l = (-249.0 / (1.0 + (-75.0 * density + 7.5).exp()) + 257.0).floor();
    Ok(l as usize)
}

/// Where the window of a time step sits relative to the step's tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// `[t - l/2, t + l/2)`, clipped at the stream ends.
    #[default]
    Centered,
    /// `[t + 1 - l, t + 1)`: only past and present ticks, for streaming use.
    Causal,
}

impl WindowMode {
    fn start(self, t: usize, len: usize) -> i64 {
        match self {
            WindowMode::Centered => centered_start(t, len),
            WindowMode::Causal => t as i64 + 1 - len as i64,
        }
    }
}

/// Per-pixel spike density over `[0, window)`, used to seed adaptive windows.
pub fn bootstrap_density(stream: &SpikeStream, window: usize) -> Result<Array2<f64>> {
    let (t0, t1) = stream.clip_window(0, window)?;
    let len = (t1 - t0) as f64;
    let counts = stream.count_map(t0, t1);
    Ok(Array2::from_shape_vec(
        (stream.height(), stream.width()),
        counts.into_iter().map(|c| f64::from(c) / len).collect(),
    )
    .expect("shape"))
}

/// Windowed mean of spikes with a per-pixel window length.
///
/// `window_len(density)` chooses each pixel's window from the current
/// density map; the map is then moved halfway toward the density measured
/// in that window.
pub fn windowed_transform(
    stream: &SpikeStream,
    t: usize,
    density: &mut Array2<f64>,
    mode: WindowMode,
    window_len: impl Fn(f64) -> Result<usize>,
) -> Result<IntensityImage> {
    if t >= stream.length() {
        return Err(Error::domain(format!(
            "tick {t} beyond stream of length {}",
            stream.length()
        )));
    }
    if density.dim() != (stream.height(), stream.width()) {
        return Err(Error::dim("density map does not match the stream"));
    }
    let mut out = Array2::zeros(density.dim());
    let w = stream.width();
    for ((y, x), d) in density.indexed_iter_mut() {
        let len = window_len(d.clamp(0.0, 1.0))?;
        let (t0, t1) = stream.clip_window(mode.start(t, len), len)?;
        let rate = f64::from(stream.count_pixel(y * w + x, t0, t1)) / (t1 - t0) as f64;
        out[(y, x)] = MAX_INTENSITY * rate;
        *d = 0.5 * *d + 0.5 * rate;
    }
    IntensityImage::new(out)
}

/// Adaptive spike transformation `A_t` at tick `t`.
pub fn adaptive_transform(
    stream: &SpikeStream,
    t: usize,
    density: &mut Array2<f64>,
    mode: WindowMode,
) -> Result<IntensityImage> {
    windowed_transform(stream, t, density, mode, ast_window)
}

/// Inverts the fixed-pattern part of the imaging model. A pixel firing at
/// rate `r = A / 255` spikes per tick has `(L + L_d) / Q_r = r`, so
/// `L = r * Q_r - L_d`, clamped to `[0, 255]`.
pub fn correct_fixed_pattern(
    adaptive: &IntensityImage,
    calib: &CalibrationData,
) -> Result<IntensityImage> {
    if adaptive.dims() != calib.dims() {
        return Err(Error::dim(format!(
            "image is {:?}, calibration is {:?}",
            adaptive.dims(),
            calib.dims()
        )));
    }
    let out = Zip::from(adaptive.as_array())
        .and(&calib.q_r)
        .and(&calib.l_d)
        .map_collect(|&a, &q, &ld| (a / MAX_INTENSITY * q - ld).clamp(0.0, MAX_INTENSITY));
    IntensityImage::new(out)
}
