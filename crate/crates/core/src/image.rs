//! Intensity images and sensor clock parameters.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Digital full-well value: one discharge corresponds to 255 intensity-ticks.
pub const MAX_INTENSITY: f64 = 255.0;

/// Default clock interval of the sensor readout (50 µs, 20 kHz).
pub const DEFAULT_TICK_SECONDS: f64 = 50e-6;

/// A raw 2-D real plane, `(rows, cols)` indexed. Used for wavelet subbands and
/// intermediate pipeline values that may leave the `[0, 255]` range.
pub type Plane = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub tick_seconds: f64,
    pub max_intensity: f64,
}

impl Default for ClockParams {
    fn default() -> Self {
        Self {
            tick_seconds: DEFAULT_TICK_SECONDS,
            max_intensity: MAX_INTENSITY,
        }
    }
}

impl ClockParams {
    pub fn new(tick_seconds: f64) -> Result<Self> {
        if !(tick_seconds > 0.0 && tick_seconds.is_finite()) {
            return Err(Error::domain(format!(
                "tick interval must be positive, got {tick_seconds}"
            )));
        }
        Ok(Self {
            tick_seconds,
            max_intensity: MAX_INTENSITY,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.tick_seconds)?;
        if self.max_intensity != MAX_INTENSITY {
            return Err(Error::domain(format!(
                "max_intensity must be 255, got {}",
                self.max_intensity
            )));
        }
        Ok(())
    }
}

/// Grayscale light-intensity image in digital units. Values are finite and
/// non-negative; restoration outputs additionally stay within `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    data: Array2<f64>,
}

impl IntensityImage {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain(format!(
                "intensity values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { data })
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let data = Array2::from_shape_vec((height, width), values)
            .map_err(|e| Error::dim(format!("{width}x{height} image: {e}")))?;
        Self::new(data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem((height, width), value))
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::new(Array2::from_shape_fn((height, width), |(y, x)| f(x, y)))
    }

    /// Clamps an arbitrary plane into `[0, 255]`; NaN becomes 0.
    pub fn from_plane_clamped(plane: &Plane) -> Self {
        let data = plane.mapv(|v| {
            if v.is_nan() {
                0.0
            } else {
                v.clamp(0.0, MAX_INTENSITY)
            }
        });
        Self { data }
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[(y, x)]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Row-major pixel values.
    pub fn pixels(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.mean().unwrap_or(0.0)
    }

    /// Multiplies every pixel by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.data.mapv(|v| v * factor))
    }
}
