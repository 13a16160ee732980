//! Spike-camera toolkit: bit-packed spike streams, a physics-based noise
//! simulator, fixed-pattern calibration, and image restoration ranging from
//! windowed spike counting to a recurrent wavelet-domain pipeline.
//!
//! Intensities are in digital units `[0, 255]`; one tick is one readout
//! clock (50 µs by default). Images are indexed `(x, y)` in the public API
//! and stored row-major as `(row, column)` arrays.

pub mod calibration;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod noise;
pub mod reconstruction;
pub mod rng;
pub mod simulator;
pub mod stream;
pub mod wavelet;

pub use calibration::{build_calibration, CalibrationData};
pub use error::{Error, Result};
pub use image::{ClockParams, IntensityImage, Plane, MAX_INTENSITY};
pub use noise::{truncation_distribution, NoiseConfig, TruncationDistribution};
pub use reconstruction::{restore_recurrent, Restorer, RestorerParams, RestorerState};
pub use simulator::{simulate, simulate_ideal, SimulationRequest, Source};
pub use stream::{SpikeStream, SpikeStreamBuilder};
pub use wavelet::{build_pyramid, collapse_pyramid, dwt_forward, dwt_inverse, WaveletPyramid};
