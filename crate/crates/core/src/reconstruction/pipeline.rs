//! Recurrent fuse, denoise and refine restoration.

use ndarray::Array2;

use super::adaptive::{
    ast_window, bootstrap_density, correct_fixed_pattern, windowed_transform, WindowMode,
};
use super::denoise::{ConstantBlend, Denoiser, Refiner, SoftThreshold};
use super::fusion::{temporal_fuse, DifferenceMask, FusionMask};
use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::{IntensityImage, Plane};
use crate::stream::SpikeStream;
use crate::wavelet::{WaveletPyramid, LEVELS, PYRAMID_ALIGN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestorerParams {
    pub fusion_tau: f64,
    pub fusion_floor: f64,
    /// Soft-threshold multiplier on the per-level noise estimate.
    pub denoise_k: f64,
    pub refine_beta: f64,
    pub bootstrap_window: usize,
    pub window_mode: WindowMode,
    /// Replaces the adaptive window with a fixed length when set.
    pub fixed_window: Option<usize>,
}

impl Default for RestorerParams {
    fn default() -> Self {
        Self {
            fusion_tau: 0.2,
            fusion_floor: 0.125,
            denoise_k: 1.0,
            refine_beta: 0.15,
            bootstrap_window: 64,
            window_mode: WindowMode::Centered,
            fixed_window: None,
        }
    }
}

impl RestorerParams {
    pub fn validate(&self) -> Result<()> {
        DifferenceMask::new(self.fusion_tau, self.fusion_floor)?;
        if !(self.denoise_k >= 0.0 && self.denoise_k.is_finite()) {
            return Err(Error::domain(format!(
                "denoise_k must be >= 0, got {}",
                self.denoise_k
            )));
        }
        if !(0.0..=1.0).contains(&self.refine_beta) {
            return Err(Error::domain(format!(
                "refine_beta must lie in [0, 1], got {}",
                self.refine_beta
            )));
        }
        if self.bootstrap_window == 0 || self.fixed_window == Some(0) {
            return Err(Error::domain("windows must be at least one tick"));
        }
        Ok(())
    }
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RestorerState {
    /// Fusion output of the previous step; `None` before the first step.
    pub prev_fused: Option<WaveletPyramid>,
    pub density_map: Array2<f64>,
    pub last_tick: Option<usize>,
}

/// Every intermediate image of one step. Planes are unclamped.
#[derive(Debug, Clone)]
pub struct StageOutputs {
    pub tick: usize,
    pub adaptive: IntensityImage,
    pub corrected: IntensityImage,
    pub fused: Plane,
    pub denoised: Plane,
    pub output: IntensityImage,
    /// Fusion masks, finest level first.
    pub masks: [Plane; LEVELS],
}

/// Stateful restorer over one stream.
pub struct Restorer<'a> {
    stream: &'a SpikeStream,
    calib: &'a CalibrationData,
    params: RestorerParams,
    mask: Box<dyn FusionMask + 'a>,
    denoiser: Box<dyn Denoiser + 'a>,
    refiner: Box<dyn Refiner + 'a>,
    state: RestorerState,
}

impl<'a> Restorer<'a> {
    pub fn new(
        stream: &'a SpikeStream,
        calib: &'a CalibrationData,
        params: RestorerParams,
    ) -> Result<Self> {
        params.validate()?;
        let (w, h) = (stream.width(), stream.height());
        if calib.dims() != (w, h) {
            return Err(Error::dim(format!(
                "stream is {w}x{h}, calibration is {}x{}",
                calib.width(),
                calib.height()
            )));
        }
        if w % PYRAMID_ALIGN != 0 || h % PYRAMID_ALIGN != 0 {
            return Err(Error::dim(format!(
                "restoration needs dimensions divisible by {PYRAMID_ALIGN}, got {w}x{h}"
            )));
        }
        let density_map = bootstrap_density(stream, params.bootstrap_window)?;
        Ok(Self {
            stream,
            calib,
            params,
            mask: Box::new(DifferenceMask::new(params.fusion_tau, params.fusion_floor)?),
            denoiser: Box::new(SoftThreshold {
                k: params.denoise_k,
            }),
            refiner: Box::new(ConstantBlend {
                beta: params.refine_beta,
            }),
            state: RestorerState {
                prev_fused: None,
                density_map,
                last_tick: None,
            },
        })
    }

    pub fn with_mask(mut self, mask: impl FusionMask + 'a) -> Self {
        self.mask = Box::new(mask);
        self
    }

    pub fn with_denoiser(mut self, denoiser: impl Denoiser + 'a) -> Self {
        self.denoiser = Box::new(denoiser);
        self
    }

    pub fn with_refiner(mut self, refiner: impl Refiner + 'a) -> Self {
        self.refiner = Box::new(refiner);
        self
    }

    pub fn params(&self) -> &RestorerParams {
        &self.params
    }

    pub fn state(&self) -> &RestorerState {
        &self.state
    }

    /// Restores the frame at tick `t`; ticks must strictly increase.
    pub fn step(&mut self, t: usize) -> Result<StageOutputs> {
        if let Some(last) = self.state.last_tick {
            if t <= last {
                return Err(Error::domain(format!(
                    "ticks must strictly increase, got {t} after {last}"
                )));
            }
        }
        let fixed = self.params.fixed_window;
        let adaptive = windowed_transform(
            self.stream,
            t,
            &mut self.state.density_map,
            self.params.window_mode,
            |d| fixed.map_or_else(|| ast_window(d), Ok),
        )?;
        let corrected = correct_fixed_pattern(&adaptive, self.calib)?;
        let current = WaveletPyramid::build(corrected.view())?;
        let prev = self.state.prev_fused.as_ref().unwrap_or(&current);
        let (fused, masks) = temporal_fuse(&current, prev, self.mask.as_ref())?;
        let denoised = self.denoiser.denoise(&fused);
        let refined = self.refiner.refine(&fused, &denoised)?;
        let output = IntensityImage::from_plane_clamped(&refined.collapse());
        let stages = StageOutputs {
            tick: t,
            adaptive,
            corrected,
            fused: fused.collapse(),
            denoised: denoised.collapse(),
            output,
            masks,
        };
        self.state.prev_fused = Some(fused);
        self.state.last_tick = Some(t);
        Ok(stages)
    }
}

/// Restores one image per requested tick.
pub fn restore_recurrent(
    stream: &SpikeStream,
    calib: &CalibrationData,
    params: &RestorerParams,
    ticks: &[usize],
) -> Result<Vec<IntensityImage>> {
    restore_stages(stream, calib, params, ticks).map(|v| v.into_iter().map(|s| s.output).collect())
}

/// Like [`restore_recurrent`] but keeps every intermediate stage.
pub fn restore_stages(
    stream: &SpikeStream,
    calib: &CalibrationData,
    params: &RestorerParams,
    ticks: &[usize],
) -> Result<Vec<StageOutputs>> {
    if ticks.is_empty() {
        return Err(Error::domain("no ticks requested"));
    }
    let mut restorer = Restorer::new(stream, calib, *params)?;
    ticks.iter().map(|&t| restorer.step(t)).collect()
}
