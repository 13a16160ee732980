//! Wavelet shrinkage and the fuse/denoise blend.

use crate::error::{Error, Result};
use crate::wavelet::WaveletPyramid;

/// Median absolute deviation to Gaussian sigma.
pub const MAD_SCALE: f64 = 0.6745;

/// Denoises a fused pyramid.
pub trait Denoiser: Send + Sync {
    fn denoise(&self, pyramid: &WaveletPyramid) -> WaveletPyramid;
}

/// Produces the output pyramid from the fused and denoised ones.
pub trait Refiner: Send + Sync {
    fn refine(&self, fused: &WaveletPyramid, denoised: &WaveletPyramid) -> Result<WaveletPyramid>;
}

pub fn soft_threshold(c: f64, lambda: f64) -> f64 {
    c.signum() * (c.abs() - lambda).max(0.0)
}

/// Median of absolute values; 0 for an empty input.
pub fn median_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().map(|c| c.abs()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Soft-thresholds every detail band with `lambda = k * median(|HH|) / 0.6745`,
/// the median taken per level. LL passes through untouched.
pub fn wavelet_denoise(pyramid: &WaveletPyramid, k: f64) -> Result<WaveletPyramid> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::domain(format!(
            "threshold multiplier must be >= 0, got {k}"
        )));
    }
    let mut out = pyramid.clone();
    // The stored LL is the only approximation band, so thresholding the
    // coarse level first carries its result into every finer reconstruction.
    for d in out.details.iter_mut().rev() {
        let lambda = k * median_abs(d.hh.iter()) / MAD_SCALE;
        if lambda == 0.0 {
            continue;
        }
        for band in d.bands_mut() {
            band.mapv_inplace(|c| soft_threshold(c, lambda));
        }
    }
    Ok(out)
}

/// `beta * fused + (1 - beta) * denoised`.
pub fn refine(
    fused: &WaveletPyramid,
    denoised: &WaveletPyramid,
    beta: f64,
) -> Result<WaveletPyramid> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!(
            "refine beta must lie in [0, 1], got {beta}"
        )));
    }
    fused.zip_with(denoised, |f, d| beta * f + (1.0 - beta) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftThreshold {
    pub k: f64,
}

impl Denoiser for SoftThreshold {
    fn denoise(&self, pyramid: &WaveletPyramid) -> WaveletPyramid {
        wavelet_denoise(pyramid, self.k).expect("k validated at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBlend {
    pub beta: f64,
}

impl Refiner for ConstantBlend {
    fn refine(&self, fused: &WaveletPyramid, denoised: &WaveletPyramid) -> Result<WaveletPyramid> {
        refine(fused, denoised, self.beta)
    }
}
