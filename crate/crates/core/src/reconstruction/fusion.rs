//! Coarse-to-fine temporal fusion of wavelet pyramids.

use ndarray::{ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::image::{Plane, MAX_INTENSITY};
use crate::wavelet::{WaveletPyramid, LEVELS};

/// Per-coefficient fusion weight estimator. A weight of 1 keeps the current
/// observation, 0 keeps the recurrent estimate.
///
/// Both LL bands arrive in intensity units (divided by the Haar gain
/// `2^(level+1)`), so an estimator can be level-agnostic.
pub trait FusionMask: Send + Sync {
    fn mask(
        &self,
        cur_ll: ArrayView2<'_, f64>,
        prev_ll: ArrayView2<'_, f64>,
        level: usize,
    ) -> Plane;
}

/// `clamp(|cur - prev| / (tau * 255) + floor, floor, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceMask {
    pub tau: f64,
    pub floor: f64,
}

impl DifferenceMask {
    pub fn new(tau: f64, floor: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain(format!(
                "fusion tau must be positive, got {tau}"
            )));
        }
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(Error::domain(format!(
                "fusion floor must lie in (0, 1], got {floor}"
            )));
        }
        Ok(Self { tau, floor })
    }

    pub fn weight(&self, cur: f64, prev: f64) -> f64 {
        ((cur - prev).abs() / (self.tau * MAX_INTENSITY) + self.floor).clamp(self.floor, 1.0)
    }
}

impl FusionMask for DifferenceMask {
    fn mask(
        &self,
        cur_ll: ArrayView2<'_, f64>,
        prev_ll: ArrayView2<'_, f64>,
        _level: usize,
    ) -> Plane {
        Zip::from(cur_ll)
            .and(prev_ll)
            .map_collect(|&c, &p| self.weight(c, p))
    }
}

fn haar_gain(level: usize) -> f64 {
    f64::from(1u32 << (level + 1))
}

fn blend(cur: &Plane, prev: &Plane, m: &Plane) -> Plane {
    Zip::from(cur)
        .and(prev)
        .and(m)
        .map_collect(|&c, &p, &w| p + w * (c - p))
}

/// Fuses `cur` with `prev` starting at the deepest level. Each finer level
/// compares the current LL with the inverse transform of the already fused
/// coarser levels. Returns the fused pyramid and the masks, finest first.
pub fn temporal_fuse(
    cur: &WaveletPyramid,
    prev: &WaveletPyramid,
    estimator: &dyn FusionMask,
) -> Result<(WaveletPyramid, [Plane; LEVELS])> {
    if !cur.same_shape(prev) {
        return Err(Error::dim(format!(
            "cannot fuse pyramids of {:?} and {:?}",
            cur.image_dims(),
            prev.image_dims()
        )));
    }
    let mut fused = prev.clone();
    let mut masks: [Plane; LEVELS] = Default::default();
    for level in (0..LEVELS).rev() {
        let gain = haar_gain(level);
        let cur_ll = cur.ll_at(level + 1) / gain;
        let prev_ll = fused.ll_at(level + 1) / gain;
        let m = estimator.mask(cur_ll.view(), prev_ll.view(), level);
        if m.dim() != cur_ll.dim() {
            return Err(Error::dim("fusion mask has the wrong shape"));
        }
        if level == LEVELS - 1 {
            fused.ll = blend(&cur.ll, &prev.ll, &m);
        }
        let (c, p) = (&cur.details[level], &prev.details[level]);
        let f = &mut fused.details[level];
        f.lh = blend(&c.lh, &p.lh, &m);
        f.hl = blend(&c.hl, &p.hl, &m);
        f.hh = blend(&c.hh, &p.hh, &m);
        masks[level] = m;
    }
    Ok((fused, masks))
}
