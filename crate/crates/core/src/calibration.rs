//! Per-pixel noise parameters estimated from uniform-light captures.
//!
//! Three captures are needed: a dark scene, and two uniform scenes of known
//! intensity `L_1` and `L_2`. Mean inter-spike intervals of the dark and
//! first scene give the dark-signal equivalent `L_d` (the proportionality
//! constant between charge and light cancels); the second scene, together
//! with `L_d`, gives the response ratio `R` relative to a reference pixel.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::image::{ClockParams, MAX_INTENSITY};
use crate::stream::SpikeStream;

/// Fraction of masked pixels above which a calibration is rejected.
pub const MAX_MASKED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationData {
    /// Dark-signal equivalent intensity, digital units.
    pub l_d: Array2<f64>,
    /// Response ratio relative to the reference pixel.
    pub r: Array2<f64>,
    /// Charge per discharge in intensity-ticks, `255 / R`.
    pub q_r: Array2<f64>,
    /// Discharge interval under dark current alone, `Q_r / L_d` ticks
    /// (infinite where `L_d == 0`).
    pub d_dark: Array2<f64>,
    /// `(x, y)` of the reference pixel.
    pub reference_pixel: (usize, usize),
    pub clock: ClockParams,
    pub masked_pixels: usize,
}

impl CalibrationData {
    /// Ideal sensor: no dark current, uniform response.
    pub fn identity(width: usize, height: usize) -> Self {
        let shape = (height, width);
        Self {
            l_d: Array2::zeros(shape),
            r: Array2::ones(shape),
            q_r: Array2::from_elem(shape, MAX_INTENSITY),
            d_dark: Array2::from_elem(shape, f64::INFINITY),
            reference_pixel: (0, 0),
            clock: ClockParams::default(),
            masked_pixels: 0,
        }
    }

    /// Builds a calibration from `L_d` and `R` maps, deriving `Q_r` and `D_dark`.
    pub fn from_maps(
        l_d: Array2<f64>,
        r: Array2<f64>,
        reference_pixel: (usize, usize),
        clock: ClockParams,
    ) -> Result<Self> {
        if l_d.dim() != r.dim() {
            return Err(Error::dim(format!(
                "L_d is {:?} but R is {:?}",
                l_d.dim(),
                r.dim()
            )));
        }
        let (h, w) = l_d.dim();
        if reference_pixel.0 >= w || reference_pixel.1 >= h {
            return Err(Error::dim(format!(
                "reference pixel {reference_pixel:?} outside {w}x{h}"
            )));
        }
        if l_d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Calibration(
                "L_d must be finite and non-negative".into(),
            ));
        }
        if r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Calibration("R must be finite and positive".into()));
        }
        let q_r = r.mapv(|r| MAX_INTENSITY / r);
        let d_dark =
            Zip::from(&q_r)
                .and(&l_d)
                .map_collect(|&q, &ld| if ld > 0.0 { q / ld } else { f64::INFINITY });
        Ok(Self {
            l_d,
            r,
            q_r,
            d_dark,
            reference_pixel,
            clock,
            masked_pixels: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.l_d.ncols()
    }

    pub fn height(&self) -> usize {
        self.l_d.nrows()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    /// Checks the structural invariants tying the four maps together.
    pub fn validate(&self) -> Result<()> {
        let shape = self.l_d.dim();
        for (name, m) in [("R", &self.r), ("Q_r", &self.q_r), ("D_dark", &self.d_dark)] {
            if m.dim() != shape {
                return Err(Error::dim(format!(
                    "{name} is {:?}, L_d is {shape:?}",
                    m.dim()
                )));
            }
        }
        let (x, y) = self.reference_pixel;
        if x >= self.width() || y >= self.height() {
            return Err(Error::dim("reference pixel outside the sensor"));
        }
        if self.l_d.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Calibration("negative L_d".into()));
        }
        if self
            .r
            .iter()
            .chain(self.q_r.iter())
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(Error::Calibration("non-positive R or Q_r".into()));
        }
        self.clock.validate()
    }
}

/// Mean inter-spike interval per pixel, `(last - first) / (count - 1)`.
/// Pixels with fewer than two spikes get `+inf` and a set mask bit.
pub fn mean_interval_map(stream: &SpikeStream) -> (Array2<f64>, Array2<bool>) {
    let n = stream.pixels();
    let mut first = vec![usize::MAX; n];
    let mut last = vec![0usize; n];
    let mut count = vec![0u64; n];
    for t in 0..stream.length() {
        for (b, &byte) in stream.frame(t).iter().enumerate() {
            let mut v = byte;
            while v != 0 {
                let p = b * 8 + v.trailing_zeros() as usize;
                if count[p] == 0 {
                    first[p] = t;
                }
                last[p] = t;
                count[p] += 1;
                v &= v - 1;
            }
        }
    }
    let shape = (stream.height(), stream.width());
    let intervals: Vec<f64> = (0..n)
        .map(|p| {
            if count[p] < 2 {
                f64::INFINITY
            } else {
                (last[p] - first[p]) as f64 / (count[p] - 1) as f64
            }
        })
        .collect();
    let mask = count.iter().map(|&c| c < 2).collect();
    (
        Array2::from_shape_vec(shape, intervals).expect("shape"),
        Array2::from_shape_vec(shape, mask).expect("shape"),
    )
}

/// `L_d = L_1 * T_1 / (T_d - T_1)` per pixel.
///
/// A pixel that never fires in the dark (`T_d = inf`) has `L_d = 0`. Pixels
/// with `T_d <= T_1` or a non-finite `T_1` are inconsistent and get masked
/// (value 0).
pub fn estimate_dark_equivalent(
    t_dark: &Array2<f64>,
    t_light: &Array2<f64>,
    l_1: f64,
) -> Result<(Array2<f64>, Array2<bool>)> {
    if !(l_1 > 0.0 && l_1.is_finite()) {
        return Err(Error::domain(format!("L_1 must be positive, got {l_1}")));
    }
    if t_dark.dim() != t_light.dim() {
        return Err(Error::dim("T_d and T_1 maps differ in shape"));
    }
    let mut mask = Array2::from_elem(t_dark.dim(), false);
    let l_d = Zip::from(t_dark)
        .and(t_light)
        .and(&mut mask)
        .map_collect(|&td, &t1, m| {
            if !(t1 > 0.0 && t1.is_finite()) {
                *m = true;
                0.0
            } else if td.is_infinite() {
                0.0
            } else if td <= t1 {
                *m = true;
                0.0
            } else {
                l_1 * t1 / (td - t1)
            }
        });
    Ok((l_d, mask))
}

/// Pixel whose `T_2` is closest to the mean over finite pixels, ties broken
/// by the smallest `(y, x)`.
pub fn select_reference_pixel(t_2: &Array2<f64>) -> Result<(usize, usize)> {
    let finite: Vec<f64> = t_2.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Calibration(
            "no pixel fired often enough to pick a reference".into(),
        ));
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let mut best: Option<((usize, usize), f64)> = None;
    // indexed_iter walks row-major, i.e. in (y, x) order; strict < keeps the first tie.
    for ((y, x), &v) in t_2.indexed_iter() {
        if !v.is_finite() {
            continue;
        }
        let dist = (v - mean).abs();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some(((x, y), dist));
        }
    }
    Ok(best.expect("at least one finite pixel").0)
}

/// Response ratio relative to `reference`:
/// `R = (L_2 + L_d(ref)) T_2(ref) / ((L_2 + L_d) T_2)`.
pub fn estimate_nonuniformity(
    t_2: &Array2<f64>,
    l_d: &Array2<f64>,
    l_2: f64,
    reference: (usize, usize),
) -> Result<(Array2<f64>, Array2<bool>)> {
    if !(l_2 > 0.0 && l_2.is_finite()) {
        return Err(Error::domain(format!("L_2 must be positive, got {l_2}")));
    }
    if t_2.dim() != l_d.dim() {
        return Err(Error::dim("T_2 and L_d maps differ in shape"));
    }
    let (xm, ym) = reference;
    let t_ref = *t_2
        .get((ym, xm))
        .ok_or_else(|| Error::dim("reference pixel outside the map"))?;
    if !(t_ref > 0.0 && t_ref.is_finite()) {
        return Err(Error::Calibration(
            "reference pixel has no valid interval".into(),
        ));
    }
    let num = (l_2 + l_d[(ym, xm)]) * t_ref;
    let mut mask = Array2::from_elem(t_2.dim(), false);
    let r = Zip::from(t_2)
        .and(l_d)
        .and(&mut mask)
        .map_collect(|&t, &ld, m| {
            if t > 0.0 && t.is_finite() {
                num / ((l_2 + ld) * t)
            } else {
                *m = true;
                1.0
            }
        });
    Ok((r, mask))
}

/// Full calibration from three uniform-light captures.
pub fn build_calibration(
    dark: &SpikeStream,
    light1: &SpikeStream,
    l_1: f64,
    light2: &SpikeStream,
    l_2: f64,
    clock: ClockParams,
) -> Result<CalibrationData> {
    let dims = |s: &SpikeStream| (s.width(), s.height());
    if dims(dark) != dims(light1) || dims(dark) != dims(light2) {
        return Err(Error::dim(format!(
            "calibration streams differ in size: {:?}, {:?}, {:?}",
            dims(dark),
            dims(light1),
            dims(light2)
        )));
    }
    if !(l_1 > 0.0 && l_2 > 0.0) {
        return Err(Error::domain("calibration intensities must be positive"));
    }
    clock.validate()?;

    let (t_d, _) = mean_interval_map(dark);
    let (t_1, mask_1) = mean_interval_map(light1);
    let (t_2, mask_2) = mean_interval_map(light2);
    let (mut l_d, mask_d) = estimate_dark_equivalent(&t_d, &t_1, l_1)?;
    let reference = select_reference_pixel(&t_2)?;
    let (mut r, mask_r) = estimate_nonuniformity(&t_2, &l_d, l_2, reference)?;

    let mut masked = 0usize;
    Zip::from(&mut l_d)
        .and(&mut r)
        .and(&mask_1)
        .and(&mask_2)
        .and(&mask_d)
        .and(&mask_r)
        .for_each(|ld, r, &a, &b, &c, &d| {
            if a || b || c || d {
                *ld = 0.0;
                *r = 1.0;
                masked += 1;
            }
        });
    let total = l_d.len();
    if masked as f64 > MAX_MASKED_FRACTION * total as f64 {
        return Err(Error::CalibrationQuality {
            masked,
            total,
            limit: MAX_MASKED_FRACTION * 100.0,
        });
    }
    let mut calib = CalibrationData::from_maps(l_d, r, reference, clock)?;
    calib.masked_pixels = masked;
    Ok(calib)
}
