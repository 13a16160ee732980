//! Integrate-and-fire spike stream synthesis with embedded sensor noise.
//!
//! Each tick a pixel's light intensity is perturbed in turn by photon shot
//! noise, dark current and response nonuniformity (applied to the discharge
//! time), and readout quantization, then added to an accumulator. The pixel
//! fires when the accumulator reaches the full-well threshold of 255, which is
//! then subtracted. At most one spike is emitted per tick; intensities above
//! 255 saturate.
//!
//! In rate form the dark/nonuniformity step `D <- D / (R + D * N_d / Q_r)`
//! is `I <- R * (I + N_d)`, which is what the kernel evaluates so that a
//! zero intensity needs no special casing.

use rayon::prelude::*;

use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};
use crate::noise::{sample_quantization, NoiseConfig, Poisson, MIN_DISCHARGE};
use crate::rng::{substream, SpikeRng};
use crate::stream::{SpikeStream, SpikeStreamBuilder};

pub const THRESHOLD: f64 = MAX_INTENSITY;

#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// One image held for the whole stream.
    Static(&'a IntensityImage),
    /// One image per tick; must hold at least `length` frames.
    Sequence(&'a [IntensityImage]),
}

impl Source<'_> {
    fn dims(&self) -> Result<(usize, usize)> {
        match self {
            Source::Static(img) => Ok(img.dims()),
            Source::Sequence(frames) => {
                let first = frames
                    .first()
                    .ok_or_else(|| Error::domain("empty frame sequence"))?;
                if frames.iter().any(|f| f.dims() != first.dims()) {
                    return Err(Error::dim("frames of a sequence differ in size"));
                }
                Ok(first.dims())
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationRequest<'a> {
    pub source: Source<'a>,
    /// Light-intensity factor applied to every frame.
    pub theta: f64,
    pub length: usize,
    pub calib: &'a CalibrationData,
    pub noise: NoiseConfig,
}

impl SimulationRequest<'_> {
    fn validate(&self) -> Result<(usize, usize)> {
        if self.length == 0 {
            return Err(Error::domain("stream length must be at least one tick"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::domain(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        let dims = self.source.dims()?;
        if let Source::Sequence(frames) = self.source {
            if frames.len() < self.length {
                return Err(Error::domain(format!(
                    "sequence has {} frames but {} ticks were requested",
                    frames.len(),
                    self.length
                )));
            }
        }
        if dims != self.calib.dims() {
            return Err(Error::dim(format!(
                "source is {dims:?} but calibration is {:?}",
                self.calib.dims()
            )));
        }
        Ok(dims)
    }
}

/// Per-pixel constants of the imaging model.
struct PixelModel {
    noise: NoiseConfig,
    /// Response ratio applied in the fixed-pattern step (1 when disabled).
    gain: f64,
    l_d: f64,
}

impl PixelModel {
    /// Light reaching the integrator this tick, before quantization.
    #[inline]
    fn perturb(&self, light: f64, photons: Option<&Poisson>, rng: &mut SpikeRng) -> Result<f64> {
        let n = &self.noise;
        let mut i = match photons {
            Some(p) => p.sample(rng) as f64,
            None if n.enable_shot => Poisson::new(light)?.sample(rng) as f64,
            None => light,
        };
        if n.applies_fixed_pattern() {
            // A precomputed sampler draws shot and dark counts jointly.
            if !(photons.is_some() && n.enable_dark) {
                i += if n.enable_dark {
                    Poisson::new(self.l_d)?.sample(rng) as f64
                } else {
                    self.l_d
                };
            }
            i *= self.gain;
        }
        if n.enable_quantization && i > 0.0 {
            let d = (MAX_INTENSITY / i + sample_quantization(rng)).max(MIN_DISCHARGE);
            i = MAX_INTENSITY / d;
        }
        Ok(i.min(MAX_INTENSITY))
    }

    /// Sampler for the per-tick photon (plus dark) count of a static pixel.
    fn static_sampler(&self, light: f64) -> Result<Option<Poisson>> {
        if !self.noise.enable_shot {
            return Ok(None);
        }
        let mean = if self.noise.enable_dark {
            light + self.l_d
        } else {
            light
        };
        Ok(Some(Poisson::tabulated(mean)?))
    }
}

fn simulate_pixel(
    req: &SimulationRequest<'_>,
    pixel: usize,
    out: &mut [u8],
    bit: u8,
) -> Result<()> {
    let calib = req.calib;
    let (w, _) = calib.dims();
    let (x, y) = (pixel % w, pixel / w);
    let model = PixelModel {
        noise: req.noise,
        gain: if req.noise.enable_nonuniformity {
            calib.r[(y, x)]
        } else {
            1.0
        },
        l_d: calib.l_d[(y, x)],
    };
    let mut rng = substream(req.noise.rng_seed, pixel as u64);
    let mut acc = 0.0f64;
    let mut integrate = |t: usize, i: f64| {
        acc += i;
        if acc >= THRESHOLD {
            acc -= THRESHOLD;
            out[t] |= bit;
        }
        debug_assert!((0.0..THRESHOLD).contains(&acc));
    };
    match req.source {
        Source::Static(img) => {
            let light = req.theta * img.get(x, y);
            let sampler = model.static_sampler(light)?;
            if req.noise.is_noise_free() {
                let i = light.min(MAX_INTENSITY);
                for t in 0..req.length {
                    integrate(t, i);
                }
            } else {
                for t in 0..req.length {
                    let i = model.perturb(light, sampler.as_ref(), &mut rng)?;
                    integrate(t, i);
                }
            }
        }
        Source::Sequence(frames) => {
            for (t, frame) in frames.iter().take(req.length).enumerate() {
                let i = model.perturb(req.theta * frame.get(x, y), None, &mut rng)?;
                integrate(t, i);
            }
        }
    }
    Ok(())
}

/// Synthesizes a spike stream. Pixels run independently on their own random
/// substreams, so the output does not depend on scheduling.
pub fn simulate(req: &SimulationRequest<'_>) -> Result<SpikeStream> {
    let (w, h) = req.validate()?;
    let pixels = w * h;
    let groups = pixels.div_ceil(8);
    let columns: Vec<Vec<u8>> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let mut col = vec![0u8; req.length];
            for p in g * 8..(g * 8 + 8).min(pixels) {
                simulate_pixel(req, p, &mut col, 1 << (p % 8))?;
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let mut b = SpikeStreamBuilder::new(w, h, req.length);
    for (g, col) in columns.iter().enumerate() {
        for (t, &v) in col.iter().enumerate() {
            if v != 0 {
                b.set_byte(g, t, v);
            }
        }
    }
    Ok(b.build())
}

/// Noise-free integration of a static image on an ideal sensor.
pub fn simulate_ideal(image: &IntensityImage, theta: f64, length: usize) -> Result<SpikeStream> {
    let calib = CalibrationData::identity(image.width(), image.height());
    simulate(&SimulationRequest {
        source: Source::Static(image),
        theta,
        length,
        calib: &calib,
        noise: NoiseConfig::none(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ClockParams;
    use ndarray::Array2;

    fn constant(v: f64) -> IntensityImage {
        IntensityImage::filled(8, 2, v).unwrap()
    }

    #[test]
    fn ideal_l51_fires_every_fifth_tick() {
        let s = simulate_ideal(&constant(51.0), 1.0, 20).unwrap();
        for y in 0..2 {
            for x in 0..8 {
                assert_eq!(s.spike_times(x, y), vec![4, 9, 14, 19]);
                assert_eq!(s.spike_density(x, y, 0, 20).unwrap(), 0.2);
            }
        }
    }

    #[test]
    fn full_well_fires_every_tick() {
        let s = simulate_ideal(&constant(255.0), 1.0, 16).unwrap();
        assert_eq!(s.spike_density(3, 1, 0, 16).unwrap(), 1.0);
        let sat = simulate_ideal(&constant(600.0), 1.0, 16).unwrap();
        assert_eq!(sat, s);
    }

    #[test]
    fn dark_pixel_never_fires() {
        let s = simulate_ideal(&constant(0.0), 1.0, 50).unwrap();
        assert!(s.as_bytes().iter().all(|&b| b == 0));
    }

    #[test]
    fn theta_scales_light() {
        let a = simulate_ideal(&constant(102.0), 0.5, 40).unwrap();
        let b = simulate_ideal(&constant(51.0), 1.0, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_in_brightness() {
        let dim = IntensityImage::from_fn(8, 4, |x, y| (x * 7 + y * 13) as f64).unwrap();
        let bright = IntensityImage::from_fn(8, 4, |x, y| (x * 7 + y * 13) as f64 + 3.5).unwrap();
        let a = simulate_ideal(&dim, 1.0, 300).unwrap();
        let b = simulate_ideal(&bright, 1.0, 300).unwrap();
        let (ca, cb) = (a.count_map(0, 300), b.count_map(0, 300));
        assert!(ca.iter().zip(&cb).all(|(x, y)| x <= y));
    }

    #[test]
    fn deterministic_under_seed() {
        let img = IntensityImage::from_fn(8, 3, |x, y| 10.0 + (x * y) as f64).unwrap();
        let calib = CalibrationData::from_maps(
            Array2::from_elem((3, 8), 2.0),
            Array2::from_shape_fn((3, 8), |(y, x)| 0.95 + 0.01 * (x + y) as f64),
            (0, 0),
            ClockParams::default(),
        )
        .unwrap();
        let req = |seed| SimulationRequest {
            source: Source::Static(&img),
            theta: 1.0,
            length: 500,
            calib: &calib,
            noise: NoiseConfig::all(seed),
        };
        let a = simulate(&req(5)).unwrap();
        assert_eq!(a, simulate(&req(5)).unwrap());
        assert_ne!(a, simulate(&req(6)).unwrap());
    }

    #[test]
    fn sequence_matches_static_when_frames_repeat() {
        let img = constant(51.0);
        let frames = vec![img.clone(); 30];
        let calib = CalibrationData::identity(8, 2);
        let seq = simulate(&SimulationRequest {
            source: Source::Sequence(&frames),
            theta: 1.0,
            length: 30,
            calib: &calib,
            noise: NoiseConfig::none(0),
        })
        .unwrap();
        assert_eq!(seq, simulate_ideal(&img, 1.0, 30).unwrap());
    }

    #[test]
    fn shot_noise_rate_is_unbiased() {
        let img = IntensityImage::filled(16, 8, 40.0).unwrap();
        let calib = CalibrationData::identity(16, 8);
        let mut noise = NoiseConfig::none(21);
        noise.enable_shot = true;
        let len = 100_000;
        let s = simulate(&SimulationRequest {
            source: Source::Static(&img),
            theta: 1.0,
            length: len,
            calib: &calib,
            noise,
        })
        .unwrap();
        let counts = s.count_map(0, len);
        let mean_rate = counts.iter().map(|&c| c as f64).sum::<f64>() / (128 * len) as f64;
        // per-tick charge variance 40; rate sd ≈ sqrt(40 * len) / 255 / len per pixel
        let sd = (40.0 * len as f64).sqrt() / 255.0 / len as f64 / (128f64).sqrt();
        assert!(
            (mean_rate - 40.0 / 255.0).abs() < 3.0 * sd + 1.0 / len as f64,
            "rate {mean_rate}"
        );
    }

    #[test]
    fn errors() {
        let img = constant(10.0);
        let calib = CalibrationData::identity(4, 4);
        let req = SimulationRequest {
            source: Source::Static(&img),
            theta: 1.0,
            length: 10,
            calib: &calib,
            noise: NoiseConfig::none(0),
        };
        assert!(matches!(simulate(&req), Err(Error::Dimension(_))));
        let calib = CalibrationData::identity(8, 2);
        assert!(simulate(&SimulationRequest {
            calib: &calib,
            theta: 0.0,
            ..req
        })
        .is_err());
        assert!(simulate(&SimulationRequest {
            calib: &calib,
            length: 0,
            ..req
        })
        .is_err());
        let frames = vec![img.clone(); 3];
        assert!(simulate(&SimulationRequest {
            calib: &calib,
            source: Source::Sequence(&frames),
            ..req
        })
        .is_err());
    }
}
