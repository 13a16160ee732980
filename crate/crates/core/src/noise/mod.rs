//! Noise sources of the spike imaging model and the one-shot statistical
//! forward model used as an oracle for the simulator.
//!
//! Five sources perturb a pixel: photon shot noise, dark-current shot noise,
//! response nonuniformity, readout quantization and rate truncation. The
//! first four are samplers switched by [`NoiseConfig`]; truncation follows
//! from counting a periodic process over a finite window and is described in
//! closed form by [`truncation_distribution`].

mod poisson;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use poisson::Poisson;

use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub enable_shot: bool,
    pub enable_dark: bool,
    pub enable_nonuniformity: bool,
    pub enable_quantization: bool,
    pub rng_seed: u64,
}

impl NoiseConfig {
    pub fn none(rng_seed: u64) -> Self {
        Self {
            enable_shot: false,
            enable_dark: false,
            enable_nonuniformity: false,
            enable_quantization: false,
            rng_seed,
        }
    }

    pub fn all(rng_seed: u64) -> Self {
        Self {
            enable_shot: true,
            enable_dark: true,
            enable_nonuniformity: true,
            enable_quantization: true,
            rng_seed,
        }
    }

    pub fn is_noise_free(&self) -> bool {
        !(self.enable_shot
            || self.enable_dark
            || self.enable_nonuniformity
            || self.enable_quantization)
    }

    /// Whether the fixed-pattern step (dark current and/or nonuniformity) runs.
    pub fn applies_fixed_pattern(&self) -> bool {
        self.enable_dark || self.enable_nonuniformity
    }

    /// Parses `none` or a comma list of `shot`, `dark`, `rnu`, `quant` (`all` for every source).
    pub fn parse_sources(spec: &str, rng_seed: u64) -> Result<Self> {
        let mut cfg = Self::none(rng_seed);
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("none") || spec.is_empty() {
            return Ok(cfg);
        }
        for item in spec.split(',').map(str::trim) {
            match item {
                "shot" => cfg.enable_shot = true,
                "dark" => cfg.enable_dark = true,
                "rnu" => cfg.enable_nonuniformity = true,
                "quant" => cfg.enable_quantization = true,
                "all" => cfg = Self::all(rng_seed),
                other => {
                    return Err(Error::domain(format!("unknown noise source `{other}`")));
                }
            }
        }
        Ok(cfg)
    }
}

/// One photon-count draw around the ideal mean (`E + N_p`).
pub fn sample_shot<R: Rng + ?Sized>(mean_intensity: f64, rng: &mut R) -> Result<u64> {
    Ok(Poisson::new(mean_intensity)?.sample(rng))
}

/// Independent per-pixel dark-count draws.
pub fn sample_dark<R: Rng + ?Sized>(mu_d: &Array2<f64>, rng: &mut R) -> Result<Array2<u64>> {
    let samplers = mu_d
        .iter()
        .map(|&m| Poisson::new(m))
        .collect::<Result<Vec<_>>>()?;
    let draws: Vec<u64> = samplers.iter().map(|p| p.sample(rng)).collect();
    Ok(Array2::from_shape_vec(mu_d.dim(), draws).expect("shape preserved"))
}

/// Readout delay in ticks, uniform on the open interval (-1, 1).
pub fn sample_quantization<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        if u > -1.0 {
            return u;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationOutcome {
    /// Spikes counted in the window.
    pub spikes: u64,
    /// Estimated rate `spikes / window` in spikes per tick.
    pub rate: f64,
    pub probability: f64,
}

/// Distribution of the windowed rate estimate of a periodic spike train.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationDistribution {
    pub period: f64,
    pub window: u64,
    pub outcomes: Vec<TruncationOutcome>,
}

impl TruncationDistribution {
    pub fn expectation(&self) -> f64 {
        self.outcomes.iter().map(|o| o.rate * o.probability).sum()
    }

    /// Picks an outcome by inverse CDF of a uniform `u` in `[0, 1)`.
    pub fn pick(&self, u: f64) -> &TruncationOutcome {
        let mut acc = 0.0;
        for o in &self.outcomes {
            acc += o.probability;
            if u < acc {
                return o;
            }
        }
        self.outcomes.last().expect("at least one outcome")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &TruncationOutcome {
        self.pick(rng.random())
    }
}

/// Spike-count distribution for inter-spike period `period` counted over a
/// window of `window` ticks with uniformly random phase.
///
/// With `k` the integer satisfying `k * period < window <= (k + 1) * period`,
/// the window holds `k + 1` spikes with probability `(window - k * period) / period`
/// and `k` spikes otherwise; the expected rate is exactly `1 / period`.
pub fn truncation_distribution(period: f64, window: u64) -> Result<TruncationDistribution> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::domain(format!(
            "period must be positive, got {period}"
        )));
    }
    if window == 0 {
        return Err(Error::domain("window must be at least one tick"));
    }
    let l = window as f64;
    let mut k = ((l / period).ceil() - 1.0).max(0.0);
    // Guard against rounding in l / period.
    while k * period >= l && k > 0.0 {
        k -= 1.0;
    }
    while (k + 1.0) * period < l {
        k += 1.0;
    }
    // fused multiply-add avoids cancellation when k * period is close to l
    let p_hi = (-k).mul_add(period, l) / period;
    let p_lo = (k + 1.0).mul_add(period, -l) / period;
    let kk = k as u64;
    let outcomes = [(kk + 1, p_hi), (kk, p_lo)]
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(spikes, probability)| TruncationOutcome {
            spikes,
            rate: spikes as f64 / l,
            probability,
        })
        .collect();
    Ok(TruncationDistribution {
        period,
        window,
        outcomes,
    })
}

/// Noise-free inter-spike period is clamped at one tick: the readout emits at
/// most one spike per clock.
const MIN_PERIOD: f64 = 1.0;

/// Quantization may not push a discharge time below this.
pub(crate) const MIN_DISCHARGE: f64 = 1e-9;

/// One-shot noisy observation of `scene`: per pixel, the discharge period
/// `Q_r / (L + N_p + N_d)` (with the enabled sources), jittered by readout
/// quantization, turned into a rate over `window` ticks through the
/// truncation distribution and scaled to digital intensity.
///
/// Pixel `i` draws from substream `i` of `config.rng_seed`. The truncation
/// phase is random, so only windows that are a multiple of the period give a
/// draw-independent result.
pub fn apply_imaging_model(
    scene: &IntensityImage,
    calib: &CalibrationData,
    config: &NoiseConfig,
    window: u64,
) -> Result<IntensityImage> {
    if calib.dims() != scene.dims() {
        return Err(Error::dim(format!(
            "calibration is {:?}, scene is {:?}",
            calib.dims(),
            scene.dims()
        )));
    }
    if window == 0 {
        return Err(Error::domain("window must be at least one tick"));
    }
    let (w, h) = scene.dims();
    let mut out = Vec::with_capacity(w * h);
    for (i, ((&light, &l_d), &q_r)) in scene
        .as_array()
        .iter()
        .zip(calib.l_d.iter())
        .zip(calib.q_r.iter())
        .enumerate()
    {
        let mut rng = rng::substream(config.rng_seed, i as u64);
        let mut signal = if config.enable_shot {
            Poisson::new(light)?.sample(&mut rng) as f64
        } else {
            light
        };
        let mut charge = MAX_INTENSITY;
        if config.applies_fixed_pattern() {
            signal += if config.enable_dark {
                Poisson::new(l_d)?.sample(&mut rng) as f64
            } else {
                l_d
            };
            if config.enable_nonuniformity {
                charge = q_r;
            }
        }
        if signal <= 0.0 {
            out.push(0.0);
            continue;
        }
        let mut period = charge / signal;
        if config.enable_quantization {
            period = (period + sample_quantization(&mut rng)).max(MIN_DISCHARGE);
        }
        let dist = truncation_distribution(period.max(MIN_PERIOD), window)?;
        let spikes = dist.sample(&mut rng).spikes;
        out.push(MAX_INTENSITY * spikes as f64 / window as f64);
    }
    IntensityImage::from_vec(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn shot_zero_mean_is_zero() {
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| sample_shot(0.0, &mut rng).unwrap() == 0));
        assert!(sample_shot(-1.0, &mut rng).is_err());
    }

    #[test]
    fn shot_tiny_mean_is_almost_always_zero() {
        let mut rng = seeded(2);
        assert!((0..100_000).all(|_| sample_shot(1e-9, &mut rng).unwrap() == 0));
    }

    #[test]
    fn shot_mean_100() {
        let mut rng = seeded(3);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_shot(100.0, &mut rng).unwrap() as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((99.7..=100.3).contains(&mean), "mean {mean}");
        assert!((98.0..=102.0).contains(&var), "var {var}");
    }

    #[test]
    fn dark_map() {
        let mut rng = seeded(4);
        let zeros = sample_dark(&Array2::zeros((3, 5)), &mut rng).unwrap();
        assert!(zeros.iter().all(|&v| v == 0));
        assert!(sample_dark(&Array2::from_elem((1, 2), -0.1), &mut rng).is_err());

        let fours = sample_dark(&Array2::from_elem((1000, 1000), 4.0), &mut rng).unwrap();
        let mean = fours.iter().sum::<u64>() as f64 / 1e6;
        assert!((3.99..=4.01).contains(&mean), "mean {mean}");

        let mu = ndarray::array![[1.0, 100.0]];
        let (mut a, mut b) = (0u64, 0u64);
        for _ in 0..100_000 {
            let d = sample_dark(&mu, &mut rng).unwrap();
            a += d[(0, 0)];
            b += d[(0, 1)];
        }
        let (ma, mb) = (a as f64 / 1e5, b as f64 / 1e5);
        assert!((ma - 1.0).abs() < 0.02, "{ma}");
        assert!((mb - 100.0).abs() < 0.2, "{mb}");
    }

    #[test]
    fn quantization_moments() {
        let mut rng = seeded(5);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_quantization(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x > -1.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 0.003, "mean {mean}");
        assert!((0.330..=0.337).contains(&var), "var {var}");
    }

    fn outcomes(d: &TruncationDistribution) -> Vec<(f64, f64)> {
        d.outcomes.iter().map(|o| (o.rate, o.probability)).collect()
    }

    #[test]
    fn truncation_examples() {
        let d = truncation_distribution(4.0, 10).unwrap();
        assert_eq!(outcomes(&d), vec![(0.3, 0.5), (0.2, 0.5)]);
        assert_eq!(d.expectation(), 0.25);

        let d = truncation_distribution(4.0, 8).unwrap();
        assert_eq!(outcomes(&d), vec![(0.25, 1.0)]);

        let d = truncation_distribution(3.0, 10).unwrap();
        assert_eq!(d.outcomes.len(), 2);
        assert_eq!(d.outcomes[0].rate, 0.4);
        assert!((d.outcomes[0].probability - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.outcomes[1].rate - 0.3).abs() < 1e-15);
        assert!((d.outcomes[1].probability - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.expectation() - 1.0 / 3.0).abs() < 1e-15);

        let d = truncation_distribution(5.0, 32).unwrap();
        assert_eq!(d.outcomes[0].spikes, 7);
        assert!((d.outcomes[0].probability - 0.4).abs() < 1e-15);
        assert_eq!(d.outcomes[1].spikes, 6);
        assert!((d.outcomes[1].probability - 0.6).abs() < 1e-15);
    }

    #[test]
    fn truncation_long_period() {
        // period longer than the window: at most one spike
        let d = truncation_distribution(40.0, 10).unwrap();
        assert_eq!(d.outcomes[0].spikes, 1);
        assert_eq!(d.outcomes[0].probability, 0.25);
        assert_eq!(d.outcomes[1].spikes, 0);
    }

    #[test]
    fn truncation_domain_errors() {
        assert!(truncation_distribution(0.0, 10).is_err());
        assert!(truncation_distribution(-2.0, 10).is_err());
        assert!(truncation_distribution(f64::INFINITY, 10).is_err());
        assert!(truncation_distribution(3.0, 0).is_err());
    }

    #[test]
    fn truncation_random_pairs_sum_and_mean() {
        let mut rng = seeded(6);
        for _ in 0..1000 {
            let d = rng.random_range(0.5..300.0);
            let l = rng.random_range(1..1000u64);
            let dist = truncation_distribution(d, l).unwrap();
            let total: f64 = dist.outcomes.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!((dist.expectation() - 1.0 / d).abs() <= 1e-14 / d.min(1.0));
        }
    }

    #[test]
    fn parse_sources() {
        let c = NoiseConfig::parse_sources("shot,quant", 3).unwrap();
        assert!(c.enable_shot && c.enable_quantization && !c.enable_dark);
        assert!(NoiseConfig::parse_sources("none", 0)
            .unwrap()
            .is_noise_free());
        assert_eq!(
            NoiseConfig::parse_sources("all", 2).unwrap(),
            NoiseConfig::all(2)
        );
        assert!(NoiseConfig::parse_sources("thermal", 0).is_err());
    }

    #[test]
    fn imaging_model_noise_free() {
        let calib = CalibrationData::identity(4, 2);
        let scene = IntensityImage::filled(4, 2, 51.0).unwrap();
        let cfg = NoiseConfig::none(0);
        let out = apply_imaging_model(&scene, &calib, &cfg, 40).unwrap();
        assert!(out.pixels().all(|v| v == 51.0));

        // window 32 is not a multiple of the period 5: 6 or 7 spikes
        let big = IntensityImage::filled(200, 100, 51.0).unwrap();
        let calib = CalibrationData::identity(200, 100);
        let out = apply_imaging_model(&big, &calib, &cfg, 32).unwrap();
        let (lo, hi) = (255.0 * 6.0 / 32.0, 255.0 * 7.0 / 32.0);
        assert!(out.pixels().all(|v| v == lo || v == hi));
        let mean = out.mean();
        // 20000 pixels, per-pixel sd 255/32 * sqrt(0.24)
        assert!(
            (mean - 51.0).abs() < 4.0 * 3.9 / (20000f64).sqrt(),
            "mean {mean}"
        );
        let again = apply_imaging_model(&big, &calib, &cfg, 32).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn imaging_model_dark_pixel_is_zero() {
        let calib = CalibrationData::identity(2, 1);
        let scene = IntensityImage::filled(2, 1, 0.0).unwrap();
        let out = apply_imaging_model(&scene, &calib, &NoiseConfig::none(0), 16).unwrap();
        assert!(out.pixels().all(|v| v == 0.0));
    }

    #[test]
    fn imaging_model_shot_is_unbiased() {
        let (w, h) = (400, 250);
        let calib = CalibrationData::identity(w, h);
        let scene = IntensityImage::filled(w, h, 100.0).unwrap();
        let mut cfg = NoiseConfig::none(11);
        cfg.enable_shot = true;
        let out = apply_imaging_model(&scene, &calib, &cfg, 256).unwrap();
        let mean = out.mean();
        assert!((99.0..=101.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn imaging_model_dimension_mismatch() {
        let calib = CalibrationData::identity(3, 3);
        let scene = IntensityImage::filled(4, 3, 1.0).unwrap();
        assert!(apply_imaging_model(&scene, &calib, &NoiseConfig::none(0), 8).is_err());
    }
}
