//! Procedural static test scenes.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::Result;
use crate::image::IntensityImage;
use crate::rng::{seeded, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Gradient,
    Disks,
    Blocks,
    Blobs,
    Terrain,
    /// Full-contrast periodic stress pattern.
    Grating,
    /// Full-contrast periodic stress pattern.
    Rings,
}

impl SceneKind {
    /// Piecewise-smooth scenes whose wavelet coefficients are sparse, like
    /// natural images. [`synthetic_scenes`] cycles through these.
    pub const NATURAL: [SceneKind; 5] = [
        SceneKind::Gradient,
        SceneKind::Disks,
        SceneKind::Blocks,
        SceneKind::Blobs,
        SceneKind::Terrain,
    ];

    pub const ALL: [SceneKind; 7] = [
        SceneKind::Gradient,
        SceneKind::Disks,
        SceneKind::Blocks,
        SceneKind::Blobs,
        SceneKind::Terrain,
        SceneKind::Grating,
        SceneKind::Rings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Gradient => "gradient",
            SceneKind::Disks => "disks",
            SceneKind::Grating => "grating",
            SceneKind::Rings => "rings",
            SceneKind::Blocks => "blocks",
            SceneKind::Blobs => "blobs",
            SceneKind::Terrain => "terrain",
        }
    }
}

/// Values span roughly `[20, 235]`; layouts are randomized by `seed`.
pub fn synthetic_scene(
    kind: SceneKind,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<IntensityImage> {
    let mut rng = seeded(seed);
    let (w, h) = (width as f64, height as f64);
    let (lo, hi) = (20.0, 235.0);
    match kind {
        SceneKind::Gradient => {
            let angle = rng.random_range(0.0..2.0 * PI);
            let (c, s) = (angle.cos(), angle.sin());
            let span = c.abs() * w + s.abs() * h;
            IntensityImage::from_fn(width, height, |x, y| {
                let u = (c * (x as f64 - w / 2.0) + s * (y as f64 - h / 2.0)) / span + 0.5;
                lo + (hi - lo) * u.clamp(0.0, 1.0)
            })
        }
        SceneKind::Disks => {
            let disks: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    (
                        rng.random_range(0.0..w),
                        rng.random_range(0.0..h),
                        rng.random_range(0.08..0.25) * w.min(h),
                        rng.random_range(60.0..200.0),
                    )
                })
                .collect();
            IntensityImage::from_fn(width, height, |x, y| {
                let mut v = 40.0;
                for &(cx, cy, r, level) in &disks {
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    // one-pixel soft edge
                    let cover = (r + 0.5 - d).clamp(0.0, 1.0);
                    v += cover * (level - v);
                }
                v.clamp(lo, hi)
            })
        }
        SceneKind::Grating => {
            let period = rng.random_range(12.0..24.0);
            let angle = rng.random_range(0.0..PI);
            let (c, s) = (angle.cos(), angle.sin());
            IntensityImage::from_fn(width, height, |x, y| {
                let u = (c * x as f64 + s * y as f64) * 2.0 * PI / period;
                let envelope = 0.6 + 0.4 * (y as f64 / h);
                lo + (hi - lo) * envelope * (0.5 + 0.5 * u.sin())
            })
        }
        SceneKind::Rings => {
            let (cx, cy) = (
                rng.random_range(0.3..0.7) * w,
                rng.random_range(0.3..0.7) * h,
            );
            let period = rng.random_range(10.0..18.0);
            IntensityImage::from_fn(width, height, |x, y| {
                let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                lo + (hi - lo) * (0.5 + 0.5 * (2.0 * PI * r / period).cos())
            })
        }
        SceneKind::Blocks => {
            let cell = 16usize;
            let cols = width.div_ceil(cell);
            let rows = height.div_ceil(cell);
            let levels: Vec<f64> = (0..cols * rows).map(|_| rng.random_range(lo..hi)).collect();
            IntensityImage::from_fn(width, height, |x, y| levels[(y / cell) * cols + x / cell])
        }
        SceneKind::Blobs => {
            let blobs: Vec<(f64, f64, f64, f64)> = (0..8)
                .map(|_| {
                    (
                        rng.random_range(0.0..w),
                        rng.random_range(0.0..h),
                        rng.random_range(0.06..0.2) * w.min(h),
                        rng.random_range(-90.0..120.0),
                    )
                })
                .collect();
            IntensityImage::from_fn(width, height, |x, y| {
                let v: f64 = blobs
                    .iter()
                    .map(|&(cx, cy, s, a)| {
                        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                        a * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum();
                (110.0 + v).clamp(lo, hi)
            })
        }
        SceneKind::Terrain => {
            // band-limited random field with a 1/f amplitude falloff
            let waves: Vec<(f64, f64, f64, f64)> = (1..=12)
                .map(|i| {
                    let f = i as f64 * 0.5 / w.min(h);
                    let a = rng.random_range(0.0..PI);
                    (
                        f * a.cos(),
                        f * a.sin(),
                        rng.random_range(0.0..2.0 * PI),
                        40.0 / i as f64,
                    )
                })
                .collect();
            IntensityImage::from_fn(width, height, |x, y| {
                let v: f64 = waves
                    .iter()
                    .map(|&(fx, fy, ph, a)| {
                        a * (2.0 * PI * (fx * x as f64 + fy * y as f64) + ph).cos()
                    })
                    .sum();
                (127.5 + v).clamp(lo, hi)
            })
        }
    }
}

/// `count` scenes cycling through [`SceneKind::NATURAL`].
pub fn synthetic_scenes(
    width: usize,
    height: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(String, IntensityImage)>> {
    (0..count)
        .map(|i| {
            let kind = SceneKind::NATURAL[i % SceneKind::NATURAL.len()];
            let img = synthetic_scene(kind, width, height, split_seed(seed, i as u64))?;
            Ok((format!("{}-{i}", kind.name()), img))
        })
        .collect()
}
