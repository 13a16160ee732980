//! Simulate-restore-score harness over static scenes.

use std::time::Instant;

use rayon::prelude::*;

use super::metrics::{psnr, ssim};
use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::{IntensityImage, Plane, MAX_INTENSITY};
use crate::noise::NoiseConfig;
use crate::reconstruction::{
    adaptive_transform, bootstrap_density, restore_stages, tfi, tfp, RestorerParams, WindowMode,
};
use crate::rng::split_seed;
use crate::simulator::{simulate, SimulationRequest, Source};
use crate::stream::SpikeStream;

/// Peak spike densities below this count as low light.
pub const LOW_LIGHT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Illumination {
    Low,
    High,
}

impl Illumination {
    /// Target peak spike density per tick.
    pub fn target_density(self) -> f64 {
        match self {
            Illumination::Low => 0.03,
            Illumination::High => 0.25,
        }
    }

    pub fn classify(peak_density: f64) -> Self {
        if peak_density < LOW_LIGHT_THRESHOLD {
            Illumination::Low
        } else {
            Illumination::High
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Illumination::Low => "low",
            Illumination::High => "high",
        }
    }

    /// Light factor that puts the brightest pixel of `scene` at the target
    /// density on a reference-gain pixel.
    pub fn theta_for(self, scene: &IntensityImage) -> Result<f64> {
        let peak = scene.max_value();
        if peak.is_nan() || peak <= 0.0 {
            return Err(Error::domain("scene is black"));
        }
        Ok(self.target_density() * MAX_INTENSITY / peak)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Tfp {
        window: usize,
    },
    Tfi,
    /// Adaptive windows only, no calibration or pyramid stages.
    Ast,
    Restorer(RestorerParams),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Tfp { .. } => "tfp",
            MethodSpec::Tfi => "tfi",
            MethodSpec::Ast => "ast",
            MethodSpec::Restorer(_) => "rsir",
        }
    }

    pub fn parameter(&self) -> String {
        match self {
            MethodSpec::Tfp { window } => format!("w={window}"),
            MethodSpec::Restorer(p) => match p.fixed_window {
                Some(w) => format!("w={w}"),
                None => "ast".to_string(),
            },
            MethodSpec::Tfi | MethodSpec::Ast => String::new(),
        }
    }

    /// TFP at each window plus TFI, AST and the default restorer.
    pub fn standard_set() -> Vec<MethodSpec> {
        let mut v: Vec<_> = [32, 64, 128, 256]
            .into_iter()
            .map(|window| MethodSpec::Tfp { window })
            .collect();
        v.extend([
            MethodSpec::Tfi,
            MethodSpec::Ast,
            MethodSpec::Restorer(RestorerParams::default()),
        ]);
        v
    }
}

/// Pipeline stage a row scores. Baselines only produce `Output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Input,
    Corrected,
    Fused,
    Denoised,
    Output,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Input => "input",
            Stage::Corrected => "fpn",
            Stage::Fused => "fuse",
            Stage::Denoised => "denoise",
            Stage::Output => "output",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub length: usize,
    /// Restoration ticks; baselines are scored at the last one.
    pub ticks: Vec<usize>,
    pub illuminations: Vec<Illumination>,
    /// Noise sources; the seed is replaced per cell.
    pub noise: NoiseConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            length: 2176,
            ticks: (0..8).map(|i| 128 + 256 * i).collect(),
            illuminations: vec![Illumination::Low, Illumination::High],
            noise: NoiseConfig::all(0),
        }
    }
}

impl BenchmarkConfig {
    pub fn eval_tick(&self) -> Result<usize> {
        let t = *self
            .ticks
            .last()
            .ok_or_else(|| Error::domain("benchmark needs at least one tick"))?;
        if t >= self.length {
            return Err(Error::domain(format!(
                "tick {t} beyond stream length {}",
                self.length
            )));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub scene: String,
    pub illumination: Illumination,
    pub method: String,
    pub parameter: String,
    pub stage: Stage,
    pub psnr: f64,
    pub ssim: f64,
    pub runtime_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub scene: String,
    pub target: Illumination,
    pub theta: f64,
    pub peak_density: f64,
    pub class: Illumination,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub length: usize,
    pub eval_tick: usize,
    pub cells: Vec<CellInfo>,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    /// Mean PSNR of matching rows; infinite entries dominate.
    pub fn mean_psnr(
        &self,
        illumination: Option<Illumination>,
        method: &str,
        parameter: &str,
        stage: Stage,
    ) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.error.is_none()
                    && illumination.is_none_or(|i| r.illumination == i)
                    && r.method == method
                    && r.parameter == parameter
                    && r.stage == stage
            })
            .map(|r| r.psnr)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn normalized(plane: &Plane, theta: f64) -> IntensityImage {
    IntensityImage::from_plane_clamped(&(plane / theta))
}

fn score(gt: &IntensityImage, pred: &IntensityImage) -> Result<(f64, f64)> {
    Ok((psnr(gt, pred)?, ssim(gt, pred)?))
}

struct Cell<'a> {
    name: &'a str,
    scene: &'a IntensityImage,
    target: Illumination,
    seed: u64,
}

fn run_method(
    method: &MethodSpec,
    stream: &SpikeStream,
    calib: &CalibrationData,
    config: &BenchmarkConfig,
    t: usize,
) -> Result<Vec<(Stage, Plane)>> {
    let single = |img: IntensityImage| vec![(Stage::Output, img.into_array())];
    Ok(match method {
        MethodSpec::Tfp { window } => single(tfp(stream, t, *window)?),
        MethodSpec::Tfi => single(tfi(stream, t)?),
        MethodSpec::Ast => {
            let mut density =
                bootstrap_density(stream, RestorerParams::default().bootstrap_window)?;
            single(adaptive_transform(
                stream,
                t,
                &mut density,
                WindowMode::Centered,
            )?)
        }
        MethodSpec::Restorer(params) => {
            let st = restore_stages(stream, calib, params, &config.ticks)?
                .pop()
                .expect("ticks are nonempty");
            vec![
                (Stage::Input, st.adaptive.into_array()),
                (Stage::Corrected, st.corrected.into_array()),
                (Stage::Fused, st.fused),
                (Stage::Denoised, st.denoised),
                (Stage::Output, st.output.into_array()),
            ]
        }
    })
}

fn run_cell(
    cell: &Cell<'_>,
    calib: &CalibrationData,
    methods: &[MethodSpec],
    config: &BenchmarkConfig,
    t: usize,
) -> (CellInfo, Vec<BenchmarkRow>) {
    let row = |method: &MethodSpec, stage, (psnr, ssim), runtime, error| BenchmarkRow {
        scene: cell.name.to_string(),
        illumination: cell.target,
        method: method.name().to_string(),
        parameter: method.parameter(),
        stage,
        psnr,
        ssim,
        runtime_seconds: runtime,
        error,
    };
    let mut info = CellInfo {
        scene: cell.name.to_string(),
        target: cell.target,
        theta: f64::NAN,
        peak_density: f64::NAN,
        class: cell.target,
        seed: cell.seed,
    };
    let simulated = cell.target.theta_for(cell.scene).and_then(|theta| {
        info.theta = theta;
        let noise = NoiseConfig {
            rng_seed: cell.seed,
            ..config.noise
        };
        simulate(&SimulationRequest {
            source: Source::Static(cell.scene),
            theta,
            length: config.length,
            calib,
            noise,
        })
    });
    let stream = match simulated {
        Ok(s) => s,
        Err(e) => {
            let rows = methods
                .iter()
                .map(|m| {
                    row(
                        m,
                        Stage::Output,
                        (f64::NAN, f64::NAN),
                        0.0,
                        Some(e.to_string()),
                    )
                })
                .collect();
            return (info, rows);
        }
    };
    let counts = stream.count_map(0, stream.length());
    let peak = counts.iter().copied().max().unwrap_or(0);
    info.peak_density = f64::from(peak) / stream.length() as f64;
    info.class = Illumination::classify(info.peak_density);

    let mut rows = Vec::new();
    for method in methods {
        let start = Instant::now();
        let result = run_method(method, &stream, calib, config, t);
        let runtime = start.elapsed().as_secs_f64();
        match result.and_then(|stages| {
            stages
                .into_iter()
                .map(|(stage, plane)| {
                    Ok((stage, score(cell.scene, &normalized(&plane, info.theta))?))
                })
                .collect::<Result<Vec<_>>>()
        }) {
            Ok(scored) => rows.extend(
                scored
                    .into_iter()
                    .map(|(stage, m)| row(method, stage, m, runtime, None)),
            ),
            Err(e) => rows.push(row(
                method,
                Stage::Output,
                (f64::NAN, f64::NAN),
                runtime,
                Some(e.to_string()),
            )),
        }
    }
    (info, rows)
}

/// Simulates every scene at every configured illumination and scores every
/// method against the scene. Restorations are divided by the light factor
/// before scoring. Cells are independent and seeded from `seed`.
pub fn run_benchmark(
    scenes: &[(String, IntensityImage)],
    calib: &CalibrationData,
    methods: &[MethodSpec],
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    if scenes.is_empty() || methods.is_empty() {
        return Err(Error::domain(
            "benchmark needs at least one scene and one method",
        ));
    }
    if config.illuminations.is_empty() {
        return Err(Error::domain("benchmark needs at least one illumination"));
    }
    let t = config.eval_tick()?;
    let cells: Vec<Cell<'_>> = scenes
        .iter()
        .flat_map(|(name, scene)| {
            config
                .illuminations
                .iter()
                .map(move |&target| (name, scene, target))
        })
        .enumerate()
        .map(|(i, (name, scene, target))| Cell {
            name,
            scene,
            target,
            seed: split_seed(seed, i as u64),
        })
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|cell| run_cell(cell, calib, methods, config, t))
        .collect();
    let mut report = BenchmarkReport {
        seed,
        length: config.length,
        eval_tick: t,
        cells: Vec::with_capacity(results.len()),
        rows: Vec::new(),
    };
    for (info, rows) in results {
        report.cells.push(info);
        report.rows.extend(rows);
    }
    Ok(report)
}
