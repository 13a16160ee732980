//! Image quality metrics and the benchmark harness.

mod benchmark;
mod metrics;
mod scenes;

pub use benchmark::{
    run_benchmark, BenchmarkConfig, BenchmarkReport, BenchmarkRow, CellInfo, Illumination,
    MethodSpec, Stage, LOW_LIGHT_THRESHOLD,
};
pub use metrics::{mse, psnr, ssim, SSIM_SIGMA, SSIM_WINDOW};
pub use scenes::{synthetic_scene, synthetic_scenes, SceneKind};
