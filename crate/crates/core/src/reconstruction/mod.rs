//! Spike-to-image restoration.
//!
//! The recurrent pipeline keeps the dataflow of a learned restorer (fusion
//! mask, frequency-domain denoiser, refinement blend) but every learned block
//! is a deterministic stand-in behind a trait, so a trained model can replace
//! it without touching the pipeline.

mod adaptive;
mod baseline;
mod denoise;
mod fusion;
mod pipeline;

pub use adaptive::{
    adaptive_transform, ast_window, bootstrap_density, correct_fixed_pattern, windowed_transform,
    WindowMode, MAX_AST_WINDOW, MIN_AST_WINDOW,
};
pub use baseline::{tfi, tfp};
pub use denoise::{
    median_abs, refine, soft_threshold, wavelet_denoise, ConstantBlend, Denoiser, Refiner,
    SoftThreshold, MAD_SCALE,
};
pub use fusion::{temporal_fuse, DifferenceMask, FusionMask};
pub use pipeline::{
    restore_recurrent, restore_stages, Restorer, RestorerParams, RestorerState, StageOutputs,
};
