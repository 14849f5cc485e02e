//! Next-frame video prediction with a coarse generator, a difference-guide
//! generator and an adversarially trained refine network.
//!
//! * [`dataset`]: synthetic moving-shape videos, frame directories, windows
//! * [`networks`]: the four networks and their parameter archives
//! * [`losses`]: stage-I losses, critic loss with gradient penalty
//! * [`trainer`]: the two training stages and the coarse-only ablation
//! * [`inference`]: predictors, guide fusion and autoregressive rollout
//! * [`metrics`]: MSE, PSNR, SSIM and report aggregation
//! * [`cli`]: the `dggan` command line

mod archive;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod inference;
pub mod losses;
pub mod metrics;
pub mod networks;
pub mod pipeline;
pub mod render;
pub mod trainer;

pub use error::{DgganError, Result};
