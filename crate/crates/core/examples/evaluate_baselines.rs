//! Scores the copy-last baseline and an untrained full model with SSIM, PSNR
//! and MSE at horizons 1 and 2, and prints the comparison table.

use dggan::dataset::{eval_windows, generate_synthetic, split_indices};
use dggan::inference::{CopyLast, FullModel, Predictor};
use dggan::metrics::evaluate_predictors;
use dggan::networks::Network;
use dggan::trainer::RunConfig;

fn main() -> dggan::Result<()> {
    let mut c = RunConfig::preset("test")?;
    c.num_sequences = 200;
    let videos = generate_synthetic(&c.manifest())?;
    let split = split_indices(videos.len(), c.data_seed);
    let windows = eval_windows(&videos, &split.test, c.input_frames, 2, c.window_stride);
    let (cfg, dgg, rn) = (Network::new(c.cfg_spec(), 1)?, Network::new(c.dgg_spec(), 2)?, Network::new(c.rn_spec(), 3)?);
    let copy = CopyLast { t: c.input_frames };
    let full = FullModel { cfg: &cfg, dgg: &dgg, rn: &rn };
    let predictors: [&dyn Predictor; 2] = [&copy, &full];
    let report = evaluate_predictors(&predictors, &windows, 2)?;
    println!("{}", report.table());
    print!("{}", report.to_report_string());
    Ok(())
}
