//! Autoregressive rollout and the per-sample prediction grid, using a
//! briefly trained model. Writes PNGs next to the run directory.

use dggan::dataset::{eval_windows, generate_synthetic, split_indices, windows_for};
use dggan::inference::{rollout, FullModel, Predictor};
use dggan::metrics::ssim;
use dggan::render::{prediction_grid, save_png, strip};
use dggan::trainer::{train_stage1, train_stage2, RunConfig, TrainOptions};

fn main() -> dggan::Result<()> {
    let mut c = RunConfig::preset("test")?;
    c.num_sequences = 100;
    c.stage1_epochs = 2;
    c.stage2_epochs = 1;
    let videos = generate_synthetic(&c.manifest())?;
    let split = split_indices(videos.len(), c.data_seed);
    let train = windows_for(&videos, &split.train, c.input_frames, c.window_stride);
    let s1 = train_stage1(&c, &train, TrainOptions::default())?.checkpoint;
    let s2 = train_stage2(&c, &train, &s1, TrainOptions::default())?.checkpoint;
    let model = FullModel { cfg: s2.require("cfg")?, dgg: s2.require("dgg")?, rn: s2.require("rn")? };

    let test = eval_windows(&videos, &split.test, c.input_frames, 2, c.window_stride);
    let w = &test[0];
    let r = rollout(&model, &w.inputs, 4);
    for (k, f) in r.frames.iter().enumerate() {
        match w.future.get(k) {
            Some(t) => println!("step {}: ssim {:.4}", k + 1, ssim(f, t)?),
            None => println!("step {}: beyond the recorded sequence", k + 1),
        }
    }
    let out = std::env::temp_dir().join("dggan_rollout");
    save_png(&strip(&r.frames), &out.join("rollout.png"))?;
    let p = model.predict_one(&w.inputs);
    save_png(&prediction_grid(&w.inputs, w.future.first(), &p), &out.join("grid.png"))?;
    println!("images in {}", out.display());
    Ok(())
}
