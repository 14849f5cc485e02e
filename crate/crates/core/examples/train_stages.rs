//! Stage I, then stage II on the frozen stage-I generators, on a small
//! synthetic set. Checkpoints and logs go to a temporary run directory.

use dggan::dataset::{generate_synthetic, split_indices, windows_for};
use dggan::trainer::{list_checkpoints, train_stage1, train_stage2, RunConfig, TrainOptions};

fn main() -> dggan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut c = RunConfig::preset("test")?;
    c.num_sequences = 200;
    c.stage1_epochs = 3;
    c.stage2_epochs = 2;
    c.checkpoint_every = 1;
    let videos = generate_synthetic(&c.manifest())?;
    let split = split_indices(videos.len(), c.data_seed);
    let train = windows_for(&videos, &split.train, c.input_frames, c.window_stride);
    let root = std::env::temp_dir().join("dggan_train_stages");

    let s1 = train_stage1(&c, &train, TrainOptions { run_dir: Some(root.join("stage1")), ..Default::default() })?;
    println!("stage I: {} steps, last {}", s1.log.steps.len(), s1.log.steps.last().map(String::as_str).unwrap_or("-"));
    let s2 = train_stage2(&c, &train, &s1.checkpoint, TrainOptions { run_dir: Some(root.join("stage2")), ..Default::default() })?;
    println!("stage II: {} steps, last {}", s2.log.steps.len(), s2.log.steps.last().map(String::as_str).unwrap_or("-"));
    for dir in list_checkpoints(&root.join("stage2")) {
        println!("checkpoint {}", dir.display());
    }
    Ok(())
}
