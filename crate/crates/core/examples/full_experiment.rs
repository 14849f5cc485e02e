//! Data, stage I, stage II, the coarse-only ablation and evaluation in one
//! go. Extra arguments are `key=value` config overrides, e.g.
//!
//! ```text
//! cargo run --release --example full_experiment -- preset="test" stage1_epochs=2 stage2_epochs=2
//! ```

use dggan::pipeline::run_experiment;
use dggan::trainer::RunConfig;

fn main() -> dggan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let config = RunConfig::from_toml_str(&overrides.join("\n"))?;
    let out = std::env::temp_dir().join(format!("dggan_full_experiment_{}", config.seed));
    let started = std::time::Instant::now();
    let exp = run_experiment(&config, Some(&out), 2)?;
    println!("{}", exp.report.table());
    println!("runs in {} ({:.0} s)", out.display(), started.elapsed().as_secs_f64());
    Ok(())
}
