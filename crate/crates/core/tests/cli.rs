use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
preset = "test"
num_sequences = 24
base_width = 4
batch_size = 4
stage1_epochs = 1
stage2_epochs = 1
disc_steps_per_gen_step = 1
"#;

fn dggan(args: &[&str], runs: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dggan"))
        .args(args)
        .env("DGGAN_RUNS_DIR", runs)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout_path(o: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&o.stdout).lines().last().expect("path printed").trim())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_config_key_lists_valid_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "batch_sise = 4\n");
    let o = dggan(&["gen-data", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("batch_sise") && e.contains("batch_size") && e.contains("stage1_lr"), "{e}");
}

#[test]
fn resolution_not_divisible_by_eight_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "height = 30\nwidth = 30\n");
    let o = dggan(&["gen-data", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("multiples of 8"), "{}", stderr(&o));
}

#[test]
fn stage_two_needs_the_stage_one_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let o = dggan(&["train-stage2", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--stage1-ckpt"), "{}", stderr(&o));
}

#[test]
fn gen_data_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = dggan(&["gen-data", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let data: Vec<_> = names.iter().filter(|n| n.to_string_lossy() != "run.json").collect();
    assert!(data.len() >= 26, "24 videos, manifest and config expected");
    for n in data {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    assert!(a.join("run.json").exists());
}

#[test]
fn train_evaluate_render_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let cfg = write(tmp.path(), "c.toml", SMALL);

    let o = dggan(&["train-stage1", "--config", &cfg, "--seed", "3", "--deterministic"], &runs);
    assert!(o.status.success(), "{}", stderr(&o));
    let s1 = stdout_path(&o);
    assert!(s1.starts_with(&runs), "run directories default to DGGAN_RUNS_DIR");
    let run1 = s1.parent().unwrap();
    for f in ["run.json", "config.toml", "train.log", "epochs.log"] {
        assert!(run1.join(f).exists(), "{f}");
    }
    let resolved = fs::read_to_string(run1.join("config.toml")).unwrap();
    assert!(resolved.contains("seed = 3") && resolved.contains("deterministic = true"));
    let first = fs::read_to_string(run1.join("train.log")).unwrap();
    assert!(first.lines().next().unwrap().starts_with("step=1 stage=I cf="));

    let s1s = s1.to_str().unwrap();
    let o = dggan(&["train-stage2", "--config", &cfg, "--seed", "3", "--stage1-ckpt", s1s], &runs);
    assert!(o.status.success(), "{}", stderr(&o));
    let s2 = stdout_path(&o);
    let o = dggan(&["train-cfgan", "--config", &cfg, "--seed", "3", "--stage1-ckpt", s1s], &runs);
    assert!(o.status.success(), "{}", stderr(&o));
    let cf = stdout_path(&o);

    let out = tmp.path().join("eval");
    let o = dggan(
        &[
            "evaluate",
            "--ckpt",
            s2.to_str().unwrap(),
            "--cfgan-ckpt",
            cf.to_str().unwrap(),
            "--horizons",
            "1,2",
            "--out",
            out.to_str().unwrap(),
        ],
        &runs,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("metrics.txt")).unwrap();
    let rows: Vec<_> = report.lines().filter(|l| l.starts_with("variant=")).collect();
    assert_eq!(rows.len(), 8, "{report}");
    assert!(report.contains("window=11") && report.contains("sigma=1.5"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DGGAN"));

    let o = dggan(&["evaluate", "--ckpt", s2.to_str().unwrap(), "--horizons", "0"], &runs);
    assert_eq!(o.status.code(), Some(2));

    let o = dggan(&["evaluate", "--ckpt", s1s, "--variant", "dggan"], &runs);
    assert_eq!(o.status.code(), Some(2), "stage-I checkpoint cannot run DGGAN");

    let grid_dir = tmp.path().join("grid");
    let o = dggan(&["render-grid", "--ckpt", s2.to_str().unwrap(), "--out", grid_dir.to_str().unwrap()], &runs);
    assert!(o.status.success(), "{}", stderr(&o));
    let img = image::open(stdout_path(&o)).unwrap();
    assert_eq!((img.width(), img.height()), (2 + 5 * 34, 2 + 2 * 34));

    let o = dggan(&["render-grid", "--ckpt", s2.to_str().unwrap(), "--sample", "9999"], &runs);
    assert_eq!(o.status.code(), Some(2));

    let o = dggan(&["rollout", "--ckpt", s2.to_str().unwrap(), "--frames", "3", "--out", tmp.path().join("roll").to_str().unwrap()], &runs);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("step=1 ssim=") && text.contains("step=3 (no ground truth)"), "{text}");
}

#[test]
fn zero_epoch_stage_one_checkpoints_the_initialisation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &format!("{SMALL}\nstage1_epochs = 0\n").replace("stage1_epochs = 1\n", ""));
    let out = tmp.path().join("r");
    let o = dggan(&["train-stage1", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("ckpt_stageI_0/cfg.safetensors").exists());
    assert_eq!(fs::read_to_string(out.join("train.log")).unwrap(), "");
}
