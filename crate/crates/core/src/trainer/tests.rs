use super::*;
use crate::dataset::{generate_synthetic, split_indices, windows_for};

fn tiny() -> (RunConfig, Vec<SampleWindow>) {
    let mut c = RunConfig::preset("test").unwrap();
    c.num_sequences = 12;
    c.base_width = 4;
    c.batch_size = 2;
    c.stage1_epochs = 1;
    c.stage2_epochs = 1;
    c.disc_steps_per_gen_step = 2;
    let videos = generate_synthetic(&c.manifest()).unwrap();
    let split = split_indices(videos.len(), c.data_seed);
    let data = windows_for(&videos, &split.train, c.input_frames, c.window_stride);
    (c, data)
}

#[test]
fn schedule_endpoints_and_midpoint() {
    assert_eq!(lr_schedule(0, 10, 1e-3, 1e-4), 1e-3);
    assert_eq!(lr_schedule(10, 10, 1e-3, 1e-4), 1e-4);
    assert!((lr_schedule(5, 10, 1e-3, 1e-4) - 5.5e-4).abs() < 1e-15);
    assert_eq!(epoch_lr(0, 30, [1e-3, 1e-4]), 1e-3);
    assert_eq!(epoch_lr(29, 30, [1e-3, 1e-4]), 1e-4);
    assert_eq!(epoch_lr(0, 1, [1e-3, 1e-4]), 1e-3);
}

#[test]
#[should_panic(expected = "beyond total")]
fn schedule_rejects_steps_past_the_end() {
    lr_schedule(11, 10, 1e-3, 1e-4);
}

#[test]
fn step_lines_mark_missing_fields() {
    let l = step_line(3, Stage::I, Some(0.5), Some(0.25), None, None, None);
    assert_eq!(l, "step=3 stage=I cf=5.000000e-1 dg=2.500000e-1 d_loss=- gp=- rn_adv=-");
}

#[test]
fn zero_epochs_return_the_initialisation() {
    let (mut c, data) = tiny();
    c.stage1_epochs = 0;
    let out = train_stage1(&c, &data, TrainOptions::default()).unwrap();
    let fresh: Network<f32> = Network::new(c.cfg_spec(), mix64(c.seed, SEED_CFG)).unwrap();
    assert_eq!(out.checkpoint.cfg.unwrap().params().digest(), fresh.params().digest());
    assert_eq!(out.checkpoint.epoch, 0);
}

#[test]
fn stage_two_rejects_a_stage_two_checkpoint() {
    let (c, data) = tiny();
    let s1 = train_stage1(&c, &data, TrainOptions { max_steps: Some(1), ..Default::default() }).unwrap().checkpoint;
    let mut wrong = s1.clone();
    wrong.stage = Stage::II;
    let err = train_stage2(&c, &data, &wrong, TrainOptions::default()).err().unwrap();
    assert!(matches!(err, DgganError::Contract(_)), "{err}");
}

struct Counter {
    disc: u64,
    gen: u64,
    frozen: Option<String>,
}

impl TrainHooks for Counter {
    fn observe(&mut self, event: TrainEvent, _step: u64, nets: NetsView<'_>) {
        match event {
            TrainEvent::DiscStep => self.disc += 1,
            TrainEvent::GenStep => self.gen += 1,
            _ => {}
        }
        let h = nets.cfg.unwrap().params().digest() + &nets.dgg.unwrap().params().digest();
        assert_eq!(self.frozen.get_or_insert(h.clone()), &h);
    }
}

#[test]
fn stage_two_runs_k_critic_updates_per_generator_step() {
    let (mut c, data) = tiny();
    c.disc_steps_per_gen_step = 5;
    c.batch_size = 1;
    c.stage2_epochs = 100;
    let s1 = train_stage1(&c, &data, TrainOptions { max_steps: Some(1), ..Default::default() }).unwrap().checkpoint;
    let mut counter = Counter { disc: 0, gen: 0, frozen: None };
    let out = train_stage2(&c, &data, &s1, TrainOptions { hooks: Some(&mut counter), max_steps: Some(10), ..Default::default() })
        .unwrap();
    assert_eq!((counter.gen, counter.disc), (10, 50));
    assert_eq!(out.checkpoint.cfg.unwrap().params().digest(), s1.cfg.unwrap().params().digest());
    assert!(out.log.steps.iter().all(|l| l.contains("stage=II cf=- dg=-")));
}

#[test]
fn checkpoint_round_trip_and_resume_reproduce_the_log() {
    let (mut c, data) = tiny();
    c.stage1_epochs = 2;
    c.checkpoint_every = 1;
    let dir = tempfile::tempdir().unwrap();
    let full = train_stage1(&c, &data, TrainOptions { run_dir: Some(dir.path().join("a")), ..Default::default() }).unwrap();
    let ck = Checkpoint::load(&dir.path().join("a/ckpt_stageI_1")).unwrap();
    assert_eq!(ck.epoch, 1);
    assert_eq!(ck.config, c);
    let resumed = train_stage1(&c, &data, TrainOptions { resume: Some(ck), ..Default::default() }).unwrap();
    let tail: Vec<_> = full.log.steps.iter().skip(full.log.steps.len() - resumed.log.steps.len()).cloned().collect();
    assert_eq!(resumed.log.steps, tail);
    assert_eq!(
        resumed.checkpoint.dgg.unwrap().params().digest(),
        full.checkpoint.dgg.as_ref().unwrap().params().digest()
    );
    let on_disk = Checkpoint::load(&dir.path().join("a/ckpt_stageI_2")).unwrap();
    assert_eq!(on_disk.dgg.unwrap().params().digest(), full.checkpoint.dgg.unwrap().params().digest());
    assert_eq!(list_checkpoints(&dir.path().join("a")).len(), 2);
}

#[test]
fn rng_state_round_trips() {
    use rand::Rng;
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let _: u64 = r.random();
    let state = RngState::capture(&r);
    let mut back = state.restore().unwrap();
    assert_eq!(r.random::<u64>(), back.random::<u64>());
}
