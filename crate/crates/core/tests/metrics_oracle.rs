//! SSIM against a literal per-window implementation, plus metric
//! properties.

mod common;

use common::{brute_force_ssim, random_frame};
use dggan::dataset::Frame;
use dggan::metrics::{mse, psnr, ssim};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ssim_matches_the_literal_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let a = random_frame(&mut rng, 16, 16);
        // Correlated pair so SSIM is not near zero.
        let b = Frame::new(16, 16, a.pixels().iter().map(|&v| (0.7 * v + rng.random_range(-0.3f32..0.3)).clamp(-1.0, 1.0)).collect());
        let (fast, slow) = (ssim(&a, &b).unwrap(), brute_force_ssim(&a, &b));
        assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
    }
}

#[test]
fn non_square_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_frame(&mut rng, 16, 24);
    let b = random_frame(&mut rng, 16, 24);
    assert!((ssim(&a, &b).unwrap() - brute_force_ssim(&a, &b)).abs() < 1e-6);
}

#[test]
fn small_frames_fall_back_to_one_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_frame(&mut rng, 8, 8);
    let s = ssim(&a, &a).unwrap();
    assert!((s - 1.0).abs() < 1e-12);
    let b = random_frame(&mut rng, 8, 8);
    assert!(ssim(&a, &b).unwrap().abs() <= 1.0);
}

fn arb_frame() -> impl Strategy<Value = Frame> {
    proptest::collection::vec(-1.0f32..=1.0, 3 * 16 * 16).prop_map(|p| Frame::new(16, 16, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetric_and_self_identical(a in arb_frame(), b in arb_frame()) {
        prop_assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let s = ssim(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn psnr_falls_as_noise_grows(pixels in proptest::collection::vec(-0.5f32..=0.5, 3 * 16 * 16), seed in 0u64..1000) {
        let a = Frame::new(16, 16, pixels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f32> = (0..a.len()).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let mut last = f64::INFINITY;
        for level in [0.01f32, 0.02, 0.05, 0.1, 0.2, 0.4] {
            let b = Frame::new(16, 16, a.pixels().iter().zip(&noise).map(|(&p, &n)| p + level * n).collect());
            let p = psnr(&a, &b).unwrap();
            prop_assert!(p < last, "level {}: {} !< {}", level, p, last);
            last = p;
        }
    }
}
