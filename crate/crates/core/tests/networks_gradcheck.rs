//! Parameter gradients of every network against central finite differences,
//! in f64 on base width 4 at 32×32.

use dggan::networks::{Network, NetworkSpec};
use dggan_autograd::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type T = Tensor<f64>;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> T {
    let n = shape.iter().product();
    T::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), shape)
}

/// Checks a handful of entries of every trainable tensor.
fn check(spec: NetworkSpec, batch_stats: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (h, w) = spec.input_resolution;
    let (in_channels, name) = (spec.in_channels, spec.kind.name());
    let is_disc = name == "DISC";
    let mut net: Network<f64> = Network::new(spec, 3).unwrap();
    // Larger weights than the 0.02 init keep the signal above rounding noise.
    net.params_mut().map_values(|p| {
        let d = p.value.data();
        if p.trainable && p.value.rank() > 1 { d.iter().map(|v| v * 20.0).collect() } else { d.to_vec() }
    });
    let x = random(&[2, in_channels, h, w], &mut rng);
    let out_shape = if is_disc { vec![2] } else { vec![2, 3, h, w] };
    let probe = random(&out_shape, &mut rng);
    let loss = |net: &Network<f64>| {
        let y = if batch_stats { net.forward_batch_stats(&x) } else { net.forward(&x) };
        y.mul(&probe).sum_all()
    };
    let grads = loss(&net).backward();
    let slots: Vec<usize> = net.params().trainable().map(|(i, _)| i).collect();
    let mut checked = 0;
    for slot in slots {
        let value = net.params().tensor(slot).clone();
        let analytic = grads.get(&value).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; value.numel()]);
        for _ in 0..3 {
            let j = rng.random_range(0..value.numel());
            let eval = |net: &mut Network<f64>, delta: f64| {
                let mut d = value.to_vec();
                d[j] += delta;
                net.params_mut().set(slot, d);
                loss(net).item()
            };
            let eps = 1e-5;
            let numeric = (eval(&mut net, eps) - eval(&mut net, -eps)) / (2.0 * eps);
            net.params_mut().set(slot, value.to_vec());
            let scale = numeric.abs().max(analytic[j].abs()).max(1e-4);
            assert!(
                (analytic[j] - numeric).abs() / scale < 1e-3,
                "{} slot {slot} elem {j}: autodiff {} numeric {numeric}",
                name,
                analytic[j]
            );
            checked += 1;
        }
    }
    assert!(checked > 30);
}

#[test]
fn cfg_training_pass() {
    check(NetworkSpec::cfg(4, 4, (32, 32)), true);
}

#[test]
fn dgg_inference_pass() {
    check(NetworkSpec::dgg(4, 4, (32, 32)), false);
}

#[test]
fn rn_training_pass() {
    check(NetworkSpec::rn(4, (32, 32)), true);
}

#[test]
fn disc() {
    check(NetworkSpec::disc(4, (32, 32)), false);
}
