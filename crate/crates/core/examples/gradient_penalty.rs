//! The gradient penalty on two linear critics whose input gradients are known
//! in closed form, and on an untrained discriminator.

use dggan::losses::{disc_loss, gradient_penalty, Epsilon};
use dggan::networks::{FnCritic, Network, NetworkSpec};
use dggan_autograd::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type T = Tensor<f64>;

fn main() -> dggan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut random = |shape: &[usize]| T::from_vec((0..shape.iter().product()).map(|_| rng.random_range(-1.0..1.0)).collect(), shape);
    let (real, fake) = (random(&[4, 6, 4, 4]), random(&[4, 6, 4, 4]));

    let d = 96f64;
    let mean = FnCritic(|x: &T| x.flatten_from1().mean_to(&[x.dim(0), 1]).reshape(&[x.dim(0)]));
    let gp = gradient_penalty(&mean, &real, &fake, 10.0, &mut Epsilon::Fixed(0.3))?;
    println!("mean critic: gp {:.6}, closed form {:.6}", gp.item(), 10.0 * (1.0 / d.sqrt() - 1.0).powi(2));
    let sum = FnCritic(|x: &T| x.flatten_from1().sum_to(&[x.dim(0), 1]).reshape(&[x.dim(0)]));
    let gp = gradient_penalty(&sum, &real, &fake, 1.0, &mut Epsilon::Fixed(0.3))?;
    println!("sum critic:  gp {:.6}, closed form {:.6}", gp.item(), (d.sqrt() - 1.0).powi(2));

    let disc: Network<f64> = Network::new(NetworkSpec::disc(8, (32, 32)), 1)?;
    let (real, fake, cond) = (random(&[4, 3, 32, 32]), random(&[4, 3, 32, 32]), random(&[4, 3, 32, 32]));
    let mut eps_rng = ChaCha8Rng::seed_from_u64(1);
    let loss = disc_loss(&disc, &real, &fake, &cond, 10.0, &mut Epsilon::Sample(&mut eps_rng))?;
    println!("untrained critic: {:?}", loss.breakdown);
    let grads = loss.value.backward();
    let with_grad = disc.params().trainable().filter(|(_, t)| grads.get(t).is_some()).count();
    println!("{with_grad} trainable tensors receive gradient through the penalty");
    Ok(())
}
