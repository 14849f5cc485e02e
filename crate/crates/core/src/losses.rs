//! Training objectives. Frame batches are `N×3×H×W` tensors in `[-1, 1]`;
//! critic inputs are the candidate stacked with the condition frame
//! (`N×6×H×W`).

use dggan_autograd::{Element, Tensor};
use rand::{Rng, RngCore};

use crate::error::{DgganError, Result};
use crate::networks::Critic;

pub const DEFAULT_LAMBDA: f64 = 10.0;

/// A scalar loss with the named terms it is the sum of.
#[derive(Clone, Debug)]
pub struct LossValue<E: Element> {
    pub value: Tensor<E>,
    pub breakdown: Vec<(&'static str, f64)>,
}

impl<E: Element> LossValue<E> {
    fn single(name: &'static str, value: Tensor<E>) -> Self {
        let v = value.item().to_f64_lossy();
        LossValue { value, breakdown: vec![(name, v)] }
    }

    pub fn item(&self) -> f64 {
        self.value.item().to_f64_lossy()
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.breakdown.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

fn same_shape<E: Element>(a: &Tensor<E>, b: &Tensor<E>, what: &str) {
    assert_eq!(a.shape(), b.shape(), "{what}: operand shapes differ");
}

/// Mean squared error between the coarse prediction and the next frame.
pub fn coarse_loss<E: Element>(coarse: &Tensor<E>, next: &Tensor<E>) -> LossValue<E> {
    same_shape(coarse, next, "coarse_loss");
    LossValue::single("cf", coarse.sub(next).sqr().mean_all())
}

/// Mean absolute error between the guide and half the true difference.
pub fn difference_loss<E: Element>(guide: &Tensor<E>, diff: &Tensor<E>) -> LossValue<E> {
    same_shape(guide, diff, "difference_loss");
    let half = E::from_f64_lossy(0.5);
    LossValue::single("dg", guide.sub(&diff.scale(half)).abs().mean_all())
}

pub fn stage1_loss<E: Element>(coarse: &Tensor<E>, next: &Tensor<E>, guide: &Tensor<E>, diff: &Tensor<E>) -> LossValue<E> {
    let cf = coarse_loss(coarse, next);
    let dg = difference_loss(guide, diff);
    LossValue { value: cf.value.add(&dg.value), breakdown: vec![("cf", cf.item()), ("dg", dg.item())] }
}

/// Where the interpolation weights of the gradient penalty come from.
pub enum Epsilon<'a> {
    /// One uniform `[0, 1)` draw per example.
    Sample(&'a mut dyn RngCore),
    /// The same weight for every example; `0` puts every interpolate on the
    /// fake pair, `1` on the real one.
    Fixed(f64),
}

impl Epsilon<'_> {
    fn draw(&mut self, n: usize) -> Vec<f64> {
        match self {
            Epsilon::Sample(rng) => (0..n).map(|_| rng.random::<f64>()).collect(),
            Epsilon::Fixed(e) => vec![*e; n],
        }
    }
}

/// `x̂ = ε·real + (1 − ε)·fake` per example, as a fresh leaf.
pub fn interpolate<E: Element>(real: &Tensor<E>, fake: &Tensor<E>, eps: &[f64]) -> Tensor<E> {
    same_shape(real, fake, "interpolate");
    let n = real.dim(0);
    assert_eq!(eps.len(), n, "one interpolation weight per example");
    let per = real.numel() / n.max(1);
    let data = real
        .data()
        .iter()
        .zip(fake.data())
        .enumerate()
        .map(|(i, (&r, &f))| {
            let e = E::from_f64_lossy(eps[i / per]);
            e * r + (E::one() - e) * f
        })
        .collect();
    Tensor::leaf(data, real.shape())
}

/// `λ · mean_n (‖∇ D(x̂_n)‖₂ − 1)²`, differentiable with respect to the
/// critic's parameters.
pub fn gradient_penalty<E: Element, C: Critic<E> + ?Sized>(
    critic: &C,
    real_pair: &Tensor<E>,
    fake_pair: &Tensor<E>,
    lambda: f64,
    eps: &mut Epsilon<'_>,
) -> Result<LossValue<E>> {
    assert!(lambda >= 0.0, "gradient penalty weight must be non-negative");
    let n = real_pair.dim(0);
    let weights = eps.draw(n);
    if lambda == 0.0 {
        return Ok(LossValue::single("gp", Tensor::scalar(E::zero())));
    }
    let xhat = interpolate(&real_pair.detach(), &fake_pair.detach(), &weights);
    let score = critic.score(&xhat).sum_all();
    let grad = score.grad(&[&xhat], true).pop().flatten().unwrap_or_else(|| Tensor::zeros(xhat.shape()));
    if !grad.all_finite() {
        return Err(DgganError::Training("critic input gradient is not finite in the gradient penalty".into()));
    }
    let norms = grad.flatten_from1().sqr().sum_to(&[n, 1]).sqrt();
    let penalty = norms.add_scalar(-E::one()).sqr().mean_all().scale(E::from_f64_lossy(lambda));
    if !penalty.all_finite() {
        return Err(DgganError::Training(format!("gradient penalty is not finite (norms {:?})", norms)));
    }
    Ok(LossValue::single("gp", penalty))
}

/// Candidate frames stacked with their condition frames along channels.
pub fn pair<E: Element>(candidate: &Tensor<E>, cond: &Tensor<E>) -> Tensor<E> {
    same_shape(candidate, cond, "pair");
    Tensor::cat(&[candidate, cond], 1)
}

/// Critic objective: `E[D(fake)] − E[D(real)] + GP`. The fake batch is
/// detached, so only the critic receives gradient.
pub fn disc_loss<E: Element, C: Critic<E> + ?Sized>(
    critic: &C,
    real: &Tensor<E>,
    fake: &Tensor<E>,
    cond: &Tensor<E>,
    lambda: f64,
    eps: &mut Epsilon<'_>,
) -> Result<LossValue<E>> {
    same_shape(real, fake, "disc_loss");
    let real_pair = pair(real, cond);
    let fake_pair = pair(&fake.detach(), cond);
    let d_fake = critic.score(&fake_pair).mean_all();
    let d_real = critic.score(&real_pair).mean_all();
    let gp = gradient_penalty(critic, &real_pair, &fake_pair, lambda, eps)?;
    let value = d_fake.sub(&d_real).add(&gp.value);
    let breakdown = vec![
        ("wass_fake", d_fake.item().to_f64_lossy()),
        ("wass_real", -d_real.item().to_f64_lossy()),
        ("gp", gp.item()),
    ];
    Ok(LossValue { value, breakdown })
}

/// Generator objective `−E[D(refined)]` with the critic held fixed.
pub fn rn_adv_loss<E: Element, C: Critic<E> + ?Sized>(critic: &C, refined: &Tensor<E>, cond: &Tensor<E>) -> LossValue<E> {
    LossValue::single("rn_adv", critic.score_frozen(&pair(refined, cond)).mean_all().neg())
}

/// Mean absolute error; the optional pixel term added to adversarial
/// generator steps.
pub fn l1_loss<E: Element>(a: &Tensor<E>, b: &Tensor<E>) -> LossValue<E> {
    same_shape(a, b, "l1_loss");
    LossValue::single("l1", a.sub(b).abs().mean_all())
}
