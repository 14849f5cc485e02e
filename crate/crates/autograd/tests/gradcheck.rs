//! Central finite-difference checks of every backward rule, first and second
//! order, in f64.

use dggan_autograd::{no_grad, Tensor};
use proptest::prelude::*;

type T = Tensor<f64>;

fn pseudo(len: usize, seed: u64) -> Vec<f64> {
    // Small LCG so the fixtures need no RNG crate.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..len)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

/// Compares autodiff gradients of `f` against central differences for every
/// element of every input. `f` must return a scalar.
fn check(inputs: &[(Vec<f64>, Vec<usize>)], f: impl Fn(&[T]) -> T, rel_tol: f64) {
    let leaves: Vec<T> = inputs.iter().map(|(d, s)| T::leaf(d.clone(), s)).collect();
    let out = f(&leaves);
    let grads = out.backward();
    let eps = 1e-6;
    for (i, (data, shape)) in inputs.iter().enumerate() {
        let analytic = grads
            .get(&leaves[i])
            .map(|g| g.to_vec())
            .unwrap_or_else(|| vec![0.0; data.len()]);
        for j in 0..data.len() {
            let eval = |delta: f64| {
                let args: Vec<T> = inputs
                    .iter()
                    .enumerate()
                    .map(|(k, (d, s))| {
                        let mut d = d.clone();
                        if k == i {
                            d[j] += delta;
                        }
                        T::leaf(d, s)
                    })
                    .collect();
                f(&args).item()
            };
            let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
            let err = (analytic[j] - numeric).abs();
            let scale = numeric.abs().max(analytic[j].abs()).max(1e-3);
            assert!(
                err / scale < rel_tol,
                "input {i} elem {j} shape {shape:?}: autodiff {} vs numeric {numeric}",
                analytic[j]
            );
        }
    }
}

#[test]
fn elementwise_chain() {
    let a = (pseudo(12, 1), vec![3, 4]);
    let b = (pseudo(12, 2).iter().map(|v| v + 2.5).collect(), vec![3, 4]);
    check(
        &[a, b],
        |x| {
            let (a, b) = (&x[0], &x[1]);
            let y = (a * b).tanh() + a.div(b) - a.sqr().scale(0.3);
            (y.add_scalar(4.0).sqrt() + b.neg().abs()).sum_all()
        },
        1e-6,
    );
}

#[test]
fn leaky_relu_and_abs_away_from_kink() {
    let a: Vec<f64> = pseudo(20, 3).iter().map(|v| if v.abs() < 0.05 { 0.3 } else { *v }).collect();
    check(&[(a, vec![20])], |x| (x[0].leaky_relu(0.2).sqr() + x[0].abs()).sum_all(), 1e-6);
}

#[test]
fn broadcasting_and_reductions() {
    let a = (pseudo(24, 4), vec![2, 3, 4]);
    let b = (pseudo(3, 5), vec![1, 3, 1]);
    check(
        &[a, b],
        |x| {
            let d = &x[0] - &x[1];
            let m = d.sqr().mean_to(&[1, 3, 1]);
            (d.mul(&x[1]).sum_to(&[3, 1]).sqr().sum_all() + m.sum_all()).scale(0.5)
        },
        1e-6,
    );
}

#[test]
fn shape_ops() {
    let a = (pseudo(24, 6), vec![2, 3, 4]);
    let b = (pseudo(16, 7), vec![2, 2, 4]);
    check(
        &[a, b],
        |x| {
            let c = T::cat(&[&x[0], &x[1]], 1);
            let n = c.narrow(1, 2, 2).reshape(&[4, 4]);
            let p = x[1].pad_along(2, 1, 6);
            (n.t().matmul(&n).tanh().sum_all()) + p.sqr().sum_all()
        },
        1e-6,
    );
}

#[test]
fn conv_layers() {
    let x = (pseudo(2 * 3 * 8 * 8, 8), vec![2, 3, 8, 8]);
    let w = (pseudo(4 * 3 * 4 * 4, 9), vec![4, 3, 4, 4]);
    let wt = (pseudo(4 * 2 * 4 * 4, 10), vec![4, 2, 4, 4]);
    let p = (pseudo(4 * 4, 11), vec![4, 4, 1, 1]);
    check(
        &[x, w, wt, p],
        |v| {
            let h = v[0].conv2d(&v[1], 2, 1).tanh();
            let h = h.conv2d(&v[3], 1, 0);
            let up = h.conv_transpose2d(&v[2], 2, 1, (8, 8));
            up.sqr().sum_all()
        },
        1e-5,
    );
}

/// `sum((∇ₓ f)²)` with the gradient built under `create_graph`, differentiated
/// again with respect to the weights.
#[test]
fn second_order_through_conv_norm_and_linear() {
    let x = T::from_vec(pseudo(2 * 2 * 8 * 8, 12), &[2, 2, 8, 8]);
    let w1 = (pseudo(3 * 2 * 4 * 4, 13).iter().map(|v| v * 0.5).collect(), vec![3, 2, 4, 4]);
    let w2 = (pseudo(4 * 3 * 4 * 4, 14).iter().map(|v| v * 0.5).collect(), vec![4, 3, 4, 4]);
    let fc = (pseudo(16, 15), vec![16, 1]);
    let critic = |x: &T, w1: &T, w2: &T, fc: &T| {
        let h = x.conv2d(w1, 2, 1);
        // Per-sample normalisation, as in a layer-norm.
        let n = h.dim(0);
        let mean = h.mean_to(&[n, 1, 1, 1]);
        let c = &h - &mean;
        let var = c.sqr().mean_to(&[n, 1, 1, 1]);
        let h = c.div(&var.add_scalar(1e-5).sqrt()).leaky_relu(0.2);
        let h = h.conv2d(w2, 2, 1).tanh();
        h.flatten_from1().matmul(fc)
    };
    check(
        &[w1, w2, fc],
        |v| {
            let xi = x.to_leaf();
            let score = critic(&xi, &v[0], &v[1], &v[2]).sum_all();
            let gx = score.backward_create_graph().get(&xi).cloned().expect("input gradient");
            gx.flatten_from1().sqr().sum_to(&[2, 1]).sqrt().add_scalar(-1.0).sqr().mean_all()
        },
        1e-4,
    );
}

#[test]
fn second_order_through_transposed_conv() {
    let y = T::from_vec(pseudo(2 * 4 * 4, 16), &[1, 2, 4, 4]);
    let w = (pseudo(2 * 3 * 4 * 4, 17), vec![2, 3, 4, 4]);
    check(
        &[w],
        |v| {
            let yi = y.to_leaf();
            let out = yi.conv_transpose2d(&v[0], 2, 1, (8, 8)).tanh().sqr().sum_all();
            let gy = out.backward_create_graph().get(&yi).cloned().unwrap();
            gy.sqr().sum_all()
        },
        1e-4,
    );
}

#[test]
fn no_grad_blocks_recording() {
    let a = T::leaf(vec![1.0, 2.0], &[2]);
    let b = {
        let _g = no_grad();
        a.sqr()
    };
    assert!(!b.requires_grad());
    assert!(a.sqr().requires_grad());
}

#[test]
fn constants_receive_no_gradient() {
    let a = T::leaf(vec![1.0, 2.0], &[2]);
    let c = T::from_vec(vec![3.0, 4.0], &[2]);
    let g = (&a * &c).sum_all().backward();
    assert_eq!(g.get(&a).unwrap().to_vec(), vec![3.0, 4.0]);
    assert!(g.get(&c).is_none());
}

#[test]
fn reused_node_accumulates() {
    let a = T::leaf(vec![3.0], &[1]);
    let g = (&a * &a + a.scale(2.0)).sum_all().backward();
    assert_eq!(g.get(&a).unwrap().to_vec(), vec![8.0]);
}

proptest! {
    #[test]
    fn matmul_gradient_is_outer_structure(n in 1usize..4, k in 1usize..4, m in 1usize..4, seed in 0u64..1000) {
        let a = T::leaf(pseudo(n * k, seed), &[n, k]);
        let b = T::leaf(pseudo(k * m, seed + 1), &[k, m]);
        let g = a.matmul(&b).sum_all().backward();
        // d/dA sum(AB) = 1·Bᵀ: every row of the gradient equals the row sums of B.
        let ga = g.get(&a).unwrap().to_vec();
        let bd = b.to_vec();
        for i in 0..n {
            for j in 0..k {
                let expect: f64 = (0..m).map(|c| bd[j * m + c]).sum();
                prop_assert!((ga[i * k + j] - expect).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn targeted_grad_matches_full_backward_and_skips_other_leaves() {
    let x = T::leaf(pseudo(2 * 2 * 8 * 8, 20), &[2, 2, 8, 8]);
    let w = T::leaf(pseudo(3 * 2 * 4 * 4, 21), &[3, 2, 4, 4]);
    let f = x.conv2d(&w, 2, 1).tanh().sum_all();
    let full = f.backward();
    let only = f.grad(&[&x], false);
    assert_eq!(only[0].as_ref().unwrap().to_vec(), full.get(&x).unwrap().to_vec());
    let unrelated = T::leaf(vec![1.0], &[1]);
    assert!(f.grad(&[&unrelated], false)[0].is_none());
}
