use std::sync::Arc;

use crate::backward::Op;
use crate::element::{matmul_into, Element, MatRef};
use crate::shape::{broadcast_shapes, broadcast_strides, for_each_strided, numel};
use crate::tensor::Tensor;

fn zip_map<E: Element>(a: &[E], b: &[E], f: impl Fn(E, E) -> E) -> Vec<E> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn map<E: Element>(a: &[E], f: impl Fn(E) -> E) -> Vec<E> {
    a.iter().map(|&x| f(x)).collect()
}

impl<E: Element> Tensor<E> {
    /// Brings `self` and `other` to a common shape, recording broadcasts.
    fn broadcast_pair(&self, other: &Tensor<E>) -> (Tensor<E>, Tensor<E>) {
        if self.shape() == other.shape() {
            return (self.clone(), other.clone());
        }
        let shape = broadcast_shapes(self.shape(), other.shape()).unwrap_or_else(|| {
            panic!("shapes {:?} and {:?} do not broadcast", self.shape(), other.shape())
        });
        (self.broadcast_to(&shape), other.broadcast_to(&shape))
    }

    pub fn add(&self, other: &Tensor<E>) -> Tensor<E> {
        let (a, b) = self.broadcast_pair(other);
        let data = zip_map(a.data(), b.data(), |x, y| x + y);
        Tensor::from_op(data, a.shape().to_vec(), Op::Add(a, b))
    }

    pub fn sub(&self, other: &Tensor<E>) -> Tensor<E> {
        let (a, b) = self.broadcast_pair(other);
        let data = zip_map(a.data(), b.data(), |x, y| x - y);
        Tensor::from_op(data, a.shape().to_vec(), Op::Sub(a, b))
    }

    pub fn mul(&self, other: &Tensor<E>) -> Tensor<E> {
        let (a, b) = self.broadcast_pair(other);
        let data = zip_map(a.data(), b.data(), |x, y| x * y);
        Tensor::from_op(data, a.shape().to_vec(), Op::Mul(a, b))
    }

    pub fn div(&self, other: &Tensor<E>) -> Tensor<E> {
        let (a, b) = self.broadcast_pair(other);
        let data = zip_map(a.data(), b.data(), |x, y| x / y);
        Tensor::from_op(data, a.shape().to_vec(), Op::Div(a, b))
    }

    pub fn neg(&self) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| -x), self.shape().to_vec(), Op::Neg(self.clone()))
    }

    pub fn scale(&self, c: E) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| x * c), self.shape().to_vec(), Op::Scale(self.clone(), c))
    }

    pub fn add_scalar(&self, c: E) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| x + c), self.shape().to_vec(), Op::AddScalar(self.clone()))
    }

    pub fn sqr(&self) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| x * x), self.shape().to_vec(), Op::Sqr(self.clone()))
    }

    pub fn sqrt(&self) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| x.sqrt()), self.shape().to_vec(), Op::Sqrt(self.clone()))
    }

    pub fn tanh(&self) -> Tensor<E> {
        Tensor::from_op(map(self.data(), |x| x.tanh()), self.shape().to_vec(), Op::Tanh(self.clone()))
    }

    /// Elementwise product with a constant mask (no gradient to the mask).
    pub(crate) fn mask_mul(&self, mask: Vec<E>) -> Tensor<E> {
        let data = zip_map(self.data(), &mask, |x, m| x * m);
        Tensor::from_op(data, self.shape().to_vec(), Op::MaskMul(self.clone(), Arc::new(mask)))
    }

    pub fn leaky_relu(&self, negative_slope: E) -> Tensor<E> {
        let mask = map(self.data(), |x| if x >= E::zero() { E::one() } else { negative_slope });
        self.mask_mul(mask)
    }

    pub fn relu(&self) -> Tensor<E> {
        self.leaky_relu(E::zero())
    }

    /// `|x|`, with subgradient 0 at the origin.
    pub fn abs(&self) -> Tensor<E> {
        let mask = map(self.data(), |x| {
            if x > E::zero() {
                E::one()
            } else if x < E::zero() {
                -E::one()
            } else {
                E::zero()
            }
        });
        self.mask_mul(mask)
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Tensor<E> {
        if self.shape() == shape {
            return self.clone();
        }
        let strides = broadcast_strides(self.shape(), shape);
        let src = self.data();
        let mut out = Vec::with_capacity(numel(shape));
        for_each_strided(shape, &strides, |_, off| out.push(src[off]));
        Tensor::from_op(out, shape.to_vec(), Op::BroadcastTo(self.clone()))
    }

    /// Sums over the dimensions along which `shape` would broadcast to `self`.
    pub fn sum_to(&self, shape: &[usize]) -> Tensor<E> {
        if self.shape() == shape {
            return self.clone();
        }
        let strides = broadcast_strides(shape, self.shape());
        let src = self.data();
        let mut out = vec![E::zero(); numel(shape)];
        for_each_strided(self.shape(), &strides, |i, off| out[off] = out[off] + src[i]);
        Tensor::from_op(out, shape.to_vec(), Op::SumTo(self.clone()))
    }

    /// Sum of all elements as a rank-0 tensor.
    pub fn sum_all(&self) -> Tensor<E> {
        let s = self.data().iter().fold(E::zero(), |acc, &x| acc + x);
        Tensor::from_op(vec![s], Vec::new(), Op::SumTo(self.clone()))
    }

    pub fn mean_all(&self) -> Tensor<E> {
        let n = E::from_usize(self.numel()).expect("element count fits the float type");
        self.sum_all().scale(E::one() / n)
    }

    /// Mean over the dimensions that `shape` broadcasts along.
    pub fn mean_to(&self, shape: &[usize]) -> Tensor<E> {
        let n = E::from_usize(self.numel() / numel(shape).max(1)).expect("count fits");
        self.sum_to(shape).scale(E::one() / n)
    }

    pub fn reshape(&self, shape: &[usize]) -> Tensor<E> {
        assert_eq!(numel(shape), self.numel(), "reshape {:?} -> {:?}", self.shape(), shape);
        let kind_op = Op::Reshape(self.clone());
        // Shares storage with the input.
        Tensor::from_op_shared(Arc::clone(&self.node.data), shape.to_vec(), kind_op)
    }

    /// Collapses every dimension after the first.
    pub fn flatten_from1(&self) -> Tensor<E> {
        let n = self.dim(0);
        self.reshape(&[n, self.numel() / n.max(1)])
    }

    /// Slice `len` entries along `dim` starting at `start`.
    pub fn narrow(&self, dim: usize, start: usize, len: usize) -> Tensor<E> {
        let shape = self.shape();
        assert!(start + len <= shape[dim], "narrow out of range");
        let outer: usize = shape[..dim].iter().product();
        let inner: usize = shape[dim + 1..].iter().product();
        let d = shape[dim];
        let src = self.data();
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * d + start) * inner;
            out.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut new_shape = shape.to_vec();
        new_shape[dim] = len;
        Tensor::from_op(out, new_shape, Op::Narrow { x: self.clone(), dim, start })
    }

    /// Inverse of [`narrow`](Self::narrow): embeds `self` into zeros of length
    /// `full` along `dim`, at offset `start`.
    pub fn pad_along(&self, dim: usize, start: usize, full: usize) -> Tensor<E> {
        let shape = self.shape();
        let len = shape[dim];
        assert!(start + len <= full, "pad_along out of range");
        let outer: usize = shape[..dim].iter().product();
        let inner: usize = shape[dim + 1..].iter().product();
        let src = self.data();
        let mut out = vec![E::zero(); outer * full * inner];
        for o in 0..outer {
            let dst = (o * full + start) * inner;
            out[dst..dst + len * inner].copy_from_slice(&src[o * len * inner..(o + 1) * len * inner]);
        }
        let mut new_shape = shape.to_vec();
        new_shape[dim] = full;
        Tensor::from_op(out, new_shape, Op::PadAlong { x: self.clone(), dim, start })
    }

    /// Concatenation along `dim`; all other dimensions must agree.
    pub fn cat(parts: &[&Tensor<E>], dim: usize) -> Tensor<E> {
        assert!(!parts.is_empty(), "cat of nothing");
        let first = parts[0].shape();
        for p in parts {
            assert_eq!(p.rank(), first.len(), "cat rank mismatch");
            for (i, (&a, &b)) in p.shape().iter().zip(first).enumerate() {
                assert!(i == dim || a == b, "cat shape mismatch {:?} vs {:?}", p.shape(), first);
            }
        }
        let outer: usize = first[..dim].iter().product();
        let inner: usize = first[dim + 1..].iter().product();
        let total: usize = parts.iter().map(|p| p.dim(dim)).sum();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let chunk = p.dim(dim) * inner;
                out.extend_from_slice(&p.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = first.to_vec();
        shape[dim] = total;
        let xs = parts.iter().map(|p| (*p).clone()).collect();
        Tensor::from_op(out, shape, Op::Cat { xs, dim })
    }

    /// Transpose of a rank-2 tensor.
    pub fn t(&self) -> Tensor<E> {
        assert_eq!(self.rank(), 2, "t() needs a matrix");
        let (r, c) = (self.dim(0), self.dim(1));
        let src = self.data();
        let mut out = vec![E::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        Tensor::from_op(out, vec![c, r], Op::Transpose(self.clone()))
    }

    /// `(n×k)·(k×m)`.
    pub fn matmul(&self, rhs: &Tensor<E>) -> Tensor<E> {
        assert!(self.rank() == 2 && rhs.rank() == 2, "matmul needs matrices");
        let (n, k) = (self.dim(0), self.dim(1));
        let (k2, m) = (rhs.dim(0), rhs.dim(1));
        assert_eq!(k, k2, "matmul inner dims {:?} x {:?}", self.shape(), rhs.shape());
        let mut out = vec![E::zero(); n * m];
        matmul_into(
            MatRef::row_major(self.data(), n, k),
            MatRef::row_major(rhs.data(), k, m),
            &mut out,
            false,
        );
        Tensor::from_op(out, vec![n, m], Op::Matmul(self.clone(), rhs.clone()))
    }
}

macro_rules! binary_operator {
    ($trait:ident, $method:ident) => {
        impl<E: Element> std::ops::$trait<&Tensor<E>> for &Tensor<E> {
            type Output = Tensor<E>;
            fn $method(self, rhs: &Tensor<E>) -> Tensor<E> {
                Tensor::$method(self, rhs)
            }
        }
        impl<E: Element> std::ops::$trait<Tensor<E>> for Tensor<E> {
            type Output = Tensor<E>;
            fn $method(self, rhs: Tensor<E>) -> Tensor<E> {
                Tensor::$method(&self, &rhs)
            }
        }
    };
}

binary_operator!(Add, add);
binary_operator!(Sub, sub);
binary_operator!(Mul, mul);
binary_operator!(Div, div);

impl<E: Element> std::ops::Neg for &Tensor<E> {
    type Output = Tensor<E>;
    fn neg(self) -> Tensor<E> {
        Tensor::neg(self)
    }
}
