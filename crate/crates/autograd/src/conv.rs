//! 2-D convolution, its adjoint (transposed convolution) and the weight
//! gradient, all as im2col + GEMM over the whole minibatch.
//!
//! The three kernels are each other's derivatives, so the graph stays
//! differentiable to any order:
//!
//! * `conv2d(x, w)`: `x` is `N×Ci×H×W`, `w` is `Co×Ci×kh×kw`.
//! * `conv_transpose2d(y, w)`: adjoint of `conv2d(·, w)`; `y` is `N×Co×Ho×Wo`.
//! * `conv2d_weight(x, g)`: gradient of `<conv2d(x, w), g>` with respect to `w`.

use crate::backward::Op;
use crate::element::{matmul_into, Element, MatRef};
use crate::tensor::Tensor;

/// Spatial bookkeeping of one convolution, in the forward (conv2d) sense:
/// `in_*` is the larger grid, `out_*` the strided one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub stride: usize,
    pub pad: usize,
    pub kh: usize,
    pub kw: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    pub fn for_input(in_h: usize, in_w: usize, kh: usize, kw: usize, stride: usize, pad: usize) -> Self {
        assert!(stride >= 1, "stride must be positive");
        assert!(
            in_h + 2 * pad >= kh && in_w + 2 * pad >= kw,
            "kernel {kh}x{kw} larger than padded input {in_h}x{in_w}"
        );
        ConvGeom {
            stride,
            pad,
            kh,
            kw,
            in_h,
            in_w,
            out_h: (in_h + 2 * pad - kh) / stride + 1,
            out_w: (in_w + 2 * pad - kw) / stride + 1,
        }
    }

    fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad == 0
    }

    fn in_len(&self) -> usize {
        self.in_h * self.in_w
    }

    fn out_len(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// `(a, b, l)` → `(b, a, l)` row-major relayout.
fn swap_outer<E: Element>(src: &[E], a: usize, b: usize, l: usize) -> Vec<E> {
    let mut out = vec![E::zero(); a * b * l];
    for i in 0..a {
        for j in 0..b {
            let s = (i * b + j) * l;
            let d = (j * a + i) * l;
            out[d..d + l].copy_from_slice(&src[s..s + l]);
        }
    }
    out
}

/// Unfolds `x` (`N×C×H×W`) into a `(C·kh·kw) × (N·L)` patch matrix.
fn im2col<E: Element>(x: &[E], n: usize, c: usize, g: &ConvGeom) -> Vec<E> {
    if g.is_pointwise() {
        return swap_outer(x, n, c, g.in_len());
    }
    let l = g.out_len();
    let nl = n * l;
    let k = c * g.kh * g.kw;
    let mut col = vec![E::zero(); k * nl];
    let (h, w) = (g.in_h as isize, g.in_w as isize);
    let (s, p) = (g.stride as isize, g.pad as isize);
    for b in 0..n {
        for ci in 0..c {
            let plane = &x[(b * c + ci) * g.in_len()..(b * c + ci + 1) * g.in_len()];
            for ky in 0..g.kh {
                for kx in 0..g.kw {
                    let row = (ci * g.kh + ky) * g.kw + kx;
                    let dst = &mut col[row * nl + b * l..row * nl + (b + 1) * l];
                    for oy in 0..g.out_h {
                        let iy = oy as isize * s + ky as isize - p;
                        if iy < 0 || iy >= h {
                            continue;
                        }
                        let src_row = &plane[(iy * w) as usize..((iy + 1) * w) as usize];
                        let dst_row = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                        for (ox, d) in dst_row.iter_mut().enumerate() {
                            let ix = ox as isize * s + kx as isize - p;
                            if ix >= 0 && ix < w {
                                *d = src_row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatters-adds patches back into an `N×C×H×W` grid.
fn col2im<E: Element>(col: &[E], n: usize, c: usize, g: &ConvGeom) -> Vec<E> {
    if g.is_pointwise() {
        return swap_outer(col, c, n, g.in_len());
    }
    let l = g.out_len();
    let nl = n * l;
    let mut x = vec![E::zero(); n * c * g.in_len()];
    let (h, w) = (g.in_h as isize, g.in_w as isize);
    let (s, p) = (g.stride as isize, g.pad as isize);
    for b in 0..n {
        for ci in 0..c {
            let plane = &mut x[(b * c + ci) * g.in_len()..(b * c + ci + 1) * g.in_len()];
            for ky in 0..g.kh {
                for kx in 0..g.kw {
                    let row = (ci * g.kh + ky) * g.kw + kx;
                    let src = &col[row * nl + b * l..row * nl + (b + 1) * l];
                    for oy in 0..g.out_h {
                        let iy = oy as isize * s + ky as isize - p;
                        if iy < 0 || iy >= h {
                            continue;
                        }
                        let src_row = &src[oy * g.out_w..(oy + 1) * g.out_w];
                        let dst_row = &mut plane[(iy * w) as usize..((iy + 1) * w) as usize];
                        for (ox, &v) in src_row.iter().enumerate() {
                            let ix = ox as isize * s + kx as isize - p;
                            if ix >= 0 && ix < w {
                                let d = &mut dst_row[ix as usize];
                                *d = *d + v;
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

pub(crate) fn conv2d_kernel<E: Element>(x: &[E], w: &[E], n: usize, ci: usize, co: usize, g: &ConvGeom) -> Vec<E> {
    let k = ci * g.kh * g.kw;
    let nl = n * g.out_len();
    let col = im2col(x, n, ci, g);
    let mut tmp = vec![E::zero(); co * nl];
    matmul_into(MatRef::row_major(w, co, k), MatRef::row_major(&col, k, nl), &mut tmp, false);
    swap_outer(&tmp, co, n, g.out_len())
}

pub(crate) fn conv_transpose2d_kernel<E: Element>(
    y: &[E],
    w: &[E],
    n: usize,
    ci: usize,
    co: usize,
    g: &ConvGeom,
) -> Vec<E> {
    let k = ci * g.kh * g.kw;
    let nl = n * g.out_len();
    let ymat = swap_outer(y, n, co, g.out_len());
    let mut col = vec![E::zero(); k * nl];
    matmul_into(MatRef::transposed(w, co, k), MatRef::row_major(&ymat, co, nl), &mut col, false);
    col2im(&col, n, ci, g)
}

pub(crate) fn conv2d_weight_kernel<E: Element>(
    x: &[E],
    gout: &[E],
    n: usize,
    ci: usize,
    co: usize,
    g: &ConvGeom,
) -> Vec<E> {
    let k = ci * g.kh * g.kw;
    let nl = n * g.out_len();
    let col = im2col(x, n, ci, g);
    let gmat = swap_outer(gout, n, co, g.out_len());
    let mut out = vec![E::zero(); co * k];
    matmul_into(MatRef::row_major(&gmat, co, nl), MatRef::transposed(&col, k, nl), &mut out, false);
    out
}

impl<E: Element> Tensor<E> {
    /// Cross-correlation of `self` (`N×Ci×H×W`) with `weight` (`Co×Ci×kh×kw`).
    pub fn conv2d(&self, weight: &Tensor<E>, stride: usize, pad: usize) -> Tensor<E> {
        assert_eq!(self.rank(), 4, "conv2d input must be NCHW, got {:?}", self.shape());
        assert_eq!(weight.rank(), 4, "conv2d weight must be rank 4");
        let (ci, h, w) = (self.dim(1), self.dim(2), self.dim(3));
        let (wci, kh, kw) = (weight.dim(1), weight.dim(2), weight.dim(3));
        assert_eq!(ci, wci, "conv2d channel mismatch: input {ci}, weight {wci}");
        let geom = ConvGeom::for_input(h, w, kh, kw, stride, pad);
        self.conv2d_geom(weight, geom)
    }

    pub(crate) fn conv2d_geom(&self, weight: &Tensor<E>, geom: ConvGeom) -> Tensor<E> {
        let (n, ci) = (self.dim(0), self.dim(1));
        let co = weight.dim(0);
        debug_assert_eq!((self.dim(2), self.dim(3)), (geom.in_h, geom.in_w));
        let out = conv2d_kernel(self.data(), weight.data(), n, ci, co, &geom);
        Tensor::from_op(
            out,
            vec![n, co, geom.out_h, geom.out_w],
            Op::Conv2d { x: self.clone(), w: weight.clone(), geom },
        )
    }

    /// Transposed convolution of `self` (`N×Cin×h×w`) with `weight`
    /// (`Cin×Cout×kh×kw`), producing `N×Cout×out_h×out_w`.
    ///
    /// `out_hw` resolves the size ambiguity of strided upsampling; it must be a
    /// size that `conv2d` with the same stride/padding maps back to `h×w`.
    pub fn conv_transpose2d(&self, weight: &Tensor<E>, stride: usize, pad: usize, out_hw: (usize, usize)) -> Tensor<E> {
        assert_eq!(self.rank(), 4, "conv_transpose2d input must be NCHW");
        assert_eq!(weight.rank(), 4, "conv_transpose2d weight must be rank 4");
        let (h, w) = (self.dim(2), self.dim(3));
        let (kh, kw) = (weight.dim(2), weight.dim(3));
        assert_eq!(self.dim(1), weight.dim(0), "conv_transpose2d channel mismatch");
        let geom = ConvGeom::for_input(out_hw.0, out_hw.1, kh, kw, stride, pad);
        assert_eq!(
            (geom.out_h, geom.out_w),
            (h, w),
            "output size {:?} is inconsistent with input {h}x{w} for stride {stride} pad {pad}",
            out_hw
        );
        self.conv_transpose2d_geom(weight, geom)
    }

    pub(crate) fn conv_transpose2d_geom(&self, weight: &Tensor<E>, geom: ConvGeom) -> Tensor<E> {
        let n = self.dim(0);
        let (co, ci) = (weight.dim(0), weight.dim(1));
        let out = conv_transpose2d_kernel(self.data(), weight.data(), n, ci, co, &geom);
        Tensor::from_op(
            out,
            vec![n, ci, geom.in_h, geom.in_w],
            Op::ConvTranspose2d { y: self.clone(), w: weight.clone(), geom },
        )
    }

    pub(crate) fn conv2d_weight(x: &Tensor<E>, gout: &Tensor<E>, geom: ConvGeom) -> Tensor<E> {
        let (n, ci) = (x.dim(0), x.dim(1));
        let co = gout.dim(1);
        let out = conv2d_weight_kernel(x.data(), gout.data(), n, ci, co, &geom);
        Tensor::from_op(
            out,
            vec![co, ci, geom.kh, geom.kw],
            Op::Conv2dWeight { x: x.clone(), g: gout.clone(), geom },
        )
    }
}
