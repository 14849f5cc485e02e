use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::conv::ConvGeom;
use crate::element::Element;
use crate::tensor::{enable_grad, no_grad, Kind, Tensor, TensorId};

/// Recorded operation. Every backward rule is written in terms of tensor ops,
/// so with `create_graph` the gradient itself is differentiable.
pub(crate) enum Op<E: Element> {
    Add(Tensor<E>, Tensor<E>),
    Sub(Tensor<E>, Tensor<E>),
    Mul(Tensor<E>, Tensor<E>),
    Div(Tensor<E>, Tensor<E>),
    Neg(Tensor<E>),
    Scale(Tensor<E>, E),
    AddScalar(Tensor<E>),
    Sqr(Tensor<E>),
    Sqrt(Tensor<E>),
    Tanh(Tensor<E>),
    MaskMul(Tensor<E>, Arc<Vec<E>>),
    BroadcastTo(Tensor<E>),
    SumTo(Tensor<E>),
    Reshape(Tensor<E>),
    Narrow { x: Tensor<E>, dim: usize, start: usize },
    PadAlong { x: Tensor<E>, dim: usize, start: usize },
    Cat { xs: Vec<Tensor<E>>, dim: usize },
    Transpose(Tensor<E>),
    Matmul(Tensor<E>, Tensor<E>),
    Conv2d { x: Tensor<E>, w: Tensor<E>, geom: ConvGeom },
    ConvTranspose2d { y: Tensor<E>, w: Tensor<E>, geom: ConvGeom },
    Conv2dWeight { x: Tensor<E>, g: Tensor<E>, geom: ConvGeom },
}

impl<E: Element> Op<E> {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Neg(..) => "neg",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Sqr(..) => "sqr",
            Op::Sqrt(..) => "sqrt",
            Op::Tanh(..) => "tanh",
            Op::MaskMul(..) => "mask_mul",
            Op::BroadcastTo(..) => "broadcast_to",
            Op::SumTo(..) => "sum_to",
            Op::Reshape(..) => "reshape",
            Op::Narrow { .. } => "narrow",
            Op::PadAlong { .. } => "pad_along",
            Op::Cat { .. } => "cat",
            Op::Transpose(..) => "transpose",
            Op::Matmul(..) => "matmul",
            Op::Conv2d { .. } => "conv2d",
            Op::ConvTranspose2d { .. } => "conv_transpose2d",
            Op::Conv2dWeight { .. } => "conv2d_weight",
        }
    }

    pub fn inputs(&self) -> Vec<&Tensor<E>> {
        match self {
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::Matmul(a, b) => vec![a, b],
            Op::Neg(x)
            | Op::Scale(x, _)
            | Op::AddScalar(x)
            | Op::Sqr(x)
            | Op::Sqrt(x)
            | Op::Tanh(x)
            | Op::MaskMul(x, _)
            | Op::BroadcastTo(x)
            | Op::SumTo(x)
            | Op::Reshape(x)
            | Op::Transpose(x)
            | Op::Narrow { x, .. }
            | Op::PadAlong { x, .. } => vec![x],
            Op::Cat { xs, .. } => xs.iter().collect(),
            Op::Conv2d { x, w, .. } => vec![x, w],
            Op::ConvTranspose2d { y, w, .. } => vec![y, w],
            Op::Conv2dWeight { x, g, .. } => vec![x, g],
        }
    }

    /// Vector-Jacobian products for every input that requires a gradient.
    /// `wanted` filters inputs whose gradient is not needed.
    fn vjp(&self, out: &Tensor<E>, g: &Tensor<E>, wanted: &dyn Fn(&Tensor<E>) -> bool) -> Vec<(Tensor<E>, Tensor<E>)> {
        let mut res = Vec::with_capacity(2);
        let mut push = |t: &Tensor<E>, f: &dyn Fn() -> Tensor<E>| {
            if t.requires_grad() && wanted(t) {
                res.push((t.clone(), f()));
            }
        };
        match self {
            Op::Add(a, b) => {
                push(a, &|| g.clone());
                push(b, &|| g.clone());
            }
            Op::Sub(a, b) => {
                push(a, &|| g.clone());
                push(b, &|| g.neg());
            }
            Op::Mul(a, b) => {
                push(a, &|| g.mul(b));
                push(b, &|| g.mul(a));
            }
            Op::Div(a, b) => {
                push(a, &|| g.div(b));
                push(b, &|| g.mul(out).div(b).neg());
            }
            Op::Neg(x) => push(x, &|| g.neg()),
            Op::Scale(x, c) => push(x, &|| g.scale(*c)),
            Op::AddScalar(x) => push(x, &|| g.clone()),
            Op::Sqr(x) => push(x, &|| g.mul(x).scale(E::one() + E::one())),
            Op::Sqrt(x) => push(x, &|| g.div(out).scale(E::from_f64_lossy(0.5))),
            Op::Tanh(x) => push(x, &|| g.mul(&out.sqr().neg().add_scalar(E::one()))),
            Op::MaskMul(x, mask) => push(x, &|| g.mask_mul(mask.as_ref().clone())),
            Op::BroadcastTo(x) => push(x, &|| g.sum_to(x.shape())),
            Op::SumTo(x) => push(x, &|| g.broadcast_to(x.shape())),
            Op::Reshape(x) => push(x, &|| g.reshape(x.shape())),
            Op::Narrow { x, dim, start } => push(x, &|| g.pad_along(*dim, *start, x.dim(*dim))),
            Op::PadAlong { x, dim, start } => push(x, &|| g.narrow(*dim, *start, x.dim(*dim))),
            Op::Cat { xs, dim } => {
                let mut offset = 0;
                for x in xs {
                    let len = x.dim(*dim);
                    push(x, &|| g.narrow(*dim, offset, len));
                    offset += len;
                }
            }
            Op::Transpose(x) => push(x, &|| g.t()),
            Op::Matmul(a, b) => {
                push(a, &|| g.matmul(&b.t()));
                push(b, &|| a.t().matmul(g));
            }
            Op::Conv2d { x, w, geom } => {
                push(x, &|| g.conv_transpose2d_geom(w, *geom));
                push(w, &|| Tensor::conv2d_weight(x, g, *geom));
            }
            Op::ConvTranspose2d { y, w, geom } => {
                push(y, &|| g.conv2d_geom(w, *geom));
                push(w, &|| Tensor::conv2d_weight(g, y, *geom));
            }
            Op::Conv2dWeight { x, g: gout, geom } => {
                push(x, &|| gout.conv_transpose2d_geom(g, *geom));
                push(gout, &|| x.conv2d_geom(g, *geom));
            }
        }
        res
    }
}

/// Gradients of a scalar with respect to the leaves it depends on.
#[derive(Default)]
pub struct Gradients<E: Element> {
    by_id: HashMap<TensorId, Tensor<E>>,
}

impl<E: Element> Gradients<E> {
    pub fn get(&self, leaf: &Tensor<E>) -> Option<&Tensor<E>> {
        self.by_id.get(&leaf.id())
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

/// Post-order over the differentiable part of the graph below `root`.
fn topo_order<E: Element>(root: &Tensor<E>) -> Vec<Tensor<E>> {
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    let mut stack: Vec<(Tensor<E>, bool)> = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !t.requires_grad() || !visited.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Kind::Op(op) = &t.node.kind {
            for input in op.inputs() {
                if input.requires_grad() && !visited.contains(&input.id()) {
                    stack.push((input.clone(), false));
                }
            }
        }
    }
    order
}

impl<E: Element> Tensor<E> {
    /// Gradients of this scalar with respect to every reachable leaf.
    pub fn backward(&self) -> Gradients<E> {
        self.backward_impl(false, None)
    }

    /// Like [`backward`](Self::backward) but records the gradient computation
    /// itself, so the returned gradients can be differentiated again.
    pub fn backward_create_graph(&self) -> Gradients<E> {
        self.backward_impl(true, None)
    }

    /// Gradients with respect to `wrt` only. Branches of the graph that do not
    /// lead to any of them are skipped, which matters when the inputs of a
    /// network are wanted but its weights are not. `None` where `self` does not
    /// depend on the tensor.
    pub fn grad(&self, wrt: &[&Tensor<E>], create_graph: bool) -> Vec<Option<Tensor<E>>> {
        let targets: HashSet<TensorId> = wrt.iter().map(|t| t.id()).collect();
        let grads = self.backward_impl(create_graph, Some(&targets));
        wrt.iter().map(|t| grads.by_id.get(&t.id()).cloned()).collect()
    }

    fn backward_impl(&self, create_graph: bool, targets: Option<&HashSet<TensorId>>) -> Gradients<E> {
        assert_eq!(self.numel(), 1, "backward() needs a scalar, got shape {:?}", self.shape());
        let _mode = if create_graph { enable_grad() } else { no_grad() };
        let mut result = Gradients::default();
        if !self.requires_grad() {
            return result;
        }
        let order = topo_order(self);
        let reaches: Option<HashSet<TensorId>> = targets.map(|targets| {
            let mut set = HashSet::new();
            for node in &order {
                let hit = targets.contains(&node.id())
                    || match &node.node.kind {
                        Kind::Op(op) => op.inputs().iter().any(|i| set.contains(&i.id())),
                        _ => false,
                    };
                if hit {
                    set.insert(node.id());
                }
            }
            set
        });
        let wanted = |t: &Tensor<E>| reaches.as_ref().is_none_or(|r| r.contains(&t.id()));
        let mut pending: HashMap<TensorId, Tensor<E>> = HashMap::new();
        pending.insert(self.id(), Tensor::ones(self.shape()));
        for node in order.iter().rev() {
            let Some(g) = pending.remove(&node.id()) else { continue };
            let is_target = targets.is_some_and(|t| t.contains(&node.id()));
            match &node.node.kind {
                Kind::Op(op) => {
                    for (input, gi) in op.vjp(node, &g, &wanted) {
                        let acc = match pending.remove(&input.id()) {
                            Some(prev) => prev.add(&gi),
                            None => gi,
                        };
                        pending.insert(input.id(), acc);
                    }
                    if is_target {
                        result.by_id.insert(node.id(), g);
                    }
                }
                Kind::Leaf if targets.is_none() || is_target => {
                    result.by_id.insert(node.id(), g);
                }
                _ => {}
            }
        }
        result
    }
}
