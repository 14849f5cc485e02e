use std::cell::Cell;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::backward::Op;
use crate::element::Element;
use crate::shape::numel;

/// Stable identity of a tensor node; gradients are keyed by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorId(u64);

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

impl TensorId {
    fn fresh() -> Self {
        TensorId(NEXT_ID.fetch_add(1, Ordering::Relaxed))
    }
}

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Whether operations on the current thread record a graph.
pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Restores the previous grad mode on drop.
#[must_use = "grad recording is re-enabled as soon as the guard is dropped"]
pub struct GradModeGuard {
    prev: bool,
}

impl Drop for GradModeGuard {
    fn drop(&mut self) {
        GRAD_ENABLED.with(|g| g.set(self.prev));
    }
}

fn set_grad_mode(enabled: bool) -> GradModeGuard {
    let prev = GRAD_ENABLED.with(|g| g.replace(enabled));
    GradModeGuard { prev }
}

/// Disable graph recording until the guard is dropped.
pub fn no_grad() -> GradModeGuard {
    set_grad_mode(false)
}

pub(crate) fn enable_grad() -> GradModeGuard {
    set_grad_mode(true)
}

pub(crate) enum Kind<E: Element> {
    Constant,
    Leaf,
    Op(Op<E>),
}

pub(crate) struct Node<E: Element> {
    pub id: TensorId,
    pub shape: Vec<usize>,
    pub data: Arc<Vec<E>>,
    pub kind: Kind<E>,
}

/// An immutable n-dimensional array, row-major, that optionally records the
/// operation which produced it so gradients can be propagated back.
pub struct Tensor<E: Element> {
    pub(crate) node: Arc<Node<E>>,
}

impl<E: Element> Clone for Tensor<E> {
    fn clone(&self) -> Self {
        Tensor { node: Arc::clone(&self.node) }
    }
}

impl<E: Element> fmt::Debug for Tensor<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.node.kind {
            Kind::Constant => "const",
            Kind::Leaf => "leaf",
            Kind::Op(ref op) => op.name(),
        };
        let preview: Vec<E> = self.data().iter().take(6).copied().collect();
        write!(f, "Tensor<{}>{:?} [{}] {:?}", E::DTYPE, self.node.shape, kind, preview)?;
        if self.numel() > 6 {
            write!(f, "…")?;
        }
        Ok(())
    }
}

impl<E: Element> Tensor<E> {
    fn with_kind(data: Arc<Vec<E>>, shape: Vec<usize>, kind: Kind<E>) -> Self {
        assert_eq!(
            data.len(),
            numel(&shape),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor { node: Arc::new(Node { id: TensorId::fresh(), shape, data, kind }) }
    }

    /// A constant (never differentiated) tensor.
    pub fn from_vec(data: Vec<E>, shape: &[usize]) -> Self {
        Self::with_kind(Arc::new(data), shape.to_vec(), Kind::Constant)
    }

    /// A leaf that gradients are accumulated into.
    pub fn leaf(data: Vec<E>, shape: &[usize]) -> Self {
        Self::with_kind(Arc::new(data), shape.to_vec(), Kind::Leaf)
    }

    pub fn scalar(v: E) -> Self {
        Self::from_vec(vec![v], &[])
    }

    pub fn full(shape: &[usize], v: E) -> Self {
        Self::from_vec(vec![v; numel(shape)], shape)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, E::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, E::one())
    }

    pub(crate) fn from_op(data: Vec<E>, shape: Vec<usize>, op: Op<E>) -> Self {
        Self::from_op_shared(Arc::new(data), shape, op)
    }

    pub(crate) fn from_op_shared(data: Arc<Vec<E>>, shape: Vec<usize>, op: Op<E>) -> Self {
        let kind = if is_grad_enabled() && op.inputs().iter().any(|t| t.requires_grad()) {
            Kind::Op(op)
        } else {
            Kind::Constant
        };
        Self::with_kind(data, shape, kind)
    }

    pub fn id(&self) -> TensorId {
        self.node.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn rank(&self) -> usize {
        self.node.shape.len()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.node.shape[i]
    }

    pub fn numel(&self) -> usize {
        self.node.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.node.data
    }

    pub fn to_vec(&self) -> Vec<E> {
        self.node.data.as_ref().clone()
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> E {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.node.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        !matches!(self.node.kind, Kind::Constant)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node.kind, Kind::Leaf)
    }

    /// Same values, cut from the graph. Shares storage.
    pub fn detach(&self) -> Self {
        Self::with_kind(Arc::clone(&self.node.data), self.node.shape.clone(), Kind::Constant)
    }

    /// Same values as a fresh leaf. Shares storage.
    pub fn to_leaf(&self) -> Self {
        Self::with_kind(Arc::clone(&self.node.data), self.node.shape.clone(), Kind::Leaf)
    }

    pub fn all_finite(&self) -> bool {
        self.data().iter().all(|v| v.is_finite())
    }

    /// Element type conversion (always a constant).
    pub fn cast<F: Element>(&self) -> Tensor<F> {
        let data = self.data().iter().map(|v| F::from_f64_lossy(v.to_f64_lossy())).collect();
        Tensor::from_vec(data, self.shape())
    }
}
