//! Define-by-run reverse-mode automatic differentiation.
//!
//! A [`Tape`] records primitive operations as they execute; [`Tape::backward`]
//! sweeps the record in reverse to accumulate gradients. Tapes are rebuilt per
//! training step: the nets here are small enough that graph caching buys
//! nothing. All arithmetic is f64 and evaluation order is fixed, so repeated
//! forward/backward passes over identical inputs are bit-identical.

use crate::tensor::{Tensor, TensorError};

/// Handle to a node on a tape. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    /// Broadcast-add a row vector to every row of a matrix.
    AddRow(NodeId, NodeId),
    /// Broadcast-multiply every row of a matrix by a row vector.
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Elu(NodeId),
    Sigmoid(NodeId),
    Softmax {
        input: NodeId,
        axis: usize,
    },
    Sum(NodeId),
    Mean(NodeId),
    Reshape(NodeId),
    /// Contiguous sub-range of a rank-1 tensor; the range width is the
    /// output length.
    Slice1 {
        input: NodeId,
        lo: usize,
    },
    /// Column range of a rank-2 tensor.
    SliceCols {
        input: NodeId,
        lo: usize,
        hi: usize,
    },
    ConcatCols(Vec<NodeId>),
    /// Stack same-shaped tensors along a new leading axis.
    Stack(Vec<NodeId>),
    /// Select one slice along axis 0.
    Index {
        input: NodeId,
        at: usize,
    },
    /// Row gather: out[i] = in[rows[i]]. Rows may repeat.
    GatherRows {
        input: NodeId,
        rows: Vec<usize>,
    },
    /// Per-row permutation of column blocks of width `block`:
    /// out[i, k*block + d] = in[i, perms[i][k]*block + d].
    PermuteBlocks {
        input: NodeId,
        perms: Vec<Vec<usize>>,
        block: usize,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients produced by a backward sweep, indexed by node id.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. the given node, if it is reachable.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.idx()).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.idx()).and_then(|g| g.take())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TapeError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("softmax axis {axis} out of range for shape {shape:?}")]
    BadAxis { axis: usize, shape: Vec<usize> },
    #[error("{op}: expected {expected} inputs, got {actual}")]
    Arity {
        op: &'static str,
        expected: usize,
        actual: usize,
    },
}

/// Append-only record of primitive ops with their forward values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.idx()].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { op, value });
        id
    }

    /// Record an input tensor. Leaves receive gradients but propagate nothing.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        let value = self.zip_same_shape("add", a, b, |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        let value = self.zip_same_shape("sub", a, b, |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        let value = self.zip_same_shape("mul", a, b, |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    fn zip_same_shape(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TapeError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            }
            .into());
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        Ok(Tensor::new(ta.shape().to_vec(), data).expect("shape preserved"))
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        let (ta, tb) = (self.value(a), self.value(b));
        check_rank("matmul", ta, 2)?;
        check_rank("matmul", tb, 2)?;
        if ta.cols() != tb.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            }
            .into());
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = vec![0.0; m * n];
        dgemm_nn(m, k, n, ta.data(), tb.data(), &mut out);
        let value = Tensor::matrix(m, n, out).expect("sized above");
        Ok(self.push(Op::MatMul(a, b), value))
    }

    /// `a[m,n] + row[n]` broadcast over rows (bias add).
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, TapeError> {
        let value = self.broadcast_row("add_row", a, row, |x, y| x + y)?;
        Ok(self.push(Op::AddRow(a, row), value))
    }

    /// `a[m,n] * row[n]` broadcast over rows (per-column scaling).
    pub fn mul_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, TapeError> {
        let value = self.broadcast_row("mul_row", a, row, |x, y| x * y)?;
        Ok(self.push(Op::MulRow(a, row), value))
    }

    fn broadcast_row(
        &self,
        op: &'static str,
        a: NodeId,
        row: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TapeError> {
        let (ta, tr) = (self.value(a), self.value(row));
        check_rank(op, ta, 2)?;
        check_rank(op, tr, 1)?;
        if ta.cols() != tr.len() {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tr.shape().to_vec(),
            }
            .into());
        }
        let n = ta.cols();
        let data = ta
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| f(*x, tr.data()[i % n]))
            .collect();
        Ok(Tensor::new(ta.shape().to_vec(), data).expect("shape preserved"))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * c).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(Op::Scale(a, c), value)
    }

    /// ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise.
    pub fn elu(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| elu(x)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(Op::Elu(a), value)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| sigmoid(x)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(Op::Sigmoid(a), value)
    }

    /// Softmax along `axis`; each lane sums to 1.
    pub fn softmax(&mut self, a: NodeId, axis: usize) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        if axis >= ta.rank() {
            return Err(TapeError::BadAxis {
                axis,
                shape: ta.shape().to_vec(),
            });
        }
        let (outer, lanes, inner) = axis_split(ta.shape(), axis);
        let mut out = ta.data().to_vec();
        for o in 0..outer {
            for i in 0..inner {
                let at = |l: usize| (o * lanes + l) * inner + i;
                let mut max = f64::NEG_INFINITY;
                for l in 0..lanes {
                    max = max.max(out[at(l)]);
                }
                let mut denom = 0.0;
                for l in 0..lanes {
                    let e = (out[at(l)] - max).exp();
                    out[at(l)] = e;
                    denom += e;
                }
                for l in 0..lanes {
                    out[at(l)] /= denom;
                }
            }
        }
        let value = Tensor::new(ta.shape().to_vec(), out).expect("shape preserved");
        Ok(self.push(Op::Softmax { input: a, axis }, value))
    }

    /// Sum of all elements; scalar output.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(total))
    }

    /// Mean of all elements; scalar output.
    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let total: f64 = ta.data().iter().sum();
        let value = Tensor::scalar(total / ta.len() as f64);
        self.push(Op::Mean(a), value)
    }

    /// View with a new shape; element count must match.
    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        let value = Tensor::new(shape, ta.data().to_vec())?;
        Ok(self.push(Op::Reshape(a), value))
    }

    /// Contiguous range `[lo, hi)` of a rank-1 tensor.
    pub fn slice1(&mut self, a: NodeId, lo: usize, hi: usize) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        check_rank("slice1", ta, 1)?;
        if lo > hi || hi > ta.len() {
            return Err(TensorError::IndexOutOfBounds {
                op: "slice1",
                index: hi,
                bound: ta.len(),
            }
            .into());
        }
        let value = Tensor::vector(ta.data()[lo..hi].to_vec());
        Ok(self.push(Op::Slice1 { input: a, lo }, value))
    }

    /// Columns `[lo, hi)` of a rank-2 tensor.
    pub fn slice_cols(&mut self, a: NodeId, lo: usize, hi: usize) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        check_rank("slice_cols", ta, 2)?;
        if lo > hi || hi > ta.cols() {
            return Err(TensorError::IndexOutOfBounds {
                op: "slice_cols",
                index: hi,
                bound: ta.cols(),
            }
            .into());
        }
        let (m, n, w) = (ta.rows(), ta.cols(), hi - lo);
        let mut out = Vec::with_capacity(m * w);
        for r in 0..m {
            out.extend_from_slice(&ta.data()[r * n + lo..r * n + hi]);
        }
        let value = Tensor::matrix(m, w, out).expect("sized above");
        Ok(self.push(Op::SliceCols { input: a, lo, hi }, value))
    }

    /// Concatenate rank-2 tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, TapeError> {
        if parts.is_empty() {
            return Err(TapeError::Arity {
                op: "concat_cols",
                expected: 1,
                actual: 0,
            });
        }
        let m = self.value(parts[0]).rows();
        let mut total = 0;
        for &p in parts {
            let tp = self.value(p);
            check_rank("concat_cols", tp, 2)?;
            if tp.rows() != m {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: self.value(parts[0]).shape().to_vec(),
                    rhs: tp.shape().to_vec(),
                }
                .into());
            }
            total += tp.cols();
        }
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for &p in parts {
                let tp = self.value(p);
                let n = tp.cols();
                out.extend_from_slice(&tp.data()[r * n..(r + 1) * n]);
            }
        }
        let value = Tensor::matrix(m, total, out).expect("sized above");
        Ok(self.push(Op::ConcatCols(parts.to_vec()), value))
    }

    /// Stack same-shaped tensors along a new leading axis.
    pub fn stack(&mut self, parts: &[NodeId]) -> Result<NodeId, TapeError> {
        if parts.is_empty() {
            return Err(TapeError::Arity {
                op: "stack",
                expected: 1,
                actual: 0,
            });
        }
        let base = self.value(parts[0]).shape().to_vec();
        let mut out = Vec::with_capacity(parts.len() * self.value(parts[0]).len());
        for &p in parts {
            let tp = self.value(p);
            if tp.shape() != base.as_slice() {
                return Err(TensorError::ShapeMismatch {
                    op: "stack",
                    lhs: base,
                    rhs: tp.shape().to_vec(),
                }
                .into());
            }
            out.extend_from_slice(tp.data());
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&base);
        let value = Tensor::new(shape, out).expect("sized above");
        Ok(self.push(Op::Stack(parts.to_vec()), value))
    }

    /// Select slice `at` along axis 0.
    pub fn index(&mut self, a: NodeId, at: usize) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        if ta.rank() < 1 || at >= ta.shape()[0] {
            return Err(TensorError::IndexOutOfBounds {
                op: "index",
                index: at,
                bound: ta.shape().first().copied().unwrap_or(0),
            }
            .into());
        }
        let stride: usize = ta.shape()[1..].iter().product();
        let value = Tensor::new(
            ta.shape()[1..].to_vec(),
            ta.data()[at * stride..(at + 1) * stride].to_vec(),
        )
        .expect("stride math");
        Ok(self.push(Op::Index { input: a, at }, value))
    }

    /// Row gather: out[i] = a[rows[i]]. Rows may repeat.
    pub fn gather_rows(&mut self, a: NodeId, rows: &[usize]) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        check_rank("gather_rows", ta, 2)?;
        let (m, n) = (ta.rows(), ta.cols());
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if r >= m {
                return Err(TensorError::IndexOutOfBounds {
                    op: "gather_rows",
                    index: r,
                    bound: m,
                }
                .into());
            }
            out.extend_from_slice(&ta.data()[r * n..(r + 1) * n]);
        }
        let value = Tensor::matrix(rows.len(), n, out).expect("sized above");
        Ok(self.push(
            Op::GatherRows {
                input: a,
                rows: rows.to_vec(),
            },
            value,
        ))
    }

    /// Per-row permutation of column blocks of width `block`:
    /// out[i, k*block + d] = a[i, perms[i][k]*block + d].
    pub fn permute_blocks(
        &mut self,
        a: NodeId,
        perms: &[Vec<usize>],
        block: usize,
    ) -> Result<NodeId, TapeError> {
        let ta = self.value(a);
        check_rank("permute_blocks", ta, 2)?;
        let (m, n) = (ta.rows(), ta.cols());
        let k = n / block;
        if block * k != n || perms.len() != m {
            return Err(TapeError::Arity {
                op: "permute_blocks",
                expected: m,
                actual: perms.len(),
            });
        }
        let mut out = vec![0.0; m * n];
        for (i, perm) in perms.iter().enumerate() {
            for (slot, &src) in perm.iter().enumerate() {
                if src >= k {
                    return Err(TensorError::IndexOutOfBounds {
                        op: "permute_blocks",
                        index: src,
                        bound: k,
                    }
                    .into());
                }
                let dst_off = i * n + slot * block;
                let src_off = i * n + src * block;
                out[dst_off..dst_off + block].copy_from_slice(&ta.data()[src_off..src_off + block]);
            }
        }
        let value = Tensor::matrix(m, n, out).expect("sized above");
        Ok(self.push(
            Op::PermuteBlocks {
                input: a,
                perms: perms.to_vec(),
                block,
            },
            value,
        ))
    }

    /// Reverse sweep from a scalar loss. Deterministic: two sweeps over the
    /// same tape produce bit-identical gradients.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, TapeError> {
        let loss_val = self.value(loss);
        if !loss_val.is_scalar() {
            return Err(TapeError::NonScalarLoss {
                shape: loss_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.idx()] = Some(Tensor::new(loss_val.shape().to_vec(), vec![1.0]).unwrap());

        for idx in (0..=loss.idx()).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Zero-initialize (if needed) and return the gradient buffer for `id`.
    fn grad_buf<'a>(&self, grads: &'a mut [Option<Tensor>], id: NodeId) -> &'a mut [f64] {
        let slot = &mut grads[id.idx()];
        if slot.is_none() {
            *slot = Some(Tensor::zeros(self.value(id).shape().to_vec()));
        }
        slot.as_mut().unwrap().data_mut()
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                axpy(self.grad_buf(grads, *a), g.data(), 1.0);
                axpy(self.grad_buf(grads, *b), g.data(), 1.0);
            }
            Op::Sub(a, b) => {
                axpy(self.grad_buf(grads, *a), g.data(), 1.0);
                axpy(self.grad_buf(grads, *b), g.data(), -1.0);
            }
            Op::Mul(a, b) => {
                let vb = self.value(*b);
                let da = self.grad_buf(grads, *a);
                for i in 0..da.len() {
                    da[i] += g.data()[i] * vb.data()[i];
                }
                let va = self.value(*a);
                let db = self.grad_buf(grads, *b);
                for i in 0..db.len() {
                    db[i] += g.data()[i] * va.data()[i];
                }
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                // dA += G * B^T, dB += A^T * G
                dgemm_nt(m, n, k, g.data(), vb.data(), self.grad_buf(grads, *a));
                dgemm_tn(k, m, n, va.data(), g.data(), self.grad_buf(grads, *b));
            }
            Op::AddRow(a, row) => {
                let n = self.value(*a).cols();
                axpy(self.grad_buf(grads, *a), g.data(), 1.0);
                let dr = self.grad_buf(grads, *row);
                for (i, gv) in g.data().iter().enumerate() {
                    dr[i % n] += gv;
                }
            }
            Op::MulRow(a, row) => {
                let va = self.value(*a);
                let vr = self.value(*row);
                let n = va.cols();
                let da = self.grad_buf(grads, *a);
                for i in 0..da.len() {
                    da[i] += g.data()[i] * vr.data()[i % n];
                }
                let va = self.value(*a);
                let dr = self.grad_buf(grads, *row);
                for (i, gv) in g.data().iter().enumerate() {
                    dr[i % n] += gv * va.data()[i];
                }
            }
            Op::Scale(a, c) => {
                axpy(self.grad_buf(grads, *a), g.data(), *c);
            }
            Op::Elu(a) => {
                let va = self.value(*a);
                let da = self.grad_buf(grads, *a);
                for i in 0..da.len() {
                    let x = va.data()[i];
                    let slope = if x > 0.0 { 1.0 } else { x.exp() };
                    da[i] += g.data()[i] * slope;
                }
            }
            Op::Sigmoid(a) => {
                let s = &node.value;
                let da = self.grad_buf(grads, *a);
                for i in 0..da.len() {
                    let sv = s.data()[i];
                    da[i] += g.data()[i] * sv * (1.0 - sv);
                }
            }
            Op::Softmax { input, axis } => {
                let s = &node.value;
                let (outer, lanes, inner) = axis_split(s.shape(), *axis);
                let d = self.grad_buf(grads, *input);
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |l: usize| (o * lanes + l) * inner + i;
                        let mut dot = 0.0;
                        for l in 0..lanes {
                            dot += g.data()[at(l)] * s.data()[at(l)];
                        }
                        for l in 0..lanes {
                            let p = at(l);
                            d[p] += s.data()[p] * (g.data()[p] - dot);
                        }
                    }
                }
            }
            Op::Sum(a) => {
                let gv = g.item();
                for v in self.grad_buf(grads, *a).iter_mut() {
                    *v += gv;
                }
            }
            Op::Mean(a) => {
                let gv = g.item() / self.value(*a).len() as f64;
                for v in self.grad_buf(grads, *a).iter_mut() {
                    *v += gv;
                }
            }
            Op::Reshape(a) => {
                axpy(self.grad_buf(grads, *a), g.data(), 1.0);
            }
            Op::Slice1 { input, lo } => {
                let d = self.grad_buf(grads, *input);
                for (i, gv) in g.data().iter().enumerate() {
                    d[lo + i] += gv;
                }
            }
            Op::SliceCols { input, lo, hi } => {
                let n = self.value(*input).cols();
                let w = hi - lo;
                let d = self.grad_buf(grads, *input);
                for (i, gv) in g.data().iter().enumerate() {
                    let (r, c) = (i / w, i % w);
                    d[r * n + lo + c] += gv;
                }
            }
            Op::ConcatCols(parts) => {
                let m = node.value.rows();
                let total = node.value.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    let d = self.grad_buf(grads, p);
                    for r in 0..m {
                        for c in 0..w {
                            d[r * w + c] += g.data()[r * total + offset + c];
                        }
                    }
                    offset += w;
                }
            }
            Op::Stack(parts) => {
                let stride = self.value(parts[0]).len();
                for (i, &p) in parts.iter().enumerate() {
                    axpy(
                        self.grad_buf(grads, p),
                        &g.data()[i * stride..(i + 1) * stride],
                        1.0,
                    );
                }
            }
            Op::Index { input, at } => {
                let stride = node.value.len();
                let d = self.grad_buf(grads, *input);
                for (i, gv) in g.data().iter().enumerate() {
                    d[at * stride + i] += gv;
                }
            }
            Op::GatherRows { input, rows } => {
                let n = self.value(*input).cols();
                let d = self.grad_buf(grads, *input);
                for (i, &r) in rows.iter().enumerate() {
                    for c in 0..n {
                        d[r * n + c] += g.data()[i * n + c];
                    }
                }
            }
            Op::PermuteBlocks {
                input,
                perms,
                block,
            } => {
                let n = node.value.cols();
                let d = self.grad_buf(grads, *input);
                for (i, perm) in perms.iter().enumerate() {
                    for (slot, &src) in perm.iter().enumerate() {
                        for c in 0..*block {
                            d[i * n + src * block + c] += g.data()[i * n + slot * block + c];
                        }
                    }
                }
            }
        }
    }
}

fn check_rank(op: &'static str, t: &Tensor, expected: usize) -> Result<(), TensorError> {
    if t.rank() != expected {
        return Err(TensorError::RankMismatch {
            op,
            expected,
            shape: t.shape().to_vec(),
        });
    }
    Ok(())
}

fn axpy(dst: &mut [f64], src: &[f64], alpha: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let lanes = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, lanes, inner)
}

pub(crate) fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// C[m,n] = A[m,k] * B[k,n]
fn dgemm_nn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C[m,k] += A[m,n] * B[k,n]^T
fn dgemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    unsafe {
        matrixmultiply::dgemm(
            m,
            n,
            k,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            b.as_ptr(),
            1,
            n as isize,
            1.0,
            c.as_mut_ptr(),
            k as isize,
            1,
        );
    }
}

/// C[k,n] += A[m,k]^T * B[m,n]
fn dgemm_tn(k: usize, m: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    unsafe {
        matrixmultiply::dgemm(
            k,
            m,
            n,
            1.0,
            a.as_ptr(),
            1,
            k as isize,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
