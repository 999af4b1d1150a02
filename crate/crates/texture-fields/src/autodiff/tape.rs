//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records every forward operation as a node holding its
//! materialized value. The tape is rebuilt each iteration and dropped
//! afterwards; parameters live outside it (see `params.rs`) and receive
//! gradients when [`Tape::backward`] completes. Nodes are appended in
//! topological order, so the backward sweep is a single reverse pass.

use super::kernels::{matmul_nn, matmul_nt, matmul_tn};
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug)]
enum Op<T: Scalar> {
    Leaf,
    /// x[m,k] @ w[k,n] + row-broadcast b[n]
    Affine {
        x: NodeId,
        w: NodeId,
        b: NodeId,
    },
    MatMul {
        a: NodeId,
        b: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    AddBroadcastRow {
        x: NodeId,
        v: NodeId,
    },
    Scale {
        a: NodeId,
        c: T,
    },
    AddConst {
        a: NodeId,
    },
    Relu {
        a: NodeId,
    },
    Sigmoid {
        a: NodeId,
    },
    Exp {
        a: NodeId,
    },
    Abs {
        a: NodeId,
    },
    ConcatCols {
        a: NodeId,
        b: NodeId,
        a_cols: usize,
    },
    ConcatRows {
        parts: Vec<NodeId>,
    },
    SliceRows {
        x: NodeId,
        start: usize,
    },
    RepeatRows {
        v: NodeId,
        reps: usize,
    },
    MaxAxis {
        x: NodeId,
        argmax: Vec<usize>,
    },
    SumAll {
        x: NodeId,
    },
    MeanAll {
        x: NodeId,
    },
    SumAxis {
        x: NodeId,
        axis: usize,
    },
    MeanAxis {
        x: NodeId,
        axis: usize,
    },
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Record a leaf. Gradients flow into it iff `value.requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>) -> NodeId {
        let needs = value.requires_grad;
        self.push(value, Op::Leaf, needs)
    }

    /// Leaf from raw parts, without gradient tracking.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<NodeId> {
        Ok(self.leaf(Tensor::from_vec(shape, data)?))
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn data(&self, id: NodeId) -> &[T] {
        self.nodes[id.0].value.data()
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    /// Gradient of the last `backward` target w.r.t. node `id`.
    pub fn grad(&self, id: NodeId) -> Option<&[T]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn mismatch(&self, op: &'static str, a: NodeId, b: NodeId) -> Error {
        Error::ShapeMismatch {
            op,
            lhs: self.shape(a).to_vec(),
            rhs: self.shape(b).to_vec(),
        }
    }

    // ── forward ops ─────────────────────────────────────────────────

    /// x[m,k] @ w[k,n] + b[n]; the fully-connected layer primitive.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.value(x).dims2()?;
        let (wk, n) = self.value(w).dims2()?;
        let bias = self.value(b);
        if wk != k {
            return Err(self.mismatch("affine", x, w));
        }
        if bias.numel() != n {
            return Err(self.mismatch("affine bias", w, b));
        }
        let mut out = vec![T::ZERO; m * n];
        matmul_nn(self.data(x), self.data(w), m, k, n, &mut out);
        let bdata = self.data(b);
        for row in out.chunks_mut(n) {
            for (o, &bv) in row.iter_mut().zip(bdata) {
                *o += bv;
            }
        }
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        let value = Tensor::from_vec(vec![m, n], out)?;
        Ok(self.push(value, Op::Affine { x, w, b }, needs))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.value(a).dims2()?;
        let (bk, n) = self.value(b).dims2()?;
        if bk != k {
            return Err(self.mismatch("matmul", a, b));
        }
        let mut out = vec![T::ZERO; m * n];
        matmul_nn(self.data(a), self.data(b), m, k, n, &mut out);
        let needs = self.needs(a) || self.needs(b);
        let value = Tensor::from_vec(vec![m, n], out)?;
        Ok(self.push(value, Op::MatMul { a, b }, needs))
    }

    fn elementwise_pair(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(T, T) -> T,
    ) -> Result<(Vec<T>, bool)> {
        if self.shape(a) != self.shape(b) {
            return Err(self.mismatch(op_name, a, b));
        }
        let out = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok((out, self.needs(a) || self.needs(b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (out, needs) = self.elementwise_pair("add", a, b, |x, y| x + y)?;
        let value = Tensor::from_vec(self.shape(a).to_vec(), out)?;
        Ok(self.push(value, Op::Add { a, b }, needs))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (out, needs) = self.elementwise_pair("sub", a, b, |x, y| x - y)?;
        let value = Tensor::from_vec(self.shape(a).to_vec(), out)?;
        Ok(self.push(value, Op::Sub { a, b }, needs))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (out, needs) = self.elementwise_pair("mul", a, b, |x, y| x * y)?;
        let value = Tensor::from_vec(self.shape(a).to_vec(), out)?;
        Ok(self.push(value, Op::Mul { a, b }, needs))
    }

    /// Broadcast a feature row `v[n]` over every row of `x[m,n]`.
    pub fn add_broadcast_row(&mut self, x: NodeId, v: NodeId) -> Result<NodeId> {
        let (m, n) = self.value(x).dims2()?;
        if self.value(v).numel() != n {
            return Err(self.mismatch("add_broadcast_row", x, v));
        }
        let vdata = self.data(v).to_vec();
        let mut out = self.data(x).to_vec();
        for row in out.chunks_mut(n) {
            for (o, &vv) in row.iter_mut().zip(&vdata) {
                *o += vv;
            }
        }
        let needs = self.needs(x) || self.needs(v);
        let value = Tensor::from_vec(vec![m, n], out)?;
        Ok(self.push(value, Op::AddBroadcastRow { x, v }, needs))
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> NodeId {
        let out: Vec<T> = self.data(a).iter().map(|&x| x * c).collect();
        let needs = self.needs(a);
        let value = Tensor::from_vec(self.shape(a).to_vec(), out).expect("same shape");
        self.push(value, Op::Scale { a, c }, needs)
    }

    pub fn add_const(&mut self, a: NodeId, c: T) -> NodeId {
        let out: Vec<T> = self.data(a).iter().map(|&x| x + c).collect();
        let needs = self.needs(a);
        let value = Tensor::from_vec(self.shape(a).to_vec(), out).expect("same shape");
        self.push(value, Op::AddConst { a }, needs)
    }

    fn unary(&mut self, a: NodeId, op: Op<T>, f: impl Fn(T) -> T) -> NodeId {
        let out: Vec<T> = self.data(a).iter().map(|&x| f(x)).collect();
        let needs = self.needs(a);
        let value = Tensor::from_vec(self.shape(a).to_vec(), out).expect("same shape");
        self.push(value, op, needs)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Relu { a }, |x| x.max(T::ZERO))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Sigmoid { a }, |x| T::ONE / (T::ONE + (-x).exp()))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Exp { a }, |x| x.exp())
    }

    /// |x|, with subgradient 0 at x = 0.
    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Abs { a }, |x| x.abs())
    }

    /// Concatenate along the feature (column) axis.
    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ma, na) = self.value(a).dims2()?;
        let (mb, nb) = self.value(b).dims2()?;
        if ma != mb {
            return Err(self.mismatch("concat_cols", a, b));
        }
        let mut out = Vec::with_capacity(ma * (na + nb));
        for i in 0..ma {
            out.extend_from_slice(&self.data(a)[i * na..(i + 1) * na]);
            out.extend_from_slice(&self.data(b)[i * nb..(i + 1) * nb]);
        }
        let needs = self.needs(a) || self.needs(b);
        let value = Tensor::from_vec(vec![ma, na + nb], out)?;
        Ok(self.push(value, Op::ConcatCols { a, b, a_cols: na }, needs))
    }

    /// Stack row blocks vertically.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_rows of zero tensors".into()));
        }
        let (_, n) = self.value(parts[0]).dims2()?;
        let mut rows = 0;
        let mut out = Vec::new();
        let mut needs = false;
        for &p in parts {
            let (mp, np) = self.value(p).dims2()?;
            if np != n {
                return Err(self.mismatch("concat_rows", parts[0], p));
            }
            rows += mp;
            out.extend_from_slice(self.data(p));
            needs |= self.needs(p);
        }
        let value = Tensor::from_vec(vec![rows, n], out)?;
        Ok(self.push(
            value,
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
            needs,
        ))
    }

    pub fn slice_rows(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (m, n) = self.value(x).dims2()?;
        if start + len > m {
            return Err(Error::Contract(format!(
                "slice_rows [{start}, {}) out of bounds for {m} rows",
                start + len
            )));
        }
        let out = self.data(x)[start * n..(start + len) * n].to_vec();
        let needs = self.needs(x);
        let value = Tensor::from_vec(vec![len, n], out)?;
        Ok(self.push(value, Op::SliceRows { x, start }, needs))
    }

    /// Tile a feature row into `reps` identical rows.
    pub fn repeat_rows(&mut self, v: NodeId, reps: usize) -> Result<NodeId> {
        let (m, n) = self.value(v).dims2()?;
        if m != 1 {
            return Err(Error::Contract(format!(
                "repeat_rows expects a single row, got shape {:?}",
                self.shape(v)
            )));
        }
        let mut out = Vec::with_capacity(reps * n);
        for _ in 0..reps {
            out.extend_from_slice(self.data(v));
        }
        let needs = self.needs(v);
        let value = Tensor::from_vec(vec![reps, n], out)?;
        Ok(self.push(value, Op::RepeatRows { v, reps }, needs))
    }

    fn check_axis(&self, op: &'static str, x: NodeId, axis: usize) -> Result<(usize, usize)> {
        let (m, n) = self.value(x).dims2()?;
        if axis > 1 {
            return Err(Error::Contract(format!("{op}: axis {axis} out of range")));
        }
        let extent = if axis == 0 { m } else { n };
        if extent == 0 {
            return Err(Error::EmptyReduction { op, axis });
        }
        Ok((m, n))
    }

    /// Max over `axis` of a rank-2 tensor; ties resolve to the first maximum.
    pub fn max_axis(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let (m, n) = self.check_axis("max_axis", x, axis)?;
        let data = self.data(x);
        let (out, argmax) = if axis == 0 {
            let mut best = data[..n].to_vec();
            let mut arg: Vec<usize> = (0..n).collect();
            for i in 1..m {
                for j in 0..n {
                    let v = data[i * n + j];
                    if v > best[j] {
                        best[j] = v;
                        arg[j] = i * n + j;
                    }
                }
            }
            (best, arg)
        } else {
            let mut best = Vec::with_capacity(m);
            let mut arg = Vec::with_capacity(m);
            for i in 0..m {
                let row = &data[i * n..(i + 1) * n];
                let mut bi = 0;
                let mut bv = row[0];
                for (j, &v) in row.iter().enumerate().skip(1) {
                    if v > bv {
                        bv = v;
                        bi = j;
                    }
                }
                best.push(bv);
                arg.push(i * n + bi);
            }
            (best, arg)
        };
        let needs = self.needs(x);
        let len = out.len();
        let value = Tensor::from_vec(vec![len], out)?;
        Ok(self.push(value, Op::MaxAxis { x, argmax }, needs))
    }

    fn axis_sum(data: &[T], n: usize, axis: usize) -> Vec<T> {
        if axis == 0 {
            let mut acc = vec![T::ZERO; n];
            for row in data.chunks(n) {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc
        } else {
            data.chunks(n)
                .map(|row| row.iter().fold(T::ZERO, |a, &v| a + v))
                .collect()
        }
    }

    pub fn sum_axis(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let (_, n) = self.check_axis("sum_axis", x, axis)?;
        let out = Self::axis_sum(self.data(x), n, axis);
        let needs = self.needs(x);
        let len = out.len();
        let value = Tensor::from_vec(vec![len], out)?;
        Ok(self.push(value, Op::SumAxis { x, axis }, needs))
    }

    pub fn mean_axis(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let (m, n) = self.check_axis("mean_axis", x, axis)?;
        let extent = if axis == 0 { m } else { n };
        let inv = T::ONE / T::from_f64(extent as f64);
        let out: Vec<T> = Self::axis_sum(self.data(x), n, axis)
            .into_iter()
            .map(|v| v * inv)
            .collect();
        let needs = self.needs(x);
        let len = out.len();
        let value = Tensor::from_vec(vec![len], out)?;
        Ok(self.push(value, Op::MeanAxis { x, axis }, needs))
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        if self.value(x).numel() == 0 {
            return Err(Error::EmptyReduction {
                op: "sum_all",
                axis: 0,
            });
        }
        let s = self.data(x).iter().fold(T::ZERO, |a, &v| a + v);
        let needs = self.needs(x);
        Ok(self.push(Tensor::scalar(s), Op::SumAll { x }, needs))
    }

    pub fn mean_all(&mut self, x: NodeId) -> Result<NodeId> {
        let numel = self.value(x).numel();
        if numel == 0 {
            return Err(Error::EmptyReduction {
                op: "mean_all",
                axis: 0,
            });
        }
        let s = self.data(x).iter().fold(T::ZERO, |a, &v| a + v);
        let mean = s / T::from_f64(numel as f64);
        let needs = self.needs(x);
        Ok(self.push(Tensor::scalar(mean), Op::MeanAll { x }, needs))
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss. Populates per-node gradients,
    /// readable via [`Tape::grad`]. Each call is a fresh pass; accumulation
    /// across passes happens in parameter grad buffers, not on the tape.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        let node = &self.nodes[loss.0];
        if node.value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                node.value.shape()
            )));
        }
        if !node.needs_grad {
            return Err(Error::Contract(
                "backward on a detached graph: no upstream tensor requires gradients".into(),
            ));
        }
        self.grads.clear();
        self.grads.resize(self.nodes.len(), None);
        self.add_grad(loss, None, &[T::ONE]);
        for i in (0..self.nodes.len()).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.propagate(NodeId(i), &g)?;
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn add_grad(&mut self, id: NodeId, sub: Option<(usize, usize)>, contribution: &[T]) {
        let numel = self.nodes[id.0].value.numel();
        let slot = self.grads[id.0].get_or_insert_with(|| vec![T::ZERO; numel]);
        match sub {
            None => {
                for (s, &c) in slot.iter_mut().zip(contribution) {
                    *s += c;
                }
            }
            Some((offset, _len)) => {
                for (s, &c) in slot[offset..offset + contribution.len()]
                    .iter_mut()
                    .zip(contribution)
                {
                    *s += c;
                }
            }
        }
    }

    fn propagate(&mut self, id: NodeId, g: &[T]) -> Result<()> {
        // Ops are dispatched on a cloned description to appease the borrow
        // checker; tensors themselves are not cloned.
        enum Todo<T: Scalar> {
            One(NodeId, Vec<T>),
            Offset(NodeId, usize, Vec<T>),
        }
        let mut todo: Vec<Todo<T>> = Vec::new();
        {
            let node = &self.nodes[id.0];
            match &node.op {
                Op::Leaf => {}
                Op::Affine { x, w, b } => {
                    let (m, k) = self.nodes[x.0].value.dims2()?;
                    let (_, n) = self.nodes[w.0].value.dims2()?;
                    if self.needs(*x) {
                        let mut dx = vec![T::ZERO; m * k];
                        matmul_nt(g, self.data(*w), m, n, k, &mut dx);
                        todo.push(Todo::One(*x, dx));
                    }
                    if self.needs(*w) {
                        let mut dw = vec![T::ZERO; k * n];
                        matmul_tn(self.data(*x), g, m, k, n, &mut dw);
                        todo.push(Todo::One(*w, dw));
                    }
                    if self.needs(*b) {
                        let mut db = vec![T::ZERO; n];
                        for row in g.chunks(n) {
                            for (d, &gv) in db.iter_mut().zip(row) {
                                *d += gv;
                            }
                        }
                        todo.push(Todo::One(*b, db));
                    }
                }
                Op::MatMul { a, b } => {
                    let (m, k) = self.nodes[a.0].value.dims2()?;
                    let (_, n) = self.nodes[b.0].value.dims2()?;
                    if self.needs(*a) {
                        let mut da = vec![T::ZERO; m * k];
                        matmul_nt(g, self.data(*b), m, n, k, &mut da);
                        todo.push(Todo::One(*a, da));
                    }
                    if self.needs(*b) {
                        let mut db = vec![T::ZERO; k * n];
                        matmul_tn(self.data(*a), g, m, k, n, &mut db);
                        todo.push(Todo::One(*b, db));
                    }
                }
                Op::Add { a, b } => {
                    if self.needs(*a) {
                        todo.push(Todo::One(*a, g.to_vec()));
                    }
                    if self.needs(*b) {
                        todo.push(Todo::One(*b, g.to_vec()));
                    }
                }
                Op::Sub { a, b } => {
                    if self.needs(*a) {
                        todo.push(Todo::One(*a, g.to_vec()));
                    }
                    if self.needs(*b) {
                        todo.push(Todo::One(*b, g.iter().map(|&v| -v).collect()));
                    }
                }
                Op::Mul { a, b } => {
                    if self.needs(*a) {
                        let da = g
                            .iter()
                            .zip(self.data(*b))
                            .map(|(&gv, &bv)| gv * bv)
                            .collect();
                        todo.push(Todo::One(*a, da));
                    }
                    if self.needs(*b) {
                        let db = g
                            .iter()
                            .zip(self.data(*a))
                            .map(|(&gv, &av)| gv * av)
                            .collect();
                        todo.push(Todo::One(*b, db));
                    }
                }
                Op::AddBroadcastRow { x, v } => {
                    let n = self.nodes[v.0].value.numel();
                    if self.needs(*x) {
                        todo.push(Todo::One(*x, g.to_vec()));
                    }
                    if self.needs(*v) {
                        let mut dv = vec![T::ZERO; n];
                        for row in g.chunks(n) {
                            for (d, &gv) in dv.iter_mut().zip(row) {
                                *d += gv;
                            }
                        }
                        todo.push(Todo::One(*v, dv));
                    }
                }
                Op::Scale { a, c } => {
                    if self.needs(*a) {
                        todo.push(Todo::One(*a, g.iter().map(|&v| v * *c).collect()));
                    }
                }
                Op::AddConst { a } => {
                    if self.needs(*a) {
                        todo.push(Todo::One(*a, g.to_vec()));
                    }
                }
                Op::Relu { a } => {
                    if self.needs(*a) {
                        let da = g
                            .iter()
                            .zip(self.data(*a))
                            .map(|(&gv, &xv)| if xv > T::ZERO { gv } else { T::ZERO })
                            .collect();
                        todo.push(Todo::One(*a, da));
                    }
                }
                Op::Sigmoid { a } => {
                    if self.needs(*a) {
                        let da = g
                            .iter()
                            .zip(node.value.data())
                            .map(|(&gv, &yv)| gv * yv * (T::ONE - yv))
                            .collect();
                        todo.push(Todo::One(*a, da));
                    }
                }
                Op::Exp { a } => {
                    if self.needs(*a) {
                        let da = g
                            .iter()
                            .zip(node.value.data())
                            .map(|(&gv, &yv)| gv * yv)
                            .collect();
                        todo.push(Todo::One(*a, da));
                    }
                }
                Op::Abs { a } => {
                    if self.needs(*a) {
                        let da = g
                            .iter()
                            .zip(self.data(*a))
                            .map(|(&gv, &xv)| {
                                if xv > T::ZERO {
                                    gv
                                } else if xv < T::ZERO {
                                    -gv
                                } else {
                                    T::ZERO
                                }
                            })
                            .collect();
                        todo.push(Todo::One(*a, da));
                    }
                }
                Op::ConcatCols { a, b, a_cols } => {
                    let (m, na) = self.nodes[a.0].value.dims2()?;
                    let (_, nb) = self.nodes[b.0].value.dims2()?;
                    let n = na + nb;
                    debug_assert_eq!(*a_cols, na);
                    if self.needs(*a) {
                        let mut da = Vec::with_capacity(m * na);
                        for i in 0..m {
                            da.extend_from_slice(&g[i * n..i * n + na]);
                        }
                        todo.push(Todo::One(*a, da));
                    }
                    if self.needs(*b) {
                        let mut db = Vec::with_capacity(m * nb);
                        for i in 0..m {
                            db.extend_from_slice(&g[i * n + na..(i + 1) * n]);
                        }
                        todo.push(Todo::One(*b, db));
                    }
                }
                Op::ConcatRows { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let numel = self.nodes[p.0].value.numel();
                        if self.needs(p) {
                            todo.push(Todo::One(p, g[offset..offset + numel].to_vec()));
                        }
                        offset += numel;
                    }
                }
                Op::SliceRows { x, start } => {
                    if self.needs(*x) {
                        let (_, n) = self.nodes[x.0].value.dims2()?;
                        todo.push(Todo::Offset(*x, start * n, g.to_vec()));
                    }
                }
                Op::RepeatRows { v, reps } => {
                    if self.needs(*v) {
                        let n = self.nodes[v.0].value.numel();
                        let mut dv = vec![T::ZERO; n];
                        for r in 0..*reps {
                            for (d, &gv) in dv.iter_mut().zip(&g[r * n..(r + 1) * n]) {
                                *d += gv;
                            }
                        }
                        todo.push(Todo::One(*v, dv));
                    }
                }
                Op::MaxAxis { x, argmax } => {
                    if self.needs(*x) {
                        let numel = self.nodes[x.0].value.numel();
                        let mut dx = vec![T::ZERO; numel];
                        for (&src, &gv) in argmax.iter().zip(g) {
                            dx[src] += gv;
                        }
                        todo.push(Todo::One(*x, dx));
                    }
                }
                Op::SumAll { x } => {
                    if self.needs(*x) {
                        let numel = self.nodes[x.0].value.numel();
                        todo.push(Todo::One(*x, vec![g[0]; numel]));
                    }
                }
                Op::MeanAll { x } => {
                    if self.needs(*x) {
                        let numel = self.nodes[x.0].value.numel();
                        let gv = g[0] / T::from_f64(numel as f64);
                        todo.push(Todo::One(*x, vec![gv; numel]));
                    }
                }
                Op::SumAxis { x, axis } | Op::MeanAxis { x, axis } => {
                    if self.needs(*x) {
                        let (m, n) = self.nodes[x.0].value.dims2()?;
                        let extent = if *axis == 0 { m } else { n };
                        let scale = match node.op {
                            Op::MeanAxis { .. } => T::ONE / T::from_f64(extent as f64),
                            _ => T::ONE,
                        };
                        let mut dx = vec![T::ZERO; m * n];
                        if *axis == 0 {
                            for row in dx.chunks_mut(n) {
                                for (d, &gv) in row.iter_mut().zip(g) {
                                    *d = gv * scale;
                                }
                            }
                        } else {
                            for (i, row) in dx.chunks_mut(n).enumerate() {
                                let gv = g[i] * scale;
                                for d in row {
                                    *d = gv;
                                }
                            }
                        }
                        todo.push(Todo::One(*x, dx));
                    }
                }
            }
        }
        for item in todo {
            match item {
                Todo::One(target, contrib) => self.add_grad(target, None, &contrib),
                Todo::Offset(target, offset, contrib) => {
                    self.add_grad(target, Some((offset, contrib.len())), &contrib)
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf64(tape: &mut Tape<f64>, shape: Vec<usize>, data: Vec<f64>) -> NodeId {
        tape.leaf(Tensor::from_vec(shape, data).unwrap().with_grad())
    }

    #[test]
    fn linear_with_identity_weights_is_identity() {
        let mut tape = Tape::<f64>::new();
        let x = tape
            .constant(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        let w = tape
            .constant(vec![3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let b = tape.constant(vec![3], vec![0.0; 3]).unwrap();
        let y = tape.affine(x, w, b).unwrap();
        assert_eq!(tape.data(y), tape.data(x));
    }

    #[test]
    fn relu_definition() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = tape.relu(x);
        assert_eq!(tape.data(y), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn max_over_row_axis_enumerated_by_hand() {
        // [[1,5],[3,2]]: column maxima are max(1,3)=3 and max(5,2)=5
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![2, 2], vec![1.0, 5.0, 3.0, 2.0]).unwrap();
        let y = tape.max_axis(x, 0).unwrap();
        assert_eq!(tape.data(y), &[3.0, 5.0]);
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = leaf64(&mut tape, vec![1], vec![3.0]);
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum_all(sq).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[6.0]);
    }

    #[test]
    fn constant_loss_gives_zero_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = leaf64(&mut tape, vec![2], vec![1.0, 2.0]);
        let zero = tape.scale(x, 0.0);
        let loss = tape.sum_all(zero).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_on_non_scalar_is_contract_error() {
        let mut tape = Tape::<f64>::new();
        let x = leaf64(&mut tape, vec![2], vec![1.0, 2.0]);
        let y = tape.relu(x);
        assert!(matches!(tape.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_on_detached_graph_is_contract_error() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![1], vec![2.0]).unwrap();
        let y = tape.mul(x, x).unwrap();
        assert!(matches!(tape.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::<f64>::new();
        let a = tape.constant(vec![2, 2], vec![0.0; 4]).unwrap();
        let b = tape.constant(vec![3], vec![0.0; 3]).unwrap();
        match tape.add(a, b) {
            Err(Error::ShapeMismatch { lhs, rhs, .. }) => {
                assert_eq!(lhs, vec![2, 2]);
                assert_eq!(rhs, vec![3]);
            }
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn empty_axis_reduction_is_domain_error() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![0, 3], vec![]).unwrap();
        assert!(matches!(
            tape.max_axis(x, 0),
            Err(Error::EmptyReduction { .. })
        ));
    }

    #[test]
    fn concat_and_slice_round_trip_gradients() {
        let mut tape = Tape::<f64>::new();
        let a = leaf64(&mut tape, vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let b = leaf64(&mut tape, vec![2, 1], vec![5.0, 6.0]);
        let cat = tape.concat_cols(a, b).unwrap();
        assert_eq!(tape.data(cat), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let right = tape.slice_rows(cat, 1, 1).unwrap();
        let loss = tape.sum_all(right).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap(), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(tape.grad(b).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn backward_linearity_in_the_loss() {
        // grad of (2f + 3g) == 2*grad(f) + 3*grad(g), elementwise
        let build = |coeff_f: f64, coeff_g: f64| -> Vec<f64> {
            let mut tape = Tape::<f64>::new();
            let x = leaf64(&mut tape, vec![3], vec![0.5, -1.5, 2.0]);
            let f = {
                let sq = tape.mul(x, x).unwrap();
                tape.sum_all(sq).unwrap()
            };
            let g = {
                let e = tape.exp(x);
                tape.sum_all(e).unwrap()
            };
            let sf = tape.scale(f, coeff_f);
            let sg = tape.scale(g, coeff_g);
            let loss = tape.add(sf, sg).unwrap();
            tape.backward(loss).unwrap();
            tape.grad(x).unwrap().to_vec()
        };
        let gf = build(1.0, 0.0);
        let gg = build(0.0, 1.0);
        let combined = build(2.0, 3.0);
        for i in 0..3 {
            let expect = 2.0 * gf[i] + 3.0 * gg[i];
            assert!((combined[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn each_backward_call_is_a_fresh_pass() {
        let mut tape = Tape::<f64>::new();
        let x = leaf64(&mut tape, vec![1], vec![3.0]);
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum_all(sq).unwrap();
        tape.backward(loss).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap()[0], 6.0);
    }
}
