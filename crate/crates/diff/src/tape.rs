//! Computation tape and tensor operations.

use crate::error::{DiffError, Result};
use crate::params::{ParamId, ParamStore};
use std::cell::RefCell;
use std::rc::Rc;

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize),
    Matmul(usize, usize),
    MatmulNT(usize, usize),
    AddRow(usize, usize),
    ConcatCols(usize, usize),
    ConcatRows(Vec<usize>),
    SliceCols(usize, usize, usize),
    SumAll(usize),
    SumCols(usize),
    MeanRows(usize),
    Softmax(usize),
    LogSoftmax(usize),
    Tanh(usize),
    Sigmoid(usize),
    Relu(usize),
    Log(usize),
    Exp(usize),
    LayerNorm(usize, f64),
    GatherRows(usize, Vec<usize>),
    GatherElems(usize, Vec<usize>),
    MaskedFill(usize, Vec<bool>),
    PermuteRows(usize, Vec<usize>),
    GroupWeightedSum(usize, usize),
    SegmentSum(usize, Vec<usize>),
    SegmentLogSoftmax(usize, Vec<usize>),
    MulConstVec(usize, Vec<f64>),
    MulScalarT(usize, usize),
    MulRow(usize, usize),
    Reshape(usize),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    op: Op,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
}

/// Shared computation tape. Cloning is cheap (reference counted); one
/// tape per forward/backward episode, never shared across threads.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

/// Handle to a value recorded on a tape.
#[derive(Clone)]
pub struct Tensor {
    tape: Tape,
    idx: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    fn push(&self, rows: usize, cols: usize, data: Vec<f64>, op: Op) -> Result<Tensor> {
        debug_assert_eq!(rows * cols, data.len());
        if data.iter().any(|x| !x.is_finite()) {
            return Err(DiffError::NonFinite(format!("{op:?}")));
        }
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { rows, cols, data, op });
        Ok(Tensor { tape: self.clone(), idx: inner.nodes.len() - 1 })
    }

    /// Constant input (no gradient destination).
    pub fn leaf(&self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor> {
        if data.len() != rows * cols {
            return Err(DiffError::Shape(format!(
                "leaf data has {} values for shape [{rows}, {cols}]",
                data.len()
            )));
        }
        self.push(rows, cols, data, Op::Leaf)
    }

    pub fn scalar(&self, v: f64) -> Result<Tensor> {
        self.leaf(1, 1, vec![v])
    }

    /// Materializes a parameter; gradients flow back into the store.
    pub fn param(&self, store: &ParamStore, id: ParamId) -> Result<Tensor> {
        let (rows, cols) = store.shape(id);
        self.push(rows, cols, store.data(id).to_vec(), Op::Param(id))
    }

    /// Reverse pass from a scalar loss; accumulates parameter gradients
    /// into the store (on top of whatever is already there).
    pub fn backward(&self, loss: &Tensor, store: &mut ParamStore) -> Result<()> {
        let inner = self.inner.borrow();
        let nodes = &inner.nodes;
        let loss_node = &nodes[loss.idx];
        if loss_node.rows * loss_node.cols != 1 {
            return Err(DiffError::Shape(format!(
                "backward needs a scalar loss, got [{}, {}]",
                loss_node.rows, loss_node.cols
            )));
        }
        let mut grads: Vec<Vec<f64>> = nodes.iter().map(|n| vec![0.0; n.data.len()]).collect();
        grads[loss.idx][0] = 1.0;
        for i in (0..=loss.idx).rev() {
            if grads[i].iter().all(|&g| g == 0.0) {
                continue;
            }
            let node = &nodes[i];
            let g = std::mem::take(&mut grads[i]);
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => store.accumulate_grad(*id, &g),
                Op::Add(a, b) => {
                    axpy(&mut grads[*a], &g, 1.0);
                    axpy(&mut grads[*b], &g, 1.0);
                }
                Op::Sub(a, b) => {
                    axpy(&mut grads[*a], &g, 1.0);
                    axpy(&mut grads[*b], &g, -1.0);
                }
                Op::Mul(a, b) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] * nodes[*b].data[k];
                    }
                    for k in 0..g.len() {
                        grads[*b][k] += g[k] * nodes[*a].data[k];
                    }
                }
                Op::Neg(a) => axpy(&mut grads[*a], &g, -1.0),
                Op::Scale(a, s) => axpy(&mut grads[*a], &g, *s),
                Op::AddScalar(a) => axpy(&mut grads[*a], &g, 1.0),
                Op::Matmul(a, b) => {
                    // C = A B: dA += dC B^T, dB += A^T dC
                    let (ar, ac) = (nodes[*a].rows, nodes[*a].cols);
                    let bc = nodes[*b].cols;
                    let (da, db) = (&nodes[*a].data, &nodes[*b].data);
                    for r in 0..ar {
                        for k in 0..ac {
                            let mut acc = 0.0;
                            for c in 0..bc {
                                acc += g[r * bc + c] * db[k * bc + c];
                            }
                            grads[*a][r * ac + k] += acc;
                        }
                    }
                    for k in 0..ac {
                        for c in 0..bc {
                            let mut acc = 0.0;
                            for r in 0..ar {
                                acc += da[r * ac + k] * g[r * bc + c];
                            }
                            grads[*b][k * bc + c] += acc;
                        }
                    }
                }
                Op::MatmulNT(a, b) => {
                    // C = A B^T: dA += dC B, dB += dC^T A
                    let (ar, ac) = (nodes[*a].rows, nodes[*a].cols);
                    let br = nodes[*b].rows;
                    let (da, db) = (&nodes[*a].data, &nodes[*b].data);
                    for r in 0..ar {
                        for k in 0..ac {
                            let mut acc = 0.0;
                            for c in 0..br {
                                acc += g[r * br + c] * db[c * ac + k];
                            }
                            grads[*a][r * ac + k] += acc;
                        }
                    }
                    for c in 0..br {
                        for k in 0..ac {
                            let mut acc = 0.0;
                            for r in 0..ar {
                                acc += g[r * br + c] * da[r * ac + k];
                            }
                            grads[*b][c * ac + k] += acc;
                        }
                    }
                }
                Op::AddRow(a, b) => {
                    axpy(&mut grads[*a], &g, 1.0);
                    let cols = nodes[*b].cols;
                    for (k, gv) in g.iter().enumerate() {
                        grads[*b][k % cols] += gv;
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (ac, bc) = (nodes[*a].cols, nodes[*b].cols);
                    let rows = node.rows;
                    for r in 0..rows {
                        for c in 0..ac {
                            grads[*a][r * ac + c] += g[r * (ac + bc) + c];
                        }
                        for c in 0..bc {
                            grads[*b][r * bc + c] += g[r * (ac + bc) + ac + c];
                        }
                    }
                }
                Op::ConcatRows(srcs) => {
                    let mut at = 0;
                    for &s in srcs {
                        let len = nodes[s].data.len();
                        axpy(&mut grads[s], &g[at..at + len], 1.0);
                        at += len;
                    }
                }
                Op::SliceCols(a, start, end) => {
                    let src_cols = nodes[*a].cols;
                    let width = end - start;
                    for r in 0..node.rows {
                        for c in 0..width {
                            grads[*a][r * src_cols + start + c] += g[r * width + c];
                        }
                    }
                }
                Op::SumAll(a) => {
                    for v in grads[*a].iter_mut() {
                        *v += g[0];
                    }
                }
                Op::SumCols(a) => {
                    let cols = nodes[*a].cols;
                    for r in 0..nodes[*a].rows {
                        for c in 0..cols {
                            grads[*a][r * cols + c] += g[r];
                        }
                    }
                }
                Op::MeanRows(a) => {
                    let rows = nodes[*a].rows as f64;
                    let cols = nodes[*a].cols;
                    for r in 0..nodes[*a].rows {
                        for c in 0..cols {
                            grads[*a][r * cols + c] += g[c] / rows;
                        }
                    }
                }
                Op::Softmax(a) => {
                    let cols = node.cols;
                    for r in 0..node.rows {
                        let y = &node.data[r * cols..(r + 1) * cols];
                        let gy = &g[r * cols..(r + 1) * cols];
                        let dot: f64 = y.iter().zip(gy).map(|(x, d)| x * d).sum();
                        for c in 0..cols {
                            grads[*a][r * cols + c] += y[c] * (gy[c] - dot);
                        }
                    }
                }
                Op::LogSoftmax(a) => {
                    let cols = node.cols;
                    for r in 0..node.rows {
                        let y = &node.data[r * cols..(r + 1) * cols];
                        let gy = &g[r * cols..(r + 1) * cols];
                        let gsum: f64 = gy.iter().sum();
                        for c in 0..cols {
                            grads[*a][r * cols + c] += gy[c] - y[c].exp() * gsum;
                        }
                    }
                }
                Op::Tanh(a) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] * (1.0 - node.data[k] * node.data[k]);
                    }
                }
                Op::Sigmoid(a) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] * node.data[k] * (1.0 - node.data[k]);
                    }
                }
                Op::Relu(a) => {
                    for k in 0..g.len() {
                        if nodes[*a].data[k] > 0.0 {
                            grads[*a][k] += g[k];
                        }
                    }
                }
                Op::Log(a) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] / nodes[*a].data[k];
                    }
                }
                Op::Exp(a) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] * node.data[k];
                    }
                }
                Op::LayerNorm(a, eps) => {
                    let cols = node.cols;
                    let x = &nodes[*a].data;
                    for r in 0..node.rows {
                        let row = &x[r * cols..(r + 1) * cols];
                        let mean = row.iter().sum::<f64>() / cols as f64;
                        let var =
                            row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
                        let sigma = (var + eps).sqrt();
                        let y = &node.data[r * cols..(r + 1) * cols];
                        let gy = &g[r * cols..(r + 1) * cols];
                        let gmean: f64 = gy.iter().sum::<f64>() / cols as f64;
                        let gdoty: f64 =
                            gy.iter().zip(y).map(|(d, v)| d * v).sum::<f64>() / cols as f64;
                        for c in 0..cols {
                            grads[*a][r * cols + c] +=
                                (gy[c] - gmean - y[c] * gdoty) / sigma;
                        }
                    }
                }
                Op::GatherRows(a, idx) => {
                    let cols = node.cols;
                    for (r, &src) in idx.iter().enumerate() {
                        for c in 0..cols {
                            grads[*a][src * cols + c] += g[r * cols + c];
                        }
                    }
                }
                Op::GatherElems(a, idx) => {
                    for (k, &src) in idx.iter().enumerate() {
                        grads[*a][src] += g[k];
                    }
                }
                Op::MaskedFill(a, mask) => {
                    for k in 0..g.len() {
                        if !mask[k] {
                            grads[*a][k] += g[k];
                        }
                    }
                }
                Op::PermuteRows(a, perm) => {
                    let cols = node.cols;
                    for (r, &src) in perm.iter().enumerate() {
                        for c in 0..cols {
                            grads[*a][src * cols + c] += g[r * cols + c];
                        }
                    }
                }
                Op::GroupWeightedSum(values, weights) => {
                    // out[g', :] = sum_n W[g', n] * V[g' * n_per + n, :]
                    let cols = node.cols;
                    let n_per = nodes[*weights].cols;
                    let groups = nodes[*weights].rows;
                    let (dv, dw) = (&nodes[*values].data, &nodes[*weights].data);
                    for gi in 0..groups {
                        for n in 0..n_per {
                            let w = dw[gi * n_per + n];
                            let vrow = (gi * n_per + n) * cols;
                            let mut dot = 0.0;
                            for c in 0..cols {
                                grads[*values][vrow + c] += w * g[gi * cols + c];
                                dot += g[gi * cols + c] * dv[vrow + c];
                            }
                            grads[*weights][gi * n_per + n] += dot;
                        }
                    }
                }
                Op::SegmentSum(a, seg) => {
                    let cols = node.cols;
                    for (e, &s) in seg.iter().enumerate() {
                        for c in 0..cols {
                            grads[*a][e * cols + c] += g[s * cols + c];
                        }
                    }
                }
                Op::SegmentLogSoftmax(a, offsets) => {
                    for w in offsets.windows(2) {
                        let (lo, hi) = (w[0], w[1]);
                        let gsum: f64 = g[lo..hi].iter().sum();
                        for k in lo..hi {
                            grads[*a][k] += g[k] - node.data[k].exp() * gsum;
                        }
                    }
                }
                Op::MulConstVec(a, consts) => {
                    for k in 0..g.len() {
                        grads[*a][k] += g[k] * consts[k];
                    }
                }
                Op::MulScalarT(a, s) => {
                    let sv = nodes[*s].data[0];
                    axpy(&mut grads[*a], &g, sv);
                    let dot: f64 = g.iter().zip(&nodes[*a].data).map(|(x, y)| x * y).sum();
                    grads[*s][0] += dot;
                }
                Op::MulRow(a, b) => {
                    let cols = nodes[*b].cols;
                    for (k, gv) in g.iter().enumerate() {
                        grads[*a][k] += gv * nodes[*b].data[k % cols];
                    }
                    for (k, gv) in g.iter().enumerate() {
                        grads[*b][k % cols] += gv * nodes[*a].data[k];
                    }
                }
                Op::Reshape(a) => axpy(&mut grads[*a], &g, 1.0),
            }
        }
        store.check_grads_finite()
    }
}

fn axpy(dst: &mut [f64], src: &[f64], k: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += k * s;
    }
}

impl Tensor {
    pub fn rows(&self) -> usize {
        self.tape.inner.borrow().nodes[self.idx].rows
    }

    pub fn cols(&self) -> usize {
        self.tape.inner.borrow().nodes[self.idx].cols
    }

    pub fn shape(&self) -> (usize, usize) {
        let inner = self.tape.inner.borrow();
        let n = &inner.nodes[self.idx];
        (n.rows, n.cols)
    }

    /// Copies the forward value out of the tape.
    pub fn value(&self) -> Vec<f64> {
        self.tape.inner.borrow().nodes[self.idx].data.clone()
    }

    pub fn scalar_value(&self) -> f64 {
        let inner = self.tape.inner.borrow();
        let n = &inner.nodes[self.idx];
        debug_assert_eq!(n.data.len(), 1);
        n.data[0]
    }

    fn same_tape(&self, other: &Tensor) -> Result<()> {
        if !Rc::ptr_eq(&self.tape.inner, &other.tape.inner) {
            return Err(DiffError::Shape("tensors live on different tapes".into()));
        }
        Ok(())
    }

    fn binary_same_shape(&self, other: &Tensor, name: &str) -> Result<(usize, usize)> {
        self.same_tape(other)?;
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        if (r1, c1) != (r2, c2) {
            return Err(DiffError::Shape(format!(
                "{name}: [{r1}, {c1}] vs [{r2}, {c2}]"
            )));
        }
        Ok((r1, c1))
    }

    fn zip_data(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let inner = self.tape.inner.borrow();
        inner.nodes[self.idx]
            .data
            .iter()
            .zip(&inner.nodes[other.idx].data)
            .map(|(&a, &b)| f(a, b))
            .collect()
    }

    fn map_data(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.tape.inner.borrow().nodes[self.idx]
            .data
            .iter()
            .map(|&a| f(a))
            .collect()
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.binary_same_shape(other, "add")?;
        let data = self.zip_data(other, |a, b| a + b);
        self.tape.push(r, c, data, Op::Add(self.idx, other.idx))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.binary_same_shape(other, "sub")?;
        let data = self.zip_data(other, |a, b| a - b);
        self.tape.push(r, c, data, Op::Sub(self.idx, other.idx))
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.binary_same_shape(other, "mul")?;
        let data = self.zip_data(other, |a, b| a * b);
        self.tape.push(r, c, data, Op::Mul(self.idx, other.idx))
    }

    pub fn neg(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(r, c, self.map_data(|a| -a), Op::Neg(self.idx))
    }

    pub fn scale(&self, k: f64) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(r, c, self.map_data(|a| k * a), Op::Scale(self.idx, k))
    }

    pub fn add_scalar(&self, k: f64) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape
            .push(r, c, self.map_data(|a| a + k), Op::AddScalar(self.idx))
    }

    /// `[r, k] x [k, c] -> [r, c]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        self.same_tape(other)?;
        let (ar, ac) = self.shape();
        let (br, bc) = other.shape();
        if ac != br {
            return Err(DiffError::Shape(format!(
                "matmul: [{ar}, {ac}] x [{br}, {bc}]"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let b = &inner.nodes[other.idx].data;
        let mut out = vec![0.0; ar * bc];
        for r in 0..ar {
            for k in 0..ac {
                let av = a[r * ac + k];
                if av != 0.0 {
                    let brow = &b[k * bc..(k + 1) * bc];
                    let orow = &mut out[r * bc..(r + 1) * bc];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
        drop(inner);
        self.tape.push(ar, bc, out, Op::Matmul(self.idx, other.idx))
    }

    /// `A B^T`: `[r, k] x [c, k] -> [r, c]`.
    pub fn matmul_nt(&self, other: &Tensor) -> Result<Tensor> {
        self.same_tape(other)?;
        let (ar, ac) = self.shape();
        let (br, bc) = other.shape();
        if ac != bc {
            return Err(DiffError::Shape(format!(
                "matmul_nt: [{ar}, {ac}] x [{br}, {bc}]^T"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let b = &inner.nodes[other.idx].data;
        let mut out = vec![0.0; ar * br];
        for r in 0..ar {
            let arow = &a[r * ac..(r + 1) * ac];
            for c in 0..br {
                let brow = &b[c * bc..(c + 1) * bc];
                out[r * br + c] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
            }
        }
        drop(inner);
        self.tape.push(ar, br, out, Op::MatmulNT(self.idx, other.idx))
    }

    /// Adds a `[1, c]` row vector to every row of `[r, c]`.
    pub fn add_row(&self, row: &Tensor) -> Result<Tensor> {
        self.same_tape(row)?;
        let (r, c) = self.shape();
        let (rr, rc) = row.shape();
        if rr != 1 || rc != c {
            return Err(DiffError::Shape(format!(
                "add_row: [{r}, {c}] + [{rr}, {rc}]"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let b = &inner.nodes[row.idx].data;
        let data = a
            .iter()
            .enumerate()
            .map(|(k, &v)| v + b[k % c])
            .collect();
        drop(inner);
        self.tape.push(r, c, data, Op::AddRow(self.idx, row.idx))
    }

    /// Column-wise concatenation of equal-row tensors.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor> {
        self.same_tape(other)?;
        let (r, c1) = self.shape();
        let (r2, c2) = other.shape();
        if r != r2 {
            return Err(DiffError::Shape(format!(
                "concat_cols: {r} rows vs {r2} rows"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let b = &inner.nodes[other.idx].data;
        let mut data = Vec::with_capacity(r * (c1 + c2));
        for row in 0..r {
            data.extend_from_slice(&a[row * c1..(row + 1) * c1]);
            data.extend_from_slice(&b[row * c2..(row + 1) * c2]);
        }
        drop(inner);
        self.tape
            .push(r, c1 + c2, data, Op::ConcatCols(self.idx, other.idx))
    }

    /// Row-wise concatenation of equal-column tensors.
    pub fn concat_rows(parts: &[Tensor]) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| DiffError::Shape("concat_rows of nothing".into()))?;
        let cols = first.cols();
        let tape = first.tape.clone();
        let mut rows = 0;
        let mut data = Vec::new();
        let mut srcs = Vec::with_capacity(parts.len());
        for p in parts {
            first.same_tape(p)?;
            if p.cols() != cols {
                return Err(DiffError::Shape(format!(
                    "concat_rows: {} cols vs {cols}",
                    p.cols()
                )));
            }
            rows += p.rows();
            data.extend_from_slice(&tape.inner.borrow().nodes[p.idx].data);
            srcs.push(p.idx);
        }
        tape.push(rows, cols, data, Op::ConcatRows(srcs))
    }

    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Tensor> {
        let (r, c) = self.shape();
        if start >= end || end > c {
            return Err(DiffError::Shape(format!(
                "slice_cols {start}..{end} of [{r}, {c}]"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = Vec::with_capacity(r * (end - start));
        for row in 0..r {
            data.extend_from_slice(&a[row * c + start..row * c + end]);
        }
        drop(inner);
        self.tape
            .push(r, end - start, data, Op::SliceCols(self.idx, start, end))
    }

    pub fn sum_all(&self) -> Result<Tensor> {
        let total: f64 = self.tape.inner.borrow().nodes[self.idx].data.iter().sum();
        self.tape.push(1, 1, vec![total], Op::SumAll(self.idx))
    }

    /// Sums along columns: `[r, c] -> [r, 1]`.
    pub fn sum_cols(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let data = (0..r).map(|row| a[row * c..(row + 1) * c].iter().sum()).collect();
        drop(inner);
        self.tape.push(r, 1, data, Op::SumCols(self.idx))
    }

    /// Mean along rows: `[r, c] -> [1, c]`.
    pub fn mean_rows(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; c];
        for row in 0..r {
            for col in 0..c {
                data[col] += a[row * c + col];
            }
        }
        for v in data.iter_mut() {
            *v /= r as f64;
        }
        drop(inner);
        self.tape.push(1, c, data, Op::MeanRows(self.idx))
    }

    /// Row-wise stable softmax.
    pub fn softmax(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; r * c];
        for row in 0..r {
            let x = &a[row * c..(row + 1) * c];
            let max = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut z = 0.0;
            for col in 0..c {
                let e = (x[col] - max).exp();
                data[row * c + col] = e;
                z += e;
            }
            for col in 0..c {
                data[row * c + col] /= z;
            }
        }
        drop(inner);
        self.tape.push(r, c, data, Op::Softmax(self.idx))
    }

    /// Row-wise stable log-softmax.
    pub fn log_softmax(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; r * c];
        for row in 0..r {
            let x = &a[row * c..(row + 1) * c];
            let max = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            for col in 0..c {
                data[row * c + col] = x[col] - lse;
            }
        }
        drop(inner);
        self.tape.push(r, c, data, Op::LogSoftmax(self.idx))
    }

    pub fn tanh(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(r, c, self.map_data(f64::tanh), Op::Tanh(self.idx))
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(
            r,
            c,
            self.map_data(|a| 1.0 / (1.0 + (-a).exp())),
            Op::Sigmoid(self.idx),
        )
    }

    pub fn relu(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape
            .push(r, c, self.map_data(|a| a.max(0.0)), Op::Relu(self.idx))
    }

    pub fn log(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(r, c, self.map_data(f64::ln), Op::Log(self.idx))
    }

    pub fn exp(&self) -> Result<Tensor> {
        let (r, c) = self.shape();
        self.tape.push(r, c, self.map_data(f64::exp), Op::Exp(self.idx))
    }

    /// Row-wise layer normalization (zero mean, unit variance, no affine).
    pub fn layer_norm(&self, eps: f64) -> Result<Tensor> {
        let (r, c) = self.shape();
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; r * c];
        for row in 0..r {
            let x = &a[row * c..(row + 1) * c];
            let mean = x.iter().sum::<f64>() / c as f64;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let sigma = (var + eps).sqrt();
            for col in 0..c {
                data[row * c + col] = (x[col] - mean) / sigma;
            }
        }
        drop(inner);
        self.tape.push(r, c, data, Op::LayerNorm(self.idx, eps))
    }

    /// Row gather (embedding lookup): `out[i, :] = self[idx[i], :]`.
    pub fn gather_rows(&self, idx: &[usize]) -> Result<Tensor> {
        let (r, c) = self.shape();
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(DiffError::Shape(format!("gather_rows index {bad} >= {r}")));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(&a[i * c..(i + 1) * c]);
        }
        drop(inner);
        self.tape
            .push(idx.len(), c, data, Op::GatherRows(self.idx, idx.to_vec()))
    }

    /// Flat element gather into a row vector.
    pub fn gather_elems(&self, idx: &[usize]) -> Result<Tensor> {
        let len = self.rows() * self.cols();
        if let Some(&bad) = idx.iter().find(|&&i| i >= len) {
            return Err(DiffError::Shape(format!("gather_elems index {bad} >= {len}")));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let data = idx.iter().map(|&i| a[i]).collect();
        drop(inner);
        self.tape
            .push(1, idx.len(), data, Op::GatherElems(self.idx, idx.to_vec()))
    }

    /// Replaces masked entries with a constant (no gradient through them).
    pub fn masked_fill(&self, mask: &[bool], value: f64) -> Result<Tensor> {
        let (r, c) = self.shape();
        if mask.len() != r * c {
            return Err(DiffError::Shape(format!(
                "masked_fill: mask has {} entries for [{r}, {c}]",
                mask.len()
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let data = a
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { value } else { v })
            .collect();
        drop(inner);
        self.tape
            .push(r, c, data, Op::MaskedFill(self.idx, mask.to_vec()))
    }

    /// Row permutation: `out[i, :] = self[perm[i], :]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Tensor> {
        if perm.len() != self.rows() {
            return Err(DiffError::Shape("permute_rows length mismatch".into()));
        }
        self.gather_rows_as_permutation(perm)
    }

    fn gather_rows_as_permutation(&self, perm: &[usize]) -> Result<Tensor> {
        let (r, c) = self.shape();
        if let Some(&bad) = perm.iter().find(|&&i| i >= r) {
            return Err(DiffError::Shape(format!("permute_rows index {bad} >= {r}")));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = Vec::with_capacity(perm.len() * c);
        for &i in perm {
            data.extend_from_slice(&a[i * c..(i + 1) * c]);
        }
        drop(inner);
        self.tape
            .push(perm.len(), c, data, Op::PermuteRows(self.idx, perm.to_vec()))
    }

    /// Grouped weighted sum: `self` is `[g * n, c]` (g groups of n rows),
    /// `weights` is `[g, n]`; output `[g, c]` with
    /// `out[i, :] = sum_j weights[i, j] * self[i * n + j, :]`.
    pub fn group_weighted_sum(&self, weights: &Tensor) -> Result<Tensor> {
        self.same_tape(weights)?;
        let (vr, c) = self.shape();
        let (g, n) = weights.shape();
        if vr != g * n {
            return Err(DiffError::Shape(format!(
                "group_weighted_sum: values [{vr}, {c}] vs weights [{g}, {n}]"
            )));
        }
        let inner = self.tape.inner.borrow();
        let v = &inner.nodes[self.idx].data;
        let w = &inner.nodes[weights.idx].data;
        let mut data = vec![0.0; g * c];
        for gi in 0..g {
            for j in 0..n {
                let wv = w[gi * n + j];
                if wv != 0.0 {
                    let vrow = &v[(gi * n + j) * c..(gi * n + j + 1) * c];
                    let orow = &mut data[gi * c..(gi + 1) * c];
                    for (o, &x) in orow.iter_mut().zip(vrow) {
                        *o += wv * x;
                    }
                }
            }
        }
        drop(inner);
        self.tape.push(
            g,
            c,
            data,
            Op::GroupWeightedSum(self.idx, weights.idx),
        )
    }

    /// Sums rows into `groups` buckets: `out[seg[e], :] += self[e, :]`.
    pub fn segment_sum(&self, seg: &[usize], groups: usize) -> Result<Tensor> {
        let (r, c) = self.shape();
        if seg.len() != r {
            return Err(DiffError::Shape("segment_sum length mismatch".into()));
        }
        if let Some(&bad) = seg.iter().find(|&&s| s >= groups) {
            return Err(DiffError::Shape(format!("segment id {bad} >= {groups}")));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; groups * c];
        for (e, &s) in seg.iter().enumerate() {
            for col in 0..c {
                data[s * c + col] += a[e * c + col];
            }
        }
        drop(inner);
        self.tape
            .push(groups, c, data, Op::SegmentSum(self.idx, seg.to_vec()))
    }

    /// Log-softmax over contiguous segments of a `[n, 1]` column, given
    /// segment boundary offsets `[0, ..., n]`.
    pub fn segment_log_softmax(&self, offsets: &[usize]) -> Result<Tensor> {
        let (r, c) = self.shape();
        if c != 1 {
            return Err(DiffError::Shape("segment_log_softmax needs a column".into()));
        }
        if offsets.first() != Some(&0) || offsets.last() != Some(&r) {
            return Err(DiffError::Shape("segment offsets must span the column".into()));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let mut data = vec![0.0; r];
        for w in offsets.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if lo >= hi {
                return Err(DiffError::Shape("empty segment".into()));
            }
            let max = a[lo..hi].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + a[lo..hi].iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            for k in lo..hi {
                data[k] = a[k] - lse;
            }
        }
        drop(inner);
        self.tape.push(
            r,
            1,
            data,
            Op::SegmentLogSoftmax(self.idx, offsets.to_vec()),
        )
    }

    /// Elementwise product with a constant vector (no gradient to it).
    pub fn mul_const_vec(&self, consts: &[f64]) -> Result<Tensor> {
        let (r, c) = self.shape();
        if consts.len() != r * c {
            return Err(DiffError::Shape("mul_const_vec length mismatch".into()));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let data = a.iter().zip(consts).map(|(&v, &k)| v * k).collect();
        drop(inner);
        self.tape
            .push(r, c, data, Op::MulConstVec(self.idx, consts.to_vec()))
    }

    /// Multiplies every row elementwise by a `[1, c]` row vector.
    pub fn mul_row(&self, row: &Tensor) -> Result<Tensor> {
        self.same_tape(row)?;
        let (r, c) = self.shape();
        let (rr, rc) = row.shape();
        if rr != 1 || rc != c {
            return Err(DiffError::Shape(format!(
                "mul_row: [{r}, {c}] * [{rr}, {rc}]"
            )));
        }
        let inner = self.tape.inner.borrow();
        let a = &inner.nodes[self.idx].data;
        let b = &inner.nodes[row.idx].data;
        let data = a.iter().enumerate().map(|(k, &v)| v * b[k % c]).collect();
        drop(inner);
        self.tape.push(r, c, data, Op::MulRow(self.idx, row.idx))
    }

    /// Reinterprets the data with a new shape of identical length.
    pub fn reshape(&self, rows: usize, cols: usize) -> Result<Tensor> {
        let (r, c) = self.shape();
        if rows * cols != r * c {
            return Err(DiffError::Shape(format!(
                "reshape [{r}, {c}] -> [{rows}, {cols}]"
            )));
        }
        let data = self.tape.inner.borrow().nodes[self.idx].data.clone();
        self.tape.push(rows, cols, data, Op::Reshape(self.idx))
    }

    /// Broadcast multiply by a `[1, 1]` tensor (e.g. a learnable scalar).
    pub fn mul_scalar_t(&self, scalar: &Tensor) -> Result<Tensor> {
        self.same_tape(scalar)?;
        if scalar.shape() != (1, 1) {
            return Err(DiffError::Shape("mul_scalar_t needs a [1, 1] scalar".into()));
        }
        let (r, c) = self.shape();
        let s = scalar.scalar_value();
        let data = self.map_data(|a| a * s);
        self.tape
            .push(r, c, data, Op::MulScalarT(self.idx, scalar.idx))
    }
}
