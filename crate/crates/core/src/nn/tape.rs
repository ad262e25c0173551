//! Reverse-mode automatic differentiation over row-major matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! referenced from a [`ParamStore`] rather than copied, and their gradients
//! are accumulated into a [`Grads`] buffer by [`Tape::backward`].

use ndarray::{s, Array2, Axis, Zip};

use super::params::{Grads, ParamId, ParamStore};
use crate::rng::Rng;

const LN_EPS: f64 = 1e-5;

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Array2<f64>),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        cols: Array2<f64>,
    },
    MaxPool {
        x: Var,
        argmax: Array2<usize>,
    },
    ConvReluPool {
        x: Var,
        w: Var,
        b: Var,
        argmax: Array2<usize>,
    },
    AvgPool {
        x: Var,
        bins: Vec<(usize, usize)>,
    },
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    SelectRow(Var, usize),
    StackRows(Vec<Var>),
    BroadcastRows(Var),
    ReverseRows(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Array2<f64>,
        inv_std: Vec<f64>,
    },
    Softmax(Var),
    MeanRows {
        x: Var,
        mask: Vec<bool>,
    },
    SoftmaxCe {
        logits: Var,
        target: usize,
        probs: Array2<f64>,
    },
}

struct Node {
    value: Option<Array2<f64>>,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    dropout: Option<(f64, Rng)>,
}

impl<'p> Tape<'p> {
    /// A tape with dropout disabled.
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            dropout: None,
        }
    }

    /// A tape whose [`Tape::dropout`] calls zero activations at `rate`.
    pub fn training(params: &'p ParamStore, rate: f64, seed: u64) -> Self {
        let dropout = (rate > 0.0).then(|| (rate, Rng::new(seed)));
        Self {
            params,
            nodes: Vec::new(),
            dropout,
        }
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(a), _) => a,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("only parameter nodes borrow their value"),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value: Some(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant input; no gradient flows into it.
    pub fn input(&mut self, value: Array2<f64>) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// An input whose gradient is kept, for probing sensitivities.
    pub fn watched_input(&mut self, value: Array2<f64>) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            needs_grad: !self.params.is_frozen(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).dot(self.value(b));
        self.push(y, Op::MatMul(a, b), &[a, b])
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).dot(&self.value(b).t());
        self.push(y, Op::MatMulT(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a) + self.value(b);
        self.push(y, Op::Add(a, b), &[a, b])
    }

    /// Adds the `1 × n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a) + self.value(b);
        self.push(y, Op::AddRow(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a) * self.value(b);
        self.push(y, Op::Mul(a, b), &[a, b])
    }

    pub fn mul_const(&mut self, a: Var, c: Array2<f64>) -> Var {
        let y = self.value(a) * &c;
        self.push(y, Op::MulConst(a, c), &[a])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let y = self.value(a) * c;
        self.push(y, Op::Scale(a, c), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let y = self.value(a).mapv(|v| v.max(0.0));
        self.push(y, Op::Relu(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let y = self.value(a).mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(y, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let y = self.value(a).mapv(f64::tanh);
        self.push(y, Op::Tanh(a), &[a])
    }

    /// Inverted dropout; identity unless the tape was built for training.
    pub fn dropout(&mut self, a: Var) -> Var {
        let dim = self.value(a).dim();
        let Some((rate, rng)) = self.dropout.as_mut() else {
            return a;
        };
        let rate = *rate;
        let keep = 1.0 / (1.0 - rate);
        let mask =
            Array2::from_shape_simple_fn(dim, || if rng.uniform() < rate { 0.0 } else { keep });
        self.mul_const(a, mask)
    }

    /// Same-padded convolution with kernel 3: `x` is `L × C`, `w` is `3C × H`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Var {
        let xv = self.value(x);
        let (l, c) = xv.dim();
        assert_eq!(
            self.value(w).nrows(),
            3 * c,
            "conv weight rows must be 3·C_in"
        );
        let mut cols = Array2::zeros((l, 3 * c));
        if l > 1 {
            cols.slice_mut(s![1.., 0..c])
                .assign(&xv.slice(s![..l - 1, ..]));
            cols.slice_mut(s![..l - 1, 2 * c..])
                .assign(&xv.slice(s![1.., ..]));
        }
        cols.slice_mut(s![.., c..2 * c]).assign(xv);
        let y = cols.dot(self.value(w)) + self.value(b);
        self.push(y, Op::Conv1d { x, w, b, cols }, &[x, w, b])
    }

    /// `max_pool(relu(conv1d(x, w, b)), s)` as one step.
    ///
    /// Only the pooled winners are remembered, so the backward pass touches
    /// `⌈L/s⌉` rows instead of the full convolution output.
    pub fn conv_relu_pool(&mut self, x: Var, w: Var, b: Var, s: usize) -> Var {
        let xv = self.value(x);
        let (l, c) = xv.dim();
        assert_eq!(
            self.value(w).nrows(),
            3 * c,
            "conv weight rows must be 3·C_in"
        );
        let mut cols = Array2::zeros((l, 3 * c));
        if l > 1 {
            cols.slice_mut(s![1.., 0..c])
                .assign(&xv.slice(s![..l - 1, ..]));
            cols.slice_mut(s![..l - 1, 2 * c..])
                .assign(&xv.slice(s![1.., ..]));
        }
        cols.slice_mut(s![.., c..2 * c]).assign(xv);
        let pre = cols.dot(self.value(w)) + self.value(b);
        drop(cols);
        let (y, argmax) = pool_max(&pre, s);
        let y = y.mapv(|v| v.max(0.0));
        self.push(y, Op::ConvReluPool { x, w, b, argmax }, &[x, w, b])
    }

    /// Row-wise max pooling with window and stride `s`; a short final window is kept.
    pub fn max_pool(&mut self, x: Var, s: usize) -> Var {
        let (y, argmax) = pool_max(self.value(x), s);
        self.push(y, Op::MaxPool { x, argmax }, &[x])
    }

    /// Adaptive average pooling of rows down to `out_len` bins.
    pub fn avg_pool_to(&mut self, x: Var, out_len: usize) -> Var {
        let xv = self.value(x);
        let (l, c) = xv.dim();
        let bins: Vec<(usize, usize)> = (0..out_len)
            .map(|i| ((i * l) / out_len, ((i + 1) * l).div_ceil(out_len)))
            .collect();
        let mut y = Array2::zeros((out_len, c));
        for (i, &(lo, hi)) in bins.iter().enumerate() {
            let mean = xv
                .slice(s![lo..hi, ..])
                .mean_axis(Axis(0))
                .expect("non-empty bin");
            y.row_mut(i).assign(&mean);
        }
        self.push(y, Op::AvgPool { x, bins }, &[x])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let y = ndarray::concatenate(Axis(1), &views).expect("concatenated parts share row count");
        self.push(y, Op::ConcatCols(parts.to_vec()), parts)
    }

    /// Columns `start..end` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let y = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(y, Op::SliceCols(a, start), &[a])
    }

    /// Row `i` of `a` as a `1 × n` matrix.
    pub fn select_row(&mut self, a: Var, i: usize) -> Var {
        let y = self.value(a).slice(s![i..i + 1, ..]).to_owned();
        self.push(y, Op::SelectRow(a, i), &[a])
    }

    pub fn stack_rows(&mut self, rows: &[Var]) -> Var {
        let views: Vec<_> = rows.iter().map(|&p| self.value(p).view()).collect();
        let y = ndarray::concatenate(Axis(0), &views).expect("stacked rows share width");
        self.push(y, Op::StackRows(rows.to_vec()), rows)
    }

    /// Repeats the `1 × n` row `a` into `rows × n`.
    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Var {
        let v = self.value(a);
        let y = v
            .broadcast((rows, v.ncols()))
            .expect("single row")
            .to_owned();
        self.push(y, Op::BroadcastRows(a), &[a])
    }

    pub fn reverse_rows(&mut self, a: Var) -> Var {
        let y = reversed(self.value(a));
        self.push(y, Op::ReverseRows(a), &[a])
    }

    /// Row-wise layer normalization with gain and bias rows.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let (rows, n) = xv.dim();
        let mut xhat = Array2::zeros((rows, n));
        let mut inv_std = Vec::with_capacity(rows);
        for (r, row) in xv.rows().into_iter().enumerate() {
            let mean = row.sum() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(is);
            Zip::from(xhat.row_mut(r))
                .and(&row)
                .for_each(|h, &v| *h = (v - mean) * is);
        }
        let y = &xhat * self.value(gamma) + self.value(beta);
        self.push(
            y,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[x, gamma, beta],
        )
    }

    /// Row-wise softmax; columns with a false `key_mask` entry get probability 0.
    pub fn softmax_rows(&mut self, x: Var, key_mask: Option<&[bool]>) -> Var {
        let mut y = self.value(x).clone();
        for mut row in y.rows_mut() {
            let keep = |j: usize| key_mask.is_none_or(|m| m[j]);
            let max = row
                .iter()
                .enumerate()
                .filter(|(j, _)| keep(*j))
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                *v = if keep(j) { (*v - max).exp() } else { 0.0 };
                sum += *v;
            }
            row.mapv_inplace(|v| v / sum);
        }
        self.push(y, Op::Softmax(x), &[x])
    }

    /// Mean over the rows whose mask entry is true, as a `1 × n` matrix.
    pub fn mean_rows(&mut self, x: Var, mask: &[bool]) -> Var {
        let xv = self.value(x);
        let count = mask.iter().filter(|&&m| m).count();
        assert!(count > 0, "mean over an empty mask");
        let mut y = Array2::zeros((1, xv.ncols()));
        for (r, row) in xv.rows().into_iter().enumerate() {
            if mask[r] {
                y.row_mut(0).scaled_add(1.0, &row);
            }
        }
        y /= count as f64;
        self.push(
            y,
            Op::MeanRows {
                x,
                mask: mask.to_vec(),
            },
            &[x],
        )
    }

    /// Cross-entropy of `1 × k` logits against class `target`, as a `1 × 1` value.
    pub fn softmax_ce(&mut self, logits: Var, target: usize) -> Var {
        let z = self.value(logits);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let probs = z.mapv(|v| (v - lse).exp());
        let loss = lse - z[[0, target]];
        self.push(
            Array2::from_elem((1, 1), loss),
            Op::SoftmaxCe {
                logits,
                target,
                probs,
            },
            &[logits],
        )
    }

    /// `x · w + b` for parameter matrices `w` and row `b`.
    pub fn linear(&mut self, x: Var, w: ParamId, b: ParamId) -> Var {
        let w = self.param(w);
        let b = self.param(b);
        let y = self.matmul(x, w);
        self.add_row(y, b)
    }

    /// Accumulates `d(seed · out)/dθ` into `grads` and returns the gradient for every node.
    pub fn backward(&self, out: Var, seed: f64, grads: &mut Grads) -> Vec<Option<Array2<f64>>> {
        let mut g: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[out.0] = Some(Array2::from_elem(self.value(out).dim(), seed));
        for i in (0..=out.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(gy) = g[i].take() else { continue };
            self.propagate(&node.op, i, &gy, &mut g, grads);
            g[i] = Some(gy);
        }
        g
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn propagate(
        &self,
        op: &Op,
        me: usize,
        gy: &Array2<f64>,
        g: &mut [Option<Array2<f64>>],
        grads: &mut Grads,
    ) {
        let mut acc = |v: Var, d: Array2<f64>| match &mut g[v.0] {
            Some(a) => *a += &d,
            slot => *slot = Some(d),
        };
        match op {
            Op::Leaf => {}
            Op::Param(id) => grads.accumulate(*id, gy),
            Op::MatMul(a, b) => {
                if self.wants(*a) {
                    acc(*a, gy.dot(&self.value(*b).t()));
                }
                if self.wants(*b) {
                    acc(*b, self.value(*a).t().dot(gy));
                }
            }
            Op::MatMulT(a, b) => {
                if self.wants(*a) {
                    acc(*a, gy.dot(self.value(*b)));
                }
                if self.wants(*b) {
                    acc(*b, gy.t().dot(self.value(*a)));
                }
            }
            Op::Add(a, b) => {
                if self.wants(*a) {
                    acc(*a, gy.clone());
                }
                if self.wants(*b) {
                    acc(*b, gy.clone());
                }
            }
            Op::AddRow(a, b) => {
                if self.wants(*a) {
                    acc(*a, gy.clone());
                }
                if self.wants(*b) {
                    acc(*b, gy.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    acc(*a, gy * self.value(*b));
                }
                if self.wants(*b) {
                    acc(*b, gy * self.value(*a));
                }
            }
            Op::MulConst(a, c) => acc(*a, gy * c),
            Op::Scale(a, c) => acc(*a, gy * *c),
            Op::Relu(a) => {
                let x = self.value(*a);
                let mut d = gy.clone();
                Zip::from(&mut d)
                    .and(x)
                    .for_each(|d, &x| *d = if x > 0.0 { *d } else { 0.0 });
                acc(*a, d);
            }
            Op::Sigmoid(a) => {
                let y = self.nodes[me].value.as_ref().expect("owned");
                acc(
                    *a,
                    Zip::from(gy).and(y).map_collect(|&g, &y| g * y * (1.0 - y)),
                );
            }
            Op::Tanh(a) => {
                let y = self.nodes[me].value.as_ref().expect("owned");
                acc(
                    *a,
                    Zip::from(gy).and(y).map_collect(|&g, &y| g * (1.0 - y * y)),
                );
            }
            Op::Conv1d { x, w, b, cols } => {
                if self.wants(*w) {
                    acc(*w, cols.t().dot(gy));
                }
                if self.wants(*b) {
                    acc(*b, gy.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                if self.wants(*x) {
                    let dcols = gy.dot(&self.value(*w).t());
                    let (l, c3) = dcols.dim();
                    let c = c3 / 3;
                    let mut dx = dcols.slice(s![.., c..2 * c]).to_owned();
                    if l > 1 {
                        let mut head = dx.slice_mut(s![..l - 1, ..]);
                        head += &dcols.slice(s![1.., 0..c]);
                        let mut tail = dx.slice_mut(s![1.., ..]);
                        tail += &dcols.slice(s![..l - 1, 2 * c..]);
                    }
                    acc(*x, dx);
                }
            }
            Op::MaxPool { x, argmax } => {
                let mut dx = Array2::zeros(self.value(*x).dim());
                for ((i, j), &r) in argmax.indexed_iter() {
                    dx[[r, j]] += gy[[i, j]];
                }
                acc(*x, dx);
            }
            Op::ConvReluPool { x, w, b, argmax } => {
                let y = self.nodes[me].value.as_ref().expect("owned");
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (l, c) = xv.dim();
                let mut dw = self.wants(*w).then(|| Array2::<f64>::zeros(wv.dim()));
                let mut db = self
                    .wants(*b)
                    .then(|| Array2::<f64>::zeros((1, wv.ncols())));
                let mut dx = self.wants(*x).then(|| Array2::<f64>::zeros((l, c)));
                for ((i, j), &r) in argmax.indexed_iter() {
                    let g = gy[[i, j]];
                    if y[[i, j]] <= 0.0 || g == 0.0 {
                        continue;
                    }
                    if let Some(db) = db.as_mut() {
                        db[[0, j]] += g;
                    }
                    for k in 0..3 {
                        let Some(src) = (r + k).checked_sub(1).filter(|&t| t < l) else {
                            continue;
                        };
                        for ch in 0..c {
                            if let Some(dw) = dw.as_mut() {
                                dw[[k * c + ch, j]] += g * xv[[src, ch]];
                            }
                            if let Some(dx) = dx.as_mut() {
                                dx[[src, ch]] += g * wv[[k * c + ch, j]];
                            }
                        }
                    }
                }
                if let Some(d) = dw {
                    acc(*w, d);
                }
                if let Some(d) = db {
                    acc(*b, d);
                }
                if let Some(d) = dx {
                    acc(*x, d);
                }
            }
            Op::AvgPool { x, bins } => {
                let mut dx = Array2::zeros(self.value(*x).dim());
                for (i, &(lo, hi)) in bins.iter().enumerate() {
                    let share = gy.row(i).mapv(|v| v / (hi - lo) as f64);
                    for r in lo..hi {
                        let mut row = dx.row_mut(r);
                        row += &share;
                    }
                }
                acc(*x, dx);
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for &p in parts {
                    let w = self.value(p).ncols();
                    if self.wants(p) {
                        acc(p, gy.slice(s![.., at..at + w]).to_owned());
                    }
                    at += w;
                }
            }
            Op::SliceCols(a, start) => {
                let mut d = Array2::zeros(self.value(*a).dim());
                d.slice_mut(s![.., *start..*start + gy.ncols()]).assign(gy);
                acc(*a, d);
            }
            Op::SelectRow(a, i) => {
                let mut d = Array2::zeros(self.value(*a).dim());
                d.row_mut(*i).assign(&gy.row(0));
                acc(*a, d);
            }
            Op::StackRows(rows) => {
                let mut at = 0;
                for &p in rows {
                    let h = self.value(p).nrows();
                    if self.wants(p) {
                        acc(p, gy.slice(s![at..at + h, ..]).to_owned());
                    }
                    at += h;
                }
            }
            Op::BroadcastRows(a) => acc(*a, gy.sum_axis(Axis(0)).insert_axis(Axis(0))),
            Op::ReverseRows(a) => acc(*a, reversed(gy)),
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                if self.wants(*gamma) {
                    acc(*gamma, (gy * xhat).sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                if self.wants(*beta) {
                    acc(*beta, gy.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                if self.wants(*x) {
                    let n = xhat.ncols() as f64;
                    let dxhat = gy * self.value(*gamma);
                    let mut dx = Array2::zeros(xhat.dim());
                    for r in 0..xhat.nrows() {
                        let dh = dxhat.row(r);
                        let h = xhat.row(r);
                        let s1 = dh.sum();
                        let s2 = dh.dot(&h);
                        let k = inv_std[r] / n;
                        Zip::from(dx.row_mut(r))
                            .and(&dh)
                            .and(&h)
                            .for_each(|d, &dh, &h| *d = k * (n * dh - s1 - h * s2));
                    }
                    acc(*x, dx);
                }
            }
            Op::Softmax(a) => {
                let p = self.nodes[me].value.as_ref().expect("owned");
                let mut d = Array2::zeros(p.dim());
                for r in 0..p.nrows() {
                    let dot = p.row(r).dot(&gy.row(r));
                    Zip::from(d.row_mut(r))
                        .and(p.row(r))
                        .and(gy.row(r))
                        .for_each(|d, &p, &g| *d = p * (g - dot));
                }
                acc(*a, d);
            }
            Op::MeanRows { x, mask } => {
                let count = mask.iter().filter(|&&m| m).count() as f64;
                let mut d = Array2::zeros(self.value(*x).dim());
                for (r, &m) in mask.iter().enumerate() {
                    if m {
                        d.row_mut(r).assign(&(&gy.row(0) / count));
                    }
                }
                acc(*x, d);
            }
            Op::SoftmaxCe {
                logits,
                target,
                probs,
            } => {
                let mut d = probs.clone();
                d[[0, *target]] -= 1.0;
                acc(*logits, d * gy[[0, 0]]);
            }
        }
    }
}

/// Window maxima and the row index of each winner.
fn pool_max(x: &Array2<f64>, s: usize) -> (Array2<f64>, Array2<usize>) {
    let xv = x.as_standard_layout();
    let (l, c) = xv.dim();
    let data = xv.as_slice().expect("standard layout");
    let out_len = l.div_ceil(s);
    let mut y = Array2::zeros((out_len, c));
    let mut argmax = Array2::zeros((out_len, c));
    let ys = y.as_slice_mut().expect("fresh array");
    let am = argmax.as_slice_mut().expect("fresh array");
    for i in 0..out_len {
        let lo = i * s;
        let hi = ((i + 1) * s).min(l);
        let best = &mut ys[i * c..(i + 1) * c];
        let arg = &mut am[i * c..(i + 1) * c];
        best.copy_from_slice(&data[lo * c..(lo + 1) * c]);
        arg.fill(lo);
        for r in lo + 1..hi {
            let row = &data[r * c..(r + 1) * c];
            for j in 0..c {
                let better = row[j] > best[j];
                best[j] = if better { row[j] } else { best[j] };
                arg[j] = if better { r } else { arg[j] };
            }
        }
    }
    (y, argmax)
}

fn reversed(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    Array2::from_shape_fn(a.dim(), |(r, c)| a[[n - 1 - r, c]])
}
