//! Parameterised building blocks shared by TPM-Net and the neural baselines.

use ndarray::Array2;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            w: store.add_uniform(&format!("{name}.w"), fan_in, fan_out, fan_in, rng),
            b: store.add_zeros(&format!("{name}.b"), 1, fan_out),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        tape.linear(x, self.w, self.b)
    }
}

/// Kernel-3 same-padded 1-D convolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conv1d {
    pub w: ParamId,
    pub b: ParamId,
}

impl Conv1d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        c_in: usize,
        c_out: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            w: store.add_uniform(&format!("{name}.w"), 3 * c_in, c_out, 3 * c_in, rng),
            b: store.add_zeros(&format!("{name}.b"), 1, c_out),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        tape.conv1d(x, w, b)
    }

    /// Convolution, ReLU and max-pooling with stride `s`.
    pub fn block(&self, tape: &mut Tape, x: Var, s: usize) -> Var {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        tape.conv_relu_pool(x, w, b, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, width: usize) -> Self {
        Self {
            gamma: store.add_ones(&format!("{name}.gamma"), 1, width),
            beta: store.add_zeros(&format!("{name}.beta"), 1, width),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let g = tape.param(self.gamma);
        let b = tape.param(self.beta);
        tape.layer_norm(x, g, b)
    }
}

/// Two {conv → ReLU → max-pool} blocks followed by adaptive average pooling to at most `token_cap` rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalEncoder {
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub strides: [usize; 2],
    pub token_cap: usize,
}

impl TemporalEncoder {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        c_in: usize,
        hidden: usize,
        width: usize,
        strides: [usize; 2],
        token_cap: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            conv1: Conv1d::new(store, &format!("{name}.conv1"), c_in, hidden, rng),
            conv2: Conv1d::new(store, &format!("{name}.conv2"), hidden, width, rng),
            strides,
            token_cap,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let h = self.conv1.block(tape, x, self.strides[0]);
        let h = self.conv2.block(tape, h, self.strides[1]);
        let n = tape.value(h).nrows();
        if n > self.token_cap {
            tape.avg_pool_to(h, self.token_cap)
        } else {
            h
        }
    }

    /// Token count produced for an input of `len` samples.
    pub fn tokens(&self, len: usize) -> usize {
        len.div_ceil(self.strides[0])
            .div_ceil(self.strides[1])
            .min(self.token_cap)
    }
}

/// Post-norm transformer encoder layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformerLayer {
    pub qkv: Linear,
    pub out: Linear,
    pub ln1: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
    pub ln2: LayerNorm,
    pub heads: usize,
}

impl TransformerLayer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        heads: usize,
        ffn: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            qkv: Linear::new(store, &format!("{name}.qkv"), d, 3 * d, rng),
            out: Linear::new(store, &format!("{name}.out"), d, d, rng),
            ln1: LayerNorm::new(store, &format!("{name}.ln1"), d),
            ff1: Linear::new(store, &format!("{name}.ff1"), d, ffn, rng),
            ff2: Linear::new(store, &format!("{name}.ff2"), ffn, d, rng),
            ln2: LayerNorm::new(store, &format!("{name}.ln2"), d),
            heads,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, key_mask: Option<&[bool]>) -> Var {
        let d = tape.value(x).ncols();
        let dk = d / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let qkv = self.qkv.forward(tape, x);
        let mut heads = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let q = tape.slice_cols(qkv, h * dk, (h + 1) * dk);
            let k = tape.slice_cols(qkv, d + h * dk, d + (h + 1) * dk);
            let v = tape.slice_cols(qkv, 2 * d + h * dk, 2 * d + (h + 1) * dk);
            let s = tape.matmul_t(q, k);
            let s = tape.scale(s, scale);
            let p = tape.softmax_rows(s, key_mask);
            heads.push(tape.matmul(p, v));
        }
        let a = tape.concat_cols(&heads);
        let a = self.out.forward(tape, a);
        let a = tape.dropout(a);
        let x = tape.add(x, a);
        let x = self.ln1.forward(tape, x);
        let f = self.ff1.forward(tape, x);
        let f = tape.relu(f);
        let f = self.ff2.forward(tape, f);
        let f = tape.dropout(f);
        let x = tape.add(x, f);
        self.ln2.forward(tape, x)
    }
}

/// `d → hidden → classes` classifier with ReLU and dropout between the layers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpHead {
    pub l1: Linear,
    pub l2: Linear,
}

impl MlpHead {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        hidden: usize,
        classes: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            l1: Linear::new(store, &format!("{name}.l1"), d, hidden, rng),
            l2: Linear::new(store, &format!("{name}.l2"), hidden, classes, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let h = self.l1.forward(tape, x);
        let h = tape.relu(h);
        let h = tape.dropout(h);
        self.l2.forward(tape, h)
    }
}

/// Single-layer LSTM run forward over the rows of its input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lstm {
    pub w_ih: Linear,
    pub w_hh: ParamId,
    pub hidden: usize,
}

impl Lstm {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            w_ih: Linear::new(store, &format!("{name}.ih"), input, 4 * hidden, rng),
            w_hh: store.add_uniform(&format!("{name}.hh.w"), hidden, 4 * hidden, hidden, rng),
            hidden,
        }
    }

    /// Hidden states for every row of `x`, stacked in input order. Gates are laid out i, f, g, o.
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let n = self.hidden;
        let steps = tape.value(x).nrows();
        let proj = self.w_ih.forward(tape, x);
        let w_hh = tape.param(self.w_hh);
        let mut h = tape.input(Array2::zeros((1, n)));
        let mut c = tape.input(Array2::zeros((1, n)));
        let mut out = Vec::with_capacity(steps);
        for t in 0..steps {
            let zx = tape.select_row(proj, t);
            let zh = tape.matmul(h, w_hh);
            let z = tape.add(zx, zh);
            let i = tape.slice_cols(z, 0, n);
            let i = tape.sigmoid(i);
            let f = tape.slice_cols(z, n, 2 * n);
            let f = tape.sigmoid(f);
            let g = tape.slice_cols(z, 2 * n, 3 * n);
            let g = tape.tanh(g);
            let o = tape.slice_cols(z, 3 * n, 4 * n);
            let o = tape.sigmoid(o);
            let keep = tape.mul(f, c);
            let write = tape.mul(i, g);
            c = tape.add(keep, write);
            let tc = tape.tanh(c);
            h = tape.mul(o, tc);
            out.push(h);
        }
        tape.stack_rows(&out)
    }
}

/// Fixed sinusoidal position table, `len × d`.
pub fn sinusoidal_encoding(len: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, d), |(pos, i)| {
        let pair = (i / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}
