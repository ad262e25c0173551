//! TPM-Net: per-modality temporal encoders, zeitgeber embedding, feature fusion,
//! a transformer encoder and an MLP classifier.

use std::fmt::Write as _;

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{sinusoidal_encoding, Linear, MlpHead, TemporalEncoder, TransformerLayer};
use super::model::{Mode, SequenceModel};
use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::signal::{PreparedBatch, PreparedTrial, AUX_CHANNELS};
use crate::trial::{ConditionCode, Label};

/// Width of a zeitgeber embedding row.
pub const ZEITGEBER_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Eeg,
    Bw,
    Hs,
    Hr,
    Zei,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::Eeg,
        Modality::Bw,
        Modality::Hs,
        Modality::Hr,
        Modality::Zei,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Eeg => "eeg",
            Modality::Bw => "bw",
            Modality::Hs => "hs",
            Modality::Hr => "hr",
            Modality::Zei => "zei",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// One value per modality in fusion order eeg, bw, hs, hr, zei.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerModality(pub [usize; 5]);

impl PerModality {
    pub fn get(&self, m: Modality) -> usize {
        self.0[m.index()]
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpmNetConfig {
    pub n_eeg: usize,
    pub d_model: usize,
    /// Output width of each temporal encoder.
    pub widths: PerModality,
    /// Width of the first convolution block of each encoder.
    pub hidden: PerModality,
    pub pool_strides: [usize; 2],
    pub token_cap: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn: usize,
    pub head_hidden: usize,
    pub dropout: f64,
    pub freeze_zeitgeber: bool,
}

impl Default for TpmNetConfig {
    fn default() -> Self {
        Self {
            n_eeg: 2,
            d_model: 128,
            widths: PerModality([48, 40, 16, 8, 16]),
            hidden: PerModality([16, 16, 8, 4, 8]),
            pool_strides: [8, 8],
            token_cap: 256,
            layers: 2,
            heads: 4,
            ffn: 256,
            head_hidden: 64,
            dropout: 0.1,
            freeze_zeitgeber: false,
        }
    }
}

impl TpmNetConfig {
    /// A tiny configuration for gradient checks and smoke tests.
    pub fn miniature() -> Self {
        Self {
            n_eeg: 2,
            d_model: 16,
            widths: PerModality([4, 4, 2, 2, 4]),
            hidden: PerModality([3, 3, 2, 2, 2]),
            pool_strides: [2, 2],
            token_cap: 256,
            layers: 1,
            heads: 2,
            ffn: 24,
            head_hidden: 8,
            dropout: 0.0,
            freeze_zeitgeber: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.d_model == 0 || self.heads == 0 || self.d_model % self.heads != 0 {
            problems.push(format!(
                "heads ({}) must divide d_model ({})",
                self.heads, self.d_model
            ));
        }
        if self.widths.0.contains(&0) || self.hidden.0.contains(&0) {
            problems.push("encoder widths must be positive".to_string());
        }
        if self.pool_strides.contains(&0) || self.token_cap == 0 {
            problems.push("pool strides and token cap must be positive".to_string());
        }
        if self.n_eeg == 0 || self.ffn == 0 || self.head_hidden == 0 {
            problems.push("n_eeg, ffn and head_hidden must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }

    /// Input channel count of each modality's encoder.
    pub fn inputs(&self) -> PerModality {
        PerModality([self.n_eeg, 5, 4, 1, ZEITGEBER_DIM])
    }

    /// `key = value` lines, echoed into checkpoint headers.
    pub fn describe(&self) -> String {
        let list = |p: &PerModality| {
            p.0.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let _ = writeln!(s, "n_eeg = {}", self.n_eeg);
        let _ = writeln!(s, "d_model = {}", self.d_model);
        let _ = writeln!(s, "widths = {}", list(&self.widths));
        let _ = writeln!(s, "hidden = {}", list(&self.hidden));
        let _ = writeln!(
            s,
            "pool_strides = {},{}",
            self.pool_strides[0], self.pool_strides[1]
        );
        let _ = writeln!(s, "token_cap = {}", self.token_cap);
        let _ = writeln!(s, "layers = {}", self.layers);
        let _ = writeln!(s, "heads = {}", self.heads);
        let _ = writeln!(s, "ffn = {}", self.ffn);
        let _ = writeln!(s, "head_hidden = {}", self.head_hidden);
        let _ = writeln!(s, "dropout = {}", self.dropout);
        let _ = writeln!(s, "freeze_zeitgeber = {}", self.freeze_zeitgeber);
        s
    }
}

/// Encoders, zeitgeber table and optional fusion projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontend {
    pub encoders: [TemporalEncoder; 5],
    pub zeitgeber: ParamId,
    pub projection: Option<Linear>,
    pub n_eeg: usize,
}

impl Frontend {
    pub fn new(store: &mut ParamStore, cfg: &TpmNetConfig, rng: &mut Rng) -> Self {
        let inputs = cfg.inputs();
        let encoders = Modality::ALL.map(|m| {
            TemporalEncoder::new(
                store,
                &format!("enc.{}", m.name()),
                inputs.get(m),
                cfg.hidden.get(m),
                cfg.widths.get(m),
                cfg.pool_strides,
                cfg.token_cap,
                rng,
            )
        });
        let table =
            Array2::from_shape_simple_fn((ConditionCode::VOCABULARY, ZEITGEBER_DIM), || {
                rng.uniform_in(-1.0, 1.0)
            });
        let zeitgeber = store.add("zeitgeber", table);
        store.set_frozen(zeitgeber, cfg.freeze_zeitgeber);
        let fused = cfg.widths.sum();
        let projection =
            (fused != cfg.d_model).then(|| Linear::new(store, "fusion", fused, cfg.d_model, rng));
        Self {
            encoders,
            zeitgeber,
            projection,
            n_eeg: cfg.n_eeg,
        }
    }

    /// Channel block of `channels` feeding `m` (not defined for the zeitgeber).
    fn block(&self, m: Modality) -> (usize, usize) {
        let e = self.n_eeg;
        match m {
            Modality::Eeg => (0, e),
            Modality::Bw => (e, e + 5),
            Modality::Hs => (e + 5, e + 9),
            Modality::Hr => (e + 9, e + 10),
            Modality::Zei => unreachable!("zeitgeber is not a physiological block"),
        }
    }

    pub fn check_trial(&self, trial: &PreparedTrial) -> Result<usize> {
        if trial.channels.ncols() != self.n_eeg + AUX_CHANNELS {
            return Err(Error::invalid(format!(
                "trial {} has {} channels, model expects {}",
                trial.id,
                trial.channels.ncols(),
                self.n_eeg + AUX_CHANNELS
            )));
        }
        let n = trial.valid_len();
        if n < 4 {
            return Err(Error::invalid(format!(
                "trial {} has fewer than 4 valid samples",
                trial.id
            )));
        }
        Ok(n)
    }

    /// Per-modality token features of the valid prefix, in fusion order.
    pub fn encode_parts(&self, tape: &mut Tape, trial: &PreparedTrial) -> Result<Vec<Var>> {
        let n = self.check_trial(trial)?;
        let mut parts = Vec::with_capacity(5);
        for m in &Modality::ALL[..4] {
            let (lo, hi) = self.block(*m);
            let x = tape.input(trial.channels.slice(s![..n, lo..hi]).to_owned());
            parts.push(self.encoders[m.index()].forward(tape, x));
        }
        let table = tape.param(self.zeitgeber);
        let row = tape.select_row(table, trial.zeitgeber.index());
        let z = tape.broadcast_rows(row, n);
        parts.push(self.encoders[Modality::Zei.index()].forward(tape, z));
        Ok(parts)
    }

    /// Fused `T × d_model` token matrix.
    pub fn encode(&self, tape: &mut Tape, trial: &PreparedTrial) -> Result<Var> {
        let parts = self.encode_parts(tape, trial)?;
        let fused = tape.concat_cols(&parts);
        Ok(match &self.projection {
            Some(p) => p.forward(tape, fused),
            None => fused,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpmNet {
    pub config: TpmNetConfig,
    pub params: ParamStore,
    pub frontend: Frontend,
    pub layers: Vec<TransformerLayer>,
    pub head: MlpHead,
}

/// Fan-in-scaled uniform weights, unit layer-norm gains and zero biases; deterministic per seed.
pub fn init_params(config: &TpmNetConfig, seed: u64) -> Result<TpmNet> {
    TpmNet::new(config.clone(), seed)
}

impl TpmNet {
    pub fn new(config: TpmNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let mut params = ParamStore::default();
        let frontend = Frontend::new(&mut params, &config, &mut rng);
        let layers = (0..config.layers)
            .map(|i| {
                TransformerLayer::new(
                    &mut params,
                    &format!("layer{i}"),
                    config.d_model,
                    config.heads,
                    config.ffn,
                    &mut rng,
                )
            })
            .collect();
        let head = MlpHead::new(
            &mut params,
            "head",
            config.d_model,
            config.head_hidden,
            Label::COUNT,
            &mut rng,
        );
        Ok(Self {
            config,
            params,
            frontend,
            layers,
            head,
        })
    }

    /// The learned 1 × 4 embedding row of `code`.
    pub fn embed_zeitgeber(&self, code: &ConditionCode) -> Array2<f64> {
        let i = code.index();
        self.params
            .get(self.frontend.zeitgeber)
            .slice(s![i..i + 1, ..])
            .to_owned()
    }

    /// Runs one modality's encoder on a `L × C` sequence.
    pub fn temporal_encode(&self, m: Modality, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.nrows() < 4 {
            return Err(Error::invalid("temporal encoding needs at least 4 samples"));
        }
        let mut tape = Tape::new(&self.params);
        let v = tape.input(x.clone());
        let y = self.frontend.encoders[m.index()].forward(&mut tape, v);
        Ok(tape.value(y).clone())
    }

    /// Concatenates modality features along the feature axis.
    pub fn fuse(parts: &[Array2<f64>]) -> Result<Array2<f64>> {
        let rows = parts.first().map_or(0, Array2::nrows);
        if parts.iter().any(|p| p.nrows() != rows) {
            return Err(Error::invalid(
                "modality feature sequences differ in token length",
            ));
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        ndarray::concatenate(Axis(1), &views).map_err(|e| Error::invalid(e.to_string()))
    }

    fn encode_tokens(&self, tape: &mut Tape, fused: Var, key_mask: Option<&[bool]>) -> Var {
        let (t, d) = tape.value(fused).dim();
        let pe = tape.input(sinusoidal_encoding(t, d));
        let mut h = tape.add(fused, pe);
        h = tape.dropout(h);
        for layer in &self.layers {
            h = layer.forward(tape, h, key_mask);
        }
        h
    }

    /// Transformer stack over fused tokens; false mask entries are excluded as keys.
    pub fn transformer_encode(&self, fused: &Array2<f64>, mask: &[bool]) -> Result<Array2<f64>> {
        if mask.len() != fused.nrows() {
            return Err(Error::invalid("mask length differs from token count"));
        }
        let mut tape = Tape::new(&self.params);
        let x = tape.input(fused.clone());
        let y = self.encode_tokens(&mut tape, x, Some(mask));
        Ok(tape.value(y).clone())
    }

    /// Masked mean pooling followed by the MLP head.
    pub fn classify(&self, encoded: &Array2<f64>, mask: &[bool]) -> Result<[f64; 3]> {
        if mask.len() != encoded.nrows() || !mask.iter().any(|&m| m) {
            return Err(Error::invalid(
                "classification needs at least one valid token",
            ));
        }
        let mut tape = Tape::new(&self.params);
        let x = tape.input(encoded.clone());
        let pooled = tape.mean_rows(x, mask);
        let y = self.head.forward(&mut tape, pooled);
        Ok(row3(tape.value(y)))
    }

    /// Logits for every trial of a batch.
    pub fn forward(&self, batch: &PreparedBatch, mode: Mode) -> Result<Vec<[f64; 3]>> {
        batch
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut tape = mode.tape(&self.params, self.config.dropout, i);
                let y = self.trial_logits(&mut tape, t)?;
                Ok(row3(tape.value(y)))
            })
            .collect()
    }
}

pub(crate) fn row3(a: &Array2<f64>) -> [f64; 3] {
    [a[[0, 0]], a[[0, 1]], a[[0, 2]]]
}

impl SequenceModel for TpmNet {
    fn name(&self) -> &'static str {
        "TPM-Net"
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn dropout(&self) -> f64 {
        self.config.dropout
    }

    fn trial_logits(&self, tape: &mut Tape, trial: &PreparedTrial) -> Result<Var> {
        let fused = self.frontend.encode(tape, trial)?;
        let h = self.encode_tokens(tape, fused, None);
        let t = tape.value(h).nrows();
        let pooled = tape.mean_rows(h, &vec![true; t]);
        Ok(self.head.forward(tape, pooled))
    }

    fn describe(&self) -> String {
        format!("model = TPM-Net\n{}", self.config.describe())
    }
}
