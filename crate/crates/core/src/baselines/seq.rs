use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::layers::{Lstm, MlpHead};
use crate::nn::{Frontend, ParamStore, SequenceModel, Tape, TpmNetConfig, Var};
use crate::rng::Rng;
use crate::signal::PreparedTrial;
use crate::trial::Label;

/// TPM-Net's temporal encoders and zeitgeber table, masked mean pooling and an MLP head.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnBaseline {
    pub config: TpmNetConfig,
    pub params: ParamStore,
    pub frontend: Frontend,
    pub head: MlpHead,
}

impl CnnBaseline {
    pub fn new(config: TpmNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let mut params = ParamStore::default();
        let frontend = Frontend::new(&mut params, &config, &mut rng);
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
            head,
        })
    }
}

impl SequenceModel for CnnBaseline {
    fn name(&self) -> &'static str {
        "CNN"
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
        let h = self.frontend.encode(tape, trial)?;
        let t = tape.value(h).nrows();
        let pooled = tape.mean_rows(h, &vec![true; t]);
        let pooled = tape.dropout(pooled);
        Ok(self.head.forward(tape, pooled))
    }

    fn describe(&self) -> String {
        format!("model = CNN\n{}", self.config.describe())
    }
}

/// Forward and backward LSTMs over the fused token sequence, masked mean pooling and an MLP head.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmBaseline {
    pub config: TpmNetConfig,
    pub hidden: usize,
    pub params: ParamStore,
    pub frontend: Frontend,
    pub forward: Lstm,
    pub backward: Lstm,
    pub head: MlpHead,
}

impl BiLstmBaseline {
    pub const DEFAULT_HIDDEN: usize = 64;

    pub fn new(config: TpmNetConfig, hidden: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if hidden == 0 {
            return Err(Error::invalid("LSTM hidden size must be positive"));
        }
        let mut rng = Rng::new(seed);
        let mut params = ParamStore::default();
        let frontend = Frontend::new(&mut params, &config, &mut rng);
        let forward = Lstm::new(&mut params, "lstm.fwd", config.d_model, hidden, &mut rng);
        let backward = Lstm::new(&mut params, "lstm.bwd", config.d_model, hidden, &mut rng);
        let head = MlpHead::new(
            &mut params,
            "head",
            2 * hidden,
            config.head_hidden,
            Label::COUNT,
            &mut rng,
        );
        Ok(Self {
            config,
            hidden,
            params,
            frontend,
            forward,
            backward,
            head,
        })
    }

    /// Concatenated forward and backward hidden states, one row per token.
    fn states(&self, tape: &mut Tape, tokens: Var) -> Var {
        let f = self.forward.forward(tape, tokens);
        let rev = tape.reverse_rows(tokens);
        let b = self.backward.forward(tape, rev);
        let b = tape.reverse_rows(b);
        tape.concat_cols(&[f, b])
    }

    /// Mean over valid tokens of `[forward ‖ backward]` states. Valid tokens are
    /// gathered in order, so a mask may mark any contiguous block.
    pub fn pooled_states(&self, tokens: &Array2<f64>, mask: &[bool]) -> Result<Array2<f64>> {
        if mask.len() != tokens.nrows() || !mask.iter().any(|&m| m) {
            return Err(Error::invalid(
                "pooling needs a mask with at least one valid token",
            ));
        }
        let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let x = tokens.select(ndarray::Axis(0), &rows);
        let mut tape = Tape::new(&self.params);
        let v = tape.input(x);
        let s = self.states(&mut tape, v);
        let n = rows.len();
        let pooled = tape.mean_rows(s, &vec![true; n]);
        Ok(tape.value(pooled).clone())
    }
}

impl SequenceModel for BiLstmBaseline {
    fn name(&self) -> &'static str {
        "BiLSTM"
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
        let tokens = self.frontend.encode(tape, trial)?;
        let s = self.states(tape, tokens);
        let t = tape.value(s).nrows();
        let pooled = tape.mean_rows(s, &vec![true; t]);
        let pooled = tape.dropout(pooled);
        Ok(self.head.forward(tape, pooled))
    }

    fn describe(&self) -> String {
        format!(
            "model = BiLSTM\nlstm_hidden = {}\n{}",
            self.hidden,
            self.config.describe()
        )
    }
}
