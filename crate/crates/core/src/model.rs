//! MLP autoencoders over K latent slots.
//!
//! The encoder maps N pixels to K slot codes of `inferred_slot_dim` values
//! each (ELU hidden layers, linear output). Three decoders are available:
//! additive (one MLP per slot, outputs summed), masked-softmax (per-slot mask
//! logits normalized across slots per pixel), and masked-sigmoid (per-slot
//! independent masks). All parameters live in one flat f64 vector addressed
//! through a named layout, which is what the optimizer and checkpoints see.

use crate::rng;
use crate::tape::{NodeId, Tape, TapeError};
use crate::tensor::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Additive,
    MaskedSoftmax,
    MaskedSigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Observation dimension N.
    pub pixels: usize,
    /// Slot count K.
    pub slots: usize,
    /// Inferred dims per slot.
    pub inferred_slot_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub decoder: DecoderKind,
    /// One MLP per slot when false; a single shared slot MLP when true.
    pub share_slot_decoders: bool,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            pixels: 64,
            slots: 2,
            inferred_slot_dim: 3,
            encoder_hidden: vec![128, 128],
            decoder_hidden: vec![128, 128],
            decoder: DecoderKind::Additive,
            share_slot_decoders: false,
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn code_dim(&self) -> usize {
        self.slots * self.inferred_slot_dim
    }

    /// Output width of one slot decoder: N for additive, 2N for masked
    /// (mask logits then appearance).
    pub fn slot_decoder_out(&self) -> usize {
        match self.decoder {
            DecoderKind::Additive => self.pixels,
            DecoderKind::MaskedSoftmax | DecoderKind::MaskedSigmoid => 2 * self.pixels,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.pixels == 0 || self.slots == 0 || self.inferred_slot_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "pixels, slots, and inferred_slot_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One named parameter array inside the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    /// Fan-in for weights; length for biases.
    pub rows: usize,
    /// Fan-out for weights; 0 marks a bias.
    pub cols: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub entries: Vec<ParamEntry>,
    pub total: usize,
}

impl ParamLayout {
    fn push_dense(&mut self, name: &str, fan_in: usize, fan_out: usize) {
        let w_len = fan_in * fan_out;
        self.entries.push(ParamEntry {
            name: format!("{name}.w"),
            rows: fan_in,
            cols: fan_out,
            offset: self.total,
            len: w_len,
        });
        self.total += w_len;
        self.entries.push(ParamEntry {
            name: format!("{name}.b"),
            rows: fan_out,
            cols: 0,
            offset: self.total,
            len: fan_out,
        });
        self.total += fan_out;
    }

    fn push_mlp(&mut self, prefix: &str, widths: &[usize]) {
        for i in 0..widths.len() - 1 {
            self.push_dense(&format!("{prefix}.l{i}"), widths[i], widths[i + 1]);
        }
    }

    pub fn from_config(cfg: &ModelConfig) -> Self {
        let mut layout = ParamLayout {
            entries: Vec::new(),
            total: 0,
        };
        let mut enc = vec![cfg.pixels];
        enc.extend_from_slice(&cfg.encoder_hidden);
        enc.push(cfg.code_dim());
        layout.push_mlp("enc", &enc);

        let mut dec = vec![cfg.inferred_slot_dim];
        dec.extend_from_slice(&cfg.decoder_hidden);
        dec.push(cfg.slot_decoder_out());
        if cfg.share_slot_decoders {
            layout.push_mlp("dec", &dec);
        } else {
            for k in 0..cfg.slots {
                layout.push_mlp(&format!("dec{k}"), &dec);
            }
        }
        layout
    }

    pub fn find(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Per-slot decoder outputs from one forward pass.
pub struct DecodeOut {
    /// Reconstruction [B, N].
    pub xhat: NodeId,
    /// Per-slot contribution to xhat, each [B, N]. For the additive decoder
    /// these are the slot renders; for masked decoders, mask * appearance.
    pub slot_contribs: Vec<NodeId>,
    /// Per-slot masks [B, N] for masked decoders.
    pub masks: Option<Vec<NodeId>>,
}

/// Config + layout + flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub layout: ParamLayout,
    pub params: Vec<f64>,
}

impl Model {
    /// Fan-in scaled uniform init: every value drawn from
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded and deterministic.
    pub fn init(cfg: ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let layout = ParamLayout::from_config(&cfg);
        let mut params = vec![0.0; layout.total];
        let mut rng = rng::stream(cfg.init_seed, "model/init");
        let mut i = 0;
        while i < layout.entries.len() {
            let w = &layout.entries[i];
            let b = &layout.entries[i + 1];
            let bound = 1.0 / (w.rows as f64).sqrt();
            for v in params[w.offset..w.offset + w.len].iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
            for v in params[b.offset..b.offset + b.len].iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
            i += 2;
        }
        Ok(Self {
            cfg,
            layout,
            params,
        })
    }

    pub fn from_parts(cfg: ModelConfig, params: Vec<f64>) -> Result<Self, ModelError> {
        cfg.validate()?;
        let layout = ParamLayout::from_config(&cfg);
        if params.len() != layout.total {
            return Err(ModelError::InvalidConfig(format!(
                "parameter vector has {} values, layout expects {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Self {
            cfg,
            layout,
            params,
        })
    }

    /// Record the flat parameter vector as a tape leaf.
    pub fn params_leaf(&self, tape: &mut Tape) -> NodeId {
        tape.leaf(Tensor::vector(self.params.clone()))
    }

    fn dense_on(
        &self,
        tape: &mut Tape,
        params: NodeId,
        name: &str,
        x: NodeId,
    ) -> Result<NodeId, ModelError> {
        let w = self
            .layout
            .find(&format!("{name}.w"))
            .unwrap_or_else(|| panic!("missing layout entry {name}.w"));
        let b = self.layout.find(&format!("{name}.b")).unwrap();
        let (rows, cols, w_off, w_len) = (w.rows, w.cols, w.offset, w.len);
        let (b_off, b_len) = (b.offset, b.len);
        let wflat = tape.slice1(params, w_off, w_off + w_len)?;
        let wmat = tape.reshape(wflat, vec![rows, cols])?;
        let bvec = tape.slice1(params, b_off, b_off + b_len)?;
        let xw = tape.matmul(x, wmat)?;
        Ok(tape.add_row(xw, bvec)?)
    }

    fn mlp_on(
        &self,
        tape: &mut Tape,
        params: NodeId,
        prefix: &str,
        depth: usize,
        x: NodeId,
    ) -> Result<NodeId, ModelError> {
        let mut h = x;
        for i in 0..depth {
            h = self.dense_on(tape, params, &format!("{prefix}.l{i}"), h)?;
            if i + 1 < depth {
                h = tape.elu(h);
            }
        }
        Ok(h)
    }

    fn encoder_depth(&self) -> usize {
        self.cfg.encoder_hidden.len() + 1
    }

    fn decoder_depth(&self) -> usize {
        self.cfg.decoder_hidden.len() + 1
    }

    fn slot_decoder_prefix(&self, k: usize) -> String {
        if self.cfg.share_slot_decoders {
            "dec".to_string()
        } else {
            format!("dec{k}")
        }
    }

    /// Encoder forward on the tape: [B, N] -> [B, K * inferred_slot_dim].
    pub fn encode_on(
        &self,
        tape: &mut Tape,
        params: NodeId,
        x: NodeId,
    ) -> Result<NodeId, ModelError> {
        self.mlp_on(tape, params, "enc", self.encoder_depth(), x)
    }

    /// Decoder forward on the tape: [B, K * inferred_slot_dim] -> DecodeOut.
    pub fn decode_on(
        &self,
        tape: &mut Tape,
        params: NodeId,
        codes: NodeId,
    ) -> Result<DecodeOut, ModelError> {
        let m = self.cfg.inferred_slot_dim;
        let k = self.cfg.slots;
        let depth = self.decoder_depth();
        let mut raw = Vec::with_capacity(k);
        for slot in 0..k {
            let z_k = tape.slice_cols(codes, slot * m, (slot + 1) * m)?;
            let prefix = self.slot_decoder_prefix(slot);
            raw.push(self.mlp_on(tape, params, &prefix, depth, z_k)?);
        }
        match self.cfg.decoder {
            DecoderKind::Additive => {
                let mut xhat = raw[0];
                for &r in &raw[1..] {
                    xhat = tape.add(xhat, r)?;
                }
                Ok(DecodeOut {
                    xhat,
                    slot_contribs: raw,
                    masks: None,
                })
            }
            DecoderKind::MaskedSoftmax | DecoderKind::MaskedSigmoid => {
                let n = self.cfg.pixels;
                let mut logits = Vec::with_capacity(k);
                let mut apps = Vec::with_capacity(k);
                for &r in &raw {
                    logits.push(tape.slice_cols(r, 0, n)?);
                    let app_raw = tape.slice_cols(r, n, 2 * n)?;
                    apps.push(tape.sigmoid(app_raw));
                }
                let masks: Vec<NodeId> = if self.cfg.decoder == DecoderKind::MaskedSoftmax {
                    let stacked = tape.stack(&logits)?;
                    let soft = tape.softmax(stacked, 0)?;
                    (0..k)
                        .map(|i| tape.index(soft, i))
                        .collect::<Result<_, _>>()?
                } else {
                    logits.iter().map(|&l| tape.sigmoid(l)).collect()
                };
                let mut contribs = Vec::with_capacity(k);
                for i in 0..k {
                    contribs.push(tape.mul(masks[i], apps[i])?);
                }
                let mut xhat = contribs[0];
                for &c in &contribs[1..] {
                    xhat = tape.add(xhat, c)?;
                }
                Ok(DecodeOut {
                    xhat,
                    slot_contribs: contribs,
                    masks: Some(masks),
                })
            }
        }
    }

    /// Value-level encode of a row-major [rows, N] batch.
    pub fn encode_batch(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut tape = Tape::new();
        let p = self.params_leaf(&mut tape);
        let xn = tape.leaf(Tensor::matrix(rows, self.cfg.pixels, x.to_vec()).expect("batch shape"));
        let codes = self.encode_on(&mut tape, p, xn).expect("encode");
        tape.value(codes).data().to_vec()
    }

    /// Value-level decode of a row-major [rows, K*M] code batch. Returns the
    /// reconstruction and per-slot contributions.
    pub fn decode_batch(&self, codes: &[f64], rows: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut tape = Tape::new();
        let p = self.params_leaf(&mut tape);
        let cn = tape.leaf(
            Tensor::matrix(rows, self.cfg.code_dim(), codes.to_vec()).expect("code shape"),
        );
        let out = self.decode_on(&mut tape, p, cn).expect("decode");
        let xhat = tape.value(out.xhat).data().to_vec();
        let contribs = out
            .slot_contribs
            .iter()
            .map(|&c| tape.value(c).data().to_vec())
            .collect();
        (xhat, contribs)
    }

    /// Full autoencoder pass on values: reconstruction of a [rows, N] batch.
    pub fn reconstruct_batch(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let codes = self.encode_batch(x, rows);
        self.decode_batch(&codes, rows).0
    }
}
