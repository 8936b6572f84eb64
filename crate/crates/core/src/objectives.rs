//! Training objectives: reconstruction and compositional consistency, plus
//! the two-phase minibatch training loop.
//!
//! The consistency loss re-encodes decoded recombinations of in-batch slot
//! codes: encode the batch, splice slots from random row pairs into new codes,
//! decode them, re-encode the result, and penalize the distance between the
//! re-encoding and the spliced codes after per-column standardization and
//! Hungarian slot matching. By default gradients reach only the re-encoding
//! path (the decoded image and the spliced target are constants); `Full` mode
//! backpropagates through the decoder as well.

use crate::assignment::{hungarian, CostMatrix};
use crate::dataset::Dataset;
use crate::model::{Model, ModelConfig, ModelError};
use crate::rng::{self, ChaCha12Rng};
use crate::tape::{NodeId, Tape, TapeError};
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("optimizer error: {0}")]
    Optim(#[from] crate::optim::OptimError),
    #[error("non-finite loss {value} at epoch {epoch}, step {step}")]
    NonFiniteLoss { value: f64, epoch: usize, step: u64 },
    #[error("consistency loss needs a batch of >= 2 samples, got {0}")]
    BatchTooSmall(usize),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("dataset/model mismatch: dataset has {dataset} pixels, model expects {model}")]
    PixelMismatch { dataset: usize, model: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyGradient {
    /// Decoded image and spliced target are constants; only the re-encoding
    /// path trains.
    EncoderOnly,
    /// Gradients also flow through the decoder and the spliced codes.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Doubling ramp from 1e-7 to the configured rate, then halving every 50
    /// epochs back down to 1e-7.
    DoubleThenHalve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Leading epochs trained on reconstruction only.
    pub warmup_epochs: usize,
    /// Consistency weight.
    pub lambda: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub consistency_gradient: ConsistencyGradient,
    pub lr_schedule: LrSchedule,
    /// Master seed; init, shuffling, and recombination draw from streams
    /// derived from it.
    pub seed: u64,
    /// ID images used for the per-epoch decoder contrast probe.
    pub contrast_probe_points: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            warmup_epochs: 50,
            lambda: 1.0,
            batch_size: 64,
            learning_rate: 1e-3,
            consistency_gradient: ConsistencyGradient::EncoderOnly,
            lr_schedule: LrSchedule::Constant,
            seed: 0,
            contrast_probe_points: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.warmup_epochs > self.epochs {
            return Err(TrainError::InvalidConfig(format!(
                "warmup_epochs {} exceeds epochs {}",
                self.warmup_epochs, self.epochs
            )));
        }
        if self.lambda < 0.0 {
            return Err(TrainError::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be > 0".into()));
        }
        Ok(())
    }
}

/// Which batch rows feed one recombined code, and which of the pair donates
/// each slot (1 = first, 2 = second).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecombinationPlan {
    pub first: usize,
    pub second: usize,
    pub selectors: Vec<u8>,
}

/// Splice two slot code vectors: slot k comes from `a` when selectors[k] is 1,
/// from `b` when 2.
pub fn recombine(a: &[f64], b: &[f64], selectors: &[u8], slot_dim: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), selectors.len() * slot_dim);
    let mut out = Vec::with_capacity(a.len());
    for (k, &sel) in selectors.iter().enumerate() {
        let src = if sel == 1 { a } else { b };
        out.extend_from_slice(&src[k * slot_dim..(k + 1) * slot_dim]);
    }
    out
}

/// Draw one plan per batch row: uniformly chosen row pair, selectors uniform
/// over {1, 2} per slot.
pub fn draw_plans(batch: usize, slots: usize, rng: &mut ChaCha12Rng) -> Vec<RecombinationPlan> {
    (0..batch)
        .map(|_| RecombinationPlan {
            first: rng.gen_range(0..batch),
            second: rng.gen_range(0..batch),
            selectors: (0..slots).map(|_| rng.gen_range(1..=2u8)).collect(),
        })
        .collect()
}

/// Mean over rows of the squared L2 reconstruction error, on the tape.
pub fn rec_loss_on(
    tape: &mut Tape,
    model: &Model,
    params: NodeId,
    x: NodeId,
) -> Result<NodeId, TrainError> {
    let rows = tape.value(x).rows();
    let codes = model.encode_on(tape, params, x)?;
    let out = model.decode_on(tape, params, codes)?;
    let diff = tape.sub(out.xhat, x)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq);
    Ok(tape.scale(total, 1.0 / rows as f64))
}

/// Reconstruction loss value on a [rows, N] batch.
pub fn rec_loss(model: &Model, x: &[f64], rows: usize) -> Result<f64, TrainError> {
    let mut tape = Tape::new();
    let p = model.params_leaf(&mut tape);
    let xn = tape.leaf(Tensor::matrix(rows, model.cfg.pixels, x.to_vec()).expect("batch shape"));
    let loss = rec_loss_on(&mut tape, model, p, xn)?;
    Ok(tape.value(loss).item())
}

/// Per-column mean and std (population, floored at 1e-6) of a [rows, cols]
/// buffer.
pub fn column_stats(data: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mu = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            mu[c] += data[r * cols + c];
        }
    }
    for m in mu.iter_mut() {
        *m /= rows as f64;
    }
    let mut sd = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let d = data[r * cols + c] - mu[c];
            sd[c] += d * d;
        }
    }
    for s in sd.iter_mut() {
        *s = (*s / rows as f64).sqrt().max(1e-6);
    }
    (mu, sd)
}

fn normalize_with(data: &[f64], cols: usize, mu: &[f64], sd: &[f64]) -> Vec<f64> {
    data.iter()
        .enumerate()
        .map(|(i, v)| (v - mu[i % cols]) / sd[i % cols])
        .collect()
}

/// Hungarian slot matching between two normalized code batches. Returns, per
/// row, the permutation p with target slot r matched to re-encoded slot p[r].
pub fn match_slots(
    target: &[f64],
    reenc: &[f64],
    rows: usize,
    slots: usize,
    slot_dim: usize,
) -> Vec<Vec<usize>> {
    let cols = slots * slot_dim;
    let mut perms = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut costs = Vec::with_capacity(slots * slots);
        for r in 0..slots {
            for c in 0..slots {
                let mut d2 = 0.0;
                for d in 0..slot_dim {
                    let t = target[i * cols + r * slot_dim + d];
                    let e = reenc[i * cols + c * slot_dim + d];
                    d2 += (t - e) * (t - e);
                }
                costs.push(d2);
            }
        }
        let cm = CostMatrix::new(slots, costs).expect("square");
        perms.push(hungarian(&cm).expect("finite costs").perm);
    }
    perms
}

/// Mean matched squared distance between two already-normalized code batches.
/// Exposed for the permutation-invariance property.
pub fn matched_distance(
    target_norm: &[f64],
    reenc_norm: &[f64],
    rows: usize,
    slots: usize,
    slot_dim: usize,
) -> f64 {
    let perms = match_slots(target_norm, reenc_norm, rows, slots, slot_dim);
    let cols = slots * slot_dim;
    let mut total = 0.0;
    for i in 0..rows {
        for r in 0..slots {
            let c = perms[i][r];
            for d in 0..slot_dim {
                let t = target_norm[i * cols + r * slot_dim + d];
                let e = reenc_norm[i * cols + c * slot_dim + d];
                total += (t - e) * (t - e);
            }
        }
    }
    total / rows as f64
}

/// Build the consistency loss on the tape. `codes` must be the encoder output
/// for the current batch (already on this tape).
pub fn cons_loss_on(
    tape: &mut Tape,
    model: &Model,
    params: NodeId,
    codes: NodeId,
    plans: &[RecombinationPlan],
    mode: ConsistencyGradient,
) -> Result<NodeId, TrainError> {
    let rows = tape.value(codes).rows();
    if rows < 2 {
        return Err(TrainError::BatchTooSmall(rows));
    }
    let k = model.cfg.slots;
    let m = model.cfg.inferred_slot_dim;
    let cols = k * m;

    // Spliced target codes z', on-graph in Full mode, constant otherwise.
    let (target, target_vals) = match mode {
        ConsistencyGradient::Full => {
            let mut blocks = Vec::with_capacity(k);
            for slot in 0..k {
                let rows_k: Vec<usize> = plans
                    .iter()
                    .map(|p| if p.selectors[slot] == 1 { p.first } else { p.second })
                    .collect();
                let gathered = tape.gather_rows(codes, &rows_k)?;
                blocks.push(tape.slice_cols(gathered, slot * m, (slot + 1) * m)?);
            }
            let target = tape.concat_cols(&blocks)?;
            let vals = tape.value(target).data().to_vec();
            (target, vals)
        }
        ConsistencyGradient::EncoderOnly => {
            let codes_v = tape.value(codes).data();
            let mut vals = Vec::with_capacity(plans.len() * cols);
            for plan in plans {
                let a = &codes_v[plan.first * cols..(plan.first + 1) * cols];
                let b = &codes_v[plan.second * cols..(plan.second + 1) * cols];
                vals.extend(recombine(a, b, &plan.selectors, m));
            }
            let target = tape.leaf(Tensor::matrix(plans.len(), cols, vals.clone()).unwrap());
            (target, vals)
        }
    };

    // Decode the spliced codes; detached from the graph in EncoderOnly mode.
    let decoded = match mode {
        ConsistencyGradient::Full => model.decode_on(tape, params, target)?.xhat,
        ConsistencyGradient::EncoderOnly => {
            let mut scratch = Tape::new();
            let sp = model.params_leaf(&mut scratch);
            let tz = scratch.leaf(Tensor::matrix(plans.len(), cols, target_vals.clone()).unwrap());
            let out = model.decode_on(&mut scratch, sp, tz)?;
            let xtilde = scratch.value(out.xhat).data().to_vec();
            tape.leaf(Tensor::matrix(plans.len(), model.cfg.pixels, xtilde).unwrap())
        }
    };

    let reenc = model.encode_on(tape, params, decoded)?;
    let reenc_vals = tape.value(reenc).data().to_vec();

    // Standardize both sides per slot-dimension with batch statistics. The
    // statistics enter as constants; gradients flow through the codes only.
    let (mu_t, sd_t) = column_stats(&target_vals, rows, cols);
    let (mu_e, sd_e) = column_stats(&reenc_vals, rows, cols);
    let target_norm_vals = normalize_with(&target_vals, cols, &mu_t, &sd_t);
    let reenc_norm_vals = normalize_with(&reenc_vals, cols, &mu_e, &sd_e);

    let neg_mu_e = tape.leaf(Tensor::vector(mu_e.iter().map(|v| -v).collect()));
    let inv_sd_e = tape.leaf(Tensor::vector(sd_e.iter().map(|v| 1.0 / v).collect()));
    let centered_e = tape.add_row(reenc, neg_mu_e)?;
    let reenc_norm = tape.mul_row(centered_e, inv_sd_e)?;

    let target_norm = match mode {
        ConsistencyGradient::Full => {
            let neg_mu_t = tape.leaf(Tensor::vector(mu_t.iter().map(|v| -v).collect()));
            let inv_sd_t = tape.leaf(Tensor::vector(sd_t.iter().map(|v| 1.0 / v).collect()));
            let centered_t = tape.add_row(target, neg_mu_t)?;
            tape.mul_row(centered_t, inv_sd_t)?
        }
        ConsistencyGradient::EncoderOnly => {
            tape.leaf(Tensor::matrix(rows, cols, target_norm_vals.clone()).unwrap())
        }
    };

    // Pair slots per sample, then align the re-encoding to the target order.
    let perms = match_slots(&target_norm_vals, &reenc_norm_vals, rows, k, m);
    let aligned = tape.permute_blocks(reenc_norm, &perms, m)?;
    let diff = tape.sub(target_norm, aligned)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq);
    Ok(tape.scale(total, 1.0 / rows as f64))
}

/// Consistency loss value on a [rows, N] batch.
pub fn cons_loss(
    model: &Model,
    x: &[f64],
    rows: usize,
    rng: &mut ChaCha12Rng,
    mode: ConsistencyGradient,
) -> Result<f64, TrainError> {
    if rows < 2 {
        return Err(TrainError::BatchTooSmall(rows));
    }
    let mut tape = Tape::new();
    let p = model.params_leaf(&mut tape);
    let xn = tape.leaf(Tensor::matrix(rows, model.cfg.pixels, x.to_vec()).expect("batch shape"));
    let codes = model.encode_on(&mut tape, p, xn)?;
    let plans = draw_plans(rows, model.cfg.slots, rng);
    let loss = cons_loss_on(&mut tape, model, p, codes, &plans, mode)?;
    Ok(tape.value(loss).item())
}

/// One row per completed epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub l_rec: f64,
    pub l_cons: f64,
    pub contrast: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,l_rec,l_cons,contrast,seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.3}\n",
                r.epoch, r.l_rec, r.l_cons, r.contrast, r.seconds
            ));
        }
        out
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub steps: u64,
    pub log: TrainLog,
    pub rng_digest: u64,
}

fn epoch_learning_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    match cfg.lr_schedule {
        LrSchedule::Constant => cfg.learning_rate,
        LrSchedule::DoubleThenHalve => {
            let floor = 1e-7;
            let mut lr = floor;
            let mut e = 0;
            while e < epoch && lr < cfg.learning_rate {
                lr = (lr * 2.0).min(cfg.learning_rate);
                e += 1;
            }
            if e < epoch {
                let halvings = (epoch - e) / 50;
                lr = (lr / 2f64.powi(halvings as i32)).max(floor);
            }
            lr
        }
    }
}

/// Mean compositional contrast of the decoder over codes of probe images.
fn decoder_contrast_probe(model: &Model, probe: &[f64], probe_rows: usize) -> f64 {
    if probe_rows == 0 {
        return f64::NAN;
    }
    let codes = model.encode_batch(probe, probe_rows);
    let cols = model.cfg.code_dim();
    let f = |z: &[f64]| model.decode_batch(z, 1).0;
    let mut total = 0.0;
    for i in 0..probe_rows {
        let z = &codes[i * cols..(i + 1) * cols];
        total += crate::metrics::comp_contrast(&f, z, model.cfg.slots, model.cfg.inferred_slot_dim)
            .unwrap_or(f64::NAN);
    }
    total / probe_rows as f64
}

/// Two-phase minibatch training: reconstruction only for `warmup_epochs`,
/// then reconstruction + lambda * consistency. Deterministic given the seed.
pub fn train(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    data: &Dataset,
) -> Result<TrainOutcome, TrainError> {
    train_cfg.validate()?;
    if model_cfg.pixels != data.pixels {
        return Err(TrainError::PixelMismatch {
            dataset: data.pixels,
            model: model_cfg.pixels,
        });
    }
    let mut cfg = model_cfg.clone();
    cfg.init_seed = rng::derive_seed(train_cfg.seed, "train/init");
    let mut model = Model::init(cfg)?;

    let mut shuffle_rng = rng::stream(train_cfg.seed, "train/shuffle");
    let mut recombine_rng = rng::stream(train_cfg.seed, "train/recombine");

    let n = model.cfg.pixels;
    let x_all = data.observation_matrix();
    let count = data.len();
    let probe_rows = train_cfg.contrast_probe_points.min(count);
    let probe: Vec<f64> = x_all[..probe_rows * n].to_vec();

    let mut adam = crate::optim::AdamState::new(model.params.len(), train_cfg.learning_rate);
    let mut indices: Vec<usize> = (0..count).collect();
    let mut log = TrainLog::default();
    let mut steps: u64 = 0;

    for epoch in 0..train_cfg.epochs {
        let started = Instant::now();
        adam.learning_rate = epoch_learning_rate(train_cfg, epoch);
        let cons_active = epoch >= train_cfg.warmup_epochs && train_cfg.lambda > 0.0;
        indices.shuffle(&mut shuffle_rng);

        let mut rec_sum = 0.0;
        let mut rec_batches = 0usize;
        let mut cons_sum = 0.0;
        let mut cons_batches = 0usize;

        for chunk in indices.chunks(train_cfg.batch_size) {
            let rows = chunk.len();
            let mut batch = Vec::with_capacity(rows * n);
            for &i in chunk {
                batch.extend_from_slice(&x_all[i * n..(i + 1) * n]);
            }
            let mut tape = Tape::new();
            let params = model.params_leaf(&mut tape);
            let x = tape.leaf(Tensor::matrix(rows, n, batch).expect("batch shape"));
            let codes = model.encode_on(&mut tape, params, x)?;
            let out = model.decode_on(&mut tape, params, codes)?;
            let diff = tape.sub(out.xhat, x)?;
            let sq = tape.mul(diff, diff)?;
            let total_sq = tape.sum(sq);
            let rec = tape.scale(total_sq, 1.0 / rows as f64);
            let rec_val = tape.value(rec).item();

            let loss = if cons_active && rows >= 2 {
                let plans = draw_plans(rows, model.cfg.slots, &mut recombine_rng);
                let cons = cons_loss_on(
                    &mut tape,
                    &model,
                    params,
                    codes,
                    &plans,
                    train_cfg.consistency_gradient,
                )?;
                cons_sum += tape.value(cons).item();
                cons_batches += 1;
                let weighted = tape.scale(cons, train_cfg.lambda);
                tape.add(rec, weighted)?
            } else {
                rec
            };

            let loss_val = tape.value(loss).item();
            if !loss_val.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    value: loss_val,
                    epoch: epoch + 1,
                    step: steps,
                });
            }
            rec_sum += rec_val;
            rec_batches += 1;

            let mut grads = tape.backward(loss)?;
            let grad = grads.take(params).expect("params reachable from loss");
            adam.step(&mut model.params, grad.data())?;
            steps += 1;
        }

        let contrast = decoder_contrast_probe(&model, &probe, probe_rows);
        log.rows.push(TrainLogRow {
            epoch: epoch + 1,
            l_rec: rec_sum / rec_batches.max(1) as f64,
            l_cons: if cons_batches > 0 {
                cons_sum / cons_batches as f64
            } else {
                f64::NAN
            },
            contrast,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    let rng_digest = rng::state_digest(&recombine_rng);
    Ok(TrainOutcome {
        model,
        steps,
        log,
        rng_digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecoderKind;

    fn tiny_model() -> Model {
        Model::init(ModelConfig {
            pixels: 8,
            slots: 2,
            inferred_slot_dim: 2,
            encoder_hidden: vec![12],
            decoder_hidden: vec![12],
            decoder: DecoderKind::Additive,
            share_slot_decoders: false,
            init_seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn rec_loss_examples() {
        let model = tiny_model();
        // Perfect reconstruction is only reachable through a fixture: compare
        // the loss of x against itself through the definition instead.
        let x = vec![0.25; 8];
        let xhat = model.reconstruct_batch(&x, 1);
        let direct: f64 = xhat.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        let loss = rec_loss(&model, &x, 1).unwrap();
        assert!((loss - direct).abs() < 1e-12);
    }

    #[test]
    fn recombine_selector_semantics() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![5.0, 6.0, 7.0, 8.0];
        assert_eq!(recombine(&a, &b, &[1, 1], 2), a);
        assert_eq!(recombine(&a, &b, &[2, 2], 2), b);
        assert_eq!(recombine(&a, &b, &[1, 2], 2), vec![1.0, 2.0, 7.0, 8.0]);
    }

    #[test]
    fn matched_distance_recovers_slot_swap() {
        // Re-encoding returns the slots in swapped order with identical
        // values; Hungarian matching must absorb the swap.
        let target = vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.5, 2.5, 1.5];
        let mut swapped = Vec::new();
        for i in 0..2 {
            let row = &target[i * 4..(i + 1) * 4];
            swapped.extend_from_slice(&row[2..4]);
            swapped.extend_from_slice(&row[0..2]);
        }
        let d = matched_distance(&target, &swapped, 2, 2, 2);
        assert!(d.abs() < 1e-12, "swap must be absorbed, got {d}");
    }

    #[test]
    fn matched_distance_is_permutation_invariant() {
        let rows = 4;
        let (k, m) = (3, 2);
        let cols = k * m;
        let mut rng = crate::rng::stream(9, "obj-test");
        let target: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reenc: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = matched_distance(&target, &reenc, rows, k, m);
        // permute the target's slots (same permutation every row)
        let perm = [2usize, 0, 1];
        let mut permuted = vec![0.0; target.len()];
        for i in 0..rows {
            for (slot, &src) in perm.iter().enumerate() {
                for d in 0..m {
                    permuted[i * cols + slot * m + d] = target[i * cols + src * m + d];
                }
            }
        }
        let shuffled = matched_distance(&permuted, &reenc, rows, k, m);
        assert!(
            (base - shuffled).abs() < 1e-12,
            "{base} vs {shuffled} after slot permutation"
        );
    }

    #[test]
    fn cons_loss_zero_when_autoencoder_inverts() {
        // If the re-encoding equals the spliced target exactly, the matched
        // normalized distance is zero. Exercise the arithmetic directly.
        let rows = 5;
        let (k, m) = (2, 3);
        let cols = k * m;
        let mut rng = crate::rng::stream(10, "obj-test");
        let codes: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (mu, sd) = column_stats(&codes, rows, cols);
        let normed = normalize_with(&codes, cols, &mu, &sd);
        let d = matched_distance(&normed, &normed, rows, k, m);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn cons_loss_requires_two_samples() {
        let model = tiny_model();
        let x = vec![0.1; 8];
        let mut rng = crate::rng::stream(1, "obj-test");
        assert!(matches!(
            cons_loss(&model, &x, 1, &mut rng, ConsistencyGradient::EncoderOnly),
            Err(TrainError::BatchTooSmall(1))
        ));
    }

    #[test]
    fn single_slot_cons_loss_is_plain_normalized_error() {
        let mut cfg = tiny_model().cfg;
        cfg.slots = 1;
        let model = Model::init(cfg).unwrap();
        let rows = 6;
        let x: Vec<f64> = (0..rows * 8).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let mut rng = crate::rng::stream(2, "obj-test");
        let loss = cons_loss(&model, &x, rows, &mut rng, ConsistencyGradient::EncoderOnly).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
    }

    #[test]
    fn draw_plans_covers_batch_uniformly() {
        let mut rng = crate::rng::stream(4, "obj-test");
        let plans = draw_plans(16, 2, &mut rng);
        assert_eq!(plans.len(), 16);
        for p in &plans {
            assert!(p.first < 16 && p.second < 16);
            assert!(p.selectors.iter().all(|&s| s == 1 || s == 2));
        }
    }
}
