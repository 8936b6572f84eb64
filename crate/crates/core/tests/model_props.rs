//! End-to-end autoencoder properties: differentiability of the full
//! pipelines and the structural additivity contrast between decoder kinds.

use rand::Rng;
use slotlab::model::{DecoderKind, Model, ModelConfig};
use slotlab::rng;
use slotlab::tape::Tape;
use slotlab::tensor::Tensor;

fn cfg(decoder: DecoderKind, seed: u64) -> ModelConfig {
    ModelConfig {
        pixels: 10,
        slots: 2,
        inferred_slot_dim: 3,
        encoder_hidden: vec![14],
        decoder_hidden: vec![14],
        decoder,
        share_slot_decoders: false,
        init_seed: seed,
    }
}

/// encode -> decode -> MSE must be differentiable end to end for every
/// decoder kind: reverse-mode gradients match central differences.
#[test]
fn full_model_gradients_match_finite_differences() {
    for decoder in [
        DecoderKind::Additive,
        DecoderKind::MaskedSoftmax,
        DecoderKind::MaskedSigmoid,
    ] {
        for seed in 0..5 {
            let model = Model::init(cfg(decoder, seed)).unwrap();
            let mut data_rng = rng::stream(seed, "model-props/x");
            let batch = 3;
            let x: Vec<f64> = (0..batch * model.cfg.pixels)
                .map(|_| data_rng.gen_range(0.0..1.0))
                .collect();

            let build = |theta: &[f64]| -> (Tape, slotlab::tape::NodeId, slotlab::tape::NodeId) {
                let m = Model::from_parts(model.cfg.clone(), theta.to_vec()).unwrap();
                let mut tape = Tape::new();
                let p = tape.leaf(Tensor::vector(theta.to_vec()));
                let xn = tape.leaf(Tensor::matrix(batch, m.cfg.pixels, x.clone()).unwrap());
                let codes = m.encode_on(&mut tape, p, xn).unwrap();
                let out = m.decode_on(&mut tape, p, codes).unwrap();
                let diff = tape.sub(out.xhat, xn).unwrap();
                let sq = tape.mul(diff, diff).unwrap();
                let loss = tape.mean(sq);
                (tape, p, loss)
            };
            let analytic = {
                let (tape, p, loss) = build(&model.params);
                let grads = tape.backward(loss).unwrap();
                grads.get(p).unwrap().data().to_vec()
            };
            let eval = |theta: &[f64]| -> f64 {
                let (tape, _, loss) = build(theta);
                tape.value(loss).item()
            };
            // Coordinate-wise dual criterion: relative error below 1e-6, or
            // absolute difference below 1e-9 for coordinates whose gradient
            // sits near a zero crossing, where the relative form only
            // amplifies f64 finite-difference noise (~1e-12).
            let h = 1e-5;
            let mut work = model.params.clone();
            for i in 0..work.len() {
                let orig = work[i];
                work[i] = orig + h;
                let fp = eval(&work);
                work[i] = orig - h;
                let fm = eval(&work);
                work[i] = orig;
                let central = (fp - fm) / (2.0 * h);
                let abs = (analytic[i] - central).abs();
                let rel = abs / (analytic[i].abs() + central.abs() + 1e-12);
                assert!(
                    rel < 1e-6 || abs < 1e-9,
                    "{decoder:?} seed {seed} coord {i}: rel {rel:.3e}, abs {abs:.3e}"
                );
            }
        }
    }
}

/// Additive decoder: perturbing one slot's code leaves every other slot's
/// render bit-identical, across many random probes.
#[test]
fn additive_decoder_slot_isolation_is_bitwise() {
    let model = Model::init(cfg(DecoderKind::Additive, 3)).unwrap();
    let m = model.cfg.inferred_slot_dim;
    let mut rng = rng::stream(5, "model-props/additive");
    for _ in 0..200 {
        let codes: Vec<f64> = (0..model.cfg.code_dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let slot = rng.gen_range(0..model.cfg.slots);
        let coord = rng.gen_range(0..m);
        let mut perturbed = codes.clone();
        perturbed[slot * m + coord] += rng.gen_range(0.1..2.0);
        let (_, base) = model.decode_batch(&codes, 1);
        let (_, moved) = model.decode_batch(&perturbed, 1);
        for k in 0..model.cfg.slots {
            if k == slot {
                continue;
            }
            let identical = base[k]
                .iter()
                .zip(&moved[k])
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(identical, "slot {k} render changed when slot {slot} moved");
        }
    }
}

/// Masked-softmax decoder: random search finds codes where perturbing one
/// slot changes another slot's contribution by more than 1e-6 (the mask
/// normalization couples slots).
#[test]
fn masked_softmax_cross_slot_witness_exists() {
    let model = Model::init(cfg(DecoderKind::MaskedSoftmax, 4)).unwrap();
    let m = model.cfg.inferred_slot_dim;
    let mut rng = rng::stream(6, "model-props/witness");
    let mut found = false;
    for trial in 0..10_000 {
        let codes: Vec<f64> = (0..model.cfg.code_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let perturb_slot = rng.gen_range(0..model.cfg.slots);
        let coord = rng.gen_range(0..m);
        let mut perturbed = codes.clone();
        perturbed[perturb_slot * m + coord] += rng.gen_range(-1.0..1.0);
        let (_, base) = model.decode_batch(&codes, 1);
        let (_, moved) = model.decode_batch(&perturbed, 1);
        for k in 0..model.cfg.slots {
            if k == perturb_slot {
                continue;
            }
            let delta = base[k]
                .iter()
                .zip(&moved[k])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if delta > 1e-6 {
                found = true;
            }
        }
        if found {
            println!("witness found after {} trials", trial + 1);
            break;
        }
    }
    assert!(found, "no cross-slot contribution change found in 10^4 trials");
}

/// The same random search on the sigmoid-masked decoder never finds a
/// witness: per-slot masks keep it additive.
#[test]
fn masked_sigmoid_has_no_cross_slot_witness() {
    let model = Model::init(cfg(DecoderKind::MaskedSigmoid, 4)).unwrap();
    let m = model.cfg.inferred_slot_dim;
    let mut rng = rng::stream(7, "model-props/sigmoid");
    for _ in 0..2_000 {
        let codes: Vec<f64> = (0..model.cfg.code_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let perturb_slot = rng.gen_range(0..model.cfg.slots);
        let coord = rng.gen_range(0..m);
        let mut perturbed = codes.clone();
        perturbed[perturb_slot * m + coord] += rng.gen_range(-1.0..1.0);
        let (_, base) = model.decode_batch(&codes, 1);
        let (_, moved) = model.decode_batch(&perturbed, 1);
        for k in 0..model.cfg.slots {
            if k == perturb_slot {
                continue;
            }
            let identical = base[k]
                .iter()
                .zip(&moved[k])
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(identical);
        }
    }
}
