//! Finite-difference verification of every tape primitive and of full MLP
//! pipelines. The oracle path (numdiff::grad_check) never touches the
//! reverse sweep it is checking.

use proptest::prelude::*;
use rand::Rng;
use slotlab::numdiff::{grad_check, jacobian_fd};
use slotlab::rng;
use slotlab::tape::{NodeId, Tape};
use slotlab::tensor::Tensor;

const FD_STEP: f64 = 1e-5;
const MAX_REL_ERR: f64 = 1e-6;

/// Builds one op under test from leaf nodes.
type OpBuilder = dyn Fn(&mut Tape, &[NodeId]) -> NodeId;

/// Gradient-check one primitive: wrap its output in a random linear
/// functional so the loss is a generic scalar, then compare the reverse sweep
/// against central differences over every input coordinate.
fn check_primitive(name: &str, seed: u64, shapes: &[Vec<usize>], build: &OpBuilder) {
    let mut rng = rng::stream(seed, &format!("fd/{name}"));
    let inputs: Vec<Tensor> = shapes
        .iter()
        .map(|s| {
            let len = s.iter().product();
            let data = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            Tensor::new(s.clone(), data).unwrap()
        })
        .collect();

    // Discover the output shape, then fix a random functional.
    let out_shape = {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &ids);
        tape.value(out).shape().to_vec()
    };
    let w: Vec<f64> = (0..out_shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();

    let flat0: Vec<f64> = inputs.iter().flat_map(|t| t.data().to_vec()).collect();
    let eval = |theta: &[f64]| -> f64 {
        let mut tape = Tape::new();
        let mut off = 0;
        let ids: Vec<NodeId> = shapes
            .iter()
            .map(|s| {
                let len: usize = s.iter().product();
                let t = Tensor::new(s.clone(), theta[off..off + len].to_vec()).unwrap();
                off += len;
                tape.leaf(t)
            })
            .collect();
        let out = build(&mut tape, &ids);
        let wn = tape.leaf(Tensor::new(out_shape.clone(), w.clone()).unwrap());
        let prod = tape.mul(out, wn).unwrap();
        let loss = tape.sum(prod);
        tape.value(loss).item()
    };

    // Analytic gradients in one reverse sweep.
    let analytic: Vec<f64> = {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &ids);
        let wn = tape.leaf(Tensor::new(out_shape.clone(), w.clone()).unwrap());
        let prod = tape.mul(out, wn).unwrap();
        let loss = tape.sum(prod);
        let grads = tape.backward(loss).unwrap();
        ids.iter()
            .flat_map(|&id| {
                grads
                    .get(id)
                    .map(|g| g.data().to_vec())
                    .unwrap_or_else(|| vec![0.0; tape.value(id).len()])
            })
            .collect()
    };

    let err = grad_check(eval, &flat0, &analytic, FD_STEP);
    assert!(
        err < MAX_REL_ERR,
        "{name} seed {seed}: max relative error {err:.3e}"
    );
}

macro_rules! primitive_suite {
    ($($test_name:ident: $name:expr, $shapes:expr, $build:expr;)*) => {
        $(
            #[test]
            fn $test_name() {
                let shapes: Vec<Vec<usize>> = $shapes;
                for seed in 0..100 {
                    check_primitive($name, seed, &shapes, &$build);
                }
            }
        )*
    };
}

primitive_suite! {
    fd_add: "add", vec![vec![3, 4], vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.add(ids[0], ids[1]).unwrap();
    fd_sub: "sub", vec![vec![3, 4], vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.sub(ids[0], ids[1]).unwrap();
    fd_mul: "mul", vec![vec![3, 4], vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.mul(ids[0], ids[1]).unwrap();
    fd_matmul: "matmul", vec![vec![3, 4], vec![4, 2]],
        |t: &mut Tape, ids: &[NodeId]| t.matmul(ids[0], ids[1]).unwrap();
    fd_add_row: "add_row", vec![vec![3, 4], vec![4]],
        |t: &mut Tape, ids: &[NodeId]| t.add_row(ids[0], ids[1]).unwrap();
    fd_mul_row: "mul_row", vec![vec![3, 4], vec![4]],
        |t: &mut Tape, ids: &[NodeId]| t.mul_row(ids[0], ids[1]).unwrap();
    fd_scale: "scale", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.scale(ids[0], -1.7);
    fd_elu: "elu", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.elu(ids[0]);
    fd_sigmoid: "sigmoid", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.sigmoid(ids[0]);
    fd_softmax_axis0: "softmax0", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.softmax(ids[0], 0).unwrap();
    fd_softmax_axis1: "softmax1", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.softmax(ids[0], 1).unwrap();
    fd_sum: "sum", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.sum(ids[0]);
    fd_mean: "mean", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.mean(ids[0]);
    fd_reshape: "reshape", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.reshape(ids[0], vec![2, 6]).unwrap();
    fd_slice1: "slice1", vec![vec![10]],
        |t: &mut Tape, ids: &[NodeId]| t.slice1(ids[0], 2, 7).unwrap();
    fd_slice_cols: "slice_cols", vec![vec![3, 5]],
        |t: &mut Tape, ids: &[NodeId]| t.slice_cols(ids[0], 1, 4).unwrap();
    fd_concat_cols: "concat_cols", vec![vec![3, 2], vec![3, 3]],
        |t: &mut Tape, ids: &[NodeId]| t.concat_cols(ids).unwrap();
    fd_stack: "stack", vec![vec![2, 3], vec![2, 3]],
        |t: &mut Tape, ids: &[NodeId]| t.stack(ids).unwrap();
    fd_index: "index", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.index(ids[0], 1).unwrap();
    fd_gather_rows: "gather_rows", vec![vec![3, 4]],
        |t: &mut Tape, ids: &[NodeId]| t.gather_rows(ids[0], &[2, 0, 0, 1]).unwrap();
    fd_permute_blocks: "permute_blocks", vec![vec![2, 6]],
        |t: &mut Tape, ids: &[NodeId]|
            t.permute_blocks(ids[0], &[vec![2, 0, 1], vec![1, 2, 0]], 2).unwrap();
    fd_softmax_stacked: "softmax_stacked", vec![vec![2, 3], vec![2, 3], vec![2, 3]],
        |t: &mut Tape, ids: &[NodeId]| {
            let s = t.stack(ids).unwrap();
            t.softmax(s, 0).unwrap()
        };
}

/// Random two-hidden-layer MLP with MSE loss: the reverse sweep must match
/// central differences over all weights and biases.
fn mlp_grad_error(seed: u64) -> f64 {
    let mut rng = rng::stream(seed, "fd/mlp");
    let d_in = rng.gen_range(2..8usize);
    let d_h1 = rng.gen_range(2..12usize);
    let d_h2 = rng.gen_range(2..12usize);
    let d_out = rng.gen_range(1..5usize);
    let batch = rng.gen_range(1..4usize);

    let widths = [d_in, d_h1, d_h2, d_out];
    let n_params: usize = (0..3).map(|i| widths[i] * widths[i + 1] + widths[i + 1]).sum();
    let theta0: Vec<f64> = (0..n_params).map(|_| rng.gen_range(-0.8..0.8)).collect();
    let x: Vec<f64> = (0..batch * d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let target: Vec<f64> = (0..batch * d_out).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let build = |theta: &[f64]| -> (Tape, NodeId, NodeId) {
        let mut tape = Tape::new();
        let params = tape.leaf(Tensor::vector(theta.to_vec()));
        let mut h = tape.leaf(Tensor::matrix(batch, d_in, x.clone()).unwrap());
        let mut off = 0;
        for i in 0..3 {
            let (fan_in, fan_out) = (widths[i], widths[i + 1]);
            let wflat = tape.slice1(params, off, off + fan_in * fan_out).unwrap();
            off += fan_in * fan_out;
            let w = tape.reshape(wflat, vec![fan_in, fan_out]).unwrap();
            let b = tape.slice1(params, off, off + fan_out).unwrap();
            off += fan_out;
            let xw = tape.matmul(h, w).unwrap();
            h = tape.add_row(xw, b).unwrap();
            if i < 2 {
                h = tape.elu(h);
            }
        }
        let t = tape.leaf(Tensor::matrix(batch, d_out, target.clone()).unwrap());
        let diff = tape.sub(h, t).unwrap();
        let sq = tape.mul(diff, diff).unwrap();
        let loss = tape.mean(sq);
        (tape, params, loss)
    };

    let analytic = {
        let (tape, params, loss) = build(&theta0);
        let grads = tape.backward(loss).unwrap();
        grads.get(params).unwrap().data().to_vec()
    };
    let eval = |theta: &[f64]| -> f64 {
        let (tape, _, loss) = build(theta);
        tape.value(loss).item()
    };
    grad_check(eval, &theta0, &analytic, FD_STEP)
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for seed in 0..20 {
        let err = mlp_grad_error(seed);
        assert!(err < MAX_REL_ERR, "seed {seed}: error {err:.3e}");
    }
}

/// Reverse-mode per-output Jacobian of a small network agrees with the
/// central-difference Jacobian.
#[test]
fn jacobian_fd_matches_reverse_mode() {
    let mut rng = rng::stream(77, "fd/jacobian");
    let (d_in, d_h, d_out) = (3usize, 8usize, 5usize);
    let n_params = d_in * d_h + d_h + d_h * d_out + d_out;
    let theta: Vec<f64> = (0..n_params).map(|_| rng.gen_range(-0.9..0.9)).collect();
    let z0: Vec<f64> = (0..d_in).map(|_| rng.gen_range(-0.5..0.5)).collect();

    let forward_tape = |z: &[f64]| -> (Tape, NodeId, NodeId) {
        let mut tape = Tape::new();
        let params = tape.leaf(Tensor::vector(theta.clone()));
        let zin = tape.leaf(Tensor::matrix(1, d_in, z.to_vec()).unwrap());
        let w1f = tape.slice1(params, 0, d_in * d_h).unwrap();
        let w1 = tape.reshape(w1f, vec![d_in, d_h]).unwrap();
        let b1 = tape.slice1(params, d_in * d_h, d_in * d_h + d_h).unwrap();
        let mut off = d_in * d_h + d_h;
        let h_lin = tape.matmul(zin, w1).unwrap();
        let h_aff = tape.add_row(h_lin, b1).unwrap();
        let h = tape.elu(h_aff);
        let w2f = tape.slice1(params, off, off + d_h * d_out).unwrap();
        off += d_h * d_out;
        let w2 = tape.reshape(w2f, vec![d_h, d_out]).unwrap();
        let b2 = tape.slice1(params, off, off + d_out).unwrap();
        let out_lin = tape.matmul(h, w2).unwrap();
        let out = tape.add_row(out_lin, b2).unwrap();
        (tape, zin, out)
    };

    let f = |z: &[f64]| -> Vec<f64> {
        let (tape, _, out) = forward_tape(z);
        tape.value(out).data().to_vec()
    };
    let jac_fd = jacobian_fd(f, &z0, FD_STEP).unwrap();

    // reverse-mode: one backward per output coordinate
    for out_idx in 0..d_out {
        let (mut tape, zin, out) = forward_tape(&z0);
        let mut onehot = vec![0.0; d_out];
        onehot[out_idx] = 1.0;
        let sel = tape.leaf(Tensor::matrix(1, d_out, onehot).unwrap());
        let picked = tape.mul(out, sel).unwrap();
        let loss = tape.sum(picked);
        let grads = tape.backward(loss).unwrap();
        let dz = grads.get(zin).unwrap();
        for d in 0..d_in {
            let delta = (jac_fd[out_idx][d] - dz.data()[d]).abs();
            assert!(
                delta < 1e-5,
                "J[{out_idx}][{d}]: fd {} vs reverse {}",
                jac_fd[out_idx][d],
                dz.data()[d]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// Softmax outputs sum to one along the chosen axis for any finite input.
    #[test]
    fn softmax_lanes_sum_to_one(values in proptest::collection::vec(-50.0f64..50.0, 12)) {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::matrix(3, 4, values).unwrap());
        let s0 = tape.softmax(x, 0).unwrap();
        let v0 = tape.value(s0);
        for col in 0..4 {
            let sum: f64 = (0..3).map(|r| v0.at2(r, col)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        let s1 = tape.softmax(x, 1).unwrap();
        let v1 = tape.value(s1);
        for row in 0..3 {
            let sum: f64 = (0..4).map(|c| v1.at2(row, c)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    /// Forward primitives keep finite inputs finite.
    #[test]
    fn forward_ops_stay_finite(values in proptest::collection::vec(-1e3f64..1e3, 12)) {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::matrix(3, 4, values).unwrap());
        let e = tape.elu(x);
        let s = tape.sigmoid(e);
        let sm = tape.softmax(s, 1).unwrap();
        let m = tape.mul(sm, x).unwrap();
        let loss = tape.mean(m);
        prop_assert!(tape.value(loss).item().is_finite());
        for id in [e, s, sm, m] {
            prop_assert!(tape.value(id).all_finite());
        }
    }
}
