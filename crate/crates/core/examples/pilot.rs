use slotlab::dataset::{generate, DatasetCounts};
use slotlab::metrics::{evaluate, EvalOptions};
use slotlab::model::{DecoderKind, ModelConfig};
use slotlab::objectives::{train, ConsistencyGradient, LrSchedule, TrainConfig};
use slotlab::scene::SceneConfig;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let warmup: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let lambda: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
    let sched: u32 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0);
    let lr: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1e-3);

    let scene = SceneConfig { seed: 424242, ..SceneConfig::default() };
    let counts = DatasetCounts::default();
    let t0 = Instant::now();
    let bundle = generate(&scene, &counts).unwrap();
    eprintln!("datagen: {:.1}s", t0.elapsed().as_secs_f64());

    let model_cfg = ModelConfig { decoder: DecoderKind::Additive, ..ModelConfig::default() };
    let train_cfg = TrainConfig {
        epochs, warmup_epochs: warmup, lambda,
        batch_size: 64, learning_rate: lr,
        consistency_gradient: ConsistencyGradient::EncoderOnly,
        lr_schedule: if sched == 1 { LrSchedule::DoubleThenHalve } else { LrSchedule::Constant },
        seed, contrast_probe_points: 100,
    };
    let t1 = Instant::now();
    let out = train(&model_cfg, &train_cfg, &bundle.train).unwrap();
    let train_time = t1.elapsed().as_secs_f64();
    eprintln!("train {} epochs: {:.1}s ({:.2}s/epoch)", epochs, train_time, train_time / epochs as f64);
    for r in out.log.rows.iter().step_by(5.max(epochs/10)) {
        eprintln!("  epoch {:3}  l_rec {:.5}  l_cons {:.5}  contrast {:.4}", r.epoch, r.l_rec, r.l_cons, r.contrast);
    }
    let last = out.log.rows.last().unwrap();
    eprintln!("  final     l_rec {:.6}  l_cons {:.6}  contrast {:.5}", last.l_rec, last.l_cons, last.contrast);

    let t2 = Instant::now();
    let report = evaluate(&out.model, &scene, &bundle.id_test, &bundle.ood_test, &EvalOptions::default()).unwrap();
    eprintln!("eval: {:.1}s", t2.elapsed().as_secs_f64());
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
