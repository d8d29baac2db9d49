//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The KTH check runs only when `STHC_KTH_MANIFEST` points at a manifest.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{covers_all, minimal_uniform_count, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sthc_core::cnn::{
    batch_gradients, evaluate, forward_digital, param_count, predict, train, ClassifierHead,
    DigitalConvLayer, EvalMode, KernelSet, Model, ModelSpec, Sample, TrainConfig,
};
use sthc_core::data::{
    load_samples, split_by_subject, synth_dataset, ClipSpec, DatasetManifest, SynthDataset,
};
use sthc_core::optics::{
    decompose_kernel, optical_conv_layer, plan_slm_layout, OpticalParams, SlmFrameLayout,
};
use sthc_core::spectral::{
    direct_conv3d, fft_conv3d, Kernel3, KernelShape, Shape3, VideoVolume, Volume3,
};
use sthc_core::timing::{frame_load_time, segmentation_plan, throughput_report};
use sthc_core::Error;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_video(rng: &mut ChaCha8Rng, shape: Shape3) -> VideoVolume {
    VideoVolume::single(Volume3::from_fn(shape, |_, _, _| rng.gen_range(0.0..1.0))).unwrap()
}

fn random_kernel(rng: &mut ChaCha8Rng, shape: KernelShape, bound: f64) -> Kernel3 {
    Kernel3::new(shape, (0..shape.len()).map(|_| rng.gen_range(-bound..bound)).collect()).unwrap()
}

/// Minimal-canvas layout for `count` kernels, found through the capacity
/// error of an empty canvas.
fn minimal_layout(count: usize, kernel: KernelShape, video: Shape3) -> SlmFrameLayout {
    let map = (video.h - kernel.k_h + 1, video.w - kernel.k_w + 1);
    let tile = (kernel.k_h, kernel.k_w);
    match plan_slm_layout(count, tile, map, 4, (0, 0)) {
        Err(Error::LayoutCapacity { minimum, .. }) => {
            plan_slm_layout(count, tile, map, 4, minimum).unwrap()
        }
        other => panic!("expected a capacity error, got {other:?}"),
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = Shape3::new(rng.gen_range(3..=8), rng.gen_range(3..=8), rng.gen_range(2..=6));
        let k = KernelShape::new(rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=2), 1);
        let video = random_video(&mut rng, v);
        let kernel = random_kernel(&mut rng, k, 1.0);
        let a = fft_conv3d(&video, &kernel).unwrap();
        let b = direct_conv3d(&video, &kernel).unwrap();
        worst = worst.max(rel_err(a.as_slice(), b.as_slice()));
    }
    let took = start.elapsed();
    verdict(
        worst <= 1e-9 && took < Duration::from_secs(10),
        format!("50 instances, max rel err {worst:.2e}, {took:.2?}"),
    )
}

fn optical_parity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vshape = Shape3::new(60, 80, 16);
    let kshape = KernelShape::new(30, 40, 8, 1);
    let bound = (6.0 / kshape.len() as f64).sqrt();
    let weights = (0..9 * kshape.len()).map(|_| rng.gen_range(-bound..bound)).collect();
    let biases = (0..9).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let kernels = KernelSet::new(kshape, weights, biases).unwrap();
    let video = random_video(&mut rng, vshape);
    let layout = minimal_layout(9, kshape, vshape);
    let optical = optical_conv_layer(&video, &kernels, &OpticalParams::ideal(), &layout).unwrap();
    let digital_layer = DigitalConvLayer::new(&kernels, vshape).unwrap();
    let digital = digital_layer.forward(&video).unwrap();
    let responses = digital_layer.responses(&video).unwrap();
    let direct: Vec<f64> = (0..9)
        .flat_map(|k| {
            let mut z = direct_conv3d(&video, &kernels.kernel(k)).unwrap().into_vec();
            z.iter_mut().for_each(|v| *v = (*v + kernels.biases()[k]).max(0.0));
            z
        })
        .collect();
    let err = rel_err(optical.features.as_slice(), digital.as_slice());
    let err_direct = rel_err(optical.features.as_slice(), &direct);
    let took = start.elapsed();
    verdict(
        err <= 1e-6 && err_direct <= 1e-6 && took < Duration::from_secs(60) && responses.len() == 9,
        format!(
            "60x80x16 input, nine 30x40x8 kernels, canvas {:?}: rel err {err:.2e} (vs direct {err_direct:.2e}), {took:.2?}",
            layout.canvas
        ),
    )
}

fn pseudo_negative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let video = random_video(&mut rng, Shape3::new(16, 20, 8));
        let kernel = random_kernel(&mut rng, KernelShape::new(5, 7, 3, 1), 1.0);
        let pair = decompose_kernel(&kernel);
        let pos = fft_conv3d(&video, &pair.positive).unwrap();
        let neg = fft_conv3d(&video, &pair.negative).unwrap();
        let full = fft_conv3d(&video, &kernel).unwrap();
        let diff: Vec<f64> = pos.as_slice().iter().zip(neg.as_slice()).map(|(p, n)| p - n).collect();
        worst = worst.max(rel_err(&diff, full.as_slice()));
    }
    verdict(worst <= 1e-12, format!("20 signed kernels, max rel err {worst:.2e}"))
}

fn mean_loss(model: &Model, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let l = forward_digital(&model.kernels, &model.head, &s.video).unwrap();
            let max = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max + l.iter().map(|v| (v - max).exp()).sum::<f64>().ln() - l[s.label]
        })
        .sum::<f64>()
        / samples.len() as f64
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vshape = Shape3::new(6, 6, 4);
    let spec = ModelSpec {
        num_kernels: 2,
        kernel: KernelShape::new(3, 3, 2, 1),
        num_classes: 2,
    };
    let model = Model::init(&spec, vshape, 4).unwrap();
    let samples: Vec<Sample> = (0..4)
        .map(|i| Sample {
            video: random_video(&mut rng, vshape),
            label: i % 2,
        })
        .collect();
    let refs: Vec<&Sample> = samples.iter().collect();
    let (_, g) = batch_gradients(&model, &refs).unwrap();
    let h = 1e-5;
    let kshape = model.kernels.shape();
    let flen = model.head.feature_len();
    let rebuild = |kw: Vec<f64>, kb: Vec<f64>, hw: Vec<f64>, hb: Vec<f64>| Model {
        kernels: KernelSet::new(kshape, kw, kb).unwrap(),
        head: ClassifierHead::new(flen, hw, hb).unwrap(),
    };
    let params = [
        model.kernels.weights().to_vec(),
        model.kernels.biases().to_vec(),
        model.head.weights().to_vec(),
        model.head.bias().to_vec(),
    ];
    let analytic = [&g.kernel_weights, &g.kernel_biases, &g.head_weights, &g.head_bias];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for group in 0..4 {
        for i in 0..params[group].len() {
            let eval = |d: f64| {
                let mut p = params.clone();
                p[group][i] += d;
                let [a, b, c, e] = p;
                mean_loss(&rebuild(a, b, c, e), &samples)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an = analytic[group][i];
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            worst = worst.max(err);
            checked += 1;
        }
    }
    verdict(worst <= 1e-4, format!("{checked} parameters, max rel err {worst:.2e}"))
}

fn pick(data: &SynthDataset, split: &DatasetManifest) -> Vec<Sample> {
    split
        .entries
        .iter()
        .map(|e| {
            let i = data.manifest.entries.iter().position(|x| x.id == e.id).unwrap();
            data.samples[i].clone()
        })
        .collect()
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let data = synth_dataset(7, 25, &ClipSpec::default()).unwrap();
    let splits = split_by_subject(&data.manifest).unwrap();
    let (tr, va, te) = (pick(&data, &splits.train), pick(&data, &splits.validation), pick(&data, &splits.test));
    let spec = ModelSpec::default();
    let cfg = TrainConfig::default();
    let model = train(&tr, &va, &spec, &cfg).unwrap().model;
    let digital = evaluate(&model.kernels, &model.head, &te, &EvalMode::Digital).unwrap();
    let layout = minimal_layout(spec.num_kernels, spec.kernel, ClipSpec::default().shape());
    let hybrid_mode = EvalMode::Hybrid {
        params: OpticalParams::ideal(),
        layout,
    };
    let hybrid_preds = predict(&model.kernels, &model.head, &te, &hybrid_mode).unwrap();
    let hybrid = evaluate(&model.kernels, &model.head, &te, &hybrid_mode).unwrap();
    let agree = hybrid_preds
        .iter()
        .zip(&digital.predictions)
        .filter(|(a, b)| a == b)
        .count();

    let flat = ModelSpec {
        kernel: KernelShape::new(spec.kernel.k_h, spec.kernel.k_w, 1, 1),
        ..spec
    };
    let flat_model = train(&tr, &va, &flat, &cfg).unwrap().model;
    let ablation = evaluate(&flat_model.kernels, &flat_model.head, &te, &EvalMode::Digital).unwrap();
    let took = start.elapsed();

    let checks = [
        digital.accuracy >= 0.90,
        (hybrid.accuracy - digital.accuracy).abs() <= 0.02,
        agree == te.len(),
        ablation.accuracy < digital.accuracy,
        took < Duration::from_secs(15 * 60),
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "test acc digital {:.4} (need >= 0.90), hybrid {:.4}, argmax agreement {agree}/{}, k_t=1 ablation {:.4}, {took:.1?}",
            digital.accuracy,
            hybrid.accuracy,
            te.len(),
            ablation.accuracy
        ),
    )
}

fn timing_arithmetic() -> Outcome {
    let t = frame_load_time(6.28e8).unwrap();
    let a = throughput_report(125_000.0, 400.0).unwrap();
    let b = throughput_report(1666.0, 400.0).unwrap();
    verdict(
        (1.55e-9..=1.65e-9).contains(&t)
            && a.speedup == 312.5
            && a.exceeds_two_orders
            && (4.1..=4.2).contains(&b.speedup),
        format!(
            "load time {:.4} ns, speedup {} (>100x: {}), SLM speedup {:.4}",
            t * 1e9,
            a.speedup,
            a.exceeds_two_orders,
            b.speedup
        ),
    )
}

fn segmentation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for _ in 0..200 {
        let t1 = rng.gen_range(0.05..5.0);
        let t2 = t1 + rng.gen_range(0.05..10.0);
        let t3 = t2 + if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..80.0) };
        let plan = segmentation_plan(t1, t2, t3).unwrap();
        if !covers_all(&plan.segment_starts, t1, t2, t3) || plan.count != minimal_uniform_count(t1, t2, t3) {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("200 random triples, {failures} failures"))
}

fn parameter_count() -> Outcome {
    let a = param_count(KernelShape::new(7, 7, 7, 1), 1);
    let b = param_count(KernelShape::new(7, 7, 1, 1), 1);
    verdict(a == 343 && b == 49, format!("3D {a}, 2D {b}"))
}

fn kth_reproduction() -> Outcome {
    let Some(path) = std::env::var_os("STHC_KTH_MANIFEST").map(PathBuf::from) else {
        return Outcome::Skip("set STHC_KTH_MANIFEST to a KTH manifest to run".into());
    };
    let manifest = match DatasetManifest::load(&path) {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(format!("cannot load {}: {e}", path.display())),
    };
    let splits = split_by_subject(&manifest).unwrap();
    let clip = ClipSpec::default();
    let load = |m: &DatasetManifest| load_samples(m, &clip).unwrap();
    let (tr, va, te) = (load(&splits.train), load(&splits.validation), load(&splits.test));
    let spec = ModelSpec::default();
    let model = train(&tr, &va, &spec, &TrainConfig::default()).unwrap().model;
    let digital = evaluate(&model.kernels, &model.head, &te, &EvalMode::Digital).unwrap();
    let hybrid = evaluate(
        &model.kernels,
        &model.head,
        &te,
        &EvalMode::Hybrid {
            params: OpticalParams::ideal(),
            layout: minimal_layout(spec.num_kernels, spec.kernel, clip.shape()),
        },
    )
    .unwrap();
    let agree = digital.predictions == hybrid.predictions;
    verdict(
        agree && hybrid.accuracy > 0.35,
        format!(
            "splits {}/{}/{}, hybrid test acc {:.4} (expected band 0.50-0.70), digital {:.4}, identical predictions {agree}",
            tr.len(),
            va.len(),
            te.len(),
            hybrid.accuracy,
            digital.accuracy
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("optical parity", optical_parity),
        ("pseudo-negative identity", pseudo_negative),
        ("gradient check", gradient_check),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("timing arithmetic", timing_arithmetic),
        ("segmentation", segmentation),
        ("parameter count", parameter_count),
        ("KTH reproduction", kth_reproduction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {name}: {tag} - {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria failed", failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
