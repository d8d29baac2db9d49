use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sthc_core::cnn::{
    evaluate, export_head, export_kernels, import_head, import_kernels, train as train_model,
    DigitalConvLayer, EvalMode, KernelSet, ModelSpec, Sample, TrainConfig,
};
use sthc_core::data::{
    load_samples, split_by_subject, synth_dataset, write_dataset, write_pgm, ClipSpec,
    DatasetManifest,
};
use sthc_core::optics::{
    plan_slm_layout, OpticalConvLayer, OpticalParams, PulseMode, SlmFrameLayout,
};
use sthc_core::spectral::{KernelShape, Volume3};
use sthc_core::timing::{frame_load_time, segmentation_plan, throughput_report};
use sthc_core::Error;

use crate::config::{required, EvalArgs, PlanArgs, SynthArgs, TrainArgs};
use crate::CliError;

fn clip_spec(frames: Option<usize>, height: Option<usize>, width: Option<usize>) -> ClipSpec {
    let d = ClipSpec::default();
    ClipSpec {
        num_frames: frames.unwrap_or(d.num_frames),
        height: height.unwrap_or(d.height),
        width: width.unwrap_or(d.width),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let out = required(args.out, "out")?;
    let spec = clip_spec(args.frames, args.height, args.width);
    let data = synth_dataset(args.seed.unwrap_or(7), args.per_class.unwrap_or(25), &spec)?;
    create_dir(&out)?;
    let manifest = write_dataset(&data, &out)?;
    println!(
        "{}",
        json!({ "manifest": manifest, "clips": data.manifest.len() })
    );
    Ok(())
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    DatasetManifest::load(path).map_err(|e| CliError {
        message: format!("{}: {e}", path.display()),
        ..e.into()
    })
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let manifest_path = required(args.manifest, "manifest")?;
    let out = required(args.out, "out")?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        adam_beta1: args.beta1.unwrap_or(defaults.adam_beta1),
        adam_beta2: args.beta2.unwrap_or(defaults.adam_beta2),
        adam_eps: args.eps.unwrap_or(defaults.adam_eps),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    config.validate()?;
    let clip = clip_spec(args.frames, args.height, args.width);
    clip.validate()?;

    let manifest = load_manifest(&manifest_path)?;
    let base = ModelSpec::default();
    let spec = ModelSpec {
        num_kernels: args.kernels.unwrap_or(base.num_kernels),
        kernel: KernelShape::new(
            args.kernel_h.unwrap_or(base.kernel.k_h),
            args.kernel_w.unwrap_or(base.kernel.k_w),
            args.kernel_t.unwrap_or(base.kernel.k_t),
            1,
        ),
        num_classes: manifest.classes.len(),
    };
    let splits = split_by_subject(&manifest)?;
    let train_set = load_samples(&splits.train, &clip)?;
    let val_set = load_samples(&splits.validation, &clip)?;
    let outcome = train_model(&train_set, &val_set, &spec, &config)?;

    create_dir(&out)?;
    export_kernels(&outcome.model.kernels, &out.join("kernels.bin"))?;
    export_head(&outcome.model.head, &out.join("head.bin"))?;
    write_file(&out.join("train_log.csv"), outcome.log.to_csv())?;
    let best = &outcome.log.rows[outcome.log.best_epoch - 1];
    let report = json!({
        "train_clips": train_set.len(),
        "validation_clips": val_set.len(),
        "clip": clip,
        "model": spec,
        "config": config,
        "best_epoch": outcome.log.best_epoch,
        "best_val_acc": best.val_acc,
        "epochs": outcome.log.rows,
    });
    write_file(&out.join("train_report.json"), to_json(&report))?;
    println!(
        "best epoch {} val_acc {}",
        outcome.log.best_epoch, best.val_acc
    );
    Ok(())
}

fn optical_params(args: &EvalArgs) -> Result<OpticalParams, CliError> {
    let mut p = if args.ideal.unwrap_or(false) {
        OpticalParams::ideal()
    } else {
        OpticalParams::default()
    };
    if let Some(mode) = &args.pulse {
        p.mode = match mode.as_str() {
            "ideal" => PulseMode::Ideal,
            "physical" => PulseMode::Physical,
            other => return Err(CliError::usage(format!("unknown pulse mode {other:?}"))),
        };
    }
    if let Some(r) = args.pulse_radius {
        p.pulse_radius = r;
    }
    if let Some(b) = args.bandwidth {
        p.ihb_bandwidth = b;
    }
    if let Some(t) = args.coherence_lifetime {
        p.coherence_lifetime = t;
    }
    if let Some(l) = args.slm_levels {
        p.slm_levels = (l > 0).then_some(l);
    }
    if let Some(g) = args.guard_px {
        p.guard_px = g;
    }
    p.validate()?;
    Ok(p)
}

fn layout_for(
    args: &EvalArgs,
    kernels: &KernelSet,
    clip: &ClipSpec,
    guard: usize,
) -> Result<SlmFrameLayout, CliError> {
    if let Some(path) = &args.layout {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad layout {}: {e}", path.display())));
    }
    let k = kernels.shape();
    let valid = clip.shape().valid_output(k.spatial())?;
    let tile = (k.k_h, k.k_w);
    let map = (valid.h, valid.w);
    let canvas = match (args.canvas_h, args.canvas_w) {
        (Some(h), Some(w)) => (h, w),
        (None, None) => match plan_slm_layout(kernels.count(), tile, map, guard, (0, 0)) {
            Err(Error::LayoutCapacity { minimum, .. }) => minimum,
            Err(e) => return Err(e.into()),
            Ok(l) => l.canvas,
        },
        _ => {
            return Err(CliError::usage(
                "give both --canvas-h and --canvas-w or neither",
            ))
        }
    };
    Ok(plan_slm_layout(kernels.count(), tile, map, guard, canvas)?)
}

/// Each kernel's subtracted response, scaled to 0-255 over the whole clip.
fn dump_maps(dir: &Path, maps: &[Volume3]) -> Result<(), CliError> {
    create_dir(dir)?;
    for (k, map) in maps.iter().enumerate() {
        let s = map.shape();
        let (lo, hi) = map
            .as_slice()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let frame = s.h * s.w;
        for t in 0..s.t {
            let pixels: Vec<u8> = map.as_slice()[t * frame..(t + 1) * frame]
                .iter()
                .map(|&v| {
                    if span > 0.0 {
                        ((v - lo) / span * 255.0).round() as u8
                    } else {
                        0
                    }
                })
                .collect();
            write_pgm(
                &dir.join(format!("kernel{k}_frame{t:02}.pgm")),
                s.w,
                s.h,
                &pixels,
            )?;
        }
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let manifest_path = required(args.manifest.clone(), "manifest")?;
    let kernels_path = required(args.kernels.clone(), "kernels")?;
    let head_path = required(args.head.clone(), "head")?;
    let out = required(args.out.clone(), "out")?;
    let clip = clip_spec(args.frames, args.height, args.width);
    clip.validate()?;
    let hybrid = match args.mode.as_deref().unwrap_or("digital") {
        "digital" => false,
        "hybrid" => true,
        other => return Err(CliError::usage(format!("unknown mode {other:?}"))),
    };

    let manifest = load_manifest(&manifest_path)?;
    let split_name = args.split.as_deref().unwrap_or("test");
    let subset = match split_name {
        "all" => manifest.clone(),
        name => {
            let s = split_by_subject(&manifest)?;
            match name {
                "train" => s.train,
                "validation" => s.validation,
                "test" => s.test,
                other => return Err(CliError::usage(format!("unknown split {other:?}"))),
            }
        }
    };
    let kernels = import_kernels(&kernels_path)?;
    let head = import_head(&head_path)?;
    if head.num_classes() != manifest.classes.len() {
        return Err(CliError::usage(format!(
            "head has {} classes, manifest {}",
            head.num_classes(),
            manifest.classes.len()
        )));
    }
    let samples: Vec<Sample> = load_samples(&subset, &clip)?;
    if samples.is_empty() {
        return Err(CliError::usage(format!("split {split_name} has no clips")));
    }

    let (mode, warnings) = if hybrid {
        let params = optical_params(&args)?;
        let layout = layout_for(&args, &kernels, &clip, params.guard_px)?;
        let layer = OpticalConvLayer::program(&kernels, &params, &layout, clip.shape())?;
        let warnings: Vec<String> = layer.warnings().iter().map(|w| w.to_string()).collect();
        if let Some(dir) = &args.dump_maps {
            dump_maps(dir, &layer.responses(&samples[0].video)?)?;
        }
        (EvalMode::Hybrid { params, layout }, warnings)
    } else {
        if let Some(dir) = &args.dump_maps {
            let layer = DigitalConvLayer::new(&kernels, clip.shape())?;
            dump_maps(dir, &layer.responses(&samples[0].video)?)?;
        }
        (EvalMode::Digital, Vec::new())
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let report = evaluate(&kernels, &head, &samples, &mode)?;
    create_dir(&out)?;
    let names = manifest.class_names();
    write_file(&out.join("confusion.csv"), report.confusion_csv(&names))?;
    let doc = json!({
        "mode": if hybrid { "hybrid" } else { "digital" },
        "split": split_name,
        "clips": samples.len(),
        "classes": names,
        "accuracy": report.accuracy,
        "confusion_matrix": report.confusion_matrix,
        "recall": report.recall,
        "predictions": report.predictions,
        "warnings": warnings,
    });
    write_file(&out.join("eval_report.json"), to_json(&doc))?;
    println!("accuracy: {}", report.accuracy);
    Ok(())
}

pub fn plan(args: PlanArgs) -> Result<(), CliError> {
    let t1 = required(args.t1, "t1")?;
    let t2 = required(args.t2, "t2")?;
    let t3 = required(args.t3, "t3")?;
    let bandwidth = args
        .bandwidth
        .unwrap_or(OpticalParams::ideal().ihb_bandwidth);
    let segments = segmentation_plan(t1, t2, t3)?;
    let throughput = throughput_report(
        args.device_fps.unwrap_or(125_000.0),
        args.digital_fps.unwrap_or(400.0),
    )?;
    let report = json!({
        "bandwidth": bandwidth,
        "frame_load_time": frame_load_time(bandwidth)?,
        "plan": segments,
        "throughput": throughput,
        "speedup": throughput.speedup,
    });
    let text = to_json(&report);
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    print!("{text}");
    Ok(())
}
