use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eval::{accuracy_of, predict, EvalMode};
use super::{ClassifierHead, KernelSet, Model};
use crate::spectral::{KernelShape, KernelSpectrum, Shape3, SpectralConv, VideoSpectrum, VideoVolume, Volume3};
use crate::{Error, Result};

/// A labelled clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub video: VideoVolume,
    pub label: usize,
}

/// Network architecture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub num_kernels: usize,
    pub kernel: KernelShape,
    pub num_classes: usize,
}

impl Default for ModelSpec {
    /// Nine 30x40x8 single-channel kernels, four classes.
    fn default() -> Self {
        Self {
            num_kernels: 9,
            kernel: KernelShape::new(30, 40, 8, 1),
            num_classes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 8,
            epochs: 30,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Parameter(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Parameter(format!("adam_eps must be > 0, got {}", self.adam_eps)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Parameter("batch_size and epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (best validation accuracy, earliest
    /// on ties).
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_acc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch, r.train_loss, r.train_acc, r.val_acc
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: TrainLog,
}

/// Gradients of the mean batch loss with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub kernel_weights: Vec<f64>,
    pub kernel_biases: Vec<f64>,
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]` via log-sum-exp.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Batch gradient accumulator. Kernel weight gradients are kept as spectra
/// until the batch is complete, so each needs one inverse transform per
/// batch rather than per sample.
struct Accumulator {
    kernel_spectra: Vec<Vec<Vec<Complex64>>>,
    kernel_biases: Vec<f64>,
    head_weights: Vec<f64>,
    head_bias: Vec<f64>,
    loss: f64,
    correct: usize,
}

struct Backprop<'a> {
    engine: &'a SpectralConv,
    kernel_spectra: Vec<KernelSpectrum>,
    model: &'a Model,
}

impl<'a> Backprop<'a> {
    fn new(engine: &'a SpectralConv, model: &'a Model) -> Result<Self> {
        let kernels = &model.kernels;
        let kernel_spectra = (0..kernels.count())
            .into_par_iter()
            .map(|k| engine.kernel_spectrum(&kernels.kernel(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            engine,
            kernel_spectra,
            model,
        })
    }

    fn accumulator(&self) -> Accumulator {
        Accumulator {
            kernel_spectra: (0..self.model.kernels.count())
                .map(|_| self.engine.empty_accumulator())
                .collect(),
            kernel_biases: vec![0.0; self.model.kernels.count()],
            head_weights: vec![0.0; self.model.head.weights().len()],
            head_bias: vec![0.0; self.model.head.num_classes()],
            loss: 0.0,
            correct: 0,
        }
    }

    /// Adds `scale * d(loss)/d(params)` for one sample.
    fn sample(&self, video: &VideoSpectrum, label: usize, scale: f64, acc: &mut Accumulator) -> Result<()> {
        let kernels = &self.model.kernels;
        let head = &self.model.head;
        let pre: Vec<Volume3> = self
            .kernel_spectra
            .par_iter()
            .zip(kernels.biases())
            .map(|(ks, &b)| {
                let mut z = self.engine.convolve(video, ks);
                z.as_mut_slice().iter_mut().for_each(|v| *v += b);
                z
            })
            .collect();
        let features: Vec<f64> = pre
            .iter()
            .flat_map(|z| z.as_slice().iter().map(|v| v.max(0.0)))
            .collect();
        let logits = head.logits(&features)?;
        acc.loss += scale * cross_entropy(&logits, label);
        if super::argmax(&logits) == label {
            acc.correct += 1;
        }

        let mut dlogits = softmax(&logits);
        dlogits[label] -= 1.0;
        dlogits.iter_mut().for_each(|d| *d *= scale);

        let n = features.len();
        let mut dfeat = vec![0.0; n];
        for (c, &d) in dlogits.iter().enumerate() {
            acc.head_bias[c] += d;
            let row = &head.weights()[c * n..(c + 1) * n];
            let grow = &mut acc.head_weights[c * n..(c + 1) * n];
            for i in 0..n {
                grow[i] += d * features[i];
                dfeat[i] += d * row[i];
            }
        }

        let map_len = self.engine.output_shape().len();
        let out_shape = self.engine.output_shape();
        let engine = self.engine;
        acc.kernel_spectra
            .par_iter_mut()
            .zip(acc.kernel_biases.par_iter_mut())
            .zip(pre.par_iter())
            .enumerate()
            .for_each(|(k, ((spec, db), z))| {
                let df = &dfeat[k * map_len..(k + 1) * map_len];
                let dz: Vec<f64> = df
                    .iter()
                    .zip(z.as_slice())
                    .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                *db += dz.iter().sum::<f64>();
                let dz = Volume3::from_vec(out_shape, dz).expect("map length");
                engine.accumulate_correlation(video, &dz, spec);
            });
        Ok(())
    }

    fn finish(&self, acc: Accumulator) -> (f64, usize, Gradients) {
        let engine = self.engine;
        let kernel_weights = acc
            .kernel_spectra
            .into_par_iter()
            .map(|s| engine.finish_correlation(s))
            .collect::<Vec<_>>()
            .concat();
        (
            acc.loss,
            acc.correct,
            Gradients {
                kernel_weights,
                kernel_biases: acc.kernel_biases,
                head_weights: acc.head_weights,
                head_bias: acc.head_bias,
            },
        )
    }
}

fn check_samples(samples: &[&Sample], model: &Model) -> Result<Shape3> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Parameter("no samples".into()))?;
    let shape = first.video.shape();
    for s in samples {
        if s.video.shape() != shape {
            return Err(Error::Dimension(format!(
                "clip shapes differ: {:?} vs {shape:?}",
                s.video.shape()
            )));
        }
        if s.label >= model.head.num_classes() {
            return Err(Error::Parameter(format!(
                "label {} out of range for {} classes",
                s.label,
                model.head.num_classes()
            )));
        }
    }
    let len = model.kernels.feature_len(shape)?;
    if len != model.head.feature_len() {
        return Err(Error::Dimension(format!(
            "conv layer yields {len} features, head expects {}",
            model.head.feature_len()
        )));
    }
    Ok(shape)
}

/// Mean cross-entropy over `samples` and its gradient, by backpropagation
/// through the head, flatten, ReLU and the convolution.
pub fn batch_gradients(model: &Model, samples: &[&Sample]) -> Result<(f64, Gradients)> {
    let shape = check_samples(samples, model)?;
    let engine = SpectralConv::new(shape, model.kernels.shape())?;
    let bp = Backprop::new(&engine, model)?;
    let mut acc = bp.accumulator();
    let scale = 1.0 / samples.len() as f64;
    for s in samples {
        let vs = engine.video_spectrum(&s.video)?;
        bp.sample(&vs, s.label, scale, &mut acc)?;
    }
    let (loss, _, grads) = bp.finish(acc);
    Ok((loss, grads))
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig, t: i32) {
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let mhat = *m / c1;
            let vhat = *v / c2;
            *p -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
        }
    }
}

struct Adam {
    kernel_weights: AdamState,
    kernel_biases: AdamState,
    head_weights: AdamState,
    head_bias: AdamState,
    t: i32,
}

impl Adam {
    fn new(model: &Model) -> Self {
        Self {
            kernel_weights: AdamState::new(model.kernels.weights().len()),
            kernel_biases: AdamState::new(model.kernels.count()),
            head_weights: AdamState::new(model.head.weights().len()),
            head_bias: AdamState::new(model.head.num_classes()),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut Model, g: &Gradients, cfg: &TrainConfig) {
        self.t += 1;
        let t = self.t;
        self.kernel_weights
            .step(model.kernels.weights_mut(), &g.kernel_weights, cfg, t);
        self.kernel_biases
            .step(model.kernels.biases_mut(), &g.kernel_biases, cfg, t);
        self.head_weights
            .step(model.head.weights_mut(), &g.head_weights, cfg, t);
        self.head_bias.step(model.head.bias_mut(), &g.head_bias, cfg, t);
    }
}

/// Initial parameters drawn from the seeded initialisation stream.
pub(crate) fn init_model(spec: &ModelSpec, video: Shape3, seed: u64) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let kernels = KernelSet::init(spec.num_kernels, spec.kernel, &mut rng)?;
    let head = ClassifierHead::init(spec.num_classes, kernels.feature_len(video)?, &mut rng)?;
    Ok(Model { kernels, head })
}

impl Model {
    /// Freshly initialised model for clips of shape `video`.
    pub fn init(spec: &ModelSpec, video: Shape3, seed: u64) -> Result<Self> {
        init_model(spec, video, seed)
    }
}

/// One gradient step of Adam on `samples`; returns the batch loss.
pub fn adam_step(model: &mut Model, samples: &[&Sample], config: &TrainConfig) -> Result<f64> {
    config.validate()?;
    let (loss, grads) = batch_gradients(model, samples)?;
    let mut adam = Adam::new(model);
    adam.step(model, &grads, config);
    Ok(loss)
}

/// Minimises mean cross-entropy with Adam and keeps the parameters of the
/// epoch with the best validation accuracy.
pub fn train(
    train: &[Sample],
    val: &[Sample],
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Parameter(
            "training and validation splits must be non-empty".into(),
        ));
    }
    let shape = train[0].video.shape();
    let mut model = init_model(spec, shape, config.seed)?;
    let all: Vec<&Sample> = train.iter().chain(val).collect();
    check_samples(&all, &model)?;

    let engine = SpectralConv::new(shape, spec.kernel)?;
    let spectra = train
        .iter()
        .map(|s| engine.video_spectrum(&s.video))
        .collect::<Result<Vec<_>>>()?;

    let mut shuffle = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = Adam::new(&model);
    let mut rows = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Model)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let bp = Backprop::new(&engine, &model)?;
            let mut acc = bp.accumulator();
            let scale = 1.0 / idx.len() as f64;
            for &i in idx {
                bp.sample(&spectra[i], train[i].label, scale, &mut acc)?;
            }
            let (loss, correct, grads) = bp.finish(acc);
            let finite = loss.is_finite()
                && grads
                    .kernel_weights
                    .iter()
                    .chain(&grads.head_weights)
                    .all(|g| g.is_finite());
            if !finite {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch + 1,
                    loss,
                });
            }
            epoch_loss += loss * idx.len() as f64;
            epoch_correct += correct;
            adam.step(&mut model, &grads, config);
        }
        let preds = predict(&model.kernels, &model.head, val, &EvalMode::Digital)?;
        let labels: Vec<usize> = val.iter().map(|s| s.label).collect();
        let val_acc = accuracy_of(&labels, &preds);
        rows.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            train_acc: epoch_correct as f64 / train.len() as f64,
            val_acc,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc) {
            best = Some((val_acc, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        log: TrainLog { rows, best_epoch },
    })
}
