use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifierHead, DigitalConvLayer, KernelSet, Sample};
use crate::optics::{OpticalConvLayer, OpticalParams, SlmFrameLayout};
use crate::spectral::VideoVolume;
use crate::{Error, Result};

/// Which convolution layer produces the features.
#[derive(Debug, Clone)]
pub enum EvalMode {
    Digital,
    Hybrid {
        params: OpticalParams,
        layout: SlmFrameLayout,
    },
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn accuracy_of(labels: &[usize], preds: &[usize]) -> f64 {
    let correct = labels.iter().zip(preds).filter(|(a, b)| a == b).count();
    correct as f64 / labels.len() as f64
}

enum ConvLayer {
    Digital(DigitalConvLayer),
    Optical(OpticalConvLayer),
}

impl ConvLayer {
    fn build(kernels: &KernelSet, mode: &EvalMode, video: &VideoVolume) -> Result<Self> {
        Ok(match mode {
            EvalMode::Digital => Self::Digital(DigitalConvLayer::new(kernels, video.shape())?),
            EvalMode::Hybrid { params, layout } => Self::Optical(OpticalConvLayer::program(
                kernels,
                params,
                layout,
                video.shape(),
            )?),
        })
    }

    fn features(&self, video: &VideoVolume) -> Result<Vec<f64>> {
        let f = match self {
            Self::Digital(l) => l.forward(video)?,
            Self::Optical(l) => l.forward(video)?,
        };
        Ok(f.as_slice().to_vec())
    }
}

/// Logits for every sample, with the convolution layer built once.
pub fn predict_logits(
    kernels: &KernelSet,
    head: &ClassifierHead,
    samples: &[Sample],
    mode: &EvalMode,
) -> Result<Vec<Vec<f64>>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let layer = ConvLayer::build(kernels, mode, &first.video)?;
    samples
        .par_iter()
        .map(|s| head.logits(&layer.features(&s.video)?))
        .collect()
}

pub fn predict(
    kernels: &KernelSet,
    head: &ClassifierHead,
    samples: &[Sample],
    mode: &EvalMode,
) -> Result<Vec<usize>> {
    Ok(predict_logits(kernels, head, samples, mode)?
        .iter()
        .map(|l| argmax(l))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Rows are true classes, columns predictions.
    pub confusion_matrix: Vec<Vec<usize>>,
    /// Per-class recall; `None` for classes without samples.
    pub recall: Vec<Option<f64>>,
    pub predictions: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<Self> {
        if labels.is_empty() || labels.len() != preds.len() {
            return Err(Error::Parameter(format!(
                "need matching non-empty labels/predictions, got {}/{}",
                labels.len(),
                preds.len()
            )));
        }
        let mut cm = vec![vec![0usize; num_classes]; num_classes];
        for (&l, &p) in labels.iter().zip(preds) {
            if l >= num_classes || p >= num_classes {
                return Err(Error::Parameter(format!(
                    "class index out of range for {num_classes} classes"
                )));
            }
            cm[l][p] += 1;
        }
        let trace: usize = (0..num_classes).map(|c| cm[c][c]).sum();
        let recall = cm
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect();
        Ok(Self {
            accuracy: trace as f64 / labels.len() as f64,
            confusion_matrix: cm,
            recall,
            predictions: preds.to_vec(),
        })
    }

    pub fn total(&self) -> usize {
        self.confusion_matrix.iter().flatten().sum()
    }

    pub fn confusion_csv(&self, class_names: &[&str]) -> String {
        let n = self.confusion_matrix.len();
        let name = |i: usize| {
            class_names
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| i.to_string())
        };
        let mut out = String::from("true\\pred");
        for c in 0..n {
            out.push(',');
            out.push_str(&name(c));
        }
        out.push('\n');
        for (r, row) in self.confusion_matrix.iter().enumerate() {
            out.push_str(&name(r));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Classifies every sample (argmax, lowest index on ties) and tabulates.
pub fn evaluate(
    kernels: &KernelSet,
    head: &ClassifierHead,
    samples: &[Sample],
    mode: &EvalMode,
) -> Result<EvalReport> {
    let preds = predict(kernels, head, samples, mode)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(&labels, &preds, head.num_classes())
}
