//! Two-layer LSTM intensity regressor.
//!
//! Each frame enters as its flattened descriptor (column-major, so one
//! joint's roll/pitch/yaw are adjacent). Layer 1 has `hidden1` units,
//! layer 2 has `hidden2`; the final layer-2 state `D` is concatenated with
//! the one-hot emotion vector `E` and fed to a single logistic unit.
//!
//! Weight layout per layer: `w_input` is `input x 4H`, `w_hidden` is
//! `H x 4H`, `bias` is `4H`, with gate blocks in the order `i, f, g, o`.

pub mod checkpoint;
mod lstm;
mod optim;
mod train;

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use optim::{rmsprop_step, rmsprop_update};
pub use train::{fit, train, EpochLog, Example, TrainingLog};

use crate::dataset::{EmotionContext, EmotionVocabulary, LabeledSequence};
use crate::descriptor::{PoseFrame, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::SkeletonTopology;

pub const GATE_ORDER: &str = "i,f,g,o";

/// Inference batch size; bounds memory when predicting large corpora.
const PREDICT_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_input: Array2<f64>,
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmLayer {
            w_input: Array2::zeros((input, 4 * hidden)),
            w_hidden: Array2::zeros((hidden, 4 * hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn input(&self) -> usize {
        self.w_input.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.nrows()
    }
}

/// All trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layer1: LstmLayer,
    pub layer2: LstmLayer,
    /// `hidden2 + K` weights over `[D ; E]`.
    pub head_weights: Array1<f64>,
    pub head_bias: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 8] = [
    "layer1.w_input",
    "layer1.w_hidden",
    "layer1.bias",
    "layer2.w_input",
    "layer2.w_hidden",
    "layer2.bias",
    "head.weight",
    "head.bias",
];

fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl ModelParams {
    pub fn zeros(input_dim: usize, emotion_count: usize, hidden1: usize, hidden2: usize) -> Self {
        ModelParams {
            layer1: LstmLayer::zeros(input_dim, hidden1),
            layer2: LstmLayer::zeros(hidden1, hidden2),
            head_weights: Array1::zeros(hidden2 + emotion_count),
            head_bias: Array1::zeros(1),
        }
    }

    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` per matrix, forget-gate
    /// bias 1, other biases 0.
    pub fn initialized(
        input_dim: usize,
        emotion_count: usize,
        hidden1: usize,
        hidden2: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let mut layer = |input: usize, hidden: usize| {
            let mut bias = Array1::zeros(4 * hidden);
            bias.slice_mut(ndarray::s![hidden..2 * hidden]).fill(1.0);
            LstmLayer {
                w_input: xavier(rng, input, 4 * hidden),
                w_hidden: xavier(rng, hidden, 4 * hidden),
                bias,
            }
        };
        let layer1 = layer(input_dim, hidden1);
        let layer2 = layer(hidden1, hidden2);
        let head = xavier(rng, hidden2 + emotion_count, 1);
        ModelParams {
            layer1,
            layer2,
            head_weights: head.column(0).to_owned(),
            head_bias: Array1::zeros(1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.input_dim(), self.emotion_count(), self.hidden1(), self.hidden2())
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.input()
    }

    pub fn hidden1(&self) -> usize {
        self.layer1.hidden()
    }

    pub fn hidden2(&self) -> usize {
        self.layer2.hidden()
    }

    pub fn emotion_count(&self) -> usize {
        self.head_weights.len() - self.hidden2()
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        self.tensors().iter().map(|(shape, _)| shape.clone()).collect()
    }

    /// `(shape, data)` in [`TENSOR_NAMES`] order, row-major.
    pub fn tensors(&self) -> Vec<(Vec<usize>, &[f64])> {
        fn m(a: &Array2<f64>) -> (Vec<usize>, &[f64]) {
            (a.shape().to_vec(), a.as_slice().expect("standard layout"))
        }
        fn v(a: &Array1<f64>) -> (Vec<usize>, &[f64]) {
            (a.shape().to_vec(), a.as_slice().expect("standard layout"))
        }
        vec![
            m(&self.layer1.w_input),
            m(&self.layer1.w_hidden),
            v(&self.layer1.bias),
            m(&self.layer2.w_input),
            m(&self.layer2.w_hidden),
            v(&self.layer2.bias),
            v(&self.head_weights),
            v(&self.head_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.layer1.w_input.as_slice_mut().expect("standard layout"),
            self.layer1.w_hidden.as_slice_mut().expect("standard layout"),
            self.layer1.bias.as_slice_mut().expect("standard layout"),
            self.layer2.w_input.as_slice_mut().expect("standard layout"),
            self.layer2.w_hidden.as_slice_mut().expect("standard layout"),
            self.layer2.bias.as_slice_mut().expect("standard layout"),
            self.head_weights.as_slice_mut().expect("standard layout"),
            self.head_bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, d)| d.iter().all(|v| v.is_finite()))
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|(_, d)| d.iter()).map(|v| v * v).sum()
    }

    /// Estimates for a batch of inputs, in input order.
    pub fn predict(&self, inputs: &[ModelInput<'_>]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(PREDICT_CHUNK) {
            let batch = lstm::Batch::new(self, chunk)?;
            let fwd = lstm::forward(self, &batch, false);
            let mut part = vec![0.0; chunk.len()];
            for (r, &i) in batch.order.iter().enumerate() {
                part[i] = fwd.outputs[r];
            }
            out.extend(part);
        }
        Ok(out)
    }

    /// Final layer-2 state `D` per input, in input order.
    pub fn describe(&self, inputs: &[ModelInput<'_>]) -> Result<Vec<Vec<f64>>> {
        let batch = lstm::Batch::new(self, inputs)?;
        let fwd = lstm::forward(self, &batch, false);
        let mut out = vec![Vec::new(); inputs.len()];
        for (r, &i) in batch.order.iter().enumerate() {
            out[i] = fwd.descriptor.row(r).to_vec();
        }
        Ok(out)
    }

    /// Padded batch form: `frames[b]` holds `max_len` rows of which only the
    /// first `lengths[b]` are read.
    pub fn predict_padded(&self, frames: &[Vec<Vec<f64>>], lengths: &[usize], emotions: &[Vec<f64>]) -> Result<Vec<f64>> {
        if frames.len() != lengths.len() || frames.len() != emotions.len() {
            return Err(Error::Dimension {
                what: "padded batch rows",
                expected: frames.len(),
                actual: lengths.len().min(emotions.len()),
            });
        }
        let flat: Vec<Vec<f64>> = frames
            .iter()
            .zip(lengths)
            .map(|(rows, &len)| {
                if len == 0 || len > rows.len() {
                    return Err(Error::Dimension {
                        what: "sequence length",
                        expected: rows.len(),
                        actual: len,
                    });
                }
                Ok(rows[..len].concat())
            })
            .collect::<Result<_>>()?;
        let inputs: Vec<ModelInput<'_>> = flat
            .iter()
            .zip(emotions)
            .map(|(f, e)| ModelInput::new(f, e))
            .collect();
        self.predict(&inputs)
    }

    /// Mean absolute error and its gradient (subgradient 0 at a tie).
    pub fn loss_and_gradients(&self, inputs: &[ModelInput<'_>], labels: &[f64]) -> Result<(f64, ModelParams)> {
        if labels.len() != inputs.len() {
            return Err(Error::Dimension {
                what: "label count",
                expected: inputs.len(),
                actual: labels.len(),
            });
        }
        let batch = lstm::Batch::new(self, inputs)?;
        let fwd = lstm::forward(self, &batch, true);
        let scale = 1.0 / inputs.len() as f64;
        let mut loss = 0.0;
        let d_out: Vec<f64> = batch
            .order
            .iter()
            .zip(&fwd.outputs)
            .map(|(&i, &y)| {
                let diff = y - labels[i];
                loss += diff.abs();
                if diff > 0.0 {
                    scale
                } else if diff < 0.0 {
                    -scale
                } else {
                    0.0
                }
            })
            .collect();
        Ok((loss * scale, lstm::backward(self, &batch, &fwd, &d_out)))
    }
}

/// One sequence as network input: flattened frames (`len * input_dim`) and
/// an emotion vector of length `K`.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    pub frames: &'a [f64],
    pub emotion: &'a [f64],
}

impl<'a> ModelInput<'a> {
    pub fn new(frames: &'a [f64], emotion: &'a [f64]) -> Self {
        ModelInput { frames, emotion }
    }
}

/// Sigmoid output, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct IntensityEstimate(f64);

impl IntensityEstimate {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub seed: u64,
    pub gradient_clip_norm: Option<f64>,
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            seed: 0,
            gradient_clip_norm: Some(5.0),
            hidden1: 64,
            hidden2: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train config: {m}")));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return bad("rms_decay must be in [0, 1)");
        }
        if !(self.rms_epsilon.is_finite() && self.rms_epsilon > 0.0) {
            return bad("rms_epsilon must be positive");
        }
        if let Some(c) = self.gradient_clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return bad("gradient_clip_norm must be positive");
            }
        }
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return bad("hidden sizes must be positive");
        }
        Ok(())
    }
}

/// Parameters together with the skeleton and emotion vocabulary they were
/// trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub topology: Arc<SkeletonTopology>,
    pub vocabulary: Arc<EmotionVocabulary>,
}

impl TrainedModel {
    pub fn new(params: ModelParams, topology: Arc<SkeletonTopology>, vocabulary: Arc<EmotionVocabulary>) -> Result<Self> {
        let m = TrainedModel {
            params,
            topology,
            vocabulary,
        };
        m.check_compatible(&m.topology, &m.vocabulary)?;
        Ok(m)
    }

    /// Shape error unless `topology` and `vocabulary` match the parameters.
    pub fn check_compatible(&self, topology: &SkeletonTopology, vocabulary: &EmotionVocabulary) -> Result<()> {
        let j = topology.joint_count();
        if 3 * (j - 1) != self.params.input_dim() {
            return Err(Error::CheckpointShape(format!(
                "model expects {} descriptor values per frame, topology has {j} joints",
                self.params.input_dim()
            )));
        }
        if vocabulary.len() != self.params.emotion_count() {
            return Err(Error::CheckpointShape(format!(
                "model expects {} emotions, vocabulary has {}",
                self.params.emotion_count(),
                vocabulary.len()
            )));
        }
        Ok(())
    }

    pub fn estimate(&self, seq: &PoseSequence, emotion: &EmotionContext) -> Result<IntensityEstimate> {
        forward(&self.params, seq, emotion)
    }
}

fn flatten_frames(frames: &[PoseFrame]) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames.len() * frames.first().map_or(0, |f| 3 * f.width()));
    for f in frames {
        f.flatten_into(&mut out);
    }
    out
}

/// Estimate over raw frames with an explicit emotion vector.
pub fn forward_frames(params: &ModelParams, frames: &[PoseFrame], emotion: &[f64]) -> Result<IntensityEstimate> {
    let flat = flatten_frames(frames);
    let y = params.predict(&[ModelInput::new(&flat, emotion)])?;
    Ok(IntensityEstimate(y[0]))
}

pub fn forward(params: &ModelParams, seq: &PoseSequence, emotion: &EmotionContext) -> Result<IntensityEstimate> {
    forward_frames(params, seq.frames(), &emotion.one_hot())
}

/// Network inputs and labels for a set of labeled sequences.
pub fn examples(batch: &[LabeledSequence]) -> Vec<Example> {
    batch
        .iter()
        .map(|item| Example {
            frames: item.sequence.flattened(),
            emotion: item.emotion.one_hot(),
            label: item.intensity.value(),
        })
        .collect()
}

pub fn loss(params: &ModelParams, batch: &[LabeledSequence]) -> Result<f64> {
    let ex = examples(batch);
    let inputs: Vec<_> = ex.iter().map(Example::as_input).collect();
    let predictions = params.predict(&inputs)?;
    let total: f64 = predictions.iter().zip(&ex).map(|(y, e)| (y - e.label).abs()).sum();
    Ok(total / ex.len() as f64)
}

/// Mean absolute error over `batch` and its exact gradient.
pub fn gradients(params: &ModelParams, batch: &[LabeledSequence]) -> Result<(f64, ModelParams)> {
    let ex = examples(batch);
    let inputs: Vec<_> = ex.iter().map(Example::as_input).collect();
    let labels: Vec<f64> = ex.iter().map(|e| e.label).collect();
    params.loss_and_gradients(&inputs, &labels)
}
