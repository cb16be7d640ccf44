use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{examples, rmsprop_step, ModelInput, ModelParams, TrainConfig, TrainedModel};
use crate::dataset::Corpus;
use crate::error::{Error, Result};

/// One owned training item.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub frames: Vec<f64>,
    pub emotion: Vec<f64>,
    pub label: f64,
}

impl Example {
    pub fn as_input(&self) -> ModelInput<'_> {
        ModelInput::new(&self.frames, &self.emotion)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingLog {
    pub config: TrainConfig,
    pub item_count: usize,
    pub steps: usize,
    pub epochs: Vec<EpochLog>,
}

/// Trains from seeded initialization with seeded shuffling; the result is a
/// pure function of `(examples, config)`.
pub fn fit(
    examples: &[Example],
    input_dim: usize,
    emotion_count: usize,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainingLog)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Config("cannot train on an empty corpus".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::initialized(input_dim, emotion_count, config.hidden1, config.hidden2, &mut rng);
    let mut state = params.zeros_like();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = TrainingLog {
        config: config.clone(),
        item_count: examples.len(),
        steps: 0,
        epochs: Vec::with_capacity(config.epochs),
    };

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let inputs: Vec<_> = chunk.iter().map(|&i| examples[i].as_input()).collect();
            let labels: Vec<f64> = chunk.iter().map(|&i| examples[i].label).collect();
            let (loss, mut grads) = params.loss_and_gradients(&inputs, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {epoch}, step {}", log.steps + 1)));
            }
            if let Some(max_norm) = config.gradient_clip_norm {
                let norm = grads.squared_norm().sqrt();
                if norm > max_norm {
                    let scale = max_norm / norm;
                    for t in grads.tensors_mut() {
                        t.iter_mut().for_each(|v| *v *= scale);
                    }
                }
            }
            rmsprop_step(&mut params, &grads, &mut state, config)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, step {}: {e}", log.steps + 1)))?;
            if !params.is_finite() {
                return Err(Error::NonFinite(format!("parameters at epoch {epoch}, step {}", log.steps + 1)));
            }
            log.steps += 1;
            total += loss * chunk.len() as f64;
        }
        let mean_loss = total / examples.len() as f64;
        log::info!("epoch {epoch}/{}: mean loss {mean_loss:.6}", config.epochs);
        log.epochs.push(EpochLog { epoch, mean_loss });
    }
    Ok((params, log))
}

/// Trains on every record of `corpus`.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<(TrainedModel, TrainingLog)> {
    let ex = examples(&corpus.records);
    let input_dim = 3 * (corpus.topology.joint_count() - 1);
    let (params, log) = fit(&ex, input_dim, corpus.vocabulary.len(), config)?;
    let model = TrainedModel::new(params, corpus.topology.clone(), corpus.vocabulary.clone())?;
    Ok((model, log))
}
