use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sequence_features;
use crate::dataset::{EmotionVocabulary, LabeledSequence};
use crate::descriptor::PoseSequence;
use crate::error::{Error, Result};
use crate::kinematics::SkeletonTopology;
use crate::model::checkpoint::{encode, read_file, write_file, CheckpointHeader, TensorSpec};

pub const SVR_KIND: &str = "svr-baseline";

/// Linear epsilon-insensitive regression, minimized by averaged SGD:
/// `lambda / 2 * |w|^2 + mean(max(0, |w.x + b - y| - epsilon))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            epsilon: 0.01,
            lambda: 1e-4,
            learning_rate: 0.01,
            epochs: 60,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrRegressor {
    mean: Vec<f64>,
    std: Vec<f64>,
    /// Standardized-space weights; zero on dropped dimensions.
    weights: Vec<f64>,
    bias: f64,
}

impl SvrRegressor {
    pub fn fit(features: &[Vec<f64>], labels: &[f64], config: &SvrConfig) -> Result<Self> {
        if features.len() < 2 || features.len() != labels.len() {
            return Err(Error::Config(format!(
                "regression needs at least 2 items with one label each (got {} items, {} labels)",
                features.len(),
                labels.len()
            )));
        }
        if !(config.epsilon >= 0.0 && config.lambda >= 0.0 && config.learning_rate > 0.0 && config.epochs > 0) {
            return Err(Error::Config("invalid regression settings".into()));
        }
        let d = features[0].len();
        if let Some(bad) = features.iter().find(|f| f.len() != d) {
            return Err(Error::Dimension {
                what: "feature length",
                expected: d,
                actual: bad.len(),
            });
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; d];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; d];
        for f in features {
            for ((s, v), m) in std.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        std.iter_mut().for_each(|s| *s = s.sqrt());
        for i in 0..d {
            if std[i] <= 1e-12 * mean[i].abs().max(1.0) {
                std[i] = 0.0;
            }
        }
        let kept: Vec<usize> = (0..d).filter(|&i| std[i] > 0.0).collect();
        if kept.len() < d {
            log::warn!("dropping {} zero-variance feature dimensions", d - kept.len());
        }
        let z: Vec<Vec<f64>> = features
            .iter()
            .map(|f| kept.iter().map(|&i| (f[i] - mean[i]) / std[i]).collect())
            .collect();

        let k = kept.len();
        let mut w = vec![0.0; k];
        let mut b = labels.iter().sum::<f64>() / n;
        let (mut w_avg, mut b_avg, mut averaged) = (vec![0.0; k], 0.0, 0usize);
        let average_from = config.epochs / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut t = 0usize;
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = config.learning_rate / (1.0 + config.learning_rate * config.lambda * t as f64);
                let r = z[i].iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + b - labels[i];
                let s = if r > config.epsilon {
                    1.0
                } else if r < -config.epsilon {
                    -1.0
                } else {
                    0.0
                };
                for (wj, xj) in w.iter_mut().zip(&z[i]) {
                    *wj -= eta * (config.lambda * *wj + s * xj);
                }
                b -= eta * s;
                if epoch >= average_from {
                    averaged += 1;
                    let a = 1.0 / averaged as f64;
                    for (avg, wj) in w_avg.iter_mut().zip(&w) {
                        *avg += (wj - *avg) * a;
                    }
                    b_avg += (b - b_avg) * a;
                }
            }
        }
        let mut weights = vec![0.0; d];
        for (&i, v) in kept.iter().zip(w_avg) {
            weights[i] = v;
        }
        let reg = SvrRegressor {
            mean,
            std,
            weights,
            bias: b_avg,
        };
        if !reg.weights.iter().chain([&reg.bias]).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("regression weights".into()));
        }
        Ok(reg)
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Prediction clamped to `[0, 1]`.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.dimension() {
            return Err(Error::Dimension {
                what: "feature length",
                expected: self.dimension(),
                actual: features.len(),
            });
        }
        let mut y = self.bias;
        for i in 0..features.len() {
            if self.std[i] > 0.0 {
                y += self.weights[i] * (features[i] - self.mean[i]) / self.std[i];
            }
        }
        Ok(y.clamp(0.0, 1.0))
    }
}

/// Feature extractor plus regressor, tied to one skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub topology: Arc<SkeletonTopology>,
    pub vocabulary: Arc<EmotionVocabulary>,
    pub config: SvrConfig,
    pub regressor: SvrRegressor,
}

impl BaselineModel {
    pub fn fit(
        topology: Arc<SkeletonTopology>,
        vocabulary: Arc<EmotionVocabulary>,
        records: &[LabeledSequence],
        config: &SvrConfig,
    ) -> Result<Self> {
        let features = records
            .iter()
            .map(|r| Ok(sequence_features(&r.sequence)?.0))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<f64> = records.iter().map(|r| r.intensity.value()).collect();
        Ok(BaselineModel {
            topology,
            vocabulary,
            config: config.clone(),
            regressor: SvrRegressor::fit(&features, &labels, config)?,
        })
    }

    pub fn predict(&self, seq: &PoseSequence) -> Result<f64> {
        self.regressor.predict(&sequence_features(seq)?.0)
    }
}

const TENSORS: [&str; 4] = ["feature_mean", "feature_std", "weights", "bias"];

fn to_bytes(model: &BaselineModel) -> Result<Vec<u8>> {
    let r = &model.regressor;
    let d = r.dimension();
    let mut header = CheckpointHeader::new(SVR_KIND, &model.topology, &model.vocabulary);
    header.settings = Some(serde_json::to_value(&model.config)?);
    header.tensors = TENSORS
        .iter()
        .zip([d, d, d, 1])
        .map(|(n, len)| TensorSpec {
            name: n.to_string(),
            shape: vec![len],
        })
        .collect();
    encode(&header, &[&r.mean, &r.std, &r.weights, &[r.bias]])
}

pub fn save_baseline(model: &BaselineModel, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &to_bytes(model)?)
}

pub fn load_baseline(path: impl AsRef<Path>) -> Result<BaselineModel> {
    from_parts(read_file(path.as_ref())?)
}

fn from_parts((header, mut tensors): (CheckpointHeader, Vec<Vec<f64>>)) -> Result<BaselineModel> {
    if header.kind != SVR_KIND {
        return Err(Error::CheckpointShape(format!(
            "expected a {SVR_KIND} checkpoint, found {:?}",
            header.kind
        )));
    }
    let (topology, vocabulary) = header.context()?;
    let names: Vec<&str> = header.tensors.iter().map(|t| t.name.as_str()).collect();
    let d = header.tensors.first().map_or(0, |t| t.shape.iter().product());
    let shapes_ok = header.tensors.iter().map(|t| t.shape.clone()).eq([vec![d], vec![d], vec![d], vec![1]]);
    if names != TENSORS || !shapes_ok {
        return Err(Error::CheckpointShape("unexpected tensor list for the baseline".into()));
    }
    let config: SvrConfig = header
        .settings
        .map(serde_json::from_value)
        .transpose()?
        .ok_or_else(|| Error::CheckpointCorrupt("baseline settings missing".into()))?;
    let bias = tensors[3][0];
    let weights = std::mem::take(&mut tensors[2]);
    let std = std::mem::take(&mut tensors[1]);
    let mean = std::mem::take(&mut tensors[0]);
    Ok(BaselineModel {
        topology,
        vocabulary,
        config,
        regressor: SvrRegressor {
            mean,
            std,
            weights,
            bias,
        },
    })
}
