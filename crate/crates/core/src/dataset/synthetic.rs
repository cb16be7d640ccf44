//! Seeded synthetic emotional-motion corpora.
//!
//! Each sequence oscillates a fixed set of joint angles with a random
//! amplitude `a` in `[0, amplitude_max]`. The label is an affine map of
//! `a / amplitude_max` that depends on the emotion, so a fixed motion maps
//! to different intensities under different emotions.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Corpus, EmotionContext, EmotionVocabulary, IntensityLabel, LabeledSequence};
use crate::descriptor::{PoseFrame, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::SkeletonTopology;

/// Intensity map of one emotion: `offset + gain * a / amplitude_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionProfile {
    pub name: String,
    pub offset: f64,
    pub gain: f64,
}

impl EmotionProfile {
    pub fn new(name: &str, offset: f64, gain: f64) -> Self {
        EmotionProfile {
            name: name.into(),
            offset,
            gain,
        }
    }

    /// Intensity for a normalized amplitude in `[0, 1]`.
    pub fn intensity(&self, normalized_amplitude: f64) -> f64 {
        self.offset + self.gain * normalized_amplitude
    }
}

/// One oscillating descriptor entry: `weight * a * sin(...)` on `axis`
/// (0 roll, 1 pitch, 2 yaw) of the named joint.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionChannel {
    pub joint: String,
    pub axis: usize,
    pub weight: f64,
}

impl MotionChannel {
    pub fn new(joint: &str, axis: usize, weight: f64) -> Self {
        MotionChannel {
            joint: joint.into(),
            axis,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub emotions: Vec<EmotionProfile>,
    pub sequence_count: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub sample_rate: f64,
    pub amplitude_max: f64,
    /// Standard deviation of the additive angle noise, radians.
    pub noise_std: f64,
    pub min_frequency: f64,
    pub max_frequency: f64,
    pub channels: Vec<MotionChannel>,
    /// Half-width of the per-sequence uniform rest-pose offset, radians.
    pub rest_jitter: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            emotions: vec![
                EmotionProfile::new("joy", 0.05, 0.5),
                EmotionProfile::new("surprise", 0.25, 0.5),
                EmotionProfile::new("sadness", 0.45, 0.5),
            ],
            sequence_count: 200,
            min_len: 24,
            max_len: 48,
            sample_rate: 30.0,
            amplitude_max: 1.0,
            noise_std: 0.05,
            min_frequency: 1.25,
            max_frequency: 2.5,
            channels: vec![
                MotionChannel::new("l_shoulder", 0, 1.0),
                MotionChannel::new("r_shoulder", 0, -1.0),
                MotionChannel::new("l_elbow", 1, 0.8),
                MotionChannel::new("r_elbow", 1, 0.8),
                MotionChannel::new("spine", 2, 0.3),
                MotionChannel::new("head", 1, 0.3),
            ],
            rest_jitter: 0.05,
        }
    }
}

impl SyntheticConfig {
    /// Profiles for arbitrary emotion names: gain 0.5 and offsets spread
    /// evenly over `[0.05, 0.45]` in the given order.
    pub fn profiles_for(names: &[String]) -> Vec<EmotionProfile> {
        let k = names.len();
        names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let offset = if k > 1 { 0.05 + 0.4 * i as f64 / (k - 1) as f64 } else { 0.05 };
                EmotionProfile::new(n, offset, 0.5)
            })
            .collect()
    }

    fn validate(&self, topology: &SkeletonTopology) -> Result<Vec<(usize, usize, f64)>> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic config: {m}")));
        if self.emotions.is_empty() {
            return bad("at least one emotion is required");
        }
        for e in &self.emotions {
            let (lo, hi) = (e.intensity(0.0), e.intensity(1.0));
            if !((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi)) {
                return bad(&format!("intensity map of {:?} leaves [0, 1]", e.name));
            }
        }
        if self.sequence_count == 0 {
            return bad("sequence_count must be positive");
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("need 1 <= min_len <= max_len");
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad("sample_rate must be positive");
        }
        if !(0.0..=PI).contains(&self.amplitude_max) {
            return bad("amplitude_max must be in [0, pi]");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative");
        }
        if !(self.min_frequency > 0.0 && self.min_frequency <= self.max_frequency && self.max_frequency.is_finite()) {
            return bad("need 0 < min_frequency <= max_frequency");
        }
        if !(0.0..PI).contains(&self.rest_jitter) {
            return bad("rest_jitter must be in [0, pi)");
        }
        let column_of = |joint: usize| topology.descriptor_joints().iter().position(|&j| j == joint);
        self.channels
            .iter()
            .map(|c| {
                let col = topology
                    .index_of(&c.joint)
                    .and_then(column_of)
                    .ok_or_else(|| Error::Config(format!("synthetic config: no descriptor joint {:?}", c.joint)))?;
                if c.axis > 2 || !c.weight.is_finite() {
                    return Err(Error::Config(format!("synthetic config: bad channel on {:?}", c.joint)));
                }
                Ok((col, c.axis, c.weight))
            })
            .collect()
    }
}

/// Generates a corpus on the canonical skeleton; a pure function of
/// `(config, seed)`. Ids are `syn-00000`, `syn-00001`, ... and each record
/// is its own source.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Corpus> {
    let topology = Arc::new(SkeletonTopology::canonical());
    let channels = config.validate(&topology)?;
    let vocabulary = Arc::new(EmotionVocabulary::new(
        config.emotions.iter().map(|e| e.name.clone()).collect(),
    )?);
    let width = topology.joint_count() - 1;
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::empty(topology.clone(), config.sample_rate, vocabulary.clone());

    for i in 0..config.sequence_count {
        let emotion = rng.random_range(0..config.emotions.len());
        let amplitude = rng.random_range(0.0..=config.amplitude_max);
        let frequency = rng.random_range(config.min_frequency..=config.max_frequency);
        let phase = rng.random_range(0.0..TAU);
        let len = rng.random_range(config.min_len..=config.max_len);
        let rest: Vec<[f64; 3]> = (0..width)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0) * config.rest_jitter))
            .collect();

        let mut frames = Vec::with_capacity(len);
        for f in 0..len {
            let s = (TAU * frequency * f as f64 / config.sample_rate + phase).sin();
            let mut cols = rest.clone();
            for &(col, axis, weight) in &channels {
                cols[col][axis] += weight * amplitude * s;
            }
            for v in cols.iter_mut().flatten() {
                *v = (*v + noise.sample(&mut rng)).clamp(-PI, PI);
            }
            frames.push(PoseFrame::new(cols)?);
        }

        let id = format!("syn-{i:05}");
        let profile = &config.emotions[emotion];
        let normalized = if config.amplitude_max > 0.0 {
            amplitude / config.amplitude_max
        } else {
            0.0
        };
        let intensity = profile.intensity(normalized).clamp(0.0, 1.0);
        corpus.records.push(LabeledSequence {
            sequence: PoseSequence::new(frames, config.sample_rate, topology.clone(), id.as_str())?,
            source: id.clone(),
            id,
            emotion: EmotionContext::from_index(vocabulary.clone(), emotion)?,
            intensity: IntensityLabel::new(intensity)?,
        });
    }
    Ok(corpus)
}
