//! Sliding-window inference over a live frame stream.
//!
//! The wire protocol is line-oriented JSON, one object per line in each
//! direction. Input lines are [`FrameMessage`]s; output lines are
//! [`StreamOutput`] estimates or [`StreamError`] notices. A bad input line
//! produces an error line and is otherwise ignored; the session continues.

mod io;

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use io::{run_lines, serve_tcp, StreamSummary};

use crate::dataset::{decode_joint, encode_joint, EmotionContext};
use crate::descriptor::{describe_frame, JointMapping, PoseFrame, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::{LocalTransform, Quaternion, RigidTransform};
use crate::model::{forward_frames, TrainedModel};

pub const STREAM_SCHEMA_VERSION: u32 = 1;

/// Allowed deviation of an incoming quaternion's norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// One sensor frame: per-joint `[w, x, y, z, tx, ty, tz]` local transforms
/// in the profile's joint order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameMessage {
    pub t_ms: u64,
    pub joints: Vec<[f64; 7]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<String>,
}

impl FrameMessage {
    pub fn from_locals(t_ms: u64, locals: &[LocalTransform], emotion: Option<&str>) -> Self {
        FrameMessage {
            t_ms,
            joints: locals.iter().map(encode_joint).collect(),
            emotion: emotion.map(str::to_string),
        }
    }

    /// Replays a stored sequence at its own sample rate, root at the origin,
    /// naming `emotion` on the first frame only.
    pub fn replay(seq: &PoseSequence, emotion: Option<&str>) -> Vec<FrameMessage> {
        (0..seq.len())
            .map(|f| {
                let t_ms = (f as f64 * 1000.0 / seq.sample_rate()).round() as u64;
                let locals = seq.frame_locals(f, RigidTransform::identity());
                FrameMessage::from_locals(t_ms, &locals, if f == 0 { emotion } else { None })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionClass {
    Speech,
    Gesture,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTag {
    pub emotion: String,
    pub level: Level,
    pub action: ActionClass,
}

/// Weak below `threshold`, strong at or above it.
pub fn classify_level(estimate: f64, threshold: f64, emotion: &str) -> BehaviorTag {
    let (level, action) = if estimate < threshold {
        (Level::Weak, ActionClass::Speech)
    } else {
        (Level::Strong, ActionClass::Gesture)
    };
    BehaviorTag {
        emotion: emotion.to_string(),
        level,
        action,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamOutput {
    pub v: u32,
    pub t_ms: u64,
    pub emotion: String,
    pub intensity: f64,
    pub level: Level,
    pub action: ActionClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamError {
    pub v: u32,
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Frames per estimate.
    pub window: usize,
    /// Frames between estimates once the window is full; `None` emits only
    /// the first full window.
    pub hop: Option<usize>,
    pub threshold: f64,
    /// Emotion used until a frame names one; first vocabulary entry if unset.
    pub initial_emotion: Option<String>,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            window: 90,
            hop: Some(15),
            threshold: 0.5,
            initial_emotion: None,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1 frame".into()));
        }
        if self.hop == Some(0) {
            return Err(Error::Config("hop must be at least 1 frame".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} must lie in (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

/// Per-frame processing time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatencyStats {
    pub frames: usize,
    pub total: Duration,
    pub max: Duration,
}

impl LatencyStats {
    fn record(&mut self, d: Duration) {
        self.frames += 1;
        self.total += d;
        self.max = self.max.max(d);
    }

    pub fn mean(&self) -> Duration {
        if self.frames == 0 {
            Duration::ZERO
        } else {
            self.total / self.frames as u32
        }
    }
}

/// State for one stream: the frame buffer, current emotion and timing.
#[derive(Debug)]
pub struct Session {
    model: Arc<TrainedModel>,
    mapping: JointMapping,
    identity: bool,
    config: StreamConfig,
    buffer: VecDeque<PoseFrame>,
    emotion: EmotionContext,
    last_t: Option<u64>,
    since_emit: Option<usize>,
    latency: LatencyStats,
}

impl Session {
    pub fn new(model: Arc<TrainedModel>, mapping: JointMapping, config: StreamConfig) -> Result<Self> {
        config.validate()?;
        if mapping.target().names() != model.topology.names() {
            return Err(Error::Topology(
                "stream profile does not map onto the model's skeleton".into(),
            ));
        }
        model.check_compatible(mapping.target(), &model.vocabulary)?;
        let emotion = match &config.initial_emotion {
            Some(name) => EmotionContext::new(model.vocabulary.clone(), name)?,
            None => EmotionContext::from_index(model.vocabulary.clone(), 0)?,
        };
        let identity = mapping.source().as_ref() == mapping.target().as_ref();
        Ok(Session {
            model,
            mapping,
            identity,
            buffer: VecDeque::with_capacity(config.window),
            config,
            emotion,
            last_t: None,
            since_emit: None,
            latency: LatencyStats::default(),
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn latency(&self) -> &LatencyStats {
        &self.latency
    }

    pub fn emotion(&self) -> &EmotionContext {
        &self.emotion
    }

    fn to_pose(&self, msg: &FrameMessage) -> Result<PoseFrame> {
        let expected = self.mapping.source().joint_count();
        if msg.joints.len() != expected {
            return Err(Error::Dimension {
                what: "joints per frame",
                expected,
                actual: msg.joints.len(),
            });
        }
        for (j, raw) in msg.joints.iter().enumerate() {
            let n = Quaternion::new(raw[0], raw[1], raw[2], raw[3]).norm();
            if !((n - 1.0).abs() <= QUATERNION_NORM_TOLERANCE) {
                return Err(Error::Stream(format!("joint {j}: quaternion norm {n} is not within 1e-3 of 1")));
            }
        }
        let locals = msg.joints.iter().map(decode_joint).collect::<Result<Vec<_>>>()?;
        let locals = if self.identity {
            locals
        } else {
            self.mapping.map_locals(&locals)?
        };
        describe_frame(&self.model.topology, &locals)
    }

    /// Consumes one frame; returns an estimate when one is due.
    ///
    /// A rejected frame leaves the session unchanged.
    pub fn push(&mut self, msg: &FrameMessage) -> Result<Option<StreamOutput>> {
        let start = Instant::now();
        if let Some(prev) = self.last_t {
            if msg.t_ms <= prev {
                return Err(Error::Stream(format!(
                    "timestamp {} does not follow previous {prev}",
                    msg.t_ms
                )));
            }
        }
        let emotion = match &msg.emotion {
            Some(name) => Some(EmotionContext::new(self.model.vocabulary.clone(), name)?),
            None => None,
        };
        let pose = self.to_pose(msg)?;

        self.last_t = Some(msg.t_ms);
        if let Some(e) = emotion {
            self.emotion = e;
        }
        if self.buffer.len() == self.config.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(pose);
        if let Some(n) = self.since_emit.as_mut() {
            *n += 1;
        }
        let due = self.buffer.len() == self.config.window
            && match (self.since_emit, self.config.hop) {
                (None, _) => true,
                (Some(n), Some(h)) => n >= h,
                (Some(_), None) => false,
            };
        let out = if due {
            self.since_emit = Some(0);
            let frames: Vec<PoseFrame> = self.buffer.iter().cloned().collect();
            let y = forward_frames(&self.model.params, &frames, &self.emotion.one_hot())?.value();
            let tag = classify_level(y, self.config.threshold, self.emotion.name());
            Some(StreamOutput {
                v: STREAM_SCHEMA_VERSION,
                t_ms: msg.t_ms,
                emotion: tag.emotion,
                intensity: y,
                level: tag.level,
                action: tag.action,
            })
        } else {
            None
        };
        self.latency.record(start.elapsed());
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
