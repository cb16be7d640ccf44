//! Quaternion input format and its conversion to descriptors.
//!
//! Same header as the canonical corpus with `"frame_encoding":"quaternion"`;
//! each record's `frames` is a list of frames, each a list of per-joint
//! `[w, x, y, z, tx, ty, tz]` local transforms in topology index order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::corpus::{schema, CorpusHeader, CORPUS_FORMAT_VERSION};
use super::{Corpus, EmotionContext, EmotionVocabulary, IntensityLabel, LabeledSequence};
use crate::descriptor::{describe_frame, JointMapping, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::{LocalTransform, Quaternion, RigidTransform, Rotation, SkeletonTopology};

#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionRecord {
    pub id: String,
    pub source: String,
    pub emotion: String,
    pub intensity: f64,
    pub frames: Vec<Vec<LocalTransform>>,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    source: Option<String>,
    emotion: String,
    intensity: f64,
    frames: Vec<Vec<[f64; 7]>>,
}

/// Decodes one `[w, x, y, z, tx, ty, tz]` joint entry.
pub fn decode_joint(raw: &[f64; 7]) -> Result<LocalTransform> {
    let rotation = Rotation::from_quaternion(Quaternion::new(raw[0], raw[1], raw[2], raw[3]))?;
    let translation = Vector3::new(raw[4], raw[5], raw[6]);
    if !translation.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("joint translation".into()));
    }
    Ok(RigidTransform::new(rotation, translation))
}

pub fn encode_joint(t: &LocalTransform) -> [f64; 7] {
    let q = t.rotation.to_quaternion();
    [q.w, q.x, q.y, q.z, t.translation.x, t.translation.y, t.translation.z]
}

pub fn save_quaternion_corpus(
    path: impl AsRef<Path>,
    topology: &SkeletonTopology,
    sample_rate: f64,
    vocabulary: &EmotionVocabulary,
    records: &[QuaternionRecord],
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    let header = CorpusHeader {
        format_version: CORPUS_FORMAT_VERSION,
        frame_encoding: "quaternion".into(),
        topology: topology.to_record(),
        sample_rate_hz: sample_rate,
        emotion_vocabulary: vocabulary.names().to_vec(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?).map_err(io)?;
    for r in records {
        let raw = RawRecord {
            id: r.id.clone(),
            source: Some(r.source.clone()),
            emotion: r.emotion.clone(),
            intensity: r.intensity,
            frames: r.frames.iter().map(|f| f.iter().map(encode_joint).collect()).collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&raw)?).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a quaternion corpus without converting it.
#[allow(clippy::type_complexity)]
pub fn load_quaternion_corpus(
    path: impl AsRef<Path>,
) -> Result<(Arc<SkeletonTopology>, f64, Arc<EmotionVocabulary>, Vec<QuaternionRecord>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let (header, topology, vocabulary) = CorpusHeader::parse(lines.next(), "quaternion")?;
    let n = topology.joint_count();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| schema(line_no, None, e.to_string()))?;
        if raw.frames.is_empty() {
            return Err(schema(line_no, Some(&raw.id), "record has no frames"));
        }
        let mut frames = Vec::with_capacity(raw.frames.len());
        for (f, joints) in raw.frames.iter().enumerate() {
            if joints.len() != n {
                return Err(schema(
                    line_no,
                    Some(&raw.id),
                    format!("frame {f} has {} joints, expected {n}", joints.len()),
                ));
            }
            let decoded = joints
                .iter()
                .map(decode_joint)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| schema(line_no, Some(&raw.id), format!("frame {f}: {e}")))?;
            frames.push(decoded);
        }
        records.push(QuaternionRecord {
            source: raw.source.unwrap_or_else(|| raw.id.clone()),
            id: raw.id,
            emotion: raw.emotion,
            intensity: raw.intensity,
            frames,
        });
    }
    Ok((topology, header.sample_rate_hz, vocabulary, records))
}

/// Reads a quaternion corpus and runs descriptor extraction.
///
/// With `mapping`, source skeletons are reduced onto its target topology;
/// without it, a built-in mapping is used when the source joint names match
/// one, and the source topology is kept otherwise.
pub fn convert_quaternion_corpus(path: impl AsRef<Path>, mapping: Option<&JointMapping>) -> Result<Corpus> {
    let (source, rate, vocabulary, records) = load_quaternion_corpus(path)?;
    let builtin;
    let mapping = match mapping {
        Some(m) => {
            if m.source().names() != source.names() {
                return Err(Error::Topology(
                    "mapping source joints do not match the corpus topology".into(),
                ));
            }
            Some(m)
        }
        None => {
            builtin = JointMapping::builtin_for(&source);
            builtin.as_ref()
        }
    };
    let target = mapping.map_or_else(|| source.clone(), |m| m.target().clone());

    let mut corpus = Corpus::empty(target.clone(), rate, vocabulary.clone());
    for rec in records {
        let frames = rec
            .frames
            .iter()
            .map(|locals| match mapping {
                Some(m) => describe_frame(&target, &m.map_locals(locals)?),
                None => describe_frame(&target, locals),
            })
            .collect::<Result<Vec<_>>>()?;
        let emotion = EmotionContext::new(vocabulary.clone(), &rec.emotion)?;
        corpus.records.push(LabeledSequence {
            sequence: PoseSequence::new(frames, rate, target.clone(), rec.source.as_str())?,
            id: rec.id,
            source: rec.source,
            emotion,
            intensity: IntensityLabel::new(rec.intensity)?,
        });
    }
    Ok(corpus)
}
