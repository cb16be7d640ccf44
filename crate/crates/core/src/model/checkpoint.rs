//! Checkpoint container.
//!
//! A checkpoint is one JSON header line terminated by `\n`, followed by the
//! tensors listed in the header as little-endian `f64`, row-major, in the
//! declared order and with nothing after them. The same container carries
//! the LSTM (`kind = "lstm-intensity"`) and the baseline regressor
//! (`kind = "svr-baseline"`).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ModelParams, TrainedModel, GATE_ORDER, TENSOR_NAMES};
use crate::dataset::EmotionVocabulary;
use crate::error::{Error, Result};
use crate::kinematics::{SkeletonTopology, TopologyRecord, EULER_CONVENTION};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
pub const LSTM_KIND: &str = "lstm-intensity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub kind: String,
    pub joint_count: usize,
    pub emotion_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden2: Option<usize>,
    pub euler_convention: String,
    pub column_order: Vec<String>,
    pub emotion_vocabulary: Vec<String>,
    pub topology: TopologyRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_order: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<serde_json::Value>,
    pub tensors: Vec<TensorSpec>,
}

impl CheckpointHeader {
    /// Header fields shared by every kind; tensors and model-specific fields
    /// are filled in by the caller.
    pub fn new(kind: &str, topology: &SkeletonTopology, vocabulary: &EmotionVocabulary) -> Self {
        CheckpointHeader {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: kind.into(),
            joint_count: topology.joint_count(),
            emotion_count: vocabulary.len(),
            hidden1: None,
            hidden2: None,
            euler_convention: EULER_CONVENTION.into(),
            column_order: topology.column_names(),
            emotion_vocabulary: vocabulary.names().to_vec(),
            topology: topology.to_record(),
            gate_order: None,
            settings: None,
            tensors: Vec::new(),
        }
    }

    /// Decodes topology and vocabulary, checking them against the counts.
    pub fn context(&self) -> Result<(Arc<SkeletonTopology>, Arc<EmotionVocabulary>)> {
        let corrupt = |m: String| Error::CheckpointCorrupt(m);
        let topology = SkeletonTopology::from_record(&self.topology).map_err(|e| corrupt(e.to_string()))?;
        let vocabulary =
            EmotionVocabulary::new(self.emotion_vocabulary.clone()).map_err(|e| corrupt(e.to_string()))?;
        if topology.joint_count() != self.joint_count || vocabulary.len() != self.emotion_count {
            return Err(Error::CheckpointShape(
                "header counts disagree with its topology or vocabulary".into(),
            ));
        }
        if topology.column_names() != self.column_order {
            return Err(Error::CheckpointShape("column_order disagrees with topology".into()));
        }
        Ok((Arc::new(topology), Arc::new(vocabulary)))
    }
}

pub fn encode(header: &CheckpointHeader, tensors: &[&[f64]]) -> Result<Vec<u8>> {
    if header.tensors.len() != tensors.len()
        || header.tensors.iter().zip(tensors).any(|(s, t)| s.len() != t.len())
    {
        return Err(Error::CheckpointShape("tensor data does not match header".into()));
    }
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    for t in tensors {
        for v in *t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, Vec<Vec<f64>>)> {
    let corrupt = |m: &str| Error::CheckpointCorrupt(m.into());
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing header line"))?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::CheckpointCorrupt(format!("bad header: {e}")))?;
    let version = raw.get("format_version").and_then(|v| v.as_u64());
    if version != Some(u64::from(CHECKPOINT_FORMAT_VERSION)) {
        return Err(Error::CheckpointVersion {
            found: version.map_or_else(|| "none".into(), |v| v.to_string()),
            supported: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let header: CheckpointHeader =
        serde_json::from_value(raw).map_err(|e| Error::CheckpointCorrupt(format!("bad header: {e}")))?;
    let payload = &bytes[nl + 1..];
    let expected: usize = header.tensors.iter().map(TensorSpec::len).sum::<usize>() * 8;
    if payload.len() != expected {
        return Err(Error::CheckpointCorrupt(format!(
            "payload has {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let tensors = header
        .tensors
        .iter()
        .map(|s| values.by_ref().take(s.len()).collect())
        .collect();
    Ok((header, tensors))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<(CheckpointHeader, Vec<Vec<f64>>)> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

fn lstm_header(model: &TrainedModel) -> CheckpointHeader {
    let p = &model.params;
    let mut h = CheckpointHeader::new(LSTM_KIND, &model.topology, &model.vocabulary);
    h.hidden1 = Some(p.hidden1());
    h.hidden2 = Some(p.hidden2());
    h.gate_order = Some(GATE_ORDER.into());
    h.tensors = TENSOR_NAMES
        .iter()
        .zip(p.tensor_shapes())
        .map(|(n, shape)| TensorSpec {
            name: n.to_string(),
            shape,
        })
        .collect();
    h
}

pub fn save_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let header = lstm_header(model);
    let data: Vec<&[f64]> = model.params.tensors().into_iter().map(|(_, d)| d).collect();
    write_file(path.as_ref(), &encode(&header, &data)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let (header, tensors) = read_file(path.as_ref())?;
    if header.kind != LSTM_KIND {
        return Err(Error::CheckpointShape(format!(
            "expected a {LSTM_KIND} checkpoint, found {:?}",
            header.kind
        )));
    }
    let (topology, vocabulary) = header.context()?;
    let (h1, h2) = match (header.hidden1, header.hidden2) {
        (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
        _ => return Err(Error::CheckpointShape("hidden sizes missing from header".into())),
    };
    let mut params = ModelParams::zeros(3 * (header.joint_count - 1), header.emotion_count, h1, h2);
    let names: Vec<&str> = header.tensors.iter().map(|t| t.name.as_str()).collect();
    let shapes: Vec<Vec<usize>> = header.tensors.iter().map(|t| t.shape.clone()).collect();
    if names != TENSOR_NAMES || shapes != params.tensor_shapes() {
        return Err(Error::CheckpointShape(
            "tensor list does not match the declared joint count, emotion count and hidden sizes".into(),
        ));
    }
    for (dst, src) in params.tensors_mut().into_iter().zip(&tensors) {
        dst.copy_from_slice(src);
    }
    TrainedModel::new(params, topology, vocabulary)
}

/// Loads and checks the model against the skeleton and vocabulary it will
/// be used with.
pub fn load_checkpoint_for(
    path: impl AsRef<Path>,
    topology: &SkeletonTopology,
    vocabulary: &EmotionVocabulary,
) -> Result<TrainedModel> {
    let model = load_checkpoint(path)?;
    model.check_compatible(topology, vocabulary)?;
    Ok(model)
}
