//! JSON-lines corpus format.
//!
//! Line 1 is a header object; every following line is one record:
//!
//! ```text
//! {"format_version":1,"frame_encoding":"euler","topology":{...},"sample_rate_hz":30.0,"emotion_vocabulary":["joy",...]}
//! {"id":"s1","source":"s1","emotion":"joy","intensity":0.75,"frames":[[[roll...],[pitch...],[yaw...]],...]}
//! ```
//!
//! Angles are radians in descriptor column order. Files are UTF-8 with LF
//! line endings; field order is fixed so re-saving a loaded file is
//! byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Corpus, EmotionContext, EmotionVocabulary, IntensityLabel, LabeledSequence};
use crate::descriptor::{PoseFrame, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::{SkeletonTopology, TopologyRecord};

pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub format_version: u32,
    #[serde(default = "default_encoding")]
    pub frame_encoding: String,
    pub topology: TopologyRecord,
    pub sample_rate_hz: f64,
    pub emotion_vocabulary: Vec<String>,
}

fn default_encoding() -> String {
    "euler".into()
}

impl CorpusHeader {
    pub(super) fn for_corpus(corpus: &Corpus, encoding: &str) -> Self {
        CorpusHeader {
            format_version: CORPUS_FORMAT_VERSION,
            frame_encoding: encoding.into(),
            topology: corpus.topology.to_record(),
            sample_rate_hz: corpus.sample_rate,
            emotion_vocabulary: corpus.vocabulary.names().to_vec(),
        }
    }

    /// Parses and validates line 1; returns the header with its decoded parts.
    pub(super) fn parse(
        line: Option<&str>,
        encoding: &str,
    ) -> Result<(CorpusHeader, Arc<SkeletonTopology>, Arc<EmotionVocabulary>)> {
        let line = line.ok_or_else(|| schema(1, None, "missing header line"))?;
        let header: CorpusHeader =
            serde_json::from_str(line).map_err(|e| schema(1, None, format!("bad header: {e}")))?;
        if header.format_version != CORPUS_FORMAT_VERSION {
            return Err(schema(
                1,
                None,
                format!("unsupported format_version {}", header.format_version),
            ));
        }
        if header.frame_encoding != encoding {
            return Err(schema(
                1,
                None,
                format!("expected frame_encoding {encoding:?}, found {:?}", header.frame_encoding),
            ));
        }
        if !(header.sample_rate_hz.is_finite() && header.sample_rate_hz > 0.0) {
            return Err(schema(1, None, "sample_rate_hz must be positive"));
        }
        let topology = SkeletonTopology::from_record(&header.topology)
            .map_err(|e| schema(1, None, e.to_string()))?;
        let vocabulary = EmotionVocabulary::new(header.emotion_vocabulary.clone())
            .map_err(|e| schema(1, None, e.to_string()))?;
        Ok((header, Arc::new(topology), Arc::new(vocabulary)))
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    #[serde(default)]
    source: Option<String>,
    emotion: String,
    intensity: f64,
    frames: Vec<[Vec<f64>; 3]>,
}

pub(super) fn schema(line: usize, record: Option<&str>, message: impl Into<String>) -> Error {
    Error::Schema {
        line,
        record: record.map(str::to_string),
        message: message.into(),
    }
}

/// Reads a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

/// Parses corpus text (see module docs for the layout).
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut lines = text.lines();
    let (header, topology, vocabulary) = CorpusHeader::parse(lines.next(), "euler")?;
    let width = topology.joint_count() - 1;
    let mut corpus = Corpus::empty(topology.clone(), header.sample_rate_hz, vocabulary.clone());

    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| schema(line_no, None, e.to_string()))?;
        let id = rec.id.as_str();
        if rec.frames.is_empty() {
            return Err(schema(line_no, Some(id), "record has no frames"));
        }
        let emotion = EmotionContext::new(vocabulary.clone(), &rec.emotion).map_err(|_| {
            Error::UnknownEmotion(format!("{} at line {line_no} (record {id})", rec.emotion))
        })?;
        let intensity = IntensityLabel::new(rec.intensity)
            .map_err(|e| schema(line_no, Some(id), e.to_string()))?;
        let mut frames = Vec::with_capacity(rec.frames.len());
        for (f, rows) in rec.frames.iter().enumerate() {
            if rows.iter().any(|r| r.len() != width) {
                return Err(schema(
                    line_no,
                    Some(id),
                    format!("frame {f} rows must have {width} entries"),
                ));
            }
            if let Some(&value) = rows.iter().flatten().find(|v| !(v.abs() <= std::f64::consts::PI)) {
                return Err(Error::AngleOutOfRange {
                    line: line_no,
                    record: rec.id.clone(),
                    value,
                });
            }
            let columns = (0..width).map(|c| [rows[0][c], rows[1][c], rows[2][c]]).collect();
            frames.push(PoseFrame::new(columns)?);
        }
        let source = rec.source.unwrap_or_else(|| rec.id.clone());
        let sequence = PoseSequence::new(frames, header.sample_rate_hz, topology.clone(), source.as_str())?;
        corpus.records.push(LabeledSequence {
            source,
            id: rec.id,
            sequence,
            emotion,
            intensity,
        });
    }
    Ok(corpus)
}

/// Writes a corpus in the canonical format.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(corpus, &mut out).map_err(|e| match e {
        Error::Json(j) if j.is_io() => Error::io(path, j.into()),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus(corpus: &Corpus, out: &mut impl Write) -> Result<()> {
    let header = CorpusHeader::for_corpus(corpus, "euler");
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)?;
    for item in &corpus.records {
        let frames = item
            .sequence
            .frames()
            .iter()
            .map(|f| [f.row(0), f.row(1), f.row(2)])
            .collect();
        let rec = Record {
            id: item.id.clone(),
            source: Some(item.source.clone()),
            emotion: item.emotion.name().to_string(),
            intensity: item.intensity.value(),
            frames,
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
    }
    Ok(())
}
