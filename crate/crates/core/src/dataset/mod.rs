//! Labeled corpora: emotion context, intensity labels, file formats, the
//! synthetic generator and grouped cross-validation splits.

mod corpus;
mod kfold;
mod quaternion;
mod synthetic;

use std::sync::Arc;

pub use corpus::{load_corpus, parse_corpus, save_corpus, write_corpus, CorpusHeader, CORPUS_FORMAT_VERSION};
pub use kfold::{kfold_split, Fold};
pub use quaternion::{convert_quaternion_corpus, decode_joint, encode_joint, load_quaternion_corpus, save_quaternion_corpus, QuaternionRecord};
pub use synthetic::{generate_synthetic, EmotionProfile, MotionChannel, SyntheticConfig};

use crate::descriptor::PoseSequence;
use crate::error::{Error, Result};
use crate::kinematics::SkeletonTopology;

/// Ordered list of emotion names; position defines the one-hot layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionVocabulary(Vec<String>);

impl EmotionVocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("emotion vocabulary is empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || names[..i].contains(n) {
                return Err(Error::Config(format!("invalid or duplicate emotion name {n:?}")));
            }
        }
        Ok(EmotionVocabulary(names))
    }

    /// joy, surprise, sadness.
    pub fn default_field() -> Self {
        EmotionVocabulary(vec!["joy".into(), "surprise".into(), "sadness".into()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.0
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownEmotion(name.to_string()))
    }
}

/// One-hot emotion context.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionContext {
    vocabulary: Arc<EmotionVocabulary>,
    index: usize,
}

impl EmotionContext {
    pub fn new(vocabulary: Arc<EmotionVocabulary>, name: &str) -> Result<Self> {
        let index = vocabulary.index_of(name)?;
        Ok(EmotionContext { vocabulary, index })
    }

    pub fn from_index(vocabulary: Arc<EmotionVocabulary>, index: usize) -> Result<Self> {
        if index >= vocabulary.len() {
            return Err(Error::Dimension {
                what: "emotion index bound",
                expected: vocabulary.len(),
                actual: index,
            });
        }
        Ok(EmotionContext { vocabulary, index })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.vocabulary.names()[self.index]
    }

    pub fn vocabulary(&self) -> &Arc<EmotionVocabulary> {
        &self.vocabulary
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.vocabulary.len()];
        v[self.index] = 1.0;
        v
    }
}

/// Ground-truth intensity in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IntensityLabel(f64);

impl IntensityLabel {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Label(format!("intensity {value} is outside [0, 1]")));
        }
        Ok(IntensityLabel(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fraction of annotator votes that match the intended emotion.
///
/// `perceived` is a multiset: one entry per annotator vote.
pub fn derive_intensity<S: AsRef<str>>(intended: &str, perceived: &[S]) -> Result<IntensityLabel> {
    if perceived.is_empty() {
        return Err(Error::Label("perceived label set is empty".into()));
    }
    let hits = perceived.iter().filter(|p| p.as_ref() == intended).count();
    IntensityLabel::new(hits as f64 / perceived.len() as f64)
}

/// A pose sequence with its emotion context and intensity label.
///
/// `source` identifies the recording it came from; augmented variants keep
/// their parent's source so cross-validation can group them.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub id: String,
    pub source: String,
    pub sequence: PoseSequence,
    pub emotion: EmotionContext,
    pub intensity: IntensityLabel,
}

/// A corpus: shared header data plus records.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub topology: Arc<SkeletonTopology>,
    pub sample_rate: f64,
    pub vocabulary: Arc<EmotionVocabulary>,
    pub records: Vec<LabeledSequence>,
}

impl Corpus {
    pub fn empty(topology: Arc<SkeletonTopology>, sample_rate: f64, vocabulary: Arc<EmotionVocabulary>) -> Self {
        Corpus {
            topology,
            sample_rate,
            vocabulary,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mirror + phase-subsample augmentation of every record.
    pub fn augmented(&self, target_rate: f64) -> Result<Corpus> {
        Ok(Corpus {
            topology: self.topology.clone(),
            sample_rate: target_rate,
            vocabulary: self.vocabulary.clone(),
            records: crate::descriptor::augment(&self.records, target_rate)?,
        })
    }

    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            topology: self.topology.clone(),
            sample_rate: self.sample_rate,
            vocabulary: self.vocabulary.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}
