//! Grouped cross-validation and Pearson correlation.
//!
//! A report serializes to JSON with this layout:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "k": 5, "seed": 0, "item_count": 1447,
//!   "folds": [{"fold": 0, "train_count": .., "test_count": .., "test_sources": ..}],
//!   "methods": [{
//!     "name": "lstm",
//!     "settings": {..},
//!     "fold_pearson": [0.61, null, ..],
//!     "fold_errors": [null, "undefined correlation: ..", ..],
//!     "mean_pearson": 0.63 | null
//!   }]
//! }
//! ```
//!
//! `mean_pearson` is null when any fold has an undefined correlation.
//! Predictions go to a separate CSV with header
//! `id,emotion,label,prediction,method,fold`, one row per test item and
//! method, ordered by fold, then method, then record index.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::baseline::{BaselineModel, SvrConfig};
use crate::dataset::{kfold_split, Corpus};
use crate::error::{Error, Result};
use crate::model::{examples, fit, Example, TrainConfig};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Pearson correlation coefficient, computed in two passes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            what: "correlation inputs",
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("{} paired values", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if !r.is_finite() {
        return Err(Error::NonFinite("correlation".into()));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// An estimator that can be trained on one corpus and scored on another.
pub trait Method {
    fn name(&self) -> &str;

    /// Settings recorded in the report.
    fn settings(&self) -> serde_json::Value;

    /// Predictions for `test.records`, in order.
    fn fit_predict(&self, train: &Corpus, test: &Corpus) -> Result<Vec<f64>>;
}

/// The recurrent estimator. With `blind` set the emotion vector is zeroed
/// for both training and prediction.
#[derive(Debug, Clone)]
pub struct LstmMethod {
    pub name: String,
    pub config: TrainConfig,
    pub blind: bool,
}

impl LstmMethod {
    pub fn new(config: TrainConfig) -> Self {
        LstmMethod {
            name: "lstm".into(),
            config,
            blind: false,
        }
    }

    pub fn blind(config: TrainConfig) -> Self {
        LstmMethod {
            name: "lstm-blind".into(),
            config,
            blind: true,
        }
    }

    fn examples(&self, corpus: &Corpus) -> Vec<Example> {
        let mut ex = examples(&corpus.records);
        if self.blind {
            for e in &mut ex {
                e.emotion.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        ex
    }
}

impl Method for LstmMethod {
    fn name(&self) -> &str {
        &self.name
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({ "train": self.config, "blind": self.blind })
    }

    fn fit_predict(&self, train: &Corpus, test: &Corpus) -> Result<Vec<f64>> {
        let input_dim = 3 * (train.topology.joint_count() - 1);
        let (params, _) = fit(&self.examples(train), input_dim, train.vocabulary.len(), &self.config)?;
        let ex = self.examples(test);
        let inputs: Vec<_> = ex.iter().map(Example::as_input).collect();
        params.predict(&inputs)
    }
}

/// The handcrafted-feature regressor.
#[derive(Debug, Clone, Default)]
pub struct SvrMethod {
    pub config: SvrConfig,
}

impl Method for SvrMethod {
    fn name(&self) -> &str {
        "svr"
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({ "svr": self.config })
    }

    fn fit_predict(&self, train: &Corpus, test: &Corpus) -> Result<Vec<f64>> {
        let model = BaselineModel::fit(
            train.topology.clone(),
            train.vocabulary.clone(),
            &train.records,
            &self.config,
        )?;
        test.records.iter().map(|r| model.predict(&r.sequence)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub test_sources: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub name: String,
    pub settings: serde_json::Value,
    pub fold_pearson: Vec<Option<f64>>,
    pub fold_errors: Vec<Option<String>>,
    pub mean_pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub id: String,
    pub emotion: String,
    pub label: f64,
    pub prediction: f64,
    pub method: String,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub k: usize,
    pub seed: u64,
    pub item_count: usize,
    pub folds: Vec<FoldSummary>,
    pub methods: Vec<MethodSummary>,
    #[serde(skip)]
    pub predictions: Vec<PredictionRow>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn write_predictions<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.predictions {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("predictions", e))?;
        Ok(())
    }

    pub fn write_predictions_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_predictions(std::io::BufWriter::new(file))
    }
}

/// Runs every method on every fold of a grouped k-fold split.
///
/// Training and prediction errors abort the run with the fold index
/// attached. An undefined correlation is recorded for that fold instead.
pub fn cross_validate(corpus: &Corpus, k: usize, methods: &[&dyn Method], seed: u64) -> Result<EvalReport> {
    let folds = kfold_split(&corpus.records, k, seed)?;
    let mut summaries: Vec<MethodSummary> = methods
        .iter()
        .map(|m| MethodSummary {
            name: m.name().to_string(),
            settings: m.settings(),
            fold_pearson: Vec::new(),
            fold_errors: Vec::new(),
            mean_pearson: None,
        })
        .collect();
    let mut fold_info = Vec::with_capacity(folds.len());
    let mut predictions = Vec::new();

    for (f, fold) in folds.iter().enumerate() {
        let train_sources: BTreeSet<&str> = fold.train.iter().map(|&i| corpus.records[i].source.as_str()).collect();
        let test_sources: BTreeSet<&str> = fold.test.iter().map(|&i| corpus.records[i].source.as_str()).collect();
        assert!(
            train_sources.is_disjoint(&test_sources),
            "fold {f}: a source appears in both train and test"
        );
        fold_info.push(FoldSummary {
            fold: f,
            train_count: fold.train.len(),
            test_count: fold.test.len(),
            test_sources: test_sources.len(),
        });
        let train = corpus.subset(&fold.train);
        let test = corpus.subset(&fold.test);
        let labels: Vec<f64> = test.records.iter().map(|r| r.intensity.value()).collect();

        for (method, summary) in methods.iter().zip(&mut summaries) {
            log::info!("fold {}/{}: {}", f + 1, folds.len(), method.name());
            let fold_err = |e: Error| Error::Fold {
                fold: f,
                source: Box::new(e),
            };
            let pred = method.fit_predict(&train, &test).map_err(fold_err)?;
            if pred.len() != labels.len() {
                return Err(fold_err(Error::Dimension {
                    what: "prediction count",
                    expected: labels.len(),
                    actual: pred.len(),
                }));
            }
            match pearson(&pred, &labels) {
                Ok(r) => {
                    summary.fold_pearson.push(Some(r));
                    summary.fold_errors.push(None);
                }
                Err(e @ Error::UndefinedCorrelation(_)) => {
                    log::warn!("fold {f}, {}: {e}", method.name());
                    summary.fold_pearson.push(None);
                    summary.fold_errors.push(Some(e.to_string()));
                }
                Err(e) => return Err(fold_err(e)),
            }
            for (rec, &p) in test.records.iter().zip(&pred) {
                predictions.push(PredictionRow {
                    id: rec.id.clone(),
                    emotion: rec.emotion.name().to_string(),
                    label: rec.intensity.value(),
                    prediction: p,
                    method: method.name().to_string(),
                    fold: f,
                });
            }
        }
    }
    for s in &mut summaries {
        let defined: Option<Vec<f64>> = s.fold_pearson.iter().copied().collect();
        s.mean_pearson = defined.map(|v| v.iter().sum::<f64>() / v.len() as f64);
    }
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        k,
        seed,
        item_count: corpus.len(),
        folds: fold_info,
        methods: summaries,
        predictions,
    })
}
