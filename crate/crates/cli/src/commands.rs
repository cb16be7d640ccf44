use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kinemo::baseline::{load_baseline, save_baseline, BaselineModel, SvrConfig, SVR_KIND};
use kinemo::dataset::{
    convert_quaternion_corpus, generate_synthetic, load_corpus, load_quaternion_corpus, save_corpus,
    EmotionVocabulary, SyntheticConfig,
};
use kinemo::descriptor::mapping::MappingRecord;
use kinemo::descriptor::JointMapping;
use kinemo::evaluation::{cross_validate, LstmMethod, Method, SvrMethod};
use kinemo::model::checkpoint::{read_file, LSTM_KIND};
use kinemo::model::{load_checkpoint, save_checkpoint, train, TrainConfig};
use kinemo::streaming::{classify_level, run_lines, serve_tcp, Session, StreamConfig};
use kinemo::{Error, Result};

use crate::{
    AugmentArgs, Command, ConvertArgs, EvalArgs, InferArgs, StreamArgs, SynthArgs, TrainArgs, TrainFlags,
};

const CORPUS_FILE: &str = "corpus.jsonl";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Convert(a) => convert(a),
        Command::Augment(a) => augment(a),
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Infer(a) => infer(a),
        Command::Stream(a) => stream(a),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn read_mapping(path: &Path, source: Arc<kinemo::kinematics::SkeletonTopology>) -> Result<JointMapping> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: MappingRecord = serde_json::from_str(&text)?;
    JointMapping::from_record(source, &record)
}

fn convert(a: ConvertArgs) -> Result<()> {
    if let Some(p) = &a.profile {
        JointMapping::profile(p)?;
    }
    let mapping = match (&a.profile, &a.topology) {
        (Some(p), _) => Some(JointMapping::profile(p)?),
        (None, Some(file)) => {
            let (source, ..) = load_quaternion_corpus(&a.input)?;
            Some(read_mapping(file, source)?)
        }
        (None, None) => None,
    };
    let corpus = convert_quaternion_corpus(&a.input, mapping.as_ref())?;
    out_dir(&a.out)?;
    save_corpus(&corpus, a.out.join(CORPUS_FILE))?;
    log::info!("converted {} records", corpus.len());
    Ok(())
}

fn augment(a: AugmentArgs) -> Result<()> {
    if !(a.target_rate.is_finite() && a.target_rate > 0.0) {
        return Err(Error::Config(format!("--target-rate must be positive, got {}", a.target_rate)));
    }
    let corpus = load_corpus(&a.input)?;
    let augmented = corpus.augmented(a.target_rate)?;
    out_dir(&a.out)?;
    save_corpus(&augmented, a.out.join(CORPUS_FILE))?;
    log::info!("augmented {} records into {}", corpus.len(), augmented.len());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    EmotionVocabulary::new(a.emotions.clone())?;
    let cfg = SyntheticConfig {
        emotions: SyntheticConfig::profiles_for(&a.emotions),
        sequence_count: a.count,
        sample_rate: a.sample_rate,
        min_len: a.min_len,
        max_len: a.max_len,
        ..SyntheticConfig::default()
    };
    let corpus = generate_synthetic(&cfg, a.seed)?;
    out_dir(&a.out)?;
    save_corpus(&corpus, a.out.join(CORPUS_FILE))?;
    log::info!("wrote {} synthetic records", corpus.len());
    Ok(())
}

fn train_config(f: &TrainFlags) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        epochs: f.epochs,
        batch_size: f.batch_size,
        learning_rate: f.lr,
        seed: f.seed,
        hidden1: f.hidden1,
        hidden2: f.hidden2,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn svr_config(f: &TrainFlags) -> SvrConfig {
    SvrConfig {
        seed: f.seed,
        ..SvrConfig::default()
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = train_config(&a.train)?;
    if a.method != "lstm" && a.method != "svr" {
        return Err(Error::Config(format!("--method must be lstm or svr, got {:?}", a.method)));
    }
    let corpus = load_corpus(&a.input)?;
    out_dir(&a.out)?;
    let ckpt = a.out.join("model.ckpt");
    if a.method == "svr" {
        let svr = svr_config(&a.train);
        let model = BaselineModel::fit(corpus.topology.clone(), corpus.vocabulary.clone(), &corpus.records, &svr)?;
        return save_baseline(&model, ckpt);
    }
    let (model, log) = train(&corpus, &cfg)?;
    save_checkpoint(&model, &ckpt)?;
    let path = a.out.join("training.json");
    fs::write(&path, serde_json::to_string_pretty(&log)? + "\n").map_err(|e| Error::io(&path, e))
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = train_config(&a.train)?;
    if a.k < 2 {
        return Err(Error::Config(format!("--k must be at least 2, got {}", a.k)));
    }
    let mut methods: Vec<Box<dyn Method>> = Vec::new();
    for name in &a.methods {
        methods.push(match name.as_str() {
            "lstm" => Box::new(LstmMethod::new(cfg.clone())),
            "lstm-blind" => Box::new(LstmMethod::blind(cfg.clone())),
            "svr" => Box::new(SvrMethod {
                config: svr_config(&a.train),
            }),
            other => {
                return Err(Error::Config(format!(
                    "unknown method {other:?} (expected lstm, lstm-blind or svr)"
                )))
            }
        });
    }
    let corpus = load_corpus(&a.input)?;
    let refs: Vec<&dyn Method> = methods.iter().map(|m| m.as_ref()).collect();
    let report = cross_validate(&corpus, a.k, &refs, a.train.seed)?;
    out_dir(&a.out)?;
    report.write_json(&a.out.join("report.json"))?;
    report.write_predictions_csv(&a.out.join("predictions.csv"))?;
    for m in &report.methods {
        match m.mean_pearson {
            Some(r) => log::info!("{}: mean Pearson {r:.4}", m.name),
            None => log::info!("{}: mean Pearson undefined", m.name),
        }
    }
    Ok(())
}

enum Scorer {
    Lstm(kinemo::model::TrainedModel),
    Svr(BaselineModel),
}

fn load_scorer(path: &Path) -> Result<Scorer> {
    let (header, _) = read_file(path)?;
    match header.kind.as_str() {
        LSTM_KIND => Ok(Scorer::Lstm(load_checkpoint(path)?)),
        SVR_KIND => Ok(Scorer::Svr(load_baseline(path)?)),
        other => Err(Error::CheckpointShape(format!("unknown checkpoint kind {other:?}"))),
    }
}

#[derive(serde::Serialize)]
struct InferRow<'a> {
    id: &'a str,
    emotion: &'a str,
    label: f64,
    prediction: f64,
    level: kinemo::streaming::Level,
    action: kinemo::streaming::ActionClass,
}

fn infer(a: InferArgs) -> Result<()> {
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(Error::Config(format!("--threshold {} must lie in (0, 1)", a.threshold)));
    }
    let scorer = load_scorer(&a.model)?;
    let corpus = load_corpus(&a.input)?;
    let (topology, vocabulary) = match &scorer {
        Scorer::Lstm(m) => (&m.topology, &m.vocabulary),
        Scorer::Svr(m) => (&m.topology, &m.vocabulary),
    };
    if topology.names() != corpus.topology.names() || vocabulary.names() != corpus.vocabulary.names() {
        return Err(Error::CheckpointShape(
            "checkpoint skeleton or emotion vocabulary differs from the corpus".into(),
        ));
    }
    let predictions: Vec<f64> = match &scorer {
        Scorer::Lstm(m) => corpus
            .records
            .iter()
            .map(|r| Ok(m.estimate(&r.sequence, &r.emotion)?.value()))
            .collect::<Result<_>>()?,
        Scorer::Svr(m) => corpus
            .records
            .iter()
            .map(|r| m.predict(&r.sequence))
            .collect::<Result<_>>()?,
    };
    out_dir(&a.out)?;
    let path = a.out.join("predictions.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for (r, &y) in corpus.records.iter().zip(&predictions) {
        let tag = classify_level(y, a.threshold, r.emotion.name());
        w.serialize(InferRow {
            id: &r.id,
            emotion: r.emotion.name(),
            label: r.intensity.value(),
            prediction: y,
            level: tag.level,
            action: tag.action,
        })?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn stream(a: StreamArgs) -> Result<()> {
    let config = StreamConfig {
        window: a.window,
        hop: a.hop.0,
        threshold: a.threshold,
        initial_emotion: a.emotion.clone(),
    };
    config.validate()?;
    let profile = JointMapping::profile(&a.profile)?;
    let model = Arc::new(load_checkpoint(&a.model)?);
    let mapping = match &a.topology {
        Some(file) => read_mapping(file, profile.source().clone())?,
        None => profile,
    };
    let new_session = move || Session::new(model.clone(), mapping.clone(), config.clone());
    match &a.listen {
        Some(addr) => {
            new_session()?;
            let listener = TcpListener::bind(addr).map_err(|e| Error::io(PathBuf::from(addr), e))?;
            log::info!("listening on {addr}");
            serve_tcp(listener, new_session, None)?;
            Ok(())
        }
        None => {
            let mut session = new_session()?;
            let stdout = io::stdout();
            let summary = run_lines(&mut session, io::stdin().lock(), stdout.lock())?;
            stdout.lock().flush().map_err(|e| Error::io("stdout", e))?;
            eprintln!(
                "frames {} estimates {} rejected {} latency mean {:.3} ms max {:.3} ms",
                summary.lines,
                summary.estimates,
                summary.rejected,
                summary.latency.mean().as_secs_f64() * 1e3,
                summary.latency.max.as_secs_f64() * 1e3
            );
            Ok(())
        }
    }
}
