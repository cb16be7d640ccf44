use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use super::*;
use crate::dataset::{generate_synthetic, EmotionVocabulary, SyntheticConfig};
use crate::descriptor::mapping::kinect_v2_topology;
use crate::kinematics::testutil::{random_transform, seeded};
use crate::kinematics::SkeletonTopology;
use crate::model::{forward, ModelParams};

fn model() -> Arc<TrainedModel> {
    let topology = Arc::new(SkeletonTopology::canonical());
    let params = ModelParams::initialized(39, 3, 16, 24, &mut seeded(5));
    Arc::new(TrainedModel::new(params, topology, Arc::new(EmotionVocabulary::default_field())).unwrap())
}

fn canonical_session(config: StreamConfig) -> Session {
    Session::new(model(), JointMapping::profile("canonical").unwrap(), config).unwrap()
}

fn config(window: usize, hop: Option<usize>) -> StreamConfig {
    StreamConfig {
        window,
        hop,
        ..StreamConfig::default()
    }
}

fn stored_sequences() -> crate::dataset::Corpus {
    let cfg = SyntheticConfig {
        sequence_count: 4,
        min_len: 20,
        max_len: 40,
        ..SyntheticConfig::default()
    };
    generate_synthetic(&cfg, 11).unwrap()
}

#[test]
fn classify_examples() {
    let t = classify_level(0.2, 0.5, "joy");
    assert_eq!((t.level, t.action), (Level::Weak, ActionClass::Speech));
    let t = classify_level(0.5, 0.5, "sadness");
    assert_eq!((t.level, t.action), (Level::Strong, ActionClass::Gesture));
    assert_eq!(t.emotion, "sadness");
}

#[test]
fn threshold_sweep_flips_once() {
    for &y in &[0.0, 0.13, 0.5, 0.77, 0.999] {
        let levels: Vec<Level> = (1..1000)
            .map(|i| classify_level(y, i as f64 / 1000.0, "joy").level)
            .collect();
        let flips = levels.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(flips <= 1);
        assert_eq!(levels[0] == Level::Strong, y >= 0.001);
    }
}

#[test]
fn nothing_before_the_window_fills() {
    let corpus = stored_sequences();
    let msgs = FrameMessage::replay(&corpus.records[0].sequence, None);
    let mut s = canonical_session(config(msgs.len(), None));
    for m in &msgs[..msgs.len() - 1] {
        assert!(s.push(m).unwrap().is_none());
    }
    assert!(s.push(&msgs[msgs.len() - 1]).unwrap().is_some());
}

#[test]
fn whole_sequence_window_matches_batch_forward() {
    let model = model();
    for rec in &stored_sequences().records {
        let msgs = FrameMessage::replay(&rec.sequence, Some(rec.emotion.name()));
        let mut s = Session::new(model.clone(), JointMapping::profile("canonical").unwrap(), config(msgs.len(), None))
            .unwrap();
        let outs: Vec<_> = msgs.iter().filter_map(|m| s.push(m).unwrap()).collect();
        assert_eq!(outs.len(), 1);
        let batch = forward(&model.params, &rec.sequence, &rec.emotion).unwrap().value();
        assert!((outs[0].intensity - batch).abs() <= 1e-12, "{} vs {batch}", outs[0].intensity);
        assert_eq!(outs[0].emotion, rec.emotion.name());
    }
}

#[test]
fn kinect_frames_match_mapped_batch_forward() {
    let model = model();
    let mapping = JointMapping::kinect_v2();
    let mut rng = seeded(8);
    let frames: Vec<Vec<LocalTransform>> = (0..12)
        .map(|_| (0..25).map(|_| random_transform(&mut rng)).collect())
        .collect();
    let msgs: Vec<FrameMessage> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| FrameMessage::from_locals(33 * i as u64, f, Some("surprise")))
        .collect();
    let mut s = Session::new(model.clone(), mapping.clone(), config(12, None)).unwrap();
    let out: Vec<_> = msgs.iter().filter_map(|m| s.push(m).unwrap()).collect();

    let described: Vec<PoseFrame> = msgs
        .iter()
        .map(|m| {
            let locals: Vec<_> = m.joints.iter().map(|j| decode_joint(j).unwrap()).collect();
            describe_frame(&model.topology, &mapping.map_locals(&locals).unwrap()).unwrap()
        })
        .collect();
    let expected = forward_frames(&model.params, &described, &[0.0, 1.0, 0.0]).unwrap().value();
    assert_eq!(out.len(), 1);
    assert!((out[0].intensity - expected).abs() <= 1e-12);
    assert_eq!(kinect_v2_topology().joint_count(), 25);
}

#[test]
fn constant_frame_gives_constant_estimates() {
    let seq = &stored_sequences().records[0].sequence;
    let locals = seq.frame_locals(3, RigidTransform::identity());
    let mut s = canonical_session(config(8, Some(1)));
    let outs: Vec<f64> = (0..30)
        .filter_map(|i| s.push(&FrameMessage::from_locals(i * 33, &locals, None)).unwrap())
        .map(|o| o.intensity)
        .collect();
    assert_eq!(outs.len(), 23);
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn hop_schedule() {
    let seq = &stored_sequences().records[1].sequence;
    let msgs = FrameMessage::replay(seq, None);
    let mut s = canonical_session(config(5, Some(3)));
    let emitted: Vec<usize> = msgs
        .iter()
        .take(14)
        .enumerate()
        .filter_map(|(i, m)| s.push(m).unwrap().map(|_| i + 1))
        .collect();
    assert_eq!(emitted, vec![5, 8, 11, 14]);
}

#[test]
fn emotion_persists_until_changed() {
    let seq = &stored_sequences().records[0].sequence;
    let mut msgs = FrameMessage::replay(seq, Some("sadness"));
    msgs[6].emotion = Some("surprise".into());
    let mut s = canonical_session(config(2, Some(2)));
    let names: Vec<String> = msgs
        .iter()
        .take(10)
        .filter_map(|m| s.push(m).unwrap())
        .map(|o| o.emotion)
        .collect();
    assert_eq!(names, ["sadness", "sadness", "sadness", "surprise", "surprise"]);

    let fresh = canonical_session(StreamConfig::default());
    assert_eq!(fresh.emotion().name(), "joy");
}

#[test]
fn rejected_frames_leave_the_session_unchanged() {
    let seq = &stored_sequences().records[0].sequence;
    let msgs = FrameMessage::replay(seq, None);
    let mut reference = canonical_session(config(4, Some(1)));
    let mut s = canonical_session(config(4, Some(1)));
    for m in &msgs[..3] {
        reference.push(m).unwrap();
        s.push(m).unwrap();
    }
    let mut stale = msgs[3].clone();
    stale.t_ms = msgs[2].t_ms;
    assert!(matches!(s.push(&stale), Err(Error::Stream(_))));
    let mut unknown = msgs[3].clone();
    unknown.emotion = Some("anger".into());
    assert!(matches!(s.push(&unknown), Err(Error::UnknownEmotion(_))));
    let mut skewed = msgs[3].clone();
    skewed.joints[4][0] *= 1.01;
    assert!(matches!(s.push(&skewed), Err(Error::Stream(_))));
    let mut short = msgs[3].clone();
    short.joints.pop();
    assert!(matches!(s.push(&short), Err(Error::Dimension { .. })));

    let a = reference.push(&msgs[3]).unwrap().unwrap();
    let b = s.push(&msgs[3]).unwrap().unwrap();
    assert_eq!(a, b);
}

#[test]
fn slightly_off_unit_quaternions_are_accepted() {
    let seq = &stored_sequences().records[0].sequence;
    let mut msg = FrameMessage::replay(seq, None).remove(0);
    for j in &mut msg.joints {
        for v in &mut j[..4] {
            *v *= 1.0005;
        }
    }
    let mut s = canonical_session(config(1, None));
    assert!(s.push(&msg).unwrap().is_some());
}

#[test]
fn session_rejects_bad_setup() {
    assert!(matches!(
        Session::new(model(), JointMapping::profile("canonical").unwrap(), config(0, None)),
        Err(Error::Config(_))
    ));
    let bad_threshold = StreamConfig {
        threshold: 1.0,
        ..StreamConfig::default()
    };
    assert!(Session::new(model(), JointMapping::kinect_v2(), bad_threshold).is_err());
    let unknown = StreamConfig {
        initial_emotion: Some("anger".into()),
        ..StreamConfig::default()
    };
    assert!(Session::new(model(), JointMapping::kinect_v2(), unknown).is_err());
}

fn transcript_input(window: usize) -> (String, usize) {
    let seq = &stored_sequences().records[2].sequence;
    let mut text = String::new();
    for (i, m) in FrameMessage::replay(seq, Some("joy")).iter().enumerate() {
        text.push_str(&serde_json::to_string(m).unwrap());
        text.push('\n');
        if i == 1 {
            text.push_str("{not json}\n\n");
        }
    }
    (text, seq.len() - window + 1)
}

#[test]
fn line_protocol_reports_bad_lines_and_continues() {
    let (input, expected) = transcript_input(10);
    let mut s = canonical_session(config(10, Some(1)));
    let mut out = Vec::new();
    let summary = run_lines(&mut s, input.as_bytes(), &mut out).unwrap();
    assert_eq!(summary.estimates, expected);
    assert_eq!(summary.rejected, 1);
    let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
    let err: StreamError = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(err.line, 3);
    let est: StreamOutput = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(est.v, STREAM_SCHEMA_VERSION);
    assert_eq!(summary.latency.frames, summary.lines - summary.rejected);
}

#[test]
fn tcp_sessions_are_independent() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let m = model();
    let server = std::thread::spawn(move || {
        serve_tcp(
            listener,
            move || Session::new(m.clone(), JointMapping::profile("canonical").unwrap(), config(10, Some(1))),
            Some(2),
        )
    });
    let (input, expected) = transcript_input(10);
    let mut replies = Vec::new();
    for _ in 0..2 {
        let mut conn = TcpStream::connect(addr).unwrap();
        conn.write_all(input.as_bytes()).unwrap();
        conn.shutdown(std::net::Shutdown::Write).unwrap();
        let lines: Vec<String> = BufReader::new(conn).lines().map(Result::unwrap).collect();
        replies.push(lines);
    }
    let summaries = server.join().unwrap().unwrap();
    assert_eq!(summaries.len(), 2);
    assert_eq!(replies[0], replies[1]);
    assert_eq!(replies[0].len(), expected + 1);
}
