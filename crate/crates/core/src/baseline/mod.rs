//! Handcrafted motion features and a linear support-vector regressor.
//!
//! Features are computed from joint positions, so unlike the descriptor
//! they depend on bone lengths. Layout, in order:
//!
//! * speed mean and max per joint (`m/s`)
//! * acceleration-magnitude mean and max per joint (`m/s^2`)
//! * hinge-angle mean and standard deviation per joint that has a parent
//!   and at least one child (angle between the incoming bone and the bone
//!   to its first child, radians)
//! * bounding-box volume mean and max over frames (`m^3`)

mod svr;

use nalgebra::Vector3;

pub use svr::{load_baseline, save_baseline, BaselineModel, SvrConfig, SvrRegressor, SVR_KIND};

use crate::descriptor::PoseSequence;
use crate::error::{Error, Result};
use crate::kinematics::{joint_positions, RigidTransform, SkeletonTopology};

/// Fixed-length sequence-level feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `(joint, child)` pairs that define hinge angles.
fn hinges(topology: &SkeletonTopology) -> Vec<(usize, usize)> {
    topology
        .traversal_order()
        .iter()
        .filter(|&&j| topology.parent(j).is_some())
        .filter_map(|&j| topology.children(j).first().map(|&c| (j, c)))
        .collect()
}

pub fn feature_names(topology: &SkeletonTopology) -> Vec<String> {
    let names = topology.names();
    let mut out = Vec::new();
    for stat in ["speed_mean", "speed_max", "accel_mean", "accel_max"] {
        out.extend(names.iter().map(|n| format!("{n}.{stat}")));
    }
    for stat in ["angle_mean", "angle_std"] {
        out.extend(hinges(topology).iter().map(|&(j, _)| format!("{}.{stat}", names[j])));
    }
    out.push("expansion_mean".into());
    out.push("expansion_max".into());
    out
}

fn mean_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
    for v in values {
        sum += v;
        max = max.max(v);
        n += 1;
    }
    (sum / n as f64, max)
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0).acos()
}

fn box_volume(frame: &[Vector3<f64>]) -> f64 {
    let mut lo = frame[0];
    let mut hi = frame[0];
    for p in frame {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let size = hi - lo;
    size.x * size.y * size.z
}

/// Features from per-frame joint positions in topology index order.
pub fn extract_features(
    topology: &SkeletonTopology,
    positions: &[Vec<Vector3<f64>>],
    sample_rate: f64,
) -> Result<FeatureVector> {
    let n = positions.len();
    if n < 3 {
        return Err(Error::Feature(format!("need at least 3 frames, got {n}")));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::Rate(format!("sample rate {sample_rate} must be positive")));
    }
    let joints = topology.joint_count();
    if let Some(bad) = positions.iter().find(|f| f.len() != joints) {
        return Err(Error::Dimension {
            what: "joint positions per frame",
            expected: joints,
            actual: bad.len(),
        });
    }

    let mut speed_mean = Vec::with_capacity(joints);
    let mut speed_max = Vec::with_capacity(joints);
    let mut accel_mean = Vec::with_capacity(joints);
    let mut accel_max = Vec::with_capacity(joints);
    for j in 0..joints {
        let (m, x) = mean_max((1..n).map(|t| (positions[t][j] - positions[t - 1][j]).norm() * sample_rate));
        speed_mean.push(m);
        speed_max.push(x);
        let (m, x) = mean_max((1..n - 1).map(|t| {
            (positions[t + 1][j] - 2.0 * positions[t][j] + positions[t - 1][j]).norm() * sample_rate * sample_rate
        }));
        accel_mean.push(m);
        accel_max.push(x);
    }

    let mut angle_mean = Vec::new();
    let mut angle_std = Vec::new();
    for (j, c) in hinges(topology) {
        let p = topology.parent(j).expect("hinge joints have parents");
        let angles: Vec<f64> = positions
            .iter()
            .map(|f| angle_between(&(f[j] - f[p]), &(f[c] - f[j])))
            .collect();
        let mean = angles.iter().sum::<f64>() / n as f64;
        let var = angles.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        angle_mean.push(mean);
        angle_std.push(var.sqrt());
    }

    let (exp_mean, exp_max) = mean_max(positions.iter().map(|f| box_volume(f)));

    let mut out = Vec::new();
    for part in [speed_mean, speed_max, accel_mean, accel_max, angle_mean, angle_std] {
        out.extend(part);
    }
    out.push(exp_mean);
    out.push(exp_max);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector".into()));
    }
    Ok(FeatureVector(out))
}

/// Positions rebuilt from the descriptor with the topology's rest offsets
/// and the root at the origin.
pub fn sequence_positions(seq: &PoseSequence) -> Result<Vec<Vec<Vector3<f64>>>> {
    (0..seq.len())
        .map(|f| joint_positions(seq.topology(), &seq.frame_locals(f, RigidTransform::identity())))
        .collect()
}

pub fn sequence_features(seq: &PoseSequence) -> Result<FeatureVector> {
    extract_features(seq.topology(), &sequence_positions(seq)?, seq.sample_rate())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::kinematics::testutil::seeded;

    fn chain(n: usize) -> SkeletonTopology {
        let names = (0..n).map(|i| format!("j{i}")).collect();
        let parents = (0..n).map(|i| i.checked_sub(1)).collect();
        SkeletonTopology::new(names, parents, vec![]).unwrap()
    }

    fn random_positions(rng: &mut impl Rng, frames: usize, joints: usize) -> Vec<Vec<Vector3<f64>>> {
        (0..frames)
            .map(|_| {
                (0..joints)
                    .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn layout_matches_names() {
        let t = SkeletonTopology::canonical();
        let f = sequence_features(&crate::descriptor::testutil::random_sequence(
            &mut seeded(1),
            &std::sync::Arc::new(t.clone()),
            5,
            30.0,
        ))
        .unwrap();
        assert_eq!(f.values().len(), feature_names(&t).len());
        assert_eq!(f.values().len(), 4 * 14 + 2 * 8 + 2);
    }

    #[test]
    fn static_pose_has_no_motion() {
        let t = chain(3);
        let frame = vec![Vector3::zeros(), Vector3::new(1.0, 2.0, 0.5), Vector3::new(2.0, 1.0, 1.0)];
        let f = extract_features(&t, &vec![frame; 10], 30.0).unwrap();
        let v = f.values();
        assert!(v[..12].iter().all(|&x| x == 0.0));
        assert_eq!(v[v.len() - 2], 2.0 * 2.0 * 1.0);
        assert_eq!(v[v.len() - 1], 4.0);
    }

    #[test]
    fn constant_velocity_speed() {
        let t = chain(2);
        let frames: Vec<_> = (0..10)
            .map(|i| vec![Vector3::zeros(), Vector3::new(0.1 * i as f64, 0.0, 0.0)])
            .collect();
        let v = extract_features(&t, &frames, 30.0).unwrap();
        assert!((v.values()[1] - 3.0).abs() < 1e-12);
        assert!(v.values()[5] < 1e-9);
    }

    #[test]
    fn speeds_match_finite_differences() {
        let t = chain(4);
        let mut rng = seeded(2);
        let pos = random_positions(&mut rng, 12, 4);
        let v = extract_features(&t, &pos, 60.0).unwrap();
        for j in 0..4 {
            let mut speeds = Vec::new();
            for k in 1..12 {
                let d = pos[k][j] - pos[k - 1][j];
                speeds.push((d.x * d.x + d.y * d.y + d.z * d.z).sqrt() * 60.0);
            }
            let mean = speeds.iter().sum::<f64>() / 11.0;
            let max = speeds.iter().cloned().fold(f64::MIN, f64::max);
            assert!((v.values()[j] - mean).abs() < 1e-12);
            assert!((v.values()[4 + j] - max).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_leaves_features_unchanged() {
        let t = chain(5);
        let mut rng = seeded(3);
        let pos = random_positions(&mut rng, 8, 5);
        let shift = Vector3::new(3.0, -7.0, 11.0);
        let moved: Vec<Vec<_>> = pos.iter().map(|f| f.iter().map(|p| p + shift).collect()).collect();
        let a = extract_features(&t, &pos, 30.0).unwrap();
        let b = extract_features(&t, &moved, 30.0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn short_sequences_are_rejected() {
        let t = chain(2);
        let frames = vec![vec![Vector3::zeros(); 2]; 2];
        assert!(matches!(extract_features(&t, &frames, 30.0), Err(Error::Feature(_))));
    }
}
