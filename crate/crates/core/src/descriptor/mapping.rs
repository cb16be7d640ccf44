//! Reduction of sensor skeletons onto the descriptor skeleton.
//!
//! A [`JointMapping`] names, for every joint of a target topology, the
//! source joint whose sensor-frame transform it takes over. Target locals
//! are then recovered by inverse kinematics on the target tree, so each
//! target rotation absorbs any intermediate source joints that were
//! skipped. The built-in tables are configuration; other tables can be
//! loaded from JSON.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    forward_kinematics, inverse_kinematics, LocalTransform, SkeletonTopology, TopologyRecord,
};

#[derive(Debug, Clone, PartialEq)]
pub struct JointMapping {
    source: Arc<SkeletonTopology>,
    target: Arc<SkeletonTopology>,
    source_of_target: Vec<usize>,
}

/// On-disk form: target topology plus `target joint -> source joint` names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRecord {
    pub target: TopologyRecord,
    pub joints: BTreeMap<String, String>,
}

impl JointMapping {
    pub fn new(
        source: Arc<SkeletonTopology>,
        target: Arc<SkeletonTopology>,
        pairs: &[(&str, &str)],
    ) -> Result<Self> {
        let mut source_of_target = vec![usize::MAX; target.joint_count()];
        for &(t, s) in pairs {
            let ti = target
                .index_of(t)
                .ok_or_else(|| Error::Topology(format!("mapping names unknown target joint {t:?}")))?;
            let si = source
                .index_of(s)
                .ok_or_else(|| Error::Topology(format!("mapping names unknown source joint {s:?}")))?;
            source_of_target[ti] = si;
        }
        if let Some(missing) = source_of_target.iter().position(|&s| s == usize::MAX) {
            return Err(Error::Topology(format!(
                "target joint {:?} has no source joint",
                target.names()[missing]
            )));
        }
        Ok(JointMapping {
            source,
            target,
            source_of_target,
        })
    }

    pub fn from_record(source: Arc<SkeletonTopology>, record: &MappingRecord) -> Result<Self> {
        let target = Arc::new(SkeletonTopology::from_record(&record.target)?);
        let pairs: Vec<(&str, &str)> = record
            .joints
            .iter()
            .map(|(t, s)| (t.as_str(), s.as_str()))
            .collect();
        JointMapping::new(source, target, &pairs)
    }

    pub fn source(&self) -> &Arc<SkeletonTopology> {
        &self.source
    }

    pub fn target(&self) -> &Arc<SkeletonTopology> {
        &self.target
    }

    /// Target local transforms from one frame of source local transforms.
    pub fn map_locals(&self, source_locals: &[LocalTransform]) -> Result<Vec<LocalTransform>> {
        let globals = forward_kinematics(&self.source, source_locals)?;
        let selected: Vec<_> = self.source_of_target.iter().map(|&s| globals[s]).collect();
        inverse_kinematics(&self.target, &selected)
    }

    /// Kinect v2 (25 joints) onto the canonical skeleton.
    pub fn kinect_v2() -> Self {
        JointMapping::new(
            Arc::new(kinect_v2_topology()),
            Arc::new(SkeletonTopology::canonical()),
            &[
                ("hips", "SpineBase"),
                ("spine", "SpineMid"),
                ("neck", "SpineShoulder"),
                ("head", "Head"),
                ("l_shoulder", "ShoulderLeft"),
                ("l_elbow", "ElbowLeft"),
                ("l_wrist", "WristLeft"),
                ("r_shoulder", "ShoulderRight"),
                ("r_elbow", "ElbowRight"),
                ("r_wrist", "WristRight"),
                ("l_hip", "HipLeft"),
                ("l_knee", "KneeLeft"),
                ("r_hip", "HipRight"),
                ("r_knee", "KneeRight"),
            ],
        )
        .expect("built-in kinect mapping is valid")
    }

    /// 23-joint motion-capture skeleton onto the canonical skeleton.
    pub fn mocap23() -> Self {
        JointMapping::new(
            Arc::new(mocap23_topology()),
            Arc::new(SkeletonTopology::canonical()),
            &[
                ("hips", "Hips"),
                ("spine", "Spine1"),
                ("neck", "Neck"),
                ("head", "Head"),
                ("l_shoulder", "LeftArm"),
                ("l_elbow", "LeftForeArm"),
                ("l_wrist", "LeftHand"),
                ("r_shoulder", "RightArm"),
                ("r_elbow", "RightForeArm"),
                ("r_wrist", "RightHand"),
                ("l_hip", "LeftUpLeg"),
                ("l_knee", "LeftLeg"),
                ("r_hip", "RightUpLeg"),
                ("r_knee", "RightLeg"),
            ],
        )
        .expect("built-in mocap mapping is valid")
    }

    /// Built-in mapping whose source joint names match `source` exactly.
    pub fn builtin_for(source: &SkeletonTopology) -> Option<Self> {
        [JointMapping::kinect_v2(), JointMapping::mocap23()]
            .into_iter()
            .find(|m| m.source.names() == source.names())
    }

    /// Looks up a built-in profile by name: `kinect25`, `mocap23` or
    /// `canonical` (identity mapping).
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "kinect25" => Ok(JointMapping::kinect_v2()),
            "mocap23" => Ok(JointMapping::mocap23()),
            "canonical" => {
                let t = Arc::new(SkeletonTopology::canonical());
                let names = t.names().to_vec();
                let pairs: Vec<(&str, &str)> = names.iter().map(|n| (n.as_str(), n.as_str())).collect();
                JointMapping::new(t.clone(), t, &pairs)
            }
            other => Err(Error::Config(format!(
                "unknown skeleton profile {other:?} (expected kinect25, mocap23 or canonical)"
            ))),
        }
    }
}

fn build(joints: &[(&str, Option<usize>)], pairs: Vec<(usize, usize)>) -> SkeletonTopology {
    SkeletonTopology::new(
        joints.iter().map(|j| j.0.to_string()).collect(),
        joints.iter().map(|j| j.1).collect(),
        pairs,
    )
    .expect("built-in topology is valid")
}

/// Kinect v2 body joints in sensor index order.
pub fn kinect_v2_topology() -> SkeletonTopology {
    build(
        &[
            ("SpineBase", None),
            ("SpineMid", Some(0)),
            ("Neck", Some(20)),
            ("Head", Some(2)),
            ("ShoulderLeft", Some(20)),
            ("ElbowLeft", Some(4)),
            ("WristLeft", Some(5)),
            ("HandLeft", Some(6)),
            ("ShoulderRight", Some(20)),
            ("ElbowRight", Some(8)),
            ("WristRight", Some(9)),
            ("HandRight", Some(10)),
            ("HipLeft", Some(0)),
            ("KneeLeft", Some(12)),
            ("AnkleLeft", Some(13)),
            ("FootLeft", Some(14)),
            ("HipRight", Some(0)),
            ("KneeRight", Some(16)),
            ("AnkleRight", Some(17)),
            ("FootRight", Some(18)),
            ("SpineShoulder", Some(1)),
            ("HandTipLeft", Some(7)),
            ("ThumbLeft", Some(7)),
            ("HandTipRight", Some(11)),
            ("ThumbRight", Some(11)),
        ],
        vec![
            (4, 8),
            (5, 9),
            (6, 10),
            (7, 11),
            (12, 16),
            (13, 17),
            (14, 18),
            (15, 19),
            (21, 23),
            (22, 24),
        ],
    )
}

/// A 23-joint motion-capture skeleton.
pub fn mocap23_topology() -> SkeletonTopology {
    build(
        &[
            ("Hips", None),
            ("Spine", Some(0)),
            ("Spine1", Some(1)),
            ("Spine2", Some(2)),
            ("Neck", Some(3)),
            ("Head", Some(4)),
            ("LeftShoulder", Some(3)),
            ("LeftArm", Some(6)),
            ("LeftForeArm", Some(7)),
            ("LeftHand", Some(8)),
            ("RightShoulder", Some(3)),
            ("RightArm", Some(10)),
            ("RightForeArm", Some(11)),
            ("RightHand", Some(12)),
            ("LeftUpLeg", Some(0)),
            ("LeftLeg", Some(14)),
            ("LeftFoot", Some(15)),
            ("LeftToeBase", Some(16)),
            ("RightUpLeg", Some(0)),
            ("RightLeg", Some(18)),
            ("RightFoot", Some(19)),
            ("RightToeBase", Some(20)),
            ("HeadEnd", Some(5)),
        ],
        vec![
            (6, 10),
            (7, 11),
            (8, 12),
            (9, 13),
            (14, 18),
            (15, 19),
            (16, 20),
            (17, 21),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::testutil::*;
    use crate::kinematics::RigidTransform;

    #[test]
    fn builtin_profiles_have_expected_sizes() {
        assert_eq!(JointMapping::kinect_v2().source().joint_count(), 25);
        assert_eq!(JointMapping::mocap23().source().joint_count(), 23);
        assert_eq!(JointMapping::kinect_v2().target().joint_count(), 14);
        assert!(JointMapping::profile("nope").is_err());
    }

    #[test]
    fn identity_mapping_preserves_locals() {
        let m = JointMapping::profile("canonical").unwrap();
        let mut rng = seeded(60);
        let locals: Vec<_> = (0..14).map(|_| random_transform(&mut rng)).collect();
        let mapped = m.map_locals(&locals).unwrap();
        for (a, b) in locals.iter().zip(&mapped) {
            assert!((a.to_homogeneous() - b.to_homogeneous()).amax() < 1e-9);
        }
    }

    #[test]
    fn mapped_globals_agree_with_source_globals() {
        let m = JointMapping::kinect_v2();
        let mut rng = seeded(61);
        let locals: Vec<_> = (0..25).map(|_| random_transform(&mut rng)).collect();
        let source_globals = forward_kinematics(m.source(), &locals).unwrap();
        let target_globals = forward_kinematics(m.target(), &m.map_locals(&locals).unwrap()).unwrap();
        for (t, &s) in m.source_of_target.iter().enumerate() {
            let d = target_globals[t].to_homogeneous() - source_globals[s].to_homogeneous();
            assert!(d.amax() < 1e-9);
        }
    }

    #[test]
    fn identity_source_pose_maps_to_identity_rotations() {
        let m = JointMapping::mocap23();
        let mapped = m.map_locals(&[RigidTransform::identity(); 23]).unwrap();
        for l in mapped {
            assert!((l.rotation.matrix() - nalgebra::Matrix3::identity()).amax() < 1e-15);
        }
    }

    #[test]
    fn record_with_missing_joint_is_rejected() {
        let source = Arc::new(kinect_v2_topology());
        let record = MappingRecord {
            target: SkeletonTopology::canonical().to_record(),
            joints: [("hips".to_string(), "SpineBase".to_string())].into_iter().collect(),
        };
        assert!(matches!(JointMapping::from_record(source, &record), Err(Error::Topology(_))));
    }
}
