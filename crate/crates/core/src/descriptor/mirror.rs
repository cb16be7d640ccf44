use crate::kinematics::{EulerAngles, Rotation};

use super::{PoseFrame, PoseSequence};

/// Swaps the left and right sides of every pose.
///
/// Each local rotation is conjugated by the sagittal reflection
/// `M = diag(-1, 1, 1)` and moved to its mirror partner's column; joints
/// without a partner are reflected in place. Euler angles are re-extracted
/// from the reflected matrices.
pub fn mirror_swap(seq: &PoseSequence) -> PoseSequence {
    let topology = seq.topology();
    let joints = topology.descriptor_joints();
    let mut column_of = vec![usize::MAX; topology.joint_count()];
    for (c, &j) in joints.iter().enumerate() {
        column_of[j] = c;
    }
    let target: Vec<usize> = joints
        .iter()
        .map(|&j| column_of[topology.mirror_of(j).unwrap_or(j)])
        .collect();

    let frames = seq
        .frames()
        .iter()
        .map(|frame| {
            let mut columns = vec![[0.0; 3]; frame.width()];
            for (c, col) in frame.columns().iter().enumerate() {
                let r = Rotation::from_euler(EulerAngles::from_array(*col)).reflect_x();
                columns[target[c]] = r.to_euler().to_array();
            }
            PoseFrame { columns }
        })
        .collect();

    PoseSequence {
        frames,
        sample_rate: seq.sample_rate(),
        topology: topology.clone(),
        source: seq.source().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::descriptor::testutil::random_sequence;
    use crate::kinematics::testutil::seeded;
    use crate::kinematics::{joint_positions, RigidTransform, SkeletonTopology};

    fn canonical() -> Arc<SkeletonTopology> {
        Arc::new(SkeletonTopology::canonical())
    }

    #[test]
    fn mirroring_twice_is_identity() {
        let t = canonical();
        let mut rng = seeded(50);
        for _ in 0..20 {
            let s = random_sequence(&mut rng, &t, 5, 30.0);
            let back = mirror_swap(&mirror_swap(&s));
            for (a, b) in s.frames().iter().zip(back.frames()) {
                for (x, y) in a.columns().iter().flatten().zip(b.columns().iter().flatten()) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_sequence_is_symmetric() {
        let t = canonical();
        let s = PoseSequence::new(vec![PoseFrame::zeros(13); 3], 30.0, t, "z").unwrap();
        assert_eq!(mirror_swap(&s), s);
    }

    #[test]
    fn left_elbow_roll_moves_to_right_elbow() {
        let t = canonical();
        let mut cols = vec![[0.0; 3]; 13];
        let l_elbow = t.descriptor_joints().iter().position(|&j| j == 5).unwrap();
        let r_elbow = t.descriptor_joints().iter().position(|&j| j == 8).unwrap();
        cols[l_elbow][0] = 0.5;
        let s = PoseSequence::new(vec![PoseFrame::new(cols).unwrap()], 30.0, t.clone(), "e").unwrap();
        let m = mirror_swap(&s);
        for (c, col) in m.frames()[0].columns().iter().enumerate() {
            if c == r_elbow {
                assert!((col[0] - 0.5).abs() < 1e-12 && col[1].abs() < 1e-12 && col[2].abs() < 1e-12);
            } else {
                assert_eq!(*col, [0.0; 3]);
            }
        }
        let original = joint_positions(&t, &s.frame_locals(0, RigidTransform::identity())).unwrap();
        let mirrored = joint_positions(&t, &m.frame_locals(0, RigidTransform::identity())).unwrap();
        for j in 0..14 {
            let k = t.mirror_of(j).unwrap_or(j);
            let expected = original[j].component_mul(&nalgebra::Vector3::new(-1.0, 1.0, 1.0));
            assert!((mirrored[k] - expected).amax() < 1e-9);
        }
    }
}
