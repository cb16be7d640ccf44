//! Joint frames reconstructed from positions alone.
//!
//! This is an approximation for sensors that report positions but no
//! orientations. Each joint's local rotation is the minimal rotation taking
//! the rest offset of its first child onto the observed bone direction,
//! expressed in the parent frame; twist about the bone is taken as zero and
//! leaf joints inherit their parent's orientation. Descriptors computed from
//! these frames are sensor-invariant but lose any twist information.

use nalgebra::{Matrix3, Unit, Vector3};

use super::rotation::Rotation;
use super::topology::SkeletonTopology;
use super::transform::{GlobalTransform, RigidTransform};
use crate::error::{Error, Result};

/// Minimal rotation taking direction `from` onto direction `to`.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Rotation {
    let (na, nb) = (from.norm(), to.norm());
    if na < 1e-12 || nb < 1e-12 {
        return Rotation::identity();
    }
    let a = from / na;
    let b = to / nb;
    let cross = a.cross(&b);
    let sin = cross.norm();
    let cos = a.dot(&b);
    let axis = if sin > 1e-12 {
        cross / sin
    } else if cos > 0.0 {
        return Rotation::identity();
    } else {
        // Antiparallel: any axis perpendicular to `a`.
        let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        a.cross(&helper).normalize()
    };
    let angle = sin.atan2(cos);
    let m: Matrix3<f64> = *nalgebra::Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle).matrix();
    Rotation::from_matrix_unchecked(m)
}

/// Approximate sensor-frame joint frames from joint positions.
pub fn globals_from_positions(
    topology: &SkeletonTopology,
    positions: &[Vector3<f64>],
) -> Result<Vec<GlobalTransform>> {
    let n = topology.joint_count();
    if positions.len() != n {
        return Err(Error::Dimension {
            what: "joint positions",
            expected: n,
            actual: positions.len(),
        });
    }
    let offsets = topology.rest_offsets().ok_or_else(|| {
        Error::Topology("position-only reconstruction needs rest offsets".into())
    })?;
    let mut rotations = vec![Rotation::identity(); n];
    for &j in topology.traversal_order() {
        let parent_rot = topology.parent(j).map_or(Rotation::identity(), |p| rotations[p]);
        rotations[j] = match topology.children(j).first() {
            Some(&c) => {
                let observed = parent_rot.inverse().apply(&(positions[c] - positions[j]));
                parent_rot.compose(&rotation_between(&offsets[c], &observed))
            }
            None => parent_rot,
        };
    }
    Ok(rotations
        .into_iter()
        .zip(positions)
        .map(|(r, p)| RigidTransform::new(r, *p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::testutil::*;
    use crate::kinematics::{forward_kinematics, inverse_kinematics, locals_from_rotations};

    #[test]
    fn rotation_between_aligns_directions() {
        let mut rng = seeded(30);
        for _ in 0..200 {
            let a = random_transform(&mut rng).translation;
            let b = random_transform(&mut rng).translation;
            let r = rotation_between(&a, &b);
            let got = r.apply(&a.normalize());
            assert!((got - b.normalize()).amax() < 1e-12);
            let m = r.matrix();
            assert!((m.transpose() * m - Matrix3::identity()).amax() < 1e-12);
        }
        let a = Vector3::new(0.0, 1.0, 0.0);
        let r = rotation_between(&a, &-a);
        assert!((r.apply(&a) + a).amax() < 1e-12);
    }

    #[test]
    fn rest_pose_recovers_identity_locals() {
        let t = SkeletonTopology::canonical();
        let locals = locals_from_rotations(&t, RigidTransform::identity(), &[Rotation::identity(); 14]).unwrap();
        let pos: Vec<_> = forward_kinematics(&t, &locals).unwrap().iter().map(|g| g.translation).collect();
        let globals = globals_from_positions(&t, &pos).unwrap();
        let back = inverse_kinematics(&t, &globals).unwrap();
        for l in back {
            assert!((l.rotation.matrix() - Matrix3::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn bone_directions_are_reproduced() {
        let t = SkeletonTopology::canonical();
        let offsets = t.rest_offsets().unwrap().to_vec();
        let mut rng = seeded(31);
        for _ in 0..50 {
            let rots: Vec<_> = (0..14).map(|_| random_rotation(&mut rng)).collect();
            let locals = locals_from_rotations(&t, random_transform(&mut rng), &rots).unwrap();
            let pos: Vec<_> = forward_kinematics(&t, &locals).unwrap().iter().map(|g| g.translation).collect();
            let globals = globals_from_positions(&t, &pos).unwrap();
            for j in 0..14 {
                if let Some(&c) = t.children(j).first() {
                    let predicted = globals[j].rotation.apply(&offsets[c]);
                    let observed = pos[c] - pos[j];
                    assert!((predicted.normalize() - observed.normalize()).amax() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn requires_rest_offsets() {
        let t = random_topology(&mut seeded(32), 5);
        assert!(globals_from_positions(&t, &[Vector3::zeros(); 5]).is_err());
    }
}
