//! Rigid-body math for skeleton trees.
//!
//! Forward kinematics composes local joint transforms down the tree:
//! `G_i = T_root * ... * T_parent(i) * T_i`. Inverse kinematics recovers
//! each local transform as `T_i = G_parent(i)^-1 * G_i`, which needs full
//! joint frames rather than positions. [`positions`] offers an approximate
//! path for position-only sensors.

pub mod positions;
pub mod rotation;
pub mod topology;
pub mod transform;

pub use rotation::{quaternion_to_euler, EulerAngles, Quaternion, Rotation, EULER_CONVENTION};
pub use topology::{SkeletonTopology, TopologyRecord};
pub use transform::{compose, GlobalTransform, LocalTransform, RigidTransform};

use nalgebra::Vector3;

use crate::error::{Error, Result};

fn check_len(topology: &SkeletonTopology, len: usize, what: &'static str) -> Result<()> {
    if len != topology.joint_count() {
        return Err(Error::Dimension {
            what,
            expected: topology.joint_count(),
            actual: len,
        });
    }
    Ok(())
}

/// Computes every joint's sensor-frame transform in one pass over the tree.
pub fn forward_kinematics(
    topology: &SkeletonTopology,
    locals: &[LocalTransform],
) -> Result<Vec<GlobalTransform>> {
    check_len(topology, locals.len(), "local transforms")?;
    let mut globals = vec![RigidTransform::identity(); locals.len()];
    for &j in topology.traversal_order() {
        globals[j] = match topology.parent(j) {
            Some(p) => globals[p].compose(&locals[j]),
            None => locals[j],
        };
    }
    Ok(globals)
}

/// Recovers local transforms from sensor-frame joint frames.
pub fn inverse_kinematics(
    topology: &SkeletonTopology,
    globals: &[GlobalTransform],
) -> Result<Vec<LocalTransform>> {
    check_len(topology, globals.len(), "global transforms")?;
    Ok((0..globals.len())
        .map(|j| match topology.parent(j) {
            Some(p) => globals[p].inverse().compose(&globals[j]),
            None => globals[j],
        })
        .collect())
}

/// Joint positions (translation parts of the forward-kinematics result).
pub fn joint_positions(
    topology: &SkeletonTopology,
    locals: &[LocalTransform],
) -> Result<Vec<Vector3<f64>>> {
    Ok(forward_kinematics(topology, locals)?
        .into_iter()
        .map(|g| g.translation)
        .collect())
}

/// Local transforms from per-joint rotations plus the topology's rest
/// offsets (unit +y offsets when the topology carries none).
pub fn locals_from_rotations(
    topology: &SkeletonTopology,
    root: RigidTransform,
    rotations: &[Rotation],
) -> Result<Vec<LocalTransform>> {
    check_len(topology, rotations.len(), "joint rotations")?;
    Ok((0..rotations.len())
        .map(|j| {
            if j == topology.root() {
                return root;
            }
            let offset = match topology.rest_offsets() {
                Some(o) => o[j],
                None => Vector3::new(0.0, 1.0, 0.0),
            };
            RigidTransform::new(rotations[j], offset)
        })
        .collect())
}

#[cfg(test)]
pub(crate) mod testutil {
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
        Rotation::from_euler(EulerAngles::new(
            rng.random_range(-3.1..3.1),
            rng.random_range(-1.5..1.5),
            rng.random_range(-3.1..3.1),
        ))
    }

    pub fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        RigidTransform::new(
            random_rotation(rng),
            Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
        )
    }

    /// Random tree: each joint's parent is drawn from earlier joints, then
    /// indices are shuffled so parents do not necessarily precede children.
    pub fn random_topology(rng: &mut impl Rng, n: usize) -> SkeletonTopology {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut parents = vec![None; n];
        for k in 1..n {
            let p = rng.random_range(0..k);
            parents[perm[k]] = Some(perm[p]);
        }
        let names = (0..n).map(|i| format!("j{i}")).collect();
        SkeletonTopology::new(names, parents, vec![]).unwrap()
    }

    pub fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}
