use nalgebra::{Matrix4, Vector3};

use super::rotation::Rotation;

/// Rigid transform: `x -> rotation * x + translation`. Translations are in
/// meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

/// A joint's transform relative to its parent joint frame.
pub type LocalTransform = RigidTransform;

/// A joint frame expressed in the sensor frame.
pub type GlobalTransform = RigidTransform;

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        RigidTransform::default()
    }

    pub fn from_rotation(rotation: Rotation) -> Self {
        RigidTransform::new(rotation, Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidTransform::new(Rotation::identity(), translation)
    }

    /// Homogeneous product `self * other`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.apply(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rotation = self.rotation.inverse();
        RigidTransform {
            translation: -rotation.apply(&self.translation),
            rotation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite())
            && self.rotation.matrix().iter().all(|v| v.is_finite())
    }
}

/// Free-function form of [`RigidTransform::compose`].
pub fn compose(a: &RigidTransform, b: &LocalTransform) -> GlobalTransform {
    a.compose(b)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::kinematics::rotation::{EulerAngles, Rotation};

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        let e = EulerAngles::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.5..1.5),
            rng.random_range(-3.0..3.0),
        );
        let t = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        RigidTransform::new(Rotation::from_euler(e), t)
    }

    // Plain 4x4 homogeneous product on arrays.
    fn naive_product(ts: &[RigidTransform]) -> [[f64; 4]; 4] {
        let mut acc = [[0.0; 4]; 4];
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for t in ts {
            let h = t.to_homogeneous();
            let mut next = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        next[i][j] += acc[i][k] * h[(k, j)];
                    }
                }
            }
            acc = next;
        }
        acc
    }

    #[test]
    fn identity_composition() {
        let id = RigidTransform::identity();
        assert_eq!(compose(&id, &id), id);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let p = t.compose(&t.inverse());
            assert!((p.to_homogeneous() - Matrix4::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn chain_matches_naive_homogeneous_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let chain: Vec<_> = (0..5).map(|_| random_transform(&mut rng)).collect();
            let fast = chain[1..]
                .iter()
                .fold(chain[0], |acc, t| compose(&acc, t))
                .to_homogeneous();
            let slow = naive_product(&chain);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((fast[(i, j)] - slow[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let (a, b, c) = (
                random_transform(&mut rng),
                random_transform(&mut rng),
                random_transform(&mut rng),
            );
            let left = a.compose(&b).compose(&c).to_homogeneous();
            let right = a.compose(&b.compose(&c)).to_homogeneous();
            assert!((left - right).amax() < 1e-12);
            let m = a.compose(&b).compose(&c).rotation;
            assert!((m.matrix().transpose() * m.matrix() - nalgebra::Matrix3::identity()).amax() < 1e-9);
        }
    }
}
