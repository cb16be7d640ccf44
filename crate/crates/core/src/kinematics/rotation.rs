//! Rotation representations.
//!
//! Rotations are stored as 3x3 orthonormal matrices. Quaternions and Euler
//! triples are only input/output forms.
//!
//! Euler convention, used everywhere in the crate:
//!
//! ```text
//! R = Rz(yaw) * Ry(pitch) * Rx(roll)
//! ```
//!
//! i.e. extrinsic rotations about x, then y, then z. At gimbal lock
//! (|pitch| within [`GIMBAL_TOLERANCE`] of pi/2) roll is set to zero and the
//! remaining freedom is folded into yaw.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Pitch distance from +-pi/2 below which the canonical roll = 0 form is used.
pub const GIMBAL_TOLERANCE: f64 = 1e-7;

/// Human-readable name of the Euler convention, recorded in checkpoints.
pub const EULER_CONVENTION: &str = "R = Rz(yaw) * Ry(pitch) * Rx(roll) (extrinsic x-y-z)";

/// Euler triple in radians, ordered (roll, pitch, yaw).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const ZERO: EulerAngles = EulerAngles {
        roll: 0.0,
        pitch: 0.0,
        yaw: 0.0,
    };

    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        EulerAngles { roll, pitch, yaw }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.roll, self.pitch, self.yaw]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        EulerAngles::new(a[0], a[1], a[2])
    }
}

/// Unit quaternion in (w, x, y, z) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Result<Quaternion> {
        let n = self.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::InvalidRotation(format!(
                "quaternion ({}, {}, {}, {}) has norm {n}",
                self.w, self.x, self.y, self.z
            )));
        }
        Ok(Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }
}

/// A proper rotation of 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking orthonormality and orientation.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRotation("matrix has non-finite entries".into()));
        }
        let err = (m.transpose() * m - Matrix3::identity()).amax();
        let det = m.determinant();
        if err > 1e-6 || (det - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidRotation(format!(
                "matrix is not a proper rotation (orthonormality error {err:e}, det {det})"
            )));
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix the caller guarantees to be a rotation.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Builds `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_euler(e: EulerAngles) -> Self {
        let (sr, cr) = e.roll.sin_cos();
        let (sp, cp) = e.pitch.sin_cos();
        let (sy, cy) = e.yaw.sin_cos();
        Rotation(Matrix3::new(
            cy * cp,
            cy * sp * sr - sy * cr,
            cy * sp * cr + sy * sr,
            sy * cp,
            sy * sp * sr + cy * cr,
            sy * sp * cr - cy * sr,
            -sp,
            cp * sr,
            cp * cr,
        ))
    }

    /// Extracts (roll, pitch, yaw), each in [-pi, pi]; pitch in [-pi/2, pi/2].
    pub fn to_euler(&self) -> EulerAngles {
        let m = &self.0;
        let cp = m[(0, 0)].hypot(m[(1, 0)]);
        let pitch = (-m[(2, 0)]).atan2(cp);
        if (pitch.abs() - FRAC_PI_2).abs() < GIMBAL_TOLERANCE {
            // Only yaw -/+ roll is observable here; with roll = 0 both the
            // +pi/2 and -pi/2 cases reduce to m01 = -sin(yaw), m11 = cos(yaw).
            let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
            return EulerAngles::new(0.0, pitch, yaw);
        }
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        EulerAngles::new(roll, pitch, yaw)
    }

    /// Converts a quaternion, renormalizing it first.
    pub fn from_quaternion(q: Quaternion) -> Result<Self> {
        let q = q.normalized()?;
        let (w, x, y, z) = (q.w, q.x, q.y, q.z);
        Ok(Rotation(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )))
    }

    /// Converts to a unit quaternion with non-negative w.
    pub fn to_quaternion(&self) -> Quaternion {
        let m = &self.0;
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let n = q.norm();
        let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
        Quaternion::new(sign * q.w / n, sign * q.x / n, sign * q.y / n, sign * q.z / n)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Conjugation by the reflection `x -> -x`, i.e. `M R M` with
    /// `M = diag(-1, 1, 1)`. The result is again a proper rotation.
    pub fn reflect_x(&self) -> Self {
        let mut m = self.0;
        for (r, c) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
            m[(r, c)] = -m[(r, c)];
        }
        Rotation(m)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

/// Converts a quaternion to Euler angles through the rotation matrix.
pub fn quaternion_to_euler(q: Quaternion) -> Result<EulerAngles> {
    Ok(Rotation::from_quaternion(q)?.to_euler())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    // Independent reference: elementary rotations multiplied as plain arrays.
    fn elementary(axis: usize, a: f64) -> [[f64; 3]; 3] {
        let (s, c) = a.sin_cos();
        match axis {
            0 => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
            1 => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
            _ => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    fn max_diff(r: &Rotation, m: &[[f64; 3]; 3]) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((r.matrix()[(i, j)] - m[i][j]).abs());
            }
        }
        d
    }

    fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
        loop {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n <= 1.0 {
                return q.normalized().unwrap();
            }
        }
    }

    fn assert_proper(r: &Rotation) {
        let m = r.matrix();
        assert!((m.transpose() * m - Matrix3::identity()).amax() <= 1e-9);
        assert!((m.determinant() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn euler_matches_elementary_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let e = EulerAngles::new(
                rng.random_range(-PI..PI),
                rng.random_range(-PI / 2.0..PI / 2.0),
                rng.random_range(-PI..PI),
            );
            let reference = mul(&elementary(2, e.yaw), &mul(&elementary(1, e.pitch), &elementary(0, e.roll)));
            let r = Rotation::from_euler(e);
            assert!(max_diff(&r, &reference) < 1e-14);
            assert_proper(&r);
        }
    }

    #[test]
    fn euler_round_trip_off_gimbal_lock() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let e = EulerAngles::new(
                rng.random_range(-PI..PI),
                rng.random_range(-1.55..1.55),
                rng.random_range(-PI..PI),
            );
            let back = Rotation::from_euler(e).to_euler();
            assert!((back.roll - e.roll).abs() < 1e-9, "{e:?} -> {back:?}");
            assert!((back.pitch - e.pitch).abs() < 1e-9, "{e:?} -> {back:?}");
            assert!((back.yaw - e.yaw).abs() < 1e-9, "{e:?} -> {back:?}");
        }
    }

    #[test]
    fn gimbal_lock_is_canonical() {
        for pitch in [FRAC_PI_2, -FRAC_PI_2] {
            for (roll, yaw) in [(0.3, -1.0), (-2.0, 2.5), (1.0, 0.0)] {
                let r = Rotation::from_euler(EulerAngles::new(roll, pitch, yaw));
                let e = r.to_euler();
                assert_eq!(e.roll, 0.0);
                assert!((e.pitch - pitch).abs() < 1e-7);
                let rebuilt = Rotation::from_euler(e);
                assert!((rebuilt.matrix() - r.matrix()).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_quaternion_gives_zero_angles() {
        let e = quaternion_to_euler(Quaternion::IDENTITY).unwrap();
        assert_eq!(e.to_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn quarter_turn_about_x() {
        let h = (0.5f64).sqrt();
        let q = Quaternion::new(h, h, 0.0, 0.0);
        let e = quaternion_to_euler(q).unwrap();
        assert!((e.roll - FRAC_PI_2).abs() < 1e-12);
        assert!(e.pitch.abs() < 1e-12);
        assert!(e.yaw.abs() < 1e-12);
        assert!(max_diff(&Rotation::from_quaternion(q).unwrap(), &elementary(0, FRAC_PI_2)) < 1e-12);
    }

    #[test]
    fn zero_quaternion_is_rejected() {
        let err = quaternion_to_euler(Quaternion::new(0.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidRotation(_)));
    }

    #[test]
    fn random_quaternions_survive_euler_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let q = random_unit_quaternion(&mut rng);
            let r = Rotation::from_quaternion(q).unwrap();
            assert_proper(&r);
            let e = r.to_euler();
            for a in e.to_array() {
                assert!((-PI..=PI).contains(&a));
            }
            let back = Rotation::from_euler(e);
            assert!((back.matrix() - r.matrix()).norm() <= 1e-9);
        }
    }

    #[test]
    fn quaternion_matrix_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2_000 {
            let q = random_unit_quaternion(&mut rng);
            let r = Rotation::from_quaternion(q).unwrap();
            let back = Rotation::from_quaternion(r.to_quaternion()).unwrap();
            assert!((back.matrix() - r.matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn reflection_flips_pitch_and_yaw() {
        let e = EulerAngles::new(0.4, -0.3, 1.1);
        let m = Rotation::from_euler(e).reflect_x().to_euler();
        assert!((m.roll - 0.4).abs() < 1e-12);
        assert!((m.pitch - 0.3).abs() < 1e-12);
        assert!((m.yaw + 1.1).abs() < 1e-12);
    }
}
