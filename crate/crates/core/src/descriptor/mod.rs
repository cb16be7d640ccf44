//! Euler-angle pose descriptors.
//!
//! A pose is described by the local rotation of every non-root joint,
//! written as a `3 x (J - 1)` matrix of (roll, pitch, yaw) columns in the
//! topology's descriptor order. Translations and the root rotation are
//! dropped, which makes the descriptor independent of bone lengths and of
//! where the sensor sits.

pub mod augment;
pub mod mapping;
mod mirror;
mod subsample;

use std::f64::consts::PI;
use std::sync::Arc;

pub use augment::augment;
pub use mapping::JointMapping;
pub use mirror::mirror_swap;
pub use subsample::phase_subsample;

use crate::error::{Error, Result};
use crate::kinematics::{
    locals_from_rotations, EulerAngles, LocalTransform, RigidTransform, Rotation, SkeletonTopology,
};

/// Euler angles of all non-root joints for one frame, one `[roll, pitch, yaw]`
/// column per descriptor joint.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    columns: Vec<[f64; 3]>,
}

impl PoseFrame {
    pub fn new(columns: Vec<[f64; 3]>) -> Result<Self> {
        if let Some(v) = columns.iter().flatten().find(|v| !(v.abs() <= PI)) {
            return Err(Error::InvalidRotation(format!(
                "descriptor angle {v} is outside [-pi, pi]"
            )));
        }
        Ok(PoseFrame { columns })
    }

    pub fn zeros(width: usize) -> Self {
        PoseFrame {
            columns: vec![[0.0; 3]; width],
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[[f64; 3]] {
        &self.columns
    }

    pub fn euler(&self, column: usize) -> EulerAngles {
        EulerAngles::from_array(self.columns[column])
    }

    /// Row `axis` of the descriptor matrix (0 = roll, 1 = pitch, 2 = yaw).
    pub fn row(&self, axis: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[axis]).collect()
    }

    /// Column-major flattening: `[r1, p1, y1, r2, p2, y2, ...]`.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend(self.columns.iter().flatten());
    }
}

/// Time-ordered descriptor frames sharing one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    frames: Vec<PoseFrame>,
    sample_rate: f64,
    topology: Arc<SkeletonTopology>,
    source: String,
}

impl PoseSequence {
    pub fn new(
        frames: Vec<PoseFrame>,
        sample_rate: f64,
        topology: Arc<SkeletonTopology>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Dimension {
                what: "frames in sequence (at least)",
                expected: 1,
                actual: 0,
            });
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Rate(format!("sample rate must be positive, got {sample_rate}")));
        }
        let width = topology.joint_count() - 1;
        if let Some(f) = frames.iter().find(|f| f.width() != width) {
            return Err(Error::Dimension {
                what: "descriptor columns",
                expected: width,
                actual: f.width(),
            });
        }
        Ok(PoseSequence {
            frames,
            sample_rate,
            topology,
            source: source.into(),
        })
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn topology(&self) -> &Arc<SkeletonTopology> {
        &self.topology
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Width of one flattened frame, `3 * (J - 1)`.
    pub fn feature_width(&self) -> usize {
        3 * (self.topology.joint_count() - 1)
    }

    /// All frames flattened row-major by time.
    pub fn flattened(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.feature_width());
        for f in &self.frames {
            f.flatten_into(&mut out);
        }
        out
    }

    /// Per-joint rotations of one frame, root set to identity.
    pub fn frame_rotations(&self, frame: usize) -> Vec<Rotation> {
        let mut rotations = vec![Rotation::identity(); self.topology.joint_count()];
        for (c, &j) in self.topology.descriptor_joints().iter().enumerate() {
            rotations[j] = Rotation::from_euler(self.frames[frame].euler(c));
        }
        rotations
    }

    /// Rebuilds local transforms for a frame from the descriptor and the
    /// topology's rest offsets, with the given root pose.
    pub fn frame_locals(&self, frame: usize, root: RigidTransform) -> Vec<LocalTransform> {
        locals_from_rotations(&self.topology, root, &self.frame_rotations(frame))
            .expect("rotation count matches topology")
    }
}

/// Descriptor of one frame of local transforms.
pub fn describe_frame(topology: &SkeletonTopology, locals: &[LocalTransform]) -> Result<PoseFrame> {
    if locals.len() != topology.joint_count() {
        return Err(Error::Dimension {
            what: "local transforms per frame",
            expected: topology.joint_count(),
            actual: locals.len(),
        });
    }
    let columns = topology
        .descriptor_joints()
        .iter()
        .map(|&j| locals[j].rotation.to_euler().to_array())
        .collect();
    PoseFrame::new(columns)
}

/// Converts per-frame local transforms into a descriptor sequence.
pub fn extract_descriptor(
    topology: Arc<SkeletonTopology>,
    frames: &[Vec<LocalTransform>],
    sample_rate: f64,
    source: impl Into<String>,
) -> Result<PoseSequence> {
    let described = frames
        .iter()
        .map(|locals| describe_frame(&topology, locals))
        .collect::<Result<Vec<_>>>()?;
    PoseSequence::new(described, sample_rate, topology, source)
}

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;

    use super::*;

    pub fn random_sequence(rng: &mut impl Rng, topology: &Arc<SkeletonTopology>, len: usize, rate: f64) -> PoseSequence {
        let width = topology.joint_count() - 1;
        let frames = (0..len)
            .map(|_| {
                let cols = (0..width)
                    .map(|_| {
                        let e = EulerAngles::new(
                            rng.random_range(-3.0..3.0),
                            rng.random_range(-1.4..1.4),
                            rng.random_range(-3.0..3.0),
                        );
                        e.to_array()
                    })
                    .collect();
                PoseFrame::new(cols).unwrap()
            })
            .collect();
        PoseSequence::new(frames, rate, topology.clone(), "random").unwrap()
    }
}
