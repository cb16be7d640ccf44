use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint tree with parent links, optional rest-pose bone offsets and
/// left/right mirror pairs.
///
/// Parent indices need not precede their children; a traversal order is
/// computed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonTopology {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    mirror_pairs: Vec<(usize, usize)>,
    rest_offsets: Option<Vec<Vector3<f64>>>,
    root: usize,
    children: Vec<Vec<usize>>,
    /// Depth-first order, children visited in index order, root first.
    order: Vec<usize>,
    mirror_of: Vec<Option<usize>>,
}

impl SkeletonTopology {
    pub fn new(
        names: Vec<String>,
        parents: Vec<Option<usize>>,
        mirror_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = names.len();
        if n < 2 {
            return Err(Error::Topology(format!("need at least 2 joints, got {n}")));
        }
        if parents.len() != n {
            return Err(Error::Dimension {
                what: "parent list",
                expected: n,
                actual: parents.len(),
            });
        }
        let roots: Vec<usize> = (0..n).filter(|&j| parents[j].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            _ => {
                return Err(Error::Topology(format!(
                    "expected exactly one root, found {}",
                    roots.len()
                )))
            }
        };
        let mut children = vec![Vec::new(); n];
        for (j, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::Topology(format!("joint {j} has parent {p} out of range")));
                }
                if p == j {
                    return Err(Error::Topology(format!("joint {j} is its own parent")));
                }
                children[p].push(j);
            }
        }

        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(j) = stack.pop() {
            order.push(j);
            stack.extend(children[j].iter().rev());
        }
        if order.len() != n {
            return Err(Error::Topology(format!(
                "only {} of {n} joints are reachable from root {root} (cycle or forest)",
                order.len()
            )));
        }

        let mut mirror_of = vec![None; n];
        for &(l, r) in &mirror_pairs {
            if l >= n || r >= n {
                return Err(Error::Topology(format!("mirror pair ({l}, {r}) out of range")));
            }
            if l == r {
                return Err(Error::Topology(format!("joint {l} is paired with itself")));
            }
            if l == root || r == root {
                return Err(Error::Topology("the root joint cannot be mirror-paired".into()));
            }
            if mirror_of[l].is_some() || mirror_of[r].is_some() {
                return Err(Error::Topology(format!("joint in pair ({l}, {r}) is already paired")));
            }
            mirror_of[l] = Some(r);
            mirror_of[r] = Some(l);
        }
        if let Some(dup) = first_duplicate(&names) {
            return Err(Error::Topology(format!("duplicate joint name {dup:?}")));
        }

        Ok(SkeletonTopology {
            names,
            parents,
            mirror_pairs,
            rest_offsets: None,
            root,
            children,
            order,
            mirror_of,
        })
    }

    /// Attaches rest-pose offsets (one per joint, in the parent frame).
    pub fn with_rest_offsets(mut self, offsets: Vec<Vector3<f64>>) -> Result<Self> {
        if offsets.len() != self.joint_count() {
            return Err(Error::Dimension {
                what: "rest offsets",
                expected: self.joint_count(),
                actual: offsets.len(),
            });
        }
        if offsets.iter().flat_map(|o| o.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Topology("rest offsets must be finite".into()));
        }
        self.rest_offsets = Some(offsets);
        Ok(self)
    }

    /// The 14-joint skeleton (root + 13) that descriptors are defined on.
    ///
    /// x points to the subject's left, y up, z forward. Rest offsets are
    /// mirror-symmetric about the x = 0 plane.
    pub fn canonical() -> Self {
        const JOINTS: [(&str, Option<usize>, [f64; 3]); 14] = [
            ("hips", None, [0.0, 0.0, 0.0]),
            ("spine", Some(0), [0.0, 0.25, 0.0]),
            ("neck", Some(1), [0.0, 0.25, 0.0]),
            ("head", Some(2), [0.0, 0.15, 0.0]),
            ("l_shoulder", Some(2), [0.18, -0.02, 0.0]),
            ("l_elbow", Some(4), [0.28, 0.0, 0.0]),
            ("l_wrist", Some(5), [0.25, 0.0, 0.0]),
            ("r_shoulder", Some(2), [-0.18, -0.02, 0.0]),
            ("r_elbow", Some(7), [-0.28, 0.0, 0.0]),
            ("r_wrist", Some(8), [-0.25, 0.0, 0.0]),
            ("l_hip", Some(0), [0.1, -0.05, 0.0]),
            ("l_knee", Some(10), [0.0, -0.45, 0.0]),
            ("r_hip", Some(0), [-0.1, -0.05, 0.0]),
            ("r_knee", Some(12), [0.0, -0.45, 0.0]),
        ];
        let names = JOINTS.iter().map(|j| j.0.to_string()).collect();
        let parents = JOINTS.iter().map(|j| j.1).collect();
        let offsets = JOINTS.iter().map(|j| Vector3::from(j.2)).collect();
        SkeletonTopology::new(names, parents, vec![(4, 7), (5, 8), (6, 9), (10, 12), (11, 13)])
            .and_then(|t| t.with_rest_offsets(offsets))
            .expect("canonical skeleton is valid")
    }

    pub fn joint_count(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    pub fn mirror_pairs(&self) -> &[(usize, usize)] {
        &self.mirror_pairs
    }

    pub fn mirror_of(&self, joint: usize) -> Option<usize> {
        self.mirror_of[joint]
    }

    pub fn rest_offsets(&self) -> Option<&[Vector3<f64>]> {
        self.rest_offsets.as_deref()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parent-before-child traversal order, root first.
    pub fn traversal_order(&self) -> &[usize] {
        &self.order
    }

    /// Joints that become descriptor columns: traversal order without the root.
    pub fn descriptor_joints(&self) -> &[usize] {
        &self.order[1..]
    }

    /// Names in descriptor column order.
    pub fn column_names(&self) -> Vec<String> {
        self.descriptor_joints()
            .iter()
            .map(|&j| self.names[j].clone())
            .collect()
    }

    /// Joints along the path root -> `joint`, inclusive.
    pub fn path_from_root(&self, joint: usize) -> Vec<usize> {
        let mut path = vec![joint];
        let mut j = joint;
        while let Some(p) = self.parents[j] {
            path.push(p);
            j = p;
        }
        path.reverse();
        path
    }

    pub fn to_record(&self) -> TopologyRecord {
        TopologyRecord {
            names: self.names.clone(),
            parents: self
                .parents
                .iter()
                .map(|p| p.map_or(-1, |p| p as i64))
                .collect(),
            mirror_pairs: self.mirror_pairs.iter().map(|&(l, r)| [l, r]).collect(),
            rest_offsets: self
                .rest_offsets
                .as_ref()
                .map(|o| o.iter().map(|v| [v.x, v.y, v.z]).collect()),
        }
    }

    pub fn from_record(record: &TopologyRecord) -> Result<Self> {
        let parents = record
            .parents
            .iter()
            .map(|&p| match p {
                -1 => Ok(None),
                p if p >= 0 => Ok(Some(p as usize)),
                p => Err(Error::Topology(format!("invalid parent index {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = record.mirror_pairs.iter().map(|p| (p[0], p[1])).collect();
        let topo = SkeletonTopology::new(record.names.clone(), parents, pairs)?;
        match &record.rest_offsets {
            Some(o) => topo.with_rest_offsets(o.iter().map(|v| Vector3::from(*v)).collect()),
            None => Ok(topo),
        }
    }
}

fn first_duplicate(names: &[String]) -> Option<&str> {
    let mut seen = std::collections::HashSet::new();
    names.iter().find(|n| !seen.insert(n.as_str())).map(|n| n.as_str())
}

/// Serialized topology: the root's parent is written as -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub names: Vec<String>,
    pub parents: Vec<i64>,
    pub mirror_pairs: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest_offsets: Option<Vec<[f64; 3]>>,
}
