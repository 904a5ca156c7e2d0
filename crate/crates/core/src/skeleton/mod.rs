//! Articulated body model: joint tree, segments carrying primitives, and the
//! rigid placement of proxies from joint positions.

mod body22;
mod frames;
mod placement;

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use body22::{body22_proxies, body22_rest_pose, body22_skeleton, BODY22_JOINTS};
pub use frames::{segment_frames, LateralRef, SegmentFrame, DEGENERATE_LENGTH};
pub use placement::{
    place_proxies, BodyProxies, PlacementWarning, Placement, PosedBody, PosedPrimitive,
    ProxyParams, SampleConfig, SegmentProxy, WorldPrimitive,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Cylinder,
    Cuboid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub name: String,
    pub joint_a: usize,
    pub joint_b: usize,
    pub primitive: PrimitiveKind,
}

/// On-disk skeleton document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    joints: Vec<Joint>,
    segments: Vec<Segment>,
    /// Left and right hip joints orienting trunk cuboids. Defaults to the
    /// first two children of the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hips: Option<[usize; 2]>,
}

/// Validated joint tree plus the segment list proxies attach to.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    segments: Vec<Segment>,
    hips: Option<[usize; 2]>,
    explicit_hips: bool,
    children: Vec<Vec<usize>>,
    /// Per segment, `(from, to)` joint pairs tried in order as the lateral
    /// reference `J[to] - J[from]` of its frame.
    lateral_candidates: Vec<Vec<(usize, usize)>>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>, segments: Vec<Segment>, hips: Option<[usize; 2]>) -> Result<Self> {
        let n = joints.len();
        if n == 0 {
            return Err(Error::Skeleton("no joints".into()));
        }
        for (i, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                if p >= n {
                    return Err(Error::Skeleton(format!(
                        "joint {i} ({}) has parent {p} out of range",
                        j.name
                    )));
                }
            }
        }
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = joints[cur].parent {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Skeleton(format!(
                        "cycle in parent links through joint {start} ({})",
                        joints[start].name
                    )));
                }
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| joints[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Skeleton(format!("expected exactly one root joint, found {}", roots.len())));
        }
        for (s, seg) in segments.iter().enumerate() {
            if seg.joint_a >= n || seg.joint_b >= n {
                return Err(Error::Skeleton(format!(
                    "segment {s} ({}) references missing joint ({} or {})",
                    seg.name, seg.joint_a, seg.joint_b
                )));
            }
            if seg.joint_a == seg.joint_b {
                return Err(Error::Skeleton(format!(
                    "segment {s} ({}) uses joint {} at both ends",
                    seg.name, seg.joint_a
                )));
            }
        }

        let mut children = vec![Vec::new(); n];
        for (i, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                children[p].push(i);
            }
        }
        let explicit_hips = hips.is_some();
        let hips = match hips {
            Some([l, r]) => {
                if l >= n || r >= n || l == r {
                    return Err(Error::Skeleton(format!("invalid hip joints [{l}, {r}]")));
                }
                Some([l, r])
            }
            None => {
                let root_children = &children[roots[0]];
                (root_children.len() >= 2).then(|| [root_children[0], root_children[1]])
            }
        };

        let mut skeleton = Self {
            joints,
            segments,
            hips,
            explicit_hips,
            children,
            lateral_candidates: Vec::new(),
        };
        skeleton.lateral_candidates = (0..skeleton.segments.len())
            .map(|s| skeleton.candidates_for(s))
            .collect();
        Ok(skeleton)
    }

    fn in_subtree(&self, joint: usize, top: usize) -> bool {
        let mut cur = Some(joint);
        while let Some(j) = cur {
            if j == top {
                return true;
            }
            cur = self.joints[j].parent;
        }
        false
    }

    fn candidates_for(&self, s: usize) -> Vec<(usize, usize)> {
        let seg = &self.segments[s];
        let (a, b) = (seg.joint_a, seg.joint_b);
        let mut out = Vec::new();
        if seg.primitive == PrimitiveKind::Cuboid {
            if let Some([l, r]) = self.hips {
                let in_leg = |j| self.in_subtree(j, l) || self.in_subtree(j, r);
                if !in_leg(a) && !in_leg(b) {
                    out.push((r, l));
                }
            }
        }
        if let Some(p) = self.joints[a].parent {
            if p != b {
                out.push((a, p));
            }
        }
        out.extend(self.children[b].iter().filter(|&&c| c != a).map(|&c| (b, c)));
        out.extend(self.children[a].iter().filter(|&&c| c != b).map(|&c| (a, c)));
        if let Some(p) = self.joints[b].parent {
            if p != a {
                out.push((b, p));
            }
        }
        // straight chains: any other joint, nearest in the tree first
        let mut seen = vec![false; self.joints.len()];
        seen[a] = true;
        seen[b] = true;
        let mut queue: VecDeque<usize> = VecDeque::from([a, b]);
        while let Some(j) = queue.pop_front() {
            let parent = self.joints[j].parent.into_iter();
            for n in self.children[j].iter().copied().chain(parent) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                    if !out.contains(&(a, n)) && !out.contains(&(b, n)) {
                        out.push((a, n));
                    }
                }
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SkeletonDoc = serde_json::from_str(text).map_err(|e| Error::json("skeleton", e))?;
        if let Some(schema) = &doc.schema {
            if schema != crate::SCHEMA_VERSION {
                return Err(Error::Skeleton(format!("unsupported schema {schema}")));
            }
        }
        Self::new(doc.joints, doc.segments, doc.hips)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let doc = SkeletonDoc {
            schema: Some(crate::SCHEMA_VERSION.to_string()),
            joints: self.joints.clone(),
            segments: self.segments.clone(),
            hips: self.explicit_hips.then_some(self.hips).flatten(),
        };
        serde_json::to_string_pretty(&doc).expect("skeleton serializes")
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn hips(&self) -> Option<[usize; 2]> {
        self.hips
    }

    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    pub fn lateral_candidates(&self, segment: usize) -> &[(usize, usize)] {
        &self.lateral_candidates[segment]
    }

    /// Parent-child joint pairs, one per non-root joint.
    pub fn bones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.parent.map(|p| (p, i)))
    }
}

/// Builds an unbranched chain with one segment per entry of `kinds`.
pub fn chain_skeleton(kinds: &[PrimitiveKind]) -> Skeleton {
    let joints = (0..=kinds.len())
        .map(|i| Joint {
            name: format!("j{i}"),
            parent: i.checked_sub(1),
        })
        .collect();
    let segments = kinds
        .iter()
        .enumerate()
        .map(|(i, &primitive)| Segment {
            name: format!("s{i}"),
            joint_a: i,
            joint_b: i + 1,
            primitive,
        })
        .collect();
    Skeleton::new(joints, segments, None).expect("chain skeleton is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain() {
        let text = r#"{"joints":[{"name":"root","parent":null},{"name":"child","parent":0}],
            "segments":[{"name":"bone","joint_a":0,"joint_b":1,"primitive":"cylinder"}]}"#;
        let sk = Skeleton::from_json(text).unwrap();
        assert_eq!(sk.segment_count(), 1);
        assert_eq!(sk.bones().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let text = r#"{"joints":[{"name":"root","parent":null},{"name":"loop","parent":1}],
            "segments":[]}"#;
        let err = Skeleton::from_json(text).unwrap_err().to_string();
        assert!(err.contains("cycle"), "{err}");
    }

    #[test]
    fn rejects_missing_joint_and_unknown_kind() {
        let missing = r#"{"joints":[{"name":"root","parent":null}],
            "segments":[{"name":"s","joint_a":0,"joint_b":3,"primitive":"cylinder"}]}"#;
        assert!(Skeleton::from_json(missing).unwrap_err().to_string().contains("missing joint"));
        let kind = r#"{"joints":[{"name":"root","parent":null},{"name":"c","parent":0}],
            "segments":[{"name":"s","joint_a":0,"joint_b":1,"primitive":"capsule"}]}"#;
        assert!(Skeleton::from_json(kind).is_err());
        let roots = r#"{"joints":[{"name":"a","parent":null},{"name":"b","parent":null}],"segments":[]}"#;
        assert!(Skeleton::from_json(roots).is_err());
    }

    #[test]
    fn body22_has_19_segments() {
        let sk = body22_skeleton();
        assert_eq!(sk.joint_count(), 22);
        assert_eq!(sk.segment_count(), 19);
        let back = Skeleton::from_json(&sk.to_json()).unwrap();
        assert_eq!(back, sk);
    }

    #[test]
    fn trunk_cuboids_use_hips() {
        let sk = body22_skeleton();
        let [l, r] = sk.hips().unwrap();
        for (s, seg) in sk.segments().iter().enumerate() {
            if seg.primitive == PrimitiveKind::Cuboid {
                assert_eq!(sk.lateral_candidates(s)[0], (r, l), "{}", seg.name);
            }
        }
    }
}
