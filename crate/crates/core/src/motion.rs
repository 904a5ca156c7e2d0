//! Two-person joint position sequences.
//!
//! JSON form: `{"persons":2,"frames":F,"joints":N,"positions":[...]}` with
//! `positions` flattened row-major as frame, person, joint, xyz (meters).
//!
//! Binary form: a 16-byte little-endian header (`b"PCMO"`, `u32` frames,
//! `u32` joints, `u32` persons) followed by the same flat payload as `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub const PERSONS: usize = 2;
const MAGIC: &[u8; 4] = b"PCMO";

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frames: usize,
    joints: usize,
    positions: Vec<Vec3>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    /// Settings of the run that produced the file; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    persons: usize,
    frames: usize,
    joints: usize,
    positions: Vec<f64>,
}

impl MotionSequence {
    pub fn new(frames: usize, joints: usize, positions: Vec<Vec3>) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Motion("sequence has no frames".into()));
        }
        if joints == 0 {
            return Err(Error::Motion("sequence has no joints".into()));
        }
        let expected = frames * PERSONS * joints;
        if positions.len() != expected {
            return Err(Error::Motion(format!(
                "expected {expected} joint positions, found {}",
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Motion(format!("position {i} has a non-finite coordinate")));
        }
        Ok(Self {
            frames,
            joints,
            positions,
        })
    }

    /// Builds a sequence from per-frame `[person0, person1]` poses.
    pub fn from_poses(poses: &[[Vec<Vec3>; 2]]) -> Result<Self> {
        let joints = poses.first().map_or(0, |p| p[0].len());
        if poses.iter().any(|p| p[0].len() != joints || p[1].len() != joints) {
            return Err(Error::Motion("inconsistent joint counts across frames".into()));
        }
        let positions = poses.iter().flat_map(|p| p.iter().flatten().copied()).collect();
        Self::new(poses.len(), joints, positions)
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn joint_count(&self) -> usize {
        self.joints
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.positions
    }

    pub fn index(&self, frame: usize, person: usize, joint: usize) -> usize {
        (frame * PERSONS + person) * self.joints + joint
    }

    pub fn pose(&self, frame: usize, person: usize) -> &[Vec3] {
        let start = self.index(frame, person, 0);
        &self.positions[start..start + self.joints]
    }

    pub fn pose_mut(&mut self, frame: usize, person: usize) -> &mut [Vec3] {
        let start = self.index(frame, person, 0);
        &mut self.positions[start..start + self.joints]
    }

    /// Applies `f` to every joint position.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            frames: self.frames,
            joints: self.joints,
            positions: self.positions.iter().map(f).collect(),
        }
    }

    /// Largest joint displacement between two sequences of the same shape.
    pub fn max_displacement(&self, other: &Self) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MotionDoc = serde_json::from_str(text).map_err(|e| Error::json("motion", e))?;
        if doc.persons != PERSONS {
            return Err(Error::Motion(format!("expected 2 persons, found {}", doc.persons)));
        }
        if doc.positions.len() % 3 != 0 {
            return Err(Error::Motion("position array length is not a multiple of 3".into()));
        }
        let positions = doc
            .positions
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect();
        Self::new(doc.frames, doc.joints, positions)
    }

    pub fn to_json(&self) -> String {
        self.to_json_with(None)
    }

    /// JSON form with an optional echo of the producing configuration.
    pub fn to_json_with(&self, config: Option<&serde_json::Value>) -> String {
        let doc = MotionDoc {
            schema: Some(crate::SCHEMA_VERSION.to_string()),
            config: config.cloned(),
            persons: PERSONS,
            frames: self.frames,
            joints: self.joints,
            positions: self.positions.iter().flat_map(|p| p.iter().copied()).collect(),
        };
        serde_json::to_string(&doc).expect("motion serializes")
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Motion("missing PCMO header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
        let (frames, joints, persons) = (word(4), word(8), word(12));
        if persons != PERSONS {
            return Err(Error::Motion(format!("expected 2 persons, found {persons}")));
        }
        let payload = &bytes[16..];
        let expected = frames * persons * joints * 3 * 8;
        if payload.len() != expected {
            return Err(Error::Motion(format!(
                "binary payload has {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let positions = values.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        Self::new(frames, joints, positions)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.positions.len() * 24);
        out.extend_from_slice(MAGIC);
        for v in [self.frames, self.joints, PERSONS] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for p in &self.positions {
            for c in p.iter() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    /// Reads either format, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::Motion(format!("{} is neither PCMO binary nor UTF-8 JSON", path.display())))?;
            Self::from_json(&text)
        }
    }

    /// Writes binary when the extension is `.pcmo` or `.bin`, JSON otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.save_with(path, None)
    }

    /// Like [`save`](Self::save); JSON output also carries `config`.
    pub fn save_with(&self, path: &Path, config: Option<&serde_json::Value>) -> Result<()> {
        let binary = matches!(path.extension().and_then(|e| e.to_str()), Some("pcmo" | "bin"));
        let bytes = if binary { self.to_binary() } else { self.to_json_with(config).into_bytes() };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_layout_is_frame_person_joint() {
        let text = r#"{"persons":2,"frames":1,"joints":2,
            "positions":[0,0,0, 1,0,0, 2,0,0, 3,0,0]}"#;
        let m = MotionSequence::from_json(text).unwrap();
        assert_eq!(m.pose(0, 1)[0], Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(m.pose(0, 0)[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_bad_documents() {
        let one_person = r#"{"persons":1,"frames":1,"joints":1,"positions":[0,0,0]}"#;
        assert!(MotionSequence::from_json(one_person).is_err());
        let short = r#"{"persons":2,"frames":1,"joints":1,"positions":[0,0,0]}"#;
        assert!(MotionSequence::from_json(short).is_err());
        let empty = r#"{"persons":2,"frames":0,"joints":1,"positions":[]}"#;
        assert!(MotionSequence::from_json(empty).is_err());
        assert!(MotionSequence::from_binary(b"XXXX0000000000000000").is_err());
    }

    proptest! {
        #[test]
        fn binary_and_json_round_trip(
            frames in 1usize..4,
            joints in 1usize..5,
            seed in prop::collection::vec(-10.0f64..10.0, 120),
        ) {
            let positions = (0..frames * 2 * joints)
                .map(|i| Vec3::new(seed[i % 120], seed[(i * 7 + 1) % 120], seed[(i * 13 + 2) % 120]))
                .collect();
            let m = MotionSequence::new(frames, joints, positions).unwrap();
            prop_assert_eq!(&MotionSequence::from_binary(&m.to_binary()).unwrap(), &m);
            prop_assert_eq!(&MotionSequence::from_json(&m.to_json()).unwrap(), &m);
        }
    }
}
