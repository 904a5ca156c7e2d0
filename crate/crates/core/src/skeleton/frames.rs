use serde::{Deserialize, Serialize};

use super::Skeleton;
use crate::{Error, Mat3, Result, Vec3};

/// Segments shorter than this are flagged degenerate.
pub const DEGENERATE_LENGTH: f64 = 1e-9;

/// A lateral reference is rejected when its sine with the segment axis falls
/// below this value.
const MIN_LATERAL_SINE: f64 = 1e-3;

/// Where the first perpendicular axis of a segment frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LateralRef {
    /// `J[to] - J[from]`, projected off the segment axis.
    Joints { from: usize, to: usize },
    /// World basis vector `k`, used when every joint reference is collinear.
    World(usize),
}

/// Rigid frame of one segment for one pose.
///
/// `basis` columns are `(lateral, axis × lateral, axis)`, so local +z runs
/// along the segment from `joint_a` to `joint_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentFrame {
    pub origin: Vec3,
    pub axis: Vec3,
    pub length: f64,
    pub basis: Mat3,
    pub lateral: LateralRef,
    pub degenerate: bool,
}

impl SegmentFrame {
    pub fn end(&self) -> Vec3 {
        self.origin + self.length * self.axis
    }

    pub fn midpoint(&self) -> Vec3 {
        self.origin + 0.5 * self.length * self.axis
    }

    /// Lateral reference vector for the given joint positions.
    pub(crate) fn lateral_vector(&self, joints: &[Vec3]) -> Vec3 {
        match self.lateral {
            LateralRef::Joints { from, to } => joints[to] - joints[from],
            LateralRef::World(k) => Vec3::ith(k, 1.0),
        }
    }
}

fn world_fallback(axis: &Vec3) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if axis[k].abs() < axis[best].abs() {
            best = k;
        }
    }
    best
}

/// Builds the rigid frame of every segment for one pose.
///
/// The lateral direction comes from the first usable joint pair in the
/// skeleton's candidate list (hip pair for trunk cuboids, then parent and
/// child joints, then every other joint by tree distance), so frames follow
/// rigid motions of the joints. Only a pose with every joint on the segment
/// line falls back to the world axis least aligned with the segment.
pub fn segment_frames(skeleton: &Skeleton, joints: &[Vec3]) -> Result<Vec<SegmentFrame>> {
    if joints.len() != skeleton.joint_count() {
        return Err(Error::Motion(format!(
            "pose has {} joints, skeleton expects {}",
            joints.len(),
            skeleton.joint_count()
        )));
    }
    if let Some(i) = joints.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Motion(format!("joint {i} has a non-finite coordinate")));
    }

    let frames = skeleton
        .segments()
        .iter()
        .enumerate()
        .map(|(s, seg)| {
            let origin = joints[seg.joint_a];
            let delta = joints[seg.joint_b] - origin;
            let length = delta.norm();
            if length < DEGENERATE_LENGTH {
                return SegmentFrame {
                    origin,
                    axis: Vec3::z(),
                    length,
                    basis: Mat3::identity(),
                    lateral: LateralRef::World(0),
                    degenerate: true,
                };
            }
            let axis = delta / length;
            let from_joints = skeleton.lateral_candidates(s).iter().find_map(|&(from, to)| {
                let w = joints[to] - joints[from];
                let wn = w.norm();
                if wn < DEGENERATE_LENGTH {
                    return None;
                }
                let u = w - w.dot(&axis) * axis;
                (u.norm() >= MIN_LATERAL_SINE * wn).then_some((LateralRef::Joints { from, to }, u))
            });
            let (lateral, u) = from_joints.unwrap_or_else(|| {
                let k = world_fallback(&axis);
                let w = Vec3::ith(k, 1.0);
                (LateralRef::World(k), w - w.dot(&axis) * axis)
            });
            let x = u.normalize();
            let y = axis.cross(&x);
            SegmentFrame {
                origin,
                axis,
                length,
                basis: Mat3::from_columns(&[x, y, axis]),
                lateral,
                degenerate: false,
            }
        })
        .collect();
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{body22_rest_pose, body22_skeleton, chain_skeleton, PrimitiveKind};

    #[test]
    fn axis_aligned_segment() {
        let sk = chain_skeleton(&[PrimitiveKind::Cylinder]);
        let f = segment_frames(&sk, &[Vec3::zeros(), Vec3::new(0.0, 0.0, 0.5)]).unwrap();
        assert_eq!(f[0].origin, Vec3::zeros());
        assert!((f[0].axis - Vec3::z()).norm() < 1e-15);
        assert!((f[0].length - 0.5).abs() < 1e-15);
        assert!(!f[0].degenerate);
    }

    #[test]
    fn zero_length_is_flagged() {
        let sk = chain_skeleton(&[PrimitiveKind::Cylinder]);
        let p = Vec3::repeat(1.0);
        let f = segment_frames(&sk, &[p, p]).unwrap();
        assert!(f[0].degenerate);
        assert!(f[0].basis.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_wrong_joint_count_and_nan() {
        let sk = chain_skeleton(&[PrimitiveKind::Cylinder]);
        assert!(segment_frames(&sk, &[Vec3::zeros()]).is_err());
        assert!(segment_frames(&sk, &[Vec3::zeros(), Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn straight_limbs_rotate_with_the_body() {
        let sk = body22_skeleton();
        let rest = body22_rest_pose();
        let rot = nalgebra::Rotation3::from_scaled_axis(Vec3::new(0.4, -0.9, 1.3)).into_inner();
        let moved: Vec<Vec3> = rest.iter().map(|p| rot * p).collect();
        let f0 = segment_frames(&sk, &rest).unwrap();
        let f1 = segment_frames(&sk, &moved).unwrap();
        for (a, b) in f0.iter().zip(&f1) {
            assert!(matches!(a.lateral, LateralRef::Joints { .. }));
            assert!((rot * a.basis - b.basis).abs().max() < 1e-12);
        }
    }

    #[test]
    fn only_a_collinear_skeleton_uses_the_world_axis() {
        let sk = chain_skeleton(&[PrimitiveKind::Cylinder, PrimitiveKind::Cylinder]);
        let line = [Vec3::zeros(), Vec3::new(0.0, 0.0, 0.3), Vec3::new(0.0, 0.0, 0.6)];
        let f = segment_frames(&sk, &line).unwrap();
        assert!(f.iter().all(|f| matches!(f.lateral, LateralRef::World(_))));
        let bent = [Vec3::zeros(), Vec3::new(0.0, 0.0, 0.3), Vec3::new(0.2, 0.0, 0.5)];
        let f = segment_frames(&sk, &bent).unwrap();
        assert!(f.iter().all(|f| matches!(f.lateral, LateralRef::Joints { .. })));
    }

    #[test]
    fn rest_pose_bases_are_right_handed() {
        let sk = body22_skeleton();
        for f in segment_frames(&sk, &body22_rest_pose()).unwrap() {
            let b = f.basis;
            assert!((b.transpose() * b - Mat3::identity()).abs().max() < 1e-12);
            assert!((b.determinant() - 1.0).abs() < 1e-12);
            assert!((f.end() - f.origin - f.length * f.axis).norm() < 1e-12);
        }
    }
}
