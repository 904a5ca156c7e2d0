//! Default 22-joint body with 19 proxy segments.
//!
//! Joint order follows the common 22-joint SMPL body layout. The segment list
//! and proxy dimensions are our own reconstruction for an adult of average
//! build: three trunk cuboids, cylinders everywhere else, no hands.

use super::{Joint, PrimitiveKind, ProxyParams, Segment, SegmentProxy, Skeleton};
use crate::Vec3;

pub const BODY22_JOINTS: [(&str, Option<usize>); 22] = [
    ("pelvis", None),
    ("left_hip", Some(0)),
    ("right_hip", Some(0)),
    ("spine1", Some(0)),
    ("left_knee", Some(1)),
    ("right_knee", Some(2)),
    ("spine2", Some(3)),
    ("left_ankle", Some(4)),
    ("right_ankle", Some(5)),
    ("spine3", Some(6)),
    ("left_foot", Some(7)),
    ("right_foot", Some(8)),
    ("neck", Some(9)),
    ("left_collar", Some(9)),
    ("right_collar", Some(9)),
    ("head", Some(12)),
    ("left_shoulder", Some(13)),
    ("right_shoulder", Some(14)),
    ("left_elbow", Some(16)),
    ("right_elbow", Some(17)),
    ("left_wrist", Some(18)),
    ("right_wrist", Some(19)),
];

const SEGMENTS: [(&str, usize, usize, PrimitiveKind); 19] = {
    use PrimitiveKind::{Cuboid as B, Cylinder as C};
    [
        ("lower_torso", 0, 3, B),
        ("mid_torso", 3, 6, B),
        ("chest", 6, 9, B),
        ("neck", 9, 12, C),
        ("head", 12, 15, C),
        ("left_hip", 0, 1, C),
        ("right_hip", 0, 2, C),
        ("left_thigh", 1, 4, C),
        ("right_thigh", 2, 5, C),
        ("left_shin", 4, 7, C),
        ("right_shin", 5, 8, C),
        ("left_foot", 7, 10, C),
        ("right_foot", 8, 11, C),
        ("left_shoulder", 13, 16, C),
        ("right_shoulder", 14, 17, C),
        ("left_upper_arm", 16, 18, C),
        ("right_upper_arm", 17, 19, C),
        ("left_forearm", 18, 20, C),
        ("right_forearm", 19, 21, C),
    ]
};

pub fn body22_skeleton() -> Skeleton {
    let joints = BODY22_JOINTS
        .iter()
        .map(|&(name, parent)| Joint {
            name: name.to_string(),
            parent,
        })
        .collect();
    let segments = SEGMENTS
        .iter()
        .map(|&(name, joint_a, joint_b, primitive)| Segment {
            name: name.to_string(),
            joint_a,
            joint_b,
            primitive,
        })
        .collect();
    Skeleton::new(joints, segments, None).expect("built-in skeleton is valid")
}

/// T-pose in meters: z up, facing +y, left side towards -x.
pub fn body22_rest_pose() -> Vec<Vec3> {
    [
        [0.0, 0.0, 0.95],
        [-0.09, 0.0, 0.88],
        [0.09, 0.0, 0.88],
        [0.0, 0.0, 1.05],
        [-0.10, 0.0, 0.50],
        [0.10, 0.0, 0.50],
        [0.0, 0.0, 1.18],
        [-0.10, 0.0, 0.08],
        [0.10, 0.0, 0.08],
        [0.0, 0.0, 1.32],
        [-0.10, 0.12, 0.02],
        [0.10, 0.12, 0.02],
        [0.0, 0.0, 1.50],
        [-0.07, 0.0, 1.44],
        [0.07, 0.0, 1.44],
        [0.0, 0.03, 1.64],
        [-0.18, 0.0, 1.44],
        [0.18, 0.0, 1.44],
        [-0.45, 0.0, 1.44],
        [0.45, 0.0, 1.44],
        [-0.70, 0.0, 1.44],
        [0.70, 0.0, 1.44],
    ]
    .iter()
    .map(|c| Vec3::new(c[0], c[1], c[2]))
    .collect()
}

/// Default proxy dimensions matching [`body22_skeleton`].
pub fn body22_proxies() -> ProxyParams {
    let cyl = |r: f64, h_scale: f64| SegmentProxy::Cylinder { r, h_scale };
    let cub = |x: f64, y: f64, z: f64| SegmentProxy::Cuboid {
        half_extents: Vec3::new(x, y, z),
    };
    ProxyParams::new(vec![
        cub(0.15, 0.10, 0.06),
        cub(0.14, 0.09, 0.07),
        cub(0.16, 0.10, 0.08),
        cyl(0.05, 1.0),
        cyl(0.09, 1.5),
        cyl(0.08, 1.0),
        cyl(0.08, 1.0),
        cyl(0.07, 1.0),
        cyl(0.07, 1.0),
        cyl(0.05, 1.0),
        cyl(0.05, 1.0),
        cyl(0.04, 1.0),
        cyl(0.04, 1.0),
        cyl(0.05, 1.0),
        cyl(0.05, 1.0),
        cyl(0.045, 1.0),
        cyl(0.045, 1.0),
        cyl(0.04, 1.0),
        cyl(0.04, 1.0),
    ])
}
