//! Synthetic two-person scenes with shallow interpenetration, built on the
//! default 22-joint body.
//!
//! Each scene holds a base pair of poses in which the two bodies overlap by
//! roughly 2 cm, and animates them with a small sway that keeps the overlap
//! in every frame.

use crate::motion::MotionSequence;
use crate::skeleton::{body22_rest_pose, body22_skeleton, Skeleton};
use crate::Vec3;

const L_HIP: usize = 1;
const R_HIP: usize = 2;
const L_KNEE: usize = 4;
const R_KNEE: usize = 5;
const L_ANKLE: usize = 7;
const R_ANKLE: usize = 8;
const L_SHOULDER: usize = 16;
const R_SHOULDER: usize = 17;
const L_ELBOW: usize = 18;
const R_ELBOW: usize = 19;
const L_WRIST: usize = 20;
const R_WRIST: usize = 21;

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: &'static str,
    pub description: &'static str,
    pub motion: MotionSequence,
}

fn rotate_z(pose: &[Vec3], angle: f64) -> Vec<Vec3> {
    let (s, c) = angle.sin_cos();
    pose.iter().map(|p| Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)).collect()
}

fn translate(pose: &[Vec3], t: Vec3) -> Vec<Vec3> {
    pose.iter().map(|p| p + t).collect()
}

fn descendants(skeleton: &Skeleton, joint: usize, out: &mut Vec<usize>) {
    for &c in skeleton.children(joint) {
        out.push(c);
        descendants(skeleton, c, out);
    }
}

/// Moves `joint` to `target` and carries its whole subtree along.
fn place_joint(skeleton: &Skeleton, pose: &mut [Vec3], joint: usize, target: Vec3) {
    let delta = target - pose[joint];
    let mut sub = vec![joint];
    descendants(skeleton, joint, &mut sub);
    for j in sub {
        pose[j] += delta;
    }
}

/// Points the chain `joints[0] -> joints[1] -> ...` along `dirs`, keeping
/// every link length.
fn aim_chain(skeleton: &Skeleton, pose: &mut [Vec3], joints: &[usize], dirs: &[Vec3]) {
    for (w, dir) in joints.windows(2).zip(dirs) {
        let len = (pose[w[1]] - pose[w[0]]).norm();
        let target = pose[w[0]] + len * dir.normalize();
        place_joint(skeleton, pose, w[1], target);
    }
}

/// Animates a base pair: person 1 (or person 0 when `move_first`) sways by
/// `sway` and breathes by `depth` along its separating direction.
fn animate(base: [Vec<Vec3>; 2], frames: usize, mover: usize, sway: Vec3, depth: Vec3) -> MotionSequence {
    let poses: Vec<[Vec<Vec3>; 2]> = (0..frames)
        .map(|f| {
            let phase = std::f64::consts::TAU * f as f64 / frames as f64;
            let offset = sway * phase.sin() + depth * (2.0 * phase).sin();
            let mut pair = base.clone();
            pair[mover] = translate(&pair[mover], offset);
            pair
        })
        .collect();
    MotionSequence::from_poses(&poses).expect("scene poses are consistent")
}

/// Person 0 bends its right arm so the forearm lies across person 1's chest
/// and presses 2 cm into it.
pub fn forearm_on_chest(frames: usize) -> Scene {
    let sk = body22_skeleton();
    let mut a = body22_rest_pose();
    aim_chain(
        &sk,
        &mut a,
        &[R_SHOULDER, R_ELBOW, R_WRIST],
        &[Vec3::new(0.0, 1.0, -0.8), -Vec3::x()],
    );
    let forearm_front = a[R_WRIST].y + 0.04;
    // person 1 faces -y; its chest front (half depth 0.10) sits 2 cm behind
    // the front of the forearm
    let b = translate(
        &rotate_z(&body22_rest_pose(), std::f64::consts::PI),
        Vec3::new(0.05, forearm_front - 0.02 + 0.10, 0.0),
    );
    Scene {
        name: "forearm_on_chest",
        description: "forearm pressed across the partner's chest",
        motion: animate([a, b], frames, 1, Vec3::new(0.01, 0.0, 0.0), Vec3::new(0.0, 0.003, 0.0)),
    }
}

/// Side by side with person 1 raised so the neighbouring forearms run
/// parallel and overlap by 2 cm.
pub fn parallel_forearms(frames: usize) -> Scene {
    let a = body22_rest_pose();
    // forearm radii 0.04 + 0.04 minus a 2 cm overlap
    let b = translate(&a, Vec3::new(1.10, 0.0, 0.06));
    Scene {
        name: "parallel_forearms",
        description: "two parallel forearms interpenetrating by 2 cm",
        motion: animate([a, b], frames, 1, Vec3::new(0.01, 0.0, 0.0), Vec3::zeros()),
    }
}

/// Person 0's left arm lies across person 1's waist and hanging left forearm,
/// so single segments collide with two partner segments at once.
pub fn arm_across_waist(frames: usize) -> Scene {
    let mut b = body22_rest_pose();
    b[L_ELBOW] = Vec3::new(-0.22, 0.04, 1.17);
    b[L_WRIST] = Vec3::new(-0.22, 0.08, 0.92);
    let depth = 0.02;
    let waist_front = 0.10;
    let arm_radius = 0.045;
    let y = 0.5;
    let b = translate(&rotate_z(&b, std::f64::consts::PI), Vec3::new(0.0, y, 0.0));
    let arm_height = 0.995;
    let a = translate(
        &body22_rest_pose(),
        Vec3::new(0.45, y - waist_front - arm_radius + depth, arm_height - 1.44),
    );
    Scene {
        name: "arm_across_waist",
        description: "one arm pressed into the partner's waist and arm at once",
        motion: animate([a, b], frames, 0, Vec3::new(0.01, 0.0, 0.0), Vec3::zeros()),
    }
}

/// Standing back to back with the trunks overlapping by 2 cm.
pub fn back_to_back(frames: usize) -> Scene {
    let a = body22_rest_pose();
    let b = translate(&rotate_z(&a, std::f64::consts::PI), Vec3::new(0.0, -0.18, 0.0));
    Scene {
        name: "back_to_back",
        description: "backs pressed together",
        motion: animate([a, b], frames, 1, Vec3::new(0.01, 0.0, 0.0), Vec3::new(0.0, -0.003, 0.0)),
    }
}

/// Side by side in wide stances: each person's inner shin slants towards the
/// partner and the two shins cross with a 2 cm overlap halfway down.
pub fn crossed_shins(frames: usize) -> Scene {
    let sk = body22_skeleton();
    let mut a = body22_rest_pose();
    for (side, hip, knee, ankle, shoulder, elbow, wrist) in [
        (-1.0, L_HIP, L_KNEE, L_ANKLE, L_SHOULDER, L_ELBOW, L_WRIST),
        (1.0, R_HIP, R_KNEE, R_ANKLE, R_SHOULDER, R_ELBOW, R_WRIST),
    ] {
        aim_chain(
            &sk,
            &mut a,
            &[hip, knee, ankle],
            &[Vec3::new(side * 0.4, 0.0, -1.0), Vec3::new(side * 0.5, 0.0, -1.0)],
        );
        aim_chain(
            &sk,
            &mut a,
            &[shoulder, elbow, wrist],
            &[Vec3::new(side * 0.2, 0.0, -1.0), Vec3::new(side * 0.05, 0.0, -1.0)],
        );
    }
    // person 1 stands on the -x side; its right shin crosses person 0's left
    // shin at mid height, offset in y by the radii 0.05 + 0.05 minus 2 cm
    let mid_left = 0.5 * (a[L_KNEE] + a[L_ANKLE]);
    let mid_right = 0.5 * (a[R_KNEE] + a[R_ANKLE]);
    let b = translate(&a, Vec3::new(mid_left.x - mid_right.x, 0.08, 0.0));
    Scene {
        name: "crossed_shins",
        description: "wide stances with the inner shins crossing",
        motion: animate([a, b], frames, 1, Vec3::new(0.0, 0.0, 0.01), Vec3::new(0.0, 0.003, 0.0)),
    }
}

/// The shipped interpenetration suite.
pub fn synthetic_suite() -> Vec<Scene> {
    vec![
        forearm_on_chest(60),
        parallel_forearms(30),
        arm_across_waist(90),
        back_to_back(120),
        crossed_shins(300),
    ]
}

/// Reflection `x -> -x` of every joint.
pub fn mirror_x(motion: &MotionSequence) -> MotionSequence {
    motion.map_points(|p| Vec3::new(-p.x, p.y, p.z))
}
