//! Inter-person collision detection on posed proxies.
//!
//! A surface sample of one person is a collision point when it lies strictly
//! inside a primitive of the other person. Self-contacts are never tested.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::motion::{MotionSequence, PERSONS};
use crate::primitives::penetration_depth;
use crate::skeleton::{BodyProxies, PosedBody, ProxyParams, SampleConfig, Skeleton};
use crate::{Error, Result, Vec3};

/// Relative slack on bounding-sphere tests so rounding never culls a hit.
const SPHERE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionPoint {
    pub p_world: Vec3,
    pub host_person: usize,
    pub host_segment: usize,
    pub sample_index: usize,
    pub container_segment: usize,
    pub depth: f64,
}

/// Host segment `(person, segment)` to container segment to point indices.
pub type SegmentGroups = BTreeMap<(usize, usize), BTreeMap<usize, Vec<usize>>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollisionReport {
    pub frame_index: usize,
    pub points: Vec<CollisionPoint>,
    pub per_segment_groups: SegmentGroups,
}

impl CollisionReport {
    pub fn new(frame_index: usize, points: Vec<CollisionPoint>) -> Self {
        let mut per_segment_groups = SegmentGroups::new();
        for (i, cp) in points.iter().enumerate() {
            per_segment_groups
                .entry((cp.host_person, cp.host_segment))
                .or_default()
                .entry(cp.container_segment)
                .or_default()
                .push(i);
        }
        Self {
            frame_index,
            points,
            per_segment_groups,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_depth(&self) -> f64 {
        self.points.iter().map(|p| p.depth).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectOptions {
    /// Skip primitive pairs and samples whose bounding spheres cannot overlap.
    pub broad_phase: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { broad_phase: true }
    }
}

fn spheres_apart(c1: &Vec3, r1: f64, c2: &Vec3, r2: f64) -> bool {
    let reach = (r1 + r2) * (1.0 + SPHERE_SLACK) + SPHERE_SLACK;
    (c1 - c2).norm_squared() > reach * reach
}

fn one_way(host_person: usize, host: &PosedBody, other: &PosedBody, opts: DetectOptions, out: &mut Vec<CollisionPoint>) {
    for (s, samples) in host.samples.iter().enumerate() {
        let Some(host_prim) = &host.primitives[s] else {
            continue;
        };
        for container in other.primitives() {
            if opts.broad_phase
                && spheres_apart(
                    &host_prim.center(),
                    host_prim.bounding_radius(),
                    &container.center(),
                    container.bounding_radius(),
                )
            {
                continue;
            }
            for (i, p) in samples.iter().enumerate() {
                if opts.broad_phase && spheres_apart(p, 0.0, &container.center(), container.bounding_radius()) {
                    continue;
                }
                if !container.contains(p) {
                    continue;
                }
                // the world test and the local depth may disagree on the boundary band
                match penetration_depth(&container.shape, &container.to_local(p)) {
                    Ok(depth) if depth > 0.0 => out.push(CollisionPoint {
                        p_world: *p,
                        host_person,
                        host_segment: s,
                        sample_index: i,
                        container_segment: container.segment,
                        depth,
                    }),
                    _ => {}
                }
            }
        }
    }
    // order by host segment, sample, container regardless of loop nesting
    out.sort_by_key(|c| (c.host_person, c.host_segment, c.sample_index, c.container_segment));
}

/// Collision points of `a`'s samples inside `b` and of `b`'s samples inside `a`.
pub fn detect_frame(frame_index: usize, a: &PosedBody, b: &PosedBody, opts: DetectOptions) -> CollisionReport {
    let mut points = Vec::new();
    one_way(0, a, b, opts, &mut points);
    let mut second = Vec::new();
    one_way(1, b, a, opts, &mut second);
    points.extend(second);
    CollisionReport::new(frame_index, points)
}

/// Proxies and sample patterns for both persons of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProxies {
    pub skeleton: Skeleton,
    pub bodies: [BodyProxies; PERSONS],
}

impl PairProxies {
    pub fn new(skeleton: Skeleton, bodies: [BodyProxies; PERSONS]) -> Self {
        Self { skeleton, bodies }
    }

    /// Samples both bodies with cylinder allocation taken from `reference`
    /// (usually the first frame of the motion).
    pub fn sample(
        skeleton: Skeleton,
        params: [ProxyParams; PERSONS],
        reference: [&[Vec3]; PERSONS],
        config: &SampleConfig,
    ) -> Result<Self> {
        let [pa, pb] = params;
        let bodies = [
            BodyProxies::new(&skeleton, pa, reference[0], config)?,
            BodyProxies::new(&skeleton, pb, reference[1], config)?,
        ];
        Ok(Self { skeleton, bodies })
    }

    /// Samples both bodies using the first frame of `motion` as reference.
    pub fn for_motion(
        skeleton: Skeleton,
        params: [ProxyParams; PERSONS],
        motion: &MotionSequence,
        config: &SampleConfig,
    ) -> Result<Self> {
        let reference = [motion.pose(0, 0).to_vec(), motion.pose(0, 1).to_vec()];
        Self::sample(skeleton, params, [&reference[0], &reference[1]], config)
    }

    pub fn check_motion(&self, motion: &MotionSequence) -> Result<()> {
        if motion.joint_count() != self.skeleton.joint_count() {
            return Err(Error::Motion(format!(
                "motion has {} joints, skeleton expects {}",
                motion.joint_count(),
                self.skeleton.joint_count()
            )));
        }
        Ok(())
    }

    pub fn pose_pair(&self, a: &[Vec3], b: &[Vec3]) -> Result<[PosedBody; PERSONS]> {
        Ok([
            self.bodies[0].pose(&self.skeleton, a)?,
            self.bodies[1].pose(&self.skeleton, b)?,
        ])
    }

    pub fn pose_frame(&self, motion: &MotionSequence, frame: usize) -> Result<[PosedBody; PERSONS]> {
        self.pose_pair(motion.pose(frame, 0), motion.pose(frame, 1))
    }

    pub fn detect_pose(&self, frame_index: usize, a: &[Vec3], b: &[Vec3], opts: DetectOptions) -> Result<CollisionReport> {
        let [pa, pb] = self.pose_pair(a, b)?;
        Ok(detect_frame(frame_index, &pa, &pb, opts))
    }
}

/// One report per frame, in frame order.
pub fn detect_sequence(motion: &MotionSequence, proxies: &PairProxies, opts: DetectOptions) -> Result<Vec<CollisionReport>> {
    proxies.check_motion(motion)?;
    (0..motion.frame_count())
        .into_par_iter()
        .map(|f| proxies.detect_pose(f, motion.pose(f, 0), motion.pose(f, 1), opts))
        .collect()
}
