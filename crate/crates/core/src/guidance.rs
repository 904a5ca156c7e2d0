//! Escape directions for collision points and the frozen-target collision loss.
//!
//! Every collision point `p` gets a unit direction `d = (q − p) / ‖q − p‖`
//! towards its antipodal point `q`. The loss is `Σ ‖sg(p + d) − p‖²`: the
//! target `p + d` is a constant, so the gradient with respect to `p` is `−2d`
//! and the value equals the squared length of every effective direction.

use serde::{Deserialize, Serialize};

use crate::collision::{CollisionPoint, CollisionReport, PairProxies};
use crate::motion::PERSONS;
use crate::primitives::antipodal;
use crate::skeleton::{PosedBody, PosedPrimitive};
use crate::{Error, Result, Vec3};

/// Which primitive the collision point is reflected through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntipodalOn {
    /// The primitive whose surface carries the sample.
    #[default]
    Host,
    /// The other person's primitive that contains the sample.
    Container,
}

/// How directions are combined per host segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Every point keeps its own direction.
    PerPoint,
    /// Points of a host segment caught in two or more container segments all
    /// use that segment's count-weighted mean direction; every other point
    /// keeps its own direction.
    #[default]
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceVector {
    pub point: usize,
    pub d: Vec3,
    pub q_world: Vec3,
}

/// Unit direction from `p` to the reflection of `p` through `through`.
pub fn escape_direction(p: &Vec3, through: &PosedPrimitive) -> Result<(Vec3, Vec3)> {
    let local = through.to_local(p);
    let q = through.to_world(&antipodal(&through.shape, &local)?);
    let delta = q - p;
    let len = delta.norm();
    if !(len > 0.0) {
        // a cuboid sample at the exact center reflects onto itself
        return Err(Error::UndefinedAntipodal);
    }
    Ok((delta / len, q))
}

/// Guidance for one collision point; `host` is the primitive hosting its sample.
pub fn guidance_vector(index: usize, cp: &CollisionPoint, host: &PosedPrimitive) -> Result<GuidanceVector> {
    let (d, q_world) = escape_direction(&cp.p_world, host)?;
    Ok(GuidanceVector { point: index, d, q_world })
}

/// Guidance for every point of a report; `None` where the antipodal point is
/// undefined (those points drop out of the loss).
pub fn report_guidance(report: &CollisionReport, bodies: &[PosedBody; PERSONS], on: AntipodalOn) -> Vec<Option<GuidanceVector>> {
    report
        .points
        .iter()
        .enumerate()
        .map(|(i, cp)| {
            let prim = match on {
                AntipodalOn::Host => bodies[cp.host_person].primitives[cp.host_segment].as_ref(),
                AntipodalOn::Container => bodies[1 - cp.host_person].primitives[cp.container_segment].as_ref(),
            }?;
            let (d, q_world) = escape_direction(&cp.p_world, prim).ok()?;
            Some(GuidanceVector { point: i, d, q_world })
        })
        .collect()
}

/// Renormalized mean of unit directions; `None` when they cancel.
pub fn group_direction(directions: &[Vec3]) -> Option<Vec3> {
    let sum: Vec3 = directions.iter().sum();
    let n = sum.norm();
    (n > 1e-12).then(|| sum / n)
}

/// Count-weighted mean `Σ n_k d_k / Σ n_k` of per-region directions, not
/// renormalized. `None` for no points.
pub fn aggregate_directions(groups: &[(usize, Vec3)]) -> Option<Vec3> {
    let total: usize = groups.iter().map(|(n, _)| n).sum();
    if total == 0 {
        return None;
    }
    let weighted: Vec3 = groups.iter().map(|(n, d)| d * *n as f64).sum();
    Some(weighted / total as f64)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossOutput {
    pub value: f64,
    /// `(point index, ∂L/∂p)` for every point included in the loss.
    pub grad_samples: Vec<(usize, Vec3)>,
    /// Effective direction per point, `None` for excluded points.
    pub effective: Vec<Option<Vec3>>,
    /// Host segments `(person, segment)` that used an aggregated direction.
    pub aggregated_segments: Vec<(usize, usize)>,
}

impl LossOutput {
    /// Frozen targets `p + d_eff` of the included points.
    pub fn targets(&self, report: &CollisionReport) -> Vec<(usize, Vec3)> {
        self.effective
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (i, report.points[i].p_world + d)))
            .collect()
    }
}

/// Effective directions for a report under the given mode.
pub fn effective_directions(report: &CollisionReport, guidance: &[Option<GuidanceVector>], mode: LossMode) -> (Vec<Option<Vec3>>, Vec<(usize, usize)>) {
    let mut effective: Vec<Option<Vec3>> = guidance.iter().map(|g| g.map(|g| g.d)).collect();
    let mut aggregated = Vec::new();
    if mode == LossMode::Aggregated {
        for (&host, containers) in &report.per_segment_groups {
            if containers.len() < 2 {
                continue;
            }
            let groups: Vec<(usize, Vec3)> = containers
                .values()
                .filter_map(|idx| {
                    let dirs: Vec<Vec3> = idx.iter().filter_map(|&i| guidance[i].map(|g| g.d)).collect();
                    group_direction(&dirs).map(|d| (dirs.len(), d))
                })
                .collect();
            let Some(total) = aggregate_directions(&groups) else {
                continue;
            };
            if total.norm() < 1e-12 {
                log::debug!("directions of host segment {host:?} cancel in frame {}", report.frame_index);
            }
            for &i in containers.values().flatten() {
                if effective[i].is_some() {
                    effective[i] = Some(total);
                }
            }
            aggregated.push(host);
        }
    }
    (effective, aggregated)
}

/// Frozen-target collision loss and its gradient with respect to every
/// included collision point.
pub fn collision_loss(report: &CollisionReport, guidance: &[Option<GuidanceVector>], mode: LossMode) -> LossOutput {
    let (effective, aggregated_segments) = effective_directions(report, guidance, mode);
    let mut value = 0.0;
    let mut grad_samples = Vec::new();
    for (i, d) in effective.iter().enumerate() {
        if let Some(d) = d {
            // ‖(p + d) − p‖² with the target p + d held constant
            value += d.norm_squared();
            grad_samples.push((i, -2.0 * d));
        }
    }
    LossOutput {
        value,
        grad_samples,
        effective,
        aggregated_segments,
    }
}

/// `Σ ‖c − p‖²` over frozen targets `c` and current sample positions `p`.
pub fn frozen_objective(targets: &[(usize, Vec3)], points: &[Vec3]) -> f64 {
    targets.iter().map(|(i, c)| (c - points[*i]).norm_squared()).sum()
}

/// Pulls per-sample gradients back onto the joint positions of both persons.
pub fn chain_to_joints(
    loss: &LossOutput,
    report: &CollisionReport,
    proxies: &PairProxies,
    bodies: &[PosedBody; PERSONS],
    poses: [&[Vec3]; PERSONS],
) -> [Vec<Vec3>; PERSONS] {
    let n = proxies.skeleton.joint_count();
    let mut out = [vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]];
    for (i, g) in &loss.grad_samples {
        let cp = &report.points[*i];
        let person = cp.host_person;
        proxies.bodies[person].pull_back_sample(
            &proxies.skeleton,
            &bodies[person].frames[cp.host_segment],
            cp.host_segment,
            cp.sample_index,
            poses[person],
            g,
            &mut out[person],
        );
    }
    out
}

/// Everything the optimizer needs from one two-person pose.
#[derive(Debug, Clone)]
pub struct FrameEvaluation {
    pub report: CollisionReport,
    pub guidance: Vec<Option<GuidanceVector>>,
    pub loss: LossOutput,
    pub joint_grad: [Vec<Vec3>; PERSONS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceOptions {
    pub antipodal_on: AntipodalOn,
    pub mode: LossMode,
    pub detect: crate::collision::DetectOptions,
}

pub fn evaluate_frame(frame_index: usize, proxies: &PairProxies, a: &[Vec3], b: &[Vec3], opts: GuidanceOptions) -> Result<FrameEvaluation> {
    let bodies = proxies.pose_pair(a, b)?;
    let report = crate::collision::detect_frame(frame_index, &bodies[0], &bodies[1], opts.detect);
    let guidance = report_guidance(&report, &bodies, opts.antipodal_on);
    let loss = collision_loss(&report, &guidance, opts.mode);
    let joint_grad = chain_to_joints(&loss, &report, proxies, &bodies, [a, b]);
    Ok(FrameEvaluation {
        report,
        guidance,
        loss,
        joint_grad,
    })
}
