//! Proxy dimension fitting against a body mesh.
//!
//! The mesh is split into one region per segment (nearest segment in the
//! rest pose). Each primitive's surface samples are then pulled onto their
//! region by gradient descent on
//! `Σ_j Σ_{q ∈ samples_j} min_{p ∈ region_j} ‖q − p‖²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::TriangleMesh;
use crate::skeleton::{segment_frames, BodyProxies, ProxyParams, SampleConfig, SegmentFrame, SegmentProxy, Skeleton};
use crate::spatial::PointGrid;
use crate::{Error, Result, Vec3};

/// Lower clamp on every fitted metric dimension.
pub const MIN_DIMENSION: f64 = 1e-3;

/// Region index of every mesh vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub region_of_vertex: Vec<usize>,
}

impl RegionAssignment {
    /// Vertex positions grouped by region.
    pub fn region_points(&self, mesh: &TriangleMesh, regions: usize) -> Vec<Vec<Vec3>> {
        let mut out = vec![Vec::new(); regions];
        for (v, &r) in mesh.vertices.iter().zip(&self.region_of_vertex) {
            out[r].push(*v);
        }
        out
    }
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

/// Assigns each vertex to the segment nearest to it in point-to-segment
/// distance; ties go to the lowest segment index.
pub fn assign_regions(mesh: &TriangleMesh, skeleton: &Skeleton, rest_pose: &[Vec3]) -> Result<RegionAssignment> {
    if mesh.vertices.is_empty() {
        return Err(Error::Mesh("mesh has no vertices".into()));
    }
    if rest_pose.len() != skeleton.joint_count() {
        return Err(Error::Motion(format!(
            "rest pose has {} joints, skeleton expects {}",
            rest_pose.len(),
            skeleton.joint_count()
        )));
    }
    let ends: Vec<(Vec3, Vec3)> = skeleton
        .segments()
        .iter()
        .map(|s| (rest_pose[s.joint_a], rest_pose[s.joint_b]))
        .collect();
    let region_of_vertex = mesh
        .vertices
        .par_iter()
        .map(|v| {
            let mut best = (0, f64::INFINITY);
            for (j, (a, b)) in ends.iter().enumerate() {
                let d = point_segment_distance(v, a, b);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect();
    Ok(RegionAssignment { region_of_vertex })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub samples: SampleConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            max_iters: 2000,
            convergence_tol: 1e-8,
            samples: SampleConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("fit learning_rate must be positive".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config("fit convergence_tol must be positive".into()));
        }
        if self.samples.cylinder == 0 || self.samples.cuboid == 0 {
            return Err(Error::Config("fit sample counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_loss: f64,
    pub iters: usize,
    /// Loss before the first step followed by the loss after every step.
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Loss of sample sets against region point sets, one pair per primitive.
/// Empty regions contribute nothing.
pub fn fit_loss_points(samples: &[Vec<Vec3>], regions: &[Vec<Vec3>]) -> f64 {
    samples
        .par_iter()
        .zip(regions)
        .map(|(qs, ps)| {
            let grid = PointGrid::new(ps.clone());
            qs.iter().filter_map(|q| grid.nearest(q)).map(|(_, d)| d).sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Fixed fitting setup: rest-pose frames, region grids and sample pattern.
pub struct FitProblem<'a> {
    skeleton: &'a Skeleton,
    rest_pose: &'a [Vec3],
    frames: Vec<SegmentFrame>,
    grids: Vec<PointGrid>,
    body: BodyProxies,
    diagonal: f64,
    pub warnings: Vec<String>,
}

impl<'a> FitProblem<'a> {
    /// Sample patterns are drawn once for `initial` and then re-scaled as the
    /// dimensions change.
    pub fn new(
        mesh: &TriangleMesh,
        regions: &RegionAssignment,
        skeleton: &'a Skeleton,
        rest_pose: &'a [Vec3],
        initial: ProxyParams,
        samples: &SampleConfig,
    ) -> Result<Self> {
        if regions.region_of_vertex.len() != mesh.vertices.len() {
            return Err(Error::Mesh("region assignment does not match the mesh".into()));
        }
        if let Some(&r) = regions.region_of_vertex.iter().find(|&&r| r >= skeleton.segment_count()) {
            return Err(Error::Mesh(format!("region {r} has no segment")));
        }
        let frames = segment_frames(skeleton, rest_pose)?;
        let body = BodyProxies::new(skeleton, initial, rest_pose, samples)?;
        let mut warnings = Vec::new();
        let grids = regions
            .region_points(mesh, skeleton.segment_count())
            .into_iter()
            .enumerate()
            .map(|(j, pts)| {
                if pts.is_empty() {
                    let msg = format!("segment {j} ({}) has an empty mesh region", skeleton.segments()[j].name);
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                PointGrid::new(pts)
            })
            .collect();
        Ok(Self {
            skeleton,
            rest_pose,
            frames,
            grids,
            body,
            diagonal: mesh.bounding_diagonal(),
            warnings,
        })
    }

    fn with_params(&self, params: &ProxyParams) -> BodyProxies {
        BodyProxies {
            params: params.clone(),
            samples: self.body.samples.clone(),
        }
    }

    pub fn loss(&self, params: &ProxyParams) -> Result<f64> {
        Ok(self.loss_and_gradient(params)?.0)
    }

    /// Loss and its gradient with respect to every dimension, with nearest
    /// neighbours held fixed. Gradient layout follows [`flatten`].
    pub fn loss_and_gradient(&self, params: &ProxyParams) -> Result<(f64, Vec<f64>)> {
        params.check_against(self.skeleton)?;
        let posed = self.with_params(params).pose(self.skeleton, self.rest_pose)?;
        let per_segment: Vec<(f64, Vec<f64>)> = (0..self.frames.len())
            .into_par_iter()
            .map(|j| {
                let frame = &self.frames[j];
                let grid = &self.grids[j];
                let proxy = params.segments[j];
                let mut grad = vec![0.0; dimension_count(&proxy)];
                if posed.primitives[j].is_none() || grid.is_empty() {
                    return (0.0, grad);
                }
                let mut loss = 0.0;
                for (q, u) in posed.samples[j].iter().zip(&self.body.samples[j].unit_points) {
                    let (idx, d) = grid.nearest(q).expect("non-empty grid");
                    loss += d;
                    let r = 2.0 * (q - grid.points()[idx]);
                    let x = frame.basis.column(0);
                    let y = frame.basis.column(1);
                    match proxy {
                        SegmentProxy::Cylinder { .. } => {
                            grad[0] += r.dot(&(x * u.x + y * u.y));
                            grad[1] += r.dot(&frame.axis) * u.z * frame.length;
                        }
                        SegmentProxy::Cuboid { .. } => {
                            for (k, g) in grad.iter_mut().enumerate() {
                                *g += r.dot(&frame.basis.column(k)) * u[k];
                            }
                        }
                    }
                }
                (loss, grad)
            })
            .collect();
        let loss = per_segment.iter().map(|(l, _)| l).sum();
        let grad = per_segment.into_iter().flat_map(|(_, g)| g).collect();
        Ok((loss, grad))
    }

    fn clamp(&self, params: &mut ProxyParams) {
        let hi = self.diagonal.max(MIN_DIMENSION);
        for (proxy, frame) in params.segments.iter_mut().zip(&self.frames) {
            match proxy {
                SegmentProxy::Cylinder { r, h_scale } => {
                    *r = r.clamp(MIN_DIMENSION, hi);
                    if frame.length > 0.0 {
                        *h_scale = h_scale.clamp(MIN_DIMENSION / frame.length, hi / frame.length);
                    }
                }
                SegmentProxy::Cuboid { half_extents } => {
                    half_extents.apply(|h| *h = h.clamp(MIN_DIMENSION, hi));
                }
            }
        }
    }
}

fn dimension_count(p: &SegmentProxy) -> usize {
    match p {
        SegmentProxy::Cylinder { .. } => 2,
        SegmentProxy::Cuboid { .. } => 3,
    }
}

/// Dimensions as a flat vector: `(r, h_scale)` per cylinder, three
/// half-extents per cuboid, in segment order.
pub fn flatten(params: &ProxyParams) -> Vec<f64> {
    params
        .segments
        .iter()
        .flat_map(|p| match *p {
            SegmentProxy::Cylinder { r, h_scale } => vec![r, h_scale],
            SegmentProxy::Cuboid { half_extents } => half_extents.iter().copied().collect(),
        })
        .collect()
}

/// Inverse of [`flatten`] using `template` for the primitive kinds.
pub fn unflatten(template: &ProxyParams, values: &[f64]) -> ProxyParams {
    let mut i = 0;
    let segments = template
        .segments
        .iter()
        .map(|p| match p {
            SegmentProxy::Cylinder { .. } => {
                i += 2;
                SegmentProxy::Cylinder {
                    r: values[i - 2],
                    h_scale: values[i - 1],
                }
            }
            SegmentProxy::Cuboid { .. } => {
                i += 3;
                SegmentProxy::Cuboid {
                    half_extents: Vec3::new(values[i - 3], values[i - 2], values[i - 1]),
                }
            }
        })
        .collect();
    ProxyParams::new(segments)
}

/// Fitting loss of `params` on `mesh` with the given regions.
pub fn fit_loss(
    params: &ProxyParams,
    mesh: &TriangleMesh,
    regions: &RegionAssignment,
    skeleton: &Skeleton,
    rest_pose: &[Vec3],
    samples: &SampleConfig,
) -> Result<f64> {
    FitProblem::new(mesh, regions, skeleton, rest_pose, params.clone(), samples)?.loss(params)
}

/// Starting dimensions read off each region in its segment frame: cylinder
/// radius is the mean radial distance, cuboid half-extents the largest
/// absolute local coordinate per axis.
pub fn initial_guess(
    mesh: &TriangleMesh,
    regions: &RegionAssignment,
    skeleton: &Skeleton,
    rest_pose: &[Vec3],
) -> Result<ProxyParams> {
    let frames = segment_frames(skeleton, rest_pose)?;
    let points = regions.region_points(mesh, skeleton.segment_count());
    let segments = skeleton
        .segments()
        .iter()
        .zip(&frames)
        .zip(&points)
        .map(|((seg, frame), pts)| {
            let length = frame.length.max(MIN_DIMENSION);
            match seg.primitive {
                crate::skeleton::PrimitiveKind::Cylinder => {
                    let r = if pts.is_empty() {
                        0.1 * length
                    } else {
                        pts.iter()
                            .map(|p| {
                                let l = frame.basis.transpose() * (p - frame.origin);
                                l.x.hypot(l.y)
                            })
                            .sum::<f64>()
                            / pts.len() as f64
                    };
                    SegmentProxy::Cylinder {
                        r: r.max(MIN_DIMENSION),
                        h_scale: 1.0,
                    }
                }
                crate::skeleton::PrimitiveKind::Cuboid => {
                    let mut half = Vec3::new(0.1 * length, 0.1 * length, 0.5 * length);
                    if !pts.is_empty() {
                        half = Vec3::zeros();
                        for p in pts {
                            let l = frame.basis.transpose() * (p - frame.midpoint());
                            half = half.sup(&l.abs());
                        }
                    }
                    SegmentProxy::Cuboid {
                        half_extents: half.map(|h| h.max(MIN_DIMENSION)),
                    }
                }
            }
        })
        .collect();
    Ok(ProxyParams::new(segments))
}

/// Gradient descent on primitive dimensions from `initial`.
pub fn fit_proxies(
    mesh: &TriangleMesh,
    skeleton: &Skeleton,
    rest_pose: &[Vec3],
    initial: &ProxyParams,
    config: &FitConfig,
) -> Result<(ProxyParams, FitReport)> {
    config.validate()?;
    let regions = assign_regions(mesh, skeleton, rest_pose)?;
    let problem = FitProblem::new(mesh, &regions, skeleton, rest_pose, initial.clone(), &config.samples)?;
    let mut params = initial.clone();
    let (mut loss, mut grad) = problem.loss_and_gradient(&params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            stage: "fit",
            detail: "initial loss".into(),
        });
    }
    let mut history = vec![loss];
    let mut iters = 0;
    let mut calm = 0;
    let mut converged = false;
    while iters < config.max_iters {
        let values: Vec<f64> = flatten(&params)
            .iter()
            .zip(&grad)
            .map(|(v, g)| v - config.learning_rate * g)
            .collect();
        params = unflatten(&params, &values);
        problem.clamp(&mut params);
        let (next, next_grad) = problem.loss_and_gradient(&params)?;
        iters += 1;
        if !next.is_finite() || next_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                stage: "fit",
                detail: format!("loss became {next} at iteration {iters}"),
            });
        }
        history.push(next);
        calm = if (next - loss).abs() < config.convergence_tol { calm + 1 } else { 0 };
        loss = next;
        grad = next_grad;
        if calm >= 10 {
            converged = true;
            break;
        }
    }
    log::info!("fit finished after {iters} iterations, loss {loss:.6e}");
    Ok((
        params,
        FitReport {
            final_loss: loss,
            iters,
            loss_history: history,
            converged,
            warnings: problem.warnings,
        },
    ))
}
