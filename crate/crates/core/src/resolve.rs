//! Penetration resolution by gradient descent on joint positions.
//!
//! The objective combines the collision loss with three pose-preservation
//! terms measured against the input sequence `J0`:
//!
//! ```text
//! L = λ_coll·L_coll + λ_anchor·Σ‖J − J0‖² + λ_bone·Σ(‖bone‖ − ‖bone0‖)² + λ_smooth·Σ‖ΔJ_t − ΔJ0_t‖²
//! ```
//!
//! Collision points and guidance targets are recomputed every iteration. Each
//! step is halved until the frozen-target surrogate (the collision term with
//! its targets fixed, plus the regularizers) decreases sufficiently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::PairProxies;
use crate::guidance::{evaluate_frame, GuidanceOptions};
use crate::metrics::{coll_metrics, PlausibilityMetrics};
use crate::motion::{MotionSequence, PERSONS};
use crate::skeleton::{ProxyParams, SampleConfig, Skeleton};
use crate::{Error, Result, Vec3};

/// Slack allowed when checking that a step does not increase the surrogate.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Sufficient-decrease fraction of the backtracking test.
const ARMIJO: f64 = 1e-4;

const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Refinement of an existing motion: strong collision and bone weights.
    Adaption,
    /// Weights used when the loss is part of training from scratch.
    Scratch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolveConfig {
    pub lambda_coll: f64,
    pub lambda_anchor: f64,
    pub lambda_bone: f64,
    pub lambda_smooth: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Largest displacement of any joint in a single step (m); longer joint
    /// steps are shortened to this length.
    pub max_step: f64,
    /// Consecutive collision-free iterations that end the run.
    pub clean_iters: usize,
    /// Seed of the surface sample patterns.
    pub seed: u64,
    pub cylinder_samples: usize,
    pub cuboid_samples: usize,
    pub guidance: GuidanceOptions,
}

impl Default for ResolveConfig {
    fn default() -> Self {
        Self::preset(Preset::Adaption)
    }
}

impl ResolveConfig {
    pub fn preset(preset: Preset) -> Self {
        let samples = SampleConfig::default();
        let (lambda_coll, lambda_bone) = match preset {
            Preset::Adaption => (10.0, 100.0),
            Preset::Scratch => (0.1, 10.0),
        };
        Self {
            lambda_coll,
            lambda_anchor: 1.0,
            lambda_bone,
            lambda_smooth: 30.0,
            learning_rate: 5e-3,
            max_iters: 500,
            max_step: 5e-3,
            clean_iters: 5,
            seed: samples.seed,
            cylinder_samples: samples.cylinder,
            cuboid_samples: samples.cuboid,
            guidance: GuidanceOptions::default(),
        }
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            cylinder: self.cylinder_samples,
            cuboid: self.cuboid_samples,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda_coll", self.lambda_coll),
            ("lambda_anchor", self.lambda_anchor),
            ("lambda_bone", self.lambda_bone),
            ("lambda_smooth", self.lambda_smooth),
        ];
        for (name, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Config(format!("max_step must be > 0, got {}", self.max_step)));
        }
        if self.clean_iters == 0 {
            return Err(Error::Config("clean_iters must be >= 1".into()));
        }
        if self.cylinder_samples == 0 || self.cuboid_samples == 0 {
            return Err(Error::Config("sample counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Unweighted term values of one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub coll: f64,
    pub anchor: f64,
    pub bone: f64,
    pub smooth: f64,
    pub collision_points: usize,
}

/// Frozen-target surrogate before and after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    /// Fraction of the clipped gradient step that was taken.
    pub step_scale: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CollisionFree,
    MaxIters,
    /// No step size decreased the surrogate.
    Stalled,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveReport {
    /// Accepted descent steps.
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// One entry per evaluated iterate, starting with the input.
    pub loss_curve: Vec<LossTerms>,
    pub steps: Vec<StepRecord>,
    /// Iterates whose total loss rose above the previous one (re-detection).
    pub transient_increases: usize,
    pub before: PlausibilityMetrics,
    pub after: PlausibilityMetrics,
    pub max_bone_drift_pct: f64,
    pub max_displacement: f64,
    pub diagnostic: Option<String>,
}

/// Frozen targets of one frame: `(person, segment, sample, target)`.
type FrameTargets = Vec<(usize, usize, usize, Vec3)>;

struct Evaluation {
    coll: f64,
    points: usize,
    grad: Vec<Vec3>,
    targets: Vec<FrameTargets>,
}

fn evaluate(motion: &MotionSequence, proxies: &PairProxies, opts: GuidanceOptions) -> Result<Evaluation> {
    let per_frame = (0..motion.frame_count())
        .into_par_iter()
        .map(|f| {
            let ev = evaluate_frame(f, proxies, motion.pose(f, 0), motion.pose(f, 1), opts)?;
            let targets: FrameTargets = ev
                .loss
                .targets(&ev.report)
                .into_iter()
                .map(|(i, c)| {
                    let cp = &ev.report.points[i];
                    (cp.host_person, cp.host_segment, cp.sample_index, c)
                })
                .collect();
            Ok((ev.loss.value, ev.report.points.len(), ev.joint_grad, targets))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grad = vec![Vec3::zeros(); motion.positions().len()];
    let mut coll = 0.0;
    let mut points = 0;
    let mut targets = Vec::with_capacity(per_frame.len());
    for (f, (value, n, joint_grad, t)) in per_frame.into_iter().enumerate() {
        coll += value;
        points += n;
        for (person, g) in joint_grad.iter().enumerate() {
            let start = motion.index(f, person, 0);
            for (dst, src) in grad[start..start + g.len()].iter_mut().zip(g) {
                *dst += src;
            }
        }
        targets.push(t);
    }
    Ok(Evaluation {
        coll,
        points,
        grad,
        targets,
    })
}

/// `Σ‖c − p‖²` of frozen targets at the sample positions of `motion`.
fn frozen_collision(motion: &MotionSequence, proxies: &PairProxies, targets: &[FrameTargets]) -> Result<f64> {
    let per_frame = (0..motion.frame_count())
        .into_par_iter()
        .map(|f| {
            let t = &targets[f];
            if t.is_empty() {
                return Ok(0.0);
            }
            let bodies = proxies.pose_frame(motion, f)?;
            Ok(t.iter()
                .map(|(person, seg, sample, c)| (c - bodies[*person].samples[*seg][*sample]).norm_squared())
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_frame.iter().sum())
}

struct Regularizers {
    anchor: f64,
    bone: f64,
    smooth: f64,
}

/// Regularizer values; when `grad` is given, adds the weighted gradient.
fn regularizers(
    cur: &MotionSequence,
    init: &MotionSequence,
    skeleton: &Skeleton,
    cfg: &ResolveConfig,
    mut grad: Option<&mut [Vec3]>,
) -> Regularizers {
    let mut r = Regularizers {
        anchor: 0.0,
        bone: 0.0,
        smooth: 0.0,
    };
    let (x, x0) = (cur.positions(), init.positions());
    for (i, (p, p0)) in x.iter().zip(x0).enumerate() {
        let e = p - p0;
        r.anchor += e.norm_squared();
        if let Some(g) = grad.as_deref_mut() {
            g[i] += 2.0 * cfg.lambda_anchor * e;
        }
    }
    for f in 0..cur.frame_count() {
        for person in 0..PERSONS {
            for (parent, child) in skeleton.bones() {
                let (ip, ic) = (cur.index(f, person, parent), cur.index(f, person, child));
                let v = x[ic] - x[ip];
                let len = v.norm();
                let e = len - (x0[ic] - x0[ip]).norm();
                r.bone += e * e;
                if let Some(g) = grad.as_deref_mut() {
                    if len > 0.0 && e != 0.0 {
                        let gb = 2.0 * cfg.lambda_bone * e / len * v;
                        g[ic] += gb;
                        g[ip] -= gb;
                    }
                }
            }
        }
    }
    for f in 0..cur.frame_count().saturating_sub(1) {
        for i in cur.index(f, 0, 0)..cur.index(f + 1, 0, 0) {
            let j = i + PERSONS * cur.joint_count();
            let e = (x[j] - x[i]) - (x0[j] - x0[i]);
            r.smooth += e.norm_squared();
            if let Some(g) = grad.as_deref_mut() {
                g[j] += 2.0 * cfg.lambda_smooth * e;
                g[i] -= 2.0 * cfg.lambda_smooth * e;
            }
        }
    }
    r
}

fn weighted(cfg: &ResolveConfig, coll: f64, r: &Regularizers) -> f64 {
    cfg.lambda_coll * coll + cfg.lambda_anchor * r.anchor + cfg.lambda_bone * r.bone + cfg.lambda_smooth * r.smooth
}

/// Largest relative bone-length change between two sequences, in percent.
pub fn max_bone_drift_pct(skeleton: &Skeleton, init: &MotionSequence, out: &MotionSequence) -> f64 {
    let mut worst: f64 = 0.0;
    for f in 0..init.frame_count() {
        for person in 0..PERSONS {
            let (a, b) = (init.pose(f, person), out.pose(f, person));
            for (p, c) in skeleton.bones() {
                let l0 = (a[c] - a[p]).norm();
                if l0 > 0.0 {
                    worst = worst.max(((b[c] - b[p]).norm() - l0).abs() / l0 * 100.0);
                }
            }
        }
    }
    worst
}

/// Builds proxies from the first frame of `motion` and resolves it.
pub fn resolve_sequence(
    motion: &MotionSequence,
    params: [ProxyParams; PERSONS],
    skeleton: &Skeleton,
    config: &ResolveConfig,
) -> Result<(MotionSequence, ResolveReport)> {
    config.validate()?;
    let proxies = PairProxies::for_motion(skeleton.clone(), params, motion, &config.sample_config())?;
    resolve_with(motion, &proxies, config)
}

/// Resolves `motion` with already sampled proxies.
pub fn resolve_with(motion: &MotionSequence, proxies: &PairProxies, cfg: &ResolveConfig) -> Result<(MotionSequence, ResolveReport)> {
    cfg.validate()?;
    proxies.check_motion(motion)?;
    let skeleton = &proxies.skeleton;
    let init = motion.clone();
    let mut cur = motion.clone();
    let mut loss_curve = Vec::new();
    let mut steps = Vec::new();
    let mut clean_streak = 0;
    let mut diagnostic = None;
    let mut stop_reason = StopReason::MaxIters;

    for iter in 0..=cfg.max_iters {
        let ev = evaluate(&cur, proxies, cfg.guidance)?;
        let mut grad: Vec<Vec3> = ev.grad.iter().map(|g| g * cfg.lambda_coll).collect();
        let reg = regularizers(&cur, &init, skeleton, cfg, Some(&mut grad));
        let total = weighted(cfg, ev.coll, &reg);
        if !total.is_finite() || grad.iter().any(|g| !g.iter().all(|c| c.is_finite())) {
            diagnostic = Some(format!("non-finite loss or gradient at iteration {iter}; returning the last finite iterate"));
            stop_reason = StopReason::NonFinite;
            log::warn!("resolve aborted at iteration {iter}: non-finite loss");
            break;
        }
        loss_curve.push(LossTerms {
            total,
            coll: ev.coll,
            anchor: reg.anchor,
            bone: reg.bone,
            smooth: reg.smooth,
            collision_points: ev.points,
        });
        log::debug!("iteration {iter}: total {total:.6e}, {} collision points", ev.points);

        clean_streak = if ev.points == 0 { clean_streak + 1 } else { 0 };
        if clean_streak >= cfg.clean_iters {
            stop_reason = StopReason::CollisionFree;
            break;
        }
        if iter == cfg.max_iters {
            break;
        }

        if grad.iter().all(|g| *g == Vec3::zeros()) {
            if ev.points > 0 {
                // guidance directions cancelled out
                stop_reason = StopReason::Stalled;
                break;
            }
            continue;
        }
        // per-joint clipped gradient step; every component still points downhill
        let step: Vec<Vec3> = grad
            .iter()
            .map(|g| {
                let s = g * cfg.learning_rate;
                let n = s.norm();
                if n > cfg.max_step {
                    s * (cfg.max_step / n)
                } else {
                    s
                }
            })
            .collect();
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g.dot(s)).sum();
        let mut scale = 1.0;
        let mut accepted = None;
        for halvings in 0..MAX_HALVINGS {
            let mut cand = cur.clone();
            for (p, s) in cand.positions_mut().iter_mut().zip(&step) {
                *p -= scale * s;
            }
            let coll = frozen_collision(&cand, proxies, &ev.targets)?;
            let after = weighted(cfg, coll, &regularizers(&cand, &init, skeleton, cfg, None));
            if after.is_finite() && after <= total - ARMIJO * scale * slope + MONOTONE_SLACK {
                accepted = Some((
                    cand,
                    StepRecord {
                        surrogate_before: total,
                        surrogate_after: after,
                        step_scale: scale,
                        halvings,
                    },
                ));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((cand, record)) => {
                cur = cand;
                steps.push(record);
            }
            None => {
                stop_reason = StopReason::Stalled;
                break;
            }
        }
    }

    let transient_increases = loss_curve.windows(2).filter(|w| w[1].total > w[0].total + MONOTONE_SLACK).count();
    if transient_increases > 0 {
        log::info!("{transient_increases} transient loss increases from re-detection");
    }
    let before = coll_metrics(&init, proxies, cfg.guidance.detect)?;
    let after = coll_metrics(&cur, proxies, cfg.guidance.detect)?;
    let report = ResolveReport {
        iterations: steps.len(),
        stop_reason,
        loss_curve,
        steps,
        transient_increases,
        before,
        after,
        max_bone_drift_pct: max_bone_drift_pct(skeleton, &init, &cur),
        max_displacement: init.max_displacement(&cur),
        diagnostic,
    };
    Ok((cur, report))
}
