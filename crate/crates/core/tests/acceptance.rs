//! Acceptance criteria 1 to 7, one PASS/FAIL line each.
//!
//! Run with `cargo test -p proxycoll-core --test acceptance -- --nocapture`
//! to see the lines, and set `ACCEPTANCE_ONLY=1,4` to run a subset.

use std::time::{Duration, Instant};

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proxycoll_core::bench::{run_bench, BenchConfig};
use proxycoll_core::collision::{detect_sequence, CollisionReport, DetectOptions, PairProxies};
use proxycoll_core::fitting::{assign_regions, fit_loss, fit_proxies, initial_guess, FitConfig};
use proxycoll_core::guidance::{
    collision_loss, evaluate_frame, frozen_objective, report_guidance, AntipodalOn, GuidanceOptions, LossMode,
};
use proxycoll_core::mesh::{capsule_mesh, TriangleMesh};
use proxycoll_core::metrics::coll_metrics;
use proxycoll_core::motion::MotionSequence;
use proxycoll_core::primitives::{antipodal, sample_surface, Cuboid, Cylinder, Shape};
use proxycoll_core::resolve::{max_bone_drift_pct, resolve_sequence, Preset, ResolveConfig};
use proxycoll_core::scenes::{arm_across_waist, synthetic_suite};
use proxycoll_core::skeleton::{
    body22_proxies, body22_rest_pose, body22_skeleton, chain_skeleton, Joint, PrimitiveKind, ProxyParams, SampleConfig,
    Segment, SegmentProxy, Skeleton,
};
use proxycoll_core::{Mat3, Vec3};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(random_unit(rng)), angle).into_inner()
}

// ---------------------------------------------------------------- criterion 1

const POINTS_PER_FAMILY: usize = 100_000;
const BAND: f64 = 1e-9;

/// Points spread over the inflated box of half size `reach` around `center`;
/// every fourth point is pushed to within a few micrometres of `surface`.
fn probe(rng: &mut ChaCha8Rng, center: &Vec3, reach: f64, surface: &dyn Fn(&mut ChaCha8Rng) -> Vec3) -> Vec3 {
    if rng.gen_bool(0.25) {
        surface(rng) + random_unit(rng) * rng.gen_range(0.0..5e-6)
    } else {
        center + Vec3::new(
            rng.gen_range(-reach..reach),
            rng.gen_range(-reach..reach),
            rng.gen_range(-reach..reach),
        )
    }
}

/// Six half-spaces `n·x < n·c + h` built from the box corners.
fn half_space_oracle(center: &Vec3, basis: &Mat3, half: &Vec3, p: &Vec3) -> Option<bool> {
    let mut inside = true;
    for k in 0..3 {
        let axis: Vec3 = basis.column(k).into();
        for sign in [1.0, -1.0] {
            let n = sign * axis;
            let face_point = center + n * half[k];
            let s = (p - face_point).dot(&n);
            if s.abs() <= BAND {
                return None;
            }
            inside &= s < 0.0;
        }
    }
    Some(inside)
}

/// Radial and height test in a frame rebuilt from the axis alone.
fn cylinder_oracle(a: &Vec3, axis: &Vec3, h: f64, r: f64, p: &Vec3) -> Option<bool> {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let rel = p - a;
    let (x, y, z) = (rel.dot(&e1), rel.dot(&e2), rel.dot(axis));
    let rho = (x * x + y * y).sqrt();
    if (rho - r).abs() <= BAND || z.abs() <= BAND || (z - h).abs() <= BAND {
        return None;
    }
    Some(rho < r && z > 0.0 && z < h)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lines = Vec::new();
    let mut failed = false;
    for family in ["axis-aligned", "rotated", "random dims"] {
        let (mut cyl_checked, mut cyl_bad, mut box_checked, mut box_bad) = (0, 0, 0, 0);
        for i in 0..POINTS_PER_FAMILY {
            // a fresh primitive every 1000 points
            let mut prim_rng = ChaCha8Rng::seed_from_u64((i / 1000) as u64 + 7919 * family.len() as u64);
            let (r, h, half) = if family == "random dims" {
                (
                    prim_rng.gen_range(0.005..0.5),
                    prim_rng.gen_range(0.01..1.5),
                    Vec3::new(
                        prim_rng.gen_range(0.005..0.6),
                        prim_rng.gen_range(0.005..0.6),
                        prim_rng.gen_range(0.005..0.6),
                    ),
                )
            } else {
                (0.08, 0.4, Vec3::new(0.15, 0.1, 0.2))
            };
            let rotation = if family == "axis-aligned" { Mat3::identity() } else { random_rotation(&mut prim_rng) };
            let origin = Vec3::new(prim_rng.gen_range(-1.0..1.0), prim_rng.gen_range(-1.0..1.0), prim_rng.gen_range(-1.0..1.0));

            let axis: Vec3 = rotation.column(2).into();
            let cyl = Cylinder::new(origin, axis, h, r).map_err(|e| e.to_string())?;
            let cyl_surface = |rng: &mut ChaCha8Rng| {
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let local = match rng.gen_range(0..3) {
                    0 => Vec3::new(r * theta.cos(), r * theta.sin(), rng.gen_range(0.0..h)),
                    1 => Vec3::new(rng.gen_range(0.0..r) * theta.cos(), rng.gen_range(0.0..r) * theta.sin(), 0.0),
                    _ => Vec3::new(rng.gen_range(0.0..r) * theta.cos(), rng.gen_range(0.0..r) * theta.sin(), h),
                };
                origin + rotation * local
            };
            let p = probe(&mut rng, &(origin + 0.5 * h * axis), 0.6 * h + 1.2 * r, &cyl_surface);
            if let Some(expected) = cylinder_oracle(&origin, &axis, h, r, &p) {
                cyl_checked += 1;
                cyl_bad += usize::from(cyl.contains(&p) != expected);
            }

            let cuboid = Cuboid::new(origin, rotation, half).map_err(|e| e.to_string())?;
            let box_surface = |rng: &mut ChaCha8Rng| {
                let k = rng.gen_range(0..3);
                let mut local = Vec3::new(
                    rng.gen_range(-half.x..half.x),
                    rng.gen_range(-half.y..half.y),
                    rng.gen_range(-half.z..half.z),
                );
                local[k] = if rng.gen_bool(0.5) { half[k] } else { -half[k] };
                origin + rotation * local
            };
            let p = probe(&mut rng, &origin, 1.3 * half.max(), &box_surface);
            if let Some(expected) = half_space_oracle(&origin, &rotation, &half, &p) {
                box_checked += 1;
                box_bad += usize::from(cuboid.contains(&p) != expected);
            }
        }
        failed |= cyl_bad > 0 || box_bad > 0;
        lines.push(format!(
            "{family}: cylinder {}/{cyl_checked}, cuboid {}/{box_checked} agree",
            cyl_checked - cyl_bad,
            box_checked - box_bad
        ));
    }
    check(!failed, lines.join("; "))
}

// ---------------------------------------------------------------- criterion 2

fn random_chain_scene(rng: &mut ChaCha8Rng) -> Option<(PairProxies, Vec<Vec3>, Vec<Vec3>)> {
    let n = rng.gen_range(1..=4);
    let kinds: Vec<PrimitiveKind> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { PrimitiveKind::Cylinder } else { PrimitiveKind::Cuboid })
        .collect();
    let skeleton = chain_skeleton(&kinds);
    let params = |rng: &mut ChaCha8Rng| {
        ProxyParams::new(
            kinds
                .iter()
                .map(|k| match k {
                    PrimitiveKind::Cylinder => SegmentProxy::Cylinder {
                        r: rng.gen_range(0.03..0.1),
                        h_scale: rng.gen_range(0.8..1.2),
                    },
                    PrimitiveKind::Cuboid => SegmentProxy::Cuboid {
                        half_extents: Vec3::new(rng.gen_range(0.04..0.12), rng.gen_range(0.04..0.12), rng.gen_range(0.1..0.2)),
                    },
                })
                .collect(),
        )
    };
    let chain = |rng: &mut ChaCha8Rng, start: Vec3| {
        let mut pts = vec![start];
        let mut dir = random_unit(rng);
        for _ in 0..n {
            dir = (dir + 0.6 * random_unit(rng)).normalize();
            let last = *pts.last().unwrap();
            pts.push(last + rng.gen_range(0.2..0.35) * dir);
        }
        pts
    };
    let a = chain(rng, Vec3::zeros());
    // start person 1 near a random point of person 0's chain
    let anchor = a[rng.gen_range(0..a.len())] + 0.08 * random_unit(rng);
    let b = chain(rng, anchor);
    let pa = params(rng);
    let pb = params(rng);
    let pair = PairProxies::sample(skeleton, [pa, pb], [&a, &b], &SampleConfig::uniform(30, rng.gen())).ok()?;
    Some((pair, a, b))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut scenes = 0;
    let mut attempts = 0;
    let mut failures = Vec::new();
    while scenes < 50 && attempts < 5000 {
        attempts += 1;
        let Some((pair, a, b)) = random_chain_scene(&mut rng) else { continue };
        let mode = if scenes % 2 == 0 { LossMode::PerPoint } else { LossMode::Aggregated };
        let opts = GuidanceOptions {
            mode,
            ..GuidanceOptions::default()
        };
        let Ok(ev) = evaluate_frame(0, &pair, &a, &b, opts) else { continue };
        if ev.loss.grad_samples.is_empty() {
            continue;
        }
        let targets = ev.loss.targets(&ev.report);
        let objective = |pa: &[Vec3], pb: &[Vec3]| {
            let bodies = pair.pose_pair(pa, pb).unwrap();
            let pts: Vec<Vec3> = ev
                .report
                .points
                .iter()
                .map(|cp| bodies[cp.host_person].samples[cp.host_segment][cp.sample_index])
                .collect();
            frozen_objective(&targets, &pts)
        };
        let step = 1e-6;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for person in 0..2 {
            for j in 0..a.len() {
                for k in 0..3 {
                    let mut plus = [a.clone(), b.clone()];
                    let mut minus = [a.clone(), b.clone()];
                    plus[person][j][k] += step;
                    minus[person][j][k] -= step;
                    let fd = (objective(&plus[0], &plus[1]) - objective(&minus[0], &minus[1])) / (2.0 * step);
                    let an = ev.joint_grad[person][j][k];
                    diff += (fd - an) * (fd - an);
                    norm += fd * fd;
                }
            }
        }
        let rel = diff.sqrt() / norm.sqrt().max(1e-12);
        worst = worst.max(rel);
        if rel >= 1e-4 {
            failures.push(format!("scene {scenes}: {rel:.2e}"));
        }
        scenes += 1;
    }
    check(
        scenes == 50 && failures.is_empty(),
        format!("{scenes} scenes, worst relative error {worst:.2e} {}", failures.join(" ")),
    )
}

// ---------------------------------------------------------------- criterion 3

/// A stick figure of capsules with radii from 3 to 12 cm, one per segment.
/// Limbs hang off shoulder, hip and skull joints that carry no segment of
/// their own, so no two capsules overlap.
fn capsule_body() -> (Skeleton, Vec<Vec3>, Vec<f64>, TriangleMesh) {
    let joints = [
        ("pelvis", None, [0.0, 0.0, 1.0]),
        ("neck", Some(0), [0.0, 0.0, 1.6]),
        ("skull", Some(1), [0.0, 0.0, 1.83]),
        ("crown", Some(2), [0.0, 0.0, 2.1]),
        ("left_shoulder", Some(1), [-0.25, 0.0, 1.55]),
        ("left_hand", Some(4), [-0.85, 0.0, 1.35]),
        ("right_shoulder", Some(1), [0.25, 0.0, 1.55]),
        ("right_hand", Some(6), [0.85, 0.0, 1.75]),
        ("left_hip", Some(0), [-0.14, 0.0, 0.8]),
        ("left_foot", Some(8), [-0.3, 0.0, 0.1]),
        ("right_hip", Some(0), [0.14, 0.0, 0.8]),
        ("right_foot", Some(10), [0.3, 0.05, 0.1]),
    ];
    let segs = [(0, 1, 0.12), (2, 3, 0.09), (4, 5, 0.04), (6, 7, 0.03), (8, 9, 0.07), (10, 11, 0.055)];
    let pose: Vec<Vec3> = joints.iter().map(|j| Vec3::new(j.2[0], j.2[1], j.2[2])).collect();
    let skeleton = Skeleton::new(
        joints
            .iter()
            .map(|&(name, parent, _)| Joint {
                name: name.into(),
                parent,
            })
            .collect(),
        segs.iter()
            .enumerate()
            .map(|(i, &(a, b, _))| Segment {
                name: format!("limb{i}"),
                joint_a: a,
                joint_b: b,
                primitive: PrimitiveKind::Cylinder,
            })
            .collect(),
        None,
    )
    .unwrap();
    let parts: Vec<TriangleMesh> = segs
        .iter()
        .map(|&(a, b, r)| capsule_mesh(&pose[a], &pose[b], r, 64, 48).unwrap())
        .collect();
    let radii = segs.iter().map(|s| s.2).collect();
    (skeleton, pose, radii, TriangleMesh::merge(&parts).unwrap())
}

fn brute_force_fit_loss(params: &ProxyParams, mesh: &TriangleMesh, skeleton: &Skeleton, pose: &[Vec3], samples: &SampleConfig) -> f64 {
    let regions = assign_regions(mesh, skeleton, pose).unwrap();
    let body = proxycoll_core::skeleton::BodyProxies::new(skeleton, params.clone(), pose, samples).unwrap();
    let posed = body.pose(skeleton, pose).unwrap();
    let mut total = 0.0;
    for (j, qs) in posed.samples.iter().enumerate() {
        let region: Vec<&Vec3> = mesh
            .vertices
            .iter()
            .zip(&regions.region_of_vertex)
            .filter(|(_, &r)| r == j)
            .map(|(v, _)| v)
            .collect();
        if region.is_empty() {
            continue;
        }
        for q in qs {
            let mut best = f64::INFINITY;
            for p in &region {
                best = best.min((q - *p).norm_squared());
            }
            total += best;
        }
    }
    total
}

fn criterion_3() -> Outcome {
    let (skeleton, pose, radii, mesh) = capsule_body();
    let regions = assign_regions(&mesh, &skeleton, &pose).map_err(|e| e.to_string())?;
    let init = initial_guess(&mesh, &regions, &skeleton, &pose).map_err(|e| e.to_string())?;
    // start well away from the answer
    let init = init.scaled(1.4);
    let cfg = FitConfig::default();
    let (fitted, report) = fit_proxies(&mesh, &skeleton, &pose, &init, &cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut fitted_radii = Vec::new();
    for (proxy, &truth) in fitted.segments.iter().zip(&radii) {
        let SegmentProxy::Cylinder { r, .. } = *proxy else {
            return Err("segment kind changed".into());
        };
        worst = worst.max((r - truth).abs() / truth);
        fitted_radii.push(format!("{r:.4}"));
    }

    let mut loss_err: f64 = 0.0;
    for params in [&init, &fitted] {
        let fast = fit_loss(params, &mesh, &regions, &skeleton, &pose, &cfg.samples).map_err(|e| e.to_string())?;
        let slow = brute_force_fit_loss(params, &mesh, &skeleton, &pose, &cfg.samples);
        loss_err = loss_err.max((fast - slow).abs() / slow.abs().max(1e-300));
    }
    check(
        worst < 0.05 && loss_err < 1e-9,
        format!(
            "radii [{}] worst error {:.2}% after {} iterations; fit_loss vs double loop {loss_err:.1e}",
            fitted_radii.join(", "),
            100.0 * worst,
            report.iters
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4() -> Outcome {
    let cfg = ResolveConfig::preset(Preset::Adaption);
    let mut lines = Vec::new();
    let mut ok = true;
    for scene in synthetic_suite() {
        let m = &scene.motion;
        let frames_ok = (30..=300).contains(&m.frame_count());
        let (out, report) = resolve_sequence(m, [body22_proxies(), body22_proxies()], &body22_skeleton(), &cfg).map_err(|e| e.to_string())?;
        let reduction = 1.0 - report.after.coll_dis / report.before.coll_dis;
        let drift = max_bone_drift_pct(&body22_skeleton(), m, &out);
        let pass = frames_ok && reduction >= 0.5 && report.after.coll_ro < report.before.coll_ro && drift < 1.0;
        ok &= pass;
        lines.push(format!(
            "{} ({} frames): coll_dis {:.3} -> {:.3} m ({:.0}%), coll_ro {:.2} -> {:.2}, drift {:.3}%",
            scene.name,
            m.frame_count(),
            report.before.coll_dis,
            report.after.coll_dis,
            100.0 * reduction,
            report.before.coll_ro,
            report.after.coll_ro,
            drift
        ));
    }
    check(ok && lines.len() >= 5, lines.join("; "))
}

// ---------------------------------------------------------------- criterion 5

/// Count-weighted mean of renormalized per-container means, written out
/// independently of the library's aggregation.
fn expected_total(report: &CollisionReport, guidance: &[Option<proxycoll_core::guidance::GuidanceVector>], host: (usize, usize)) -> Option<Vec3> {
    let containers = &report.per_segment_groups[&host];
    let mut weighted = Vec3::zeros();
    let mut count = 0usize;
    for idx in containers.values() {
        let dirs: Vec<Vec3> = idx.iter().filter_map(|&i| guidance[i].map(|g| g.d)).collect();
        let mut sum = Vec3::zeros();
        for d in &dirs {
            sum += d;
        }
        if sum.norm() <= 1e-12 {
            continue;
        }
        weighted += (sum / sum.norm()) * dirs.len() as f64;
        count += dirs.len();
    }
    (count > 0).then(|| weighted / count as f64)
}

fn criterion_5() -> Outcome {
    let scene = arm_across_waist(90);
    let skeleton = body22_skeleton();
    let pair = PairProxies::for_motion(skeleton.clone(), [body22_proxies(), body22_proxies()], &scene.motion, &SampleConfig::default())
        .map_err(|e| e.to_string())?;
    let reports = detect_sequence(&scene.motion, &pair, DetectOptions::default()).map_err(|e| e.to_string())?;
    let mut hosts = 0;
    let mut mismatches = 0;
    for r in &reports {
        let bodies = pair.pose_frame(&scene.motion, r.frame_index).map_err(|e| e.to_string())?;
        let guidance = report_guidance(r, &bodies, AntipodalOn::Host);
        let loss = collision_loss(r, &guidance, LossMode::Aggregated);
        for (host, containers) in &r.per_segment_groups {
            if containers.len() < 2 {
                continue;
            }
            hosts += 1;
            let Some(expected) = expected_total(r, &guidance, *host) else { continue };
            for &i in containers.values().flatten() {
                if guidance[i].is_some() && loss.effective[i] != Some(expected) {
                    mismatches += 1;
                }
            }
        }
    }

    let cfg = ResolveConfig {
        guidance: GuidanceOptions {
            mode: LossMode::Aggregated,
            ..GuidanceOptions::default()
        },
        max_iters: 500,
        ..ResolveConfig::preset(Preset::Adaption)
    };
    let (out, report) = resolve_sequence(&scene.motion, [body22_proxies(), body22_proxies()], &skeleton, &cfg).map_err(|e| e.to_string())?;
    let after = detect_sequence(&out, &pair, DetectOptions::default()).map_err(|e| e.to_string())?;
    let remaining: usize = after.iter().map(|r| r.points.len()).sum();
    check(
        hosts > 0 && mismatches == 0 && remaining == 0 && report.iterations <= 500,
        format!(
            "{hosts} multi-region host segments, {mismatches} aggregated directions differ from the weighted mean; \
             resolve left {remaining} collision points after {} iterations",
            report.iterations
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let cfg = BenchConfig {
        repetitions: 5,
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg).map_err(|e| e.to_string())?;
    print!("{}", report.table());
    check(
        report.threads == 1
            && report.proxy_ratio <= 6.0
            && report.speedup >= 10.0
            && report.proxy_exponent < 1.3
            && report.baseline_exponent >= 1.0,
        format!(
            "t(50x19)/t(10x19) = {:.2}, speedup over 6890-vertex baseline {:.0}x, exponents proxy {:.2} baseline {:.2}",
            report.proxy_ratio, report.speedup, report.proxy_exponent, report.baseline_exponent
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn transform_motion(m: &MotionSequence, rot: &Mat3, shift: &Vec3) -> MotionSequence {
    m.map_points(|p| rot * p + shift)
}

fn property_equivariance(rng: &mut ChaCha8Rng) -> Outcome {
    let scene = &synthetic_suite()[0];
    let pair = PairProxies::for_motion(body22_skeleton(), [body22_proxies(), body22_proxies()], &scene.motion, &SampleConfig::default())
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rot = random_rotation(rng);
        let shift = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let moved = transform_motion(&scene.motion, &rot, &shift);
        for f in [0, scene.motion.frame_count() / 2] {
            let base = pair.pose_frame(&scene.motion, f).map_err(|e| e.to_string())?;
            let other = pair.pose_frame(&moved, f).map_err(|e| e.to_string())?;
            for (b0, b1) in base.iter().zip(&other) {
                for (p0, p1) in b0.primitives().zip(b1.primitives()) {
                    worst = worst.max((rot * p0.origin + shift - p1.origin).norm());
                    worst = worst.max((rot * p0.rotation - p1.rotation).abs().max());
                }
            }
            let e0 = evaluate_frame(f, &pair, scene.motion.pose(f, 0), scene.motion.pose(f, 1), GuidanceOptions::default())
                .map_err(|e| e.to_string())?;
            let e1 = evaluate_frame(f, &pair, moved.pose(f, 0), moved.pose(f, 1), GuidanceOptions::default()).map_err(|e| e.to_string())?;
            if e0.report.points.len() != e1.report.points.len() {
                return Err(format!("collision count changed {} -> {}", e0.report.points.len(), e1.report.points.len()));
            }
            for (g0, g1) in e0.guidance.iter().zip(&e1.guidance) {
                if let (Some(g0), Some(g1)) = (g0, g1) {
                    worst = worst.max((rot * g0.d - g1.d).norm());
                }
            }
            for (j0, j1) in e0.joint_grad.iter().flatten().zip(e1.joint_grad.iter().flatten()) {
                worst = worst.max((rot * j0 - j1).norm());
            }
        }
    }
    check(worst < 1e-9, format!("equivariance {worst:.1e}"))
}

fn property_involution(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut off_surface = 0;
    for i in 0..200 {
        let shape = if i % 2 == 0 {
            Shape::Cylinder {
                radius: rng.gen_range(0.02..0.2),
                height: rng.gen_range(0.1..0.6),
            }
        } else {
            Shape::Cuboid {
                half_extents: Vec3::new(rng.gen_range(0.02..0.3), rng.gen_range(0.02..0.3), rng.gen_range(0.02..0.3)),
            }
        };
        let samples = sample_surface(&shape, 50, rng.gen()).map_err(|e| e.to_string())?;
        for p in samples.local_points_for(&shape) {
            let Ok(q) = antipodal(&shape, &p) else { continue };
            let back = antipodal(&shape, &q).map_err(|e| e.to_string())?;
            worst = worst.max((back - p).norm());
            let on_surface = match shape {
                Shape::Cylinder { radius, height } => {
                    let rho = q.x.hypot(q.y);
                    (rho - radius).abs() < 1e-12 || q.z.abs() < 1e-12 || (q.z - height).abs() < 1e-12
                }
                Shape::Cuboid { half_extents } => (0..3).any(|k| (q[k].abs() - half_extents[k]).abs() < 1e-12),
            };
            off_surface += usize::from(!on_surface);
        }
    }
    check(worst == 0.0 && off_surface == 0, format!("involution {worst:.1e}, {off_surface} off-surface"))
}

fn property_stop_gradient() -> Outcome {
    let scene = arm_across_waist(4);
    let pair = PairProxies::for_motion(body22_skeleton(), [body22_proxies(), body22_proxies()], &scene.motion, &SampleConfig::default())
        .map_err(|e| e.to_string())?;
    let mut changed = 0;
    let mut count_mismatch = 0;
    for f in 0..scene.motion.frame_count() {
        let bodies = pair.pose_frame(&scene.motion, f).map_err(|e| e.to_string())?;
        let report = pair
            .detect_pose(f, scene.motion.pose(f, 0), scene.motion.pose(f, 1), DetectOptions::default())
            .map_err(|e| e.to_string())?;
        let mut guidance = report_guidance(&report, &bodies, AntipodalOn::Host);
        for mode in [LossMode::PerPoint, LossMode::Aggregated] {
            let before = collision_loss(&report, &guidance, mode);
            let mut moved = guidance.clone();
            for g in moved.iter_mut().flatten() {
                g.q_world += Vec3::new(0.3, -7.0, 2.5);
            }
            changed += usize::from(collision_loss(&report, &moved, mode).grad_samples != before.grad_samples);
        }
        guidance.iter_mut().flatten().for_each(|g| g.q_world = Vec3::zeros());
        let per_point = collision_loss(&report, &guidance, LossMode::PerPoint);
        let included = guidance.iter().flatten().count() as f64;
        count_mismatch += usize::from((per_point.value - included).abs() > 1e-9 * included.max(1.0));
    }
    check(
        changed == 0 && count_mismatch == 0,
        format!("stop-gradient {changed} changed, per-point loss != count in {count_mismatch} frames"),
    )
}

fn property_fixed_point() -> Outcome {
    let a = body22_rest_pose();
    let poses: Vec<[Vec<Vec3>; 2]> = (0..20)
        .map(|f| {
            let t = f as f64 * 0.01;
            [
                a.iter().map(|p| p + Vec3::new(t, 0.0, 0.0)).collect(),
                a.iter().map(|p| p + Vec3::new(2.0 - t, 0.5, 0.0)).collect(),
            ]
        })
        .collect();
    let clean = MotionSequence::from_poses(&poses).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for preset in [Preset::Adaption, Preset::Scratch] {
        let (out, report) = resolve_sequence(&clean, [body22_proxies(), body22_proxies()], &body22_skeleton(), &ResolveConfig::preset(preset))
            .map_err(|e| e.to_string())?;
        if report.before.coll_ro != 0.0 {
            return Err("clean scene collides".into());
        }
        worst = worst.max(clean.max_displacement(&out));
    }
    check(worst <= 1e-9, format!("fixed point {worst:.1e} m"))
}

fn property_metric_scaling() -> Outcome {
    let mut worst: f64 = 0.0;
    for scene in synthetic_suite() {
        let base = PairProxies::for_motion(body22_skeleton(), [body22_proxies(), body22_proxies()], &scene.motion, &SampleConfig::default())
            .map_err(|e| e.to_string())?;
        let m0 = coll_metrics(&scene.motion, &base, DetectOptions::default()).map_err(|e| e.to_string())?;
        for s in [0.5, 2.0, 3.7] {
            let scaled = scene.motion.map_points(|p| p * s);
            let params = body22_proxies().scaled(s);
            let pair = PairProxies::for_motion(body22_skeleton(), [params.clone(), params], &scaled, &SampleConfig::default())
                .map_err(|e| e.to_string())?;
            let m1 = coll_metrics(&scaled, &pair, DetectOptions::default()).map_err(|e| e.to_string())?;
            if m1.coll_ro != m0.coll_ro {
                return Err(format!("{} coll_ro {} -> {} at scale {s}", scene.name, m0.coll_ro, m1.coll_ro));
            }
            worst = worst.max((m1.coll_dis - s * m0.coll_dis).abs() / (s * m0.coll_dis));
        }
    }
    check(worst < 1e-9, format!("metric scaling {worst:.1e}"))
}

fn property_broad_phase() -> Outcome {
    let mut differing = 0;
    let mut frames = 0;
    for scene in synthetic_suite() {
        let pair = PairProxies::for_motion(body22_skeleton(), [body22_proxies(), body22_proxies()], &scene.motion, &SampleConfig::default())
            .map_err(|e| e.to_string())?;
        let with = detect_sequence(&scene.motion, &pair, DetectOptions { broad_phase: true }).map_err(|e| e.to_string())?;
        let without = detect_sequence(&scene.motion, &pair, DetectOptions { broad_phase: false }).map_err(|e| e.to_string())?;
        frames += with.len();
        differing += with.iter().zip(&without).filter(|(a, b)| a != b).count();
    }
    check(differing == 0, format!("broad phase changed {differing}/{frames} frames"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let results = [
        property_equivariance(&mut rng),
        property_involution(&mut rng),
        property_stop_gradient(),
        property_fixed_point(),
        property_metric_scaling(),
        property_broad_phase(),
    ];
    let ok = results.iter().all(Result::is_ok);
    let detail = results.iter().map(|r| r.as_ref().unwrap_or_else(|e| e).clone()).collect::<Vec<_>>().join("; ");
    check(ok, detail)
}

// ---------------------------------------------------------------- runner

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        ("containment agrees with half-space and analytic oracles", criterion_1, Duration::from_secs(5)),
        ("joint gradients match finite differences", criterion_2, Duration::from_secs(30)),
        ("capsule body radii recovered", criterion_3, Duration::from_secs(120)),
        ("adaption preset halves penetration on the suite", criterion_4, Duration::from_secs(300)),
        ("multi-region aggregation", criterion_5, Duration::from_secs(60)),
        ("proxy pipeline scaling and speedup", criterion_6, Duration::from_secs(600)),
        ("property suite", criterion_7, Duration::from_secs(120)),
    ];
    // ACCEPTANCE_ONLY=2,5 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (elapsed < *budget, d),
            Err(d) => (false, d),
        };
        println!(
            "criterion {}: {} {name} [{:.1} s of {} s] {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
