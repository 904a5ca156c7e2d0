//! Timing harness: proxy detect + loss + gradient per batch against an
//! all-pairs vertex-distance baseline on the same random scenes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{DetectOptions, PairProxies};
use crate::guidance::{evaluate_frame, GuidanceOptions};
use crate::motion::{MotionSequence, PERSONS};
use crate::skeleton::{body22_proxies, body22_rest_pose, body22_skeleton, SampleConfig};
use crate::{Error, Result, Vec3};

/// Contact radius of the baseline penalty `Σ max(0, δ − ‖a − b‖)²`.
pub const BASELINE_CONTACT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Surface samples per primitive.
    pub sample_counts: Vec<usize>,
    /// Vertices per person for the baseline.
    pub mesh_vertex_counts: Vec<usize>,
    pub frames: usize,
    pub repetitions: usize,
    pub warmup: usize,
    /// Minimum wall time of one timing sample; short batches are repeated.
    pub min_sample_s: f64,
    pub seed: u64,
    /// Run frames in parallel on the current rayon pool.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sample_counts: vec![10, 30, 50],
            mesh_vertex_counts: vec![128, 1024, 6890],
            frames: 300,
            repetitions: 20,
            warmup: 2,
            min_sample_s: 0.25,
            seed: 0,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_counts.is_empty() || self.sample_counts.contains(&0) {
            return Err(Error::Config("sample_counts must be non-empty and positive".into()));
        }
        if self.mesh_vertex_counts.is_empty() || self.mesh_vertex_counts.contains(&0) {
            return Err(Error::Config("mesh_vertex_counts must be non-empty and positive".into()));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be >= 1".into()));
        }
        if !(self.min_sample_s >= 0.0 && self.min_sample_s.is_finite()) {
            return Err(Error::Config("min_sample_s must be finite and >= 0".into()));
        }
        if self.repetitions < 5 {
            return Err(Error::Config(format!("repetitions must be >= 5, got {}", self.repetitions)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    /// Samples per primitive or vertices per person.
    pub size: usize,
    /// Points per person that enter the loss.
    pub points_per_person: usize,
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
    /// Checksum of the loss over the batch; equal across repetitions.
    pub loss: f64,
    pub rss_kb: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub threads: usize,
    pub scene_digest: u64,
    pub mean_collision_points: f64,
    pub proxy: Vec<Timing>,
    pub baseline: Vec<Timing>,
    /// `t(largest) / t(smallest)` over the proxy sample counts.
    pub proxy_ratio: f64,
    /// Largest baseline median over the largest proxy median.
    pub speedup: f64,
    /// Log-log slope of proxy time against points per person.
    pub proxy_exponent: f64,
    /// Log-log slope of baseline time against vertices per person.
    pub baseline_exponent: f64,
    pub peak_rss_kb: Option<u64>,
}

/// Deterministic two-person scenes: jittered T-poses at random headings,
/// 0.25 to 0.45 m apart.
pub fn bench_scenes(frames: usize, seed: u64) -> MotionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest = body22_rest_pose();
    let center = Vec3::new(0.0, 0.0, rest[0].z);
    let mut poses = Vec::with_capacity(frames);
    for _ in 0..frames {
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        let dist = rng.gen_range(0.25..0.45);
        let offset = Vec3::new(heading.cos() * dist, heading.sin() * dist, 0.0);
        let mut pair: [Vec<Vec3>; PERSONS] = [Vec::new(), Vec::new()];
        for (person, pose) in pair.iter_mut().enumerate() {
            let (s, c) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
            let shift = if person == 0 { Vec3::zeros() } else { offset };
            *pose = rest
                .iter()
                .map(|p| {
                    let q = p - center;
                    let jitter = Vec3::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01));
                    Vec3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z) + center + shift + jitter
                })
                .collect();
        }
        poses.push(pair);
    }
    MotionSequence::from_poses(&poses).expect("generated scenes are valid")
}

pub fn scene_digest(motion: &MotionSequence) -> u64 {
    let mut h = DefaultHasher::new();
    (motion.frame_count(), motion.joint_count()).hash(&mut h);
    for p in motion.positions() {
        for c in p.iter() {
            c.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

fn map_frames<T: Send>(frames: usize, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        use rayon::prelude::*;
        (0..frames).into_par_iter().map(f).collect()
    } else {
        (0..frames).map(f).collect()
    }
}

/// One batch of the proxy pipeline: pose, detect, guidance, loss and joint
/// gradient for every frame. Returns the summed loss and collision points.
pub fn proxy_batch(motion: &MotionSequence, proxies: &PairProxies, parallel: bool) -> Result<(f64, usize)> {
    let opts = GuidanceOptions {
        detect: DetectOptions::default(),
        ..GuidanceOptions::default()
    };
    let per_frame = map_frames(motion.frame_count(), parallel, |f| {
        let ev = evaluate_frame(f, proxies, motion.pose(f, 0), motion.pose(f, 1), opts)?;
        std::hint::black_box(&ev.joint_grad);
        Ok((ev.loss.value, ev.report.points.len()))
    })?;
    Ok(per_frame.iter().fold((0.0, 0), |(l, n), (fl, fn_)| (l + fl, n + fn_)))
}

/// Per-frame vertex clouds of `n` points per person, spread over the posed
/// proxy surfaces.
pub fn vertex_clouds(motion: &MotionSequence, n: usize, seed: u64) -> Result<Vec<[Vec<Vec3>; PERSONS]>> {
    let skeleton = body22_skeleton();
    let per_primitive = n.div_ceil(skeleton.segment_count());
    let proxies = PairProxies::for_motion(
        skeleton,
        [body22_proxies(), body22_proxies()],
        motion,
        &SampleConfig::uniform(per_primitive, seed),
    )?;
    (0..motion.frame_count())
        .map(|f| {
            let bodies = proxies.pose_frame(motion, f)?;
            Ok(bodies.map(|b| b.samples.into_iter().flatten().take(n).collect()))
        })
        .collect()
}

/// All-pairs penalty `Σ max(0, δ − ‖a − b‖)²` and its gradient on both
/// clouds, for one frame.
pub fn vertex_distance_loss(a: &[Vec3], b: &[Vec3], grad_a: &mut [Vec3], grad_b: &mut [Vec3]) -> f64 {
    const LANES: usize = 8;
    let r2 = BASELINE_CONTACT * BASELINE_CONTACT;
    // coordinate-major copy of `b`, padded to whole chunks far away
    let padded = b.len().div_ceil(LANES) * LANES;
    let mut soa = [vec![1e9; padded], vec![1e9; padded], vec![1e9; padded]];
    for (j, p) in b.iter().enumerate() {
        for k in 0..3 {
            soa[k][j] = p[k];
        }
    }
    let mut loss = 0.0;
    for (i, pa) in a.iter().enumerate() {
        let mut ga = Vec3::zeros();
        for c in 0..padded / LANES {
            let base = c * LANES;
            let mut d2 = [0.0; LANES];
            for l in 0..LANES {
                let dx = pa.x - soa[0][base + l];
                let dy = pa.y - soa[1][base + l];
                let dz = pa.z - soa[2][base + l];
                d2[l] = dx * dx + dy * dy + dz * dz;
            }
            if d2.iter().fold(f64::INFINITY, |m, &d| m.min(d)) >= r2 {
                continue;
            }
            for (l, &dd) in d2.iter().enumerate() {
                if dd < r2 {
                    let j = base + l;
                    let d = dd.sqrt();
                    let gap = BASELINE_CONTACT - d;
                    loss += gap * gap;
                    if d > 0.0 {
                        let g = (pa - b[j]) * (-2.0 * gap / d);
                        ga += g;
                        grad_b[j] -= g;
                    }
                }
            }
        }
        grad_a[i] += ga;
    }
    loss
}

pub fn baseline_batch(clouds: &[[Vec<Vec3>; PERSONS]], parallel: bool) -> Result<f64> {
    let per_frame = map_frames(clouds.len(), parallel, |f| {
        let [a, b] = &clouds[f];
        let mut ga = vec![Vec3::zeros(); a.len()];
        let mut gb = vec![Vec3::zeros(); b.len()];
        let loss = vertex_distance_loss(a, b, &mut ga, &mut gb);
        std::hint::black_box((&ga, &gb));
        Ok(loss)
    })?;
    Ok(per_frame.iter().sum())
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Each repetition runs the batch as often as needed to cover `min_sample_s`
/// of wall time and records the mean time per batch.
fn time_runs(warmup: usize, reps: usize, min_sample_s: f64, mut run: impl FnMut() -> Result<f64>) -> Result<(Vec<f64>, f64)> {
    let mut loss = 0.0;
    for _ in 0..warmup {
        loss = run()?;
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        let mut batches = 0u32;
        loop {
            loss = run()?;
            batches += 1;
            if t.elapsed().as_secs_f64() >= min_sample_s {
                break;
            }
        }
        times.push(t.elapsed().as_secs_f64() / f64::from(batches));
    }
    times.sort_by(f64::total_cmp);
    Ok((times, loss))
}

fn timing(label: String, size: usize, points: usize, times: &[f64], loss: f64) -> Timing {
    Timing {
        label,
        size,
        points_per_person: points,
        median_s: percentile(times, 0.5),
        p10_s: percentile(times, 0.1),
        p90_s: percentile(times, 0.9),
        loss,
        rss_kb: resident_kb("VmRSS"),
    }
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

/// A field of `/proc/self/status` in kB (Linux only).
pub fn resident_kb(field: &str) -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix(field)?.strip_prefix(':'))
        .and_then(|v| v.split_whitespace().next()?.parse().ok())
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let motion = bench_scenes(config.frames, config.seed);
    let skeleton = body22_skeleton();
    let segments = skeleton.segment_count();

    let mut proxy = Vec::new();
    let mut collision_points = 0;
    for &n in &config.sample_counts {
        let proxies = PairProxies::for_motion(
            skeleton.clone(),
            [body22_proxies(), body22_proxies()],
            &motion,
            &SampleConfig::uniform(n, config.seed),
        )?;
        let (times, loss) = time_runs(config.warmup, config.repetitions, config.min_sample_s, || {
            let (loss, points) = proxy_batch(&motion, &proxies, config.parallel)?;
            collision_points = points;
            Ok(loss)
        })?;
        log::info!("proxy {n}x{segments}: median {:.4} s", percentile(&times, 0.5));
        proxy.push(timing(format!("proxy {n}x{segments}"), n, proxies.bodies[0].total_samples(), &times, loss));
    }

    let mut baseline = Vec::new();
    for &v in &config.mesh_vertex_counts {
        let clouds = vertex_clouds(&motion, v, config.seed)?;
        let (times, loss) = time_runs(config.warmup.min(1), config.repetitions, config.min_sample_s, || baseline_batch(&clouds, config.parallel))?;
        log::info!("baseline {v} vertices: median {:.4} s", percentile(&times, 0.5));
        baseline.push(timing(format!("vertex distance {v}"), v, clouds[0][0].len(), &times, loss));
    }

    let proxy_ratio = proxy.last().unwrap().median_s / proxy[0].median_s;
    let speedup = baseline.last().unwrap().median_s / proxy.last().unwrap().median_s;
    let slope = |t: &[Timing]| loglog_slope(&t.iter().map(|t| (t.points_per_person as f64, t.median_s)).collect::<Vec<_>>());
    Ok(BenchReport {
        config: config.clone(),
        threads: if config.parallel { rayon::current_num_threads() } else { 1 },
        scene_digest: scene_digest(&motion),
        mean_collision_points: collision_points as f64 / config.frames as f64,
        proxy_exponent: slope(&proxy),
        baseline_exponent: slope(&baseline),
        proxy,
        baseline,
        proxy_ratio,
        speedup,
        peak_rss_kb: resident_kb("VmHWM"),
    })
}

impl BenchReport {
    /// Plain-text summary table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<26} {:>8} {:>12} {:>12} {:>12}\n", "configuration", "points", "median s", "p10 s", "p90 s");
        for t in self.proxy.iter().chain(&self.baseline) {
            out += &format!(
                "{:<26} {:>8} {:>12.6} {:>12.6} {:>12.6}\n",
                t.label, t.points_per_person, t.median_s, t.p10_s, t.p90_s
            );
        }
        out += &format!(
            "proxy ratio {:.2}, speedup {:.1}x, exponents proxy {:.2} / baseline {:.2}, threads {}\n",
            self.proxy_ratio, self.speedup, self.proxy_exponent, self.baseline_exponent, self.threads
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_per_seed() {
        assert_eq!(scene_digest(&bench_scenes(20, 7)), scene_digest(&bench_scenes(20, 7)));
        assert_ne!(scene_digest(&bench_scenes(20, 7)), scene_digest(&bench_scenes(20, 8)));
    }

    #[test]
    fn scenes_collide() {
        let motion = bench_scenes(30, 1);
        let proxies = PairProxies::for_motion(
            body22_skeleton(),
            [body22_proxies(), body22_proxies()],
            &motion,
            &SampleConfig::uniform(30, 1),
        )
        .unwrap();
        let (loss, points) = proxy_batch(&motion, &proxies, false).unwrap();
        assert!(points > 0 && loss > 0.0);
        assert_eq!(proxy_batch(&motion, &proxies, true).unwrap().1, points);
    }

    #[test]
    fn baseline_loss_matches_brute_force() {
        let a = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)];
        let b = vec![Vec3::new(0.01, 0.0, 0.0), Vec3::new(0.0, 0.015, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let mut ga = vec![Vec3::zeros(); 2];
        let mut gb = vec![Vec3::zeros(); 3];
        let loss = vertex_distance_loss(&a, &b, &mut ga, &mut gb);
        let expected = (0.02f64 - 0.01).powi(2) + (0.02f64 - 0.015).powi(2);
        assert!((loss - expected).abs() < 1e-15);
        // d/da of (δ − |a − b|)² pulls `a` away from `b`: gradient points towards `b`
        assert!(ga[0].x > 0.0 && ga[0].y > 0.0);
        let total: Vec3 = ga.iter().chain(&gb).sum();
        assert!(total.norm() < 1e-15);
    }

    #[test]
    fn chunked_loss_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cloud = |n: usize| -> Vec<Vec3> { (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()) * 0.1).collect() };
        let (a, b) = (cloud(37), cloud(53));
        let mut ga = vec![Vec3::zeros(); a.len()];
        let mut gb = vec![Vec3::zeros(); b.len()];
        let loss = vertex_distance_loss(&a, &b, &mut ga, &mut gb);
        let mut expected = 0.0;
        let mut ea = vec![Vec3::zeros(); a.len()];
        let mut eb = vec![Vec3::zeros(); b.len()];
        for (i, pa) in a.iter().enumerate() {
            for (j, pb) in b.iter().enumerate() {
                let d = (pa - pb).norm();
                if d < BASELINE_CONTACT {
                    expected += (BASELINE_CONTACT - d).powi(2);
                    let g = (pa - pb) / d * (-2.0 * (BASELINE_CONTACT - d));
                    ea[i] += g;
                    eb[j] -= g;
                }
            }
        }
        assert!(expected > 0.0);
        assert!((loss - expected).abs() < 1e-15);
        for (x, y) in ga.iter().zip(&ea).chain(gb.iter().zip(&eb)) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn percentiles_and_slopes() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5), 10.0);
        assert_eq!(percentile(&v, 0.1), 2.0);
        assert_eq!(percentile(&v, 0.9), 18.0);
        let pts: Vec<(f64, f64)> = [10.0, 30.0, 50.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(1.7))).collect();
        assert!((loglog_slope(&pts) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn small_run_reports_every_configuration() {
        let cfg = BenchConfig {
            sample_counts: vec![4, 8],
            mesh_vertex_counts: vec![16, 32],
            frames: 4,
            repetitions: 5,
            warmup: 0,
            min_sample_s: 0.01,
            ..BenchConfig::default()
        };
        let r = run_bench(&cfg).unwrap();
        assert_eq!((r.proxy.len(), r.baseline.len()), (2, 2));
        assert!(r.proxy.iter().chain(&r.baseline).all(|t| t.p10_s <= t.median_s && t.median_s <= t.p90_s));
        assert!(r.table().contains("proxy 8x19"));
        let bad = BenchConfig {
            repetitions: 4,
            ..cfg.clone()
        };
        assert!(run_bench(&bad).is_err());
        let bad = BenchConfig {
            min_sample_s: f64::NAN,
            ..cfg
        };
        assert!(run_bench(&bad).is_err());
    }
}
