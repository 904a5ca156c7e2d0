//! Sequence plausibility metrics and triangle-mesh containment oracles.
//!
//! `coll_dis` sums the deepest proxy penetration of every frame and
//! `coll_ro` is the fraction of frames with at least one collision point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::{detect_sequence, CollisionReport, DetectOptions, PairProxies};
use crate::mesh::TriangleMesh;
use crate::motion::{MotionSequence, PERSONS};
use crate::skeleton::{PosedBody, PosedPrimitive, WorldPrimitive};
use crate::{Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityMetrics {
    pub coll_dis: f64,
    pub coll_ro: f64,
    pub per_frame_depth: Vec<f64>,
}

pub fn metrics_from_reports(reports: &[CollisionReport]) -> PlausibilityMetrics {
    let per_frame_depth: Vec<f64> = reports.iter().map(CollisionReport::max_depth).collect();
    let colliding = reports.iter().filter(|r| !r.is_empty()).count();
    PlausibilityMetrics {
        coll_dis: per_frame_depth.iter().sum(),
        coll_ro: if reports.is_empty() {
            0.0
        } else {
            colliding as f64 / reports.len() as f64
        },
        per_frame_depth,
    }
}

pub fn coll_metrics(motion: &MotionSequence, proxies: &PairProxies, opts: DetectOptions) -> Result<PlausibilityMetrics> {
    Ok(metrics_from_reports(&detect_sequence(motion, proxies, opts)?))
}

/// Ray directions for the parity test; generic enough to avoid grazing the
/// axis-aligned edges of generated meshes.
const RAYS: [[f64; 3]; 3] = [
    [0.5773502691896258, 0.5773502691896258, 0.5773502691896257],
    [-0.2672612419124244, 0.5345224838248488, 0.8017837257372732],
    [0.8164965809277261, -0.4082482904638631, 0.4082482904638630],
];

/// Containment queries against a closed, consistently oriented mesh.
pub struct MeshOracle<'a> {
    mesh: &'a TriangleMesh,
    lo: Vec3,
    hi: Vec3,
}

impl<'a> MeshOracle<'a> {
    /// Fails with an open-mesh error unless every edge has exactly two faces.
    pub fn new(mesh: &'a TriangleMesh) -> Result<Self> {
        mesh.check_watertight()?;
        let (lo, hi) = mesh.bounding_box();
        Ok(Self { mesh, lo, hi })
    }

    fn outside_box(&self, p: &Vec3) -> bool {
        (0..3).any(|k| p[k] < self.lo[k] || p[k] > self.hi[k])
    }

    fn crossings(&self, p: &Vec3, dir: &Vec3) -> usize {
        let mut count = 0;
        for f in &self.mesh.faces {
            let [a, b, c] = f.map(|i| self.mesh.vertices[i]);
            let e1 = b - a;
            let e2 = c - a;
            let h = dir.cross(&e2);
            let det = e1.dot(&h);
            if det.abs() < 1e-15 {
                continue;
            }
            let s = p - a;
            let u = s.dot(&h) / det;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let qv = s.cross(&e1);
            let v = dir.dot(&qv) / det;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            if e2.dot(&qv) / det > 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Majority vote of crossing parity along three fixed rays.
    pub fn contains_parity(&self, p: &Vec3) -> bool {
        if self.outside_box(p) {
            return false;
        }
        let odd = RAYS
            .iter()
            .filter(|d| self.crossings(p, &Vec3::new(d[0], d[1], d[2])) % 2 == 1)
            .count();
        odd >= 2
    }

    /// Generalized winding number: total signed solid angle over `4π`.
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        let mut total = 0.0;
        for f in &self.mesh.faces {
            let [a, b, c] = f.map(|i| self.mesh.vertices[i] - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }

    pub fn contains_winding(&self, p: &Vec3) -> bool {
        !self.outside_box(p) && self.winding_number(p) > 0.5
    }

    /// True when `p` is within `d` of the surface.
    pub fn near_surface(&self, p: &Vec3, d: f64) -> bool {
        let gap = (self.lo - p).sup(&(p - self.hi)).sup(&Vec3::zeros()).norm();
        gap < d && self.surface_distance(p) < d
    }

    /// Unsigned distance to the closest triangle.
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        self.mesh
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.mesh.vertices[i]);
                (closest_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Ray-parity containment; the mesh must be watertight.
pub fn mesh_contains(mesh: &TriangleMesh, p: &Vec3) -> Result<bool> {
    Ok(MeshOracle::new(mesh)?.contains_parity(p))
}

/// Closest point on triangle `abc` to `p` (region classification by
/// barycentric signs).
pub fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreementConfig {
    /// Probe grid spacing in meters.
    pub resolution: f64,
    /// Probes closer than this to either mesh surface are not counted.
    pub band: f64,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        Self {
            resolution: 0.005,
            band: 0.0,
        }
    }
}

/// Confusion counts of proxy overlap against mesh overlap over a probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Agreement {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub excluded: usize,
}

impl Agreement {
    pub fn precision(&self) -> Option<f64> {
        let n = self.true_positive + self.false_positive;
        (n > 0).then(|| self.true_positive as f64 / n as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let n = self.true_positive + self.false_negative;
        (n > 0).then(|| self.true_positive as f64 / n as f64)
    }
}

/// Axis-aligned bounds of a placed primitive.
fn primitive_box(prim: &PosedPrimitive) -> (Vec3, Vec3) {
    match prim.world {
        WorldPrimitive::Cylinder(c) => {
            let rim = Vec3::from_fn(|k, _| c.r * (1.0 - c.axis[k] * c.axis[k]).max(0.0).sqrt());
            let b = c.a + c.h * c.axis;
            (c.a.inf(&b) - rim, c.a.sup(&b) + rim)
        }
        WorldPrimitive::Cuboid(c) => {
            let reach = c.basis.abs() * c.half_extents;
            (c.center - reach, c.center + reach)
        }
    }
}

fn body_box(mesh: &TriangleMesh, body: &PosedBody) -> (Vec3, Vec3) {
    let (mut lo, mut hi) = mesh.bounding_box();
    for prim in body.primitives() {
        let (l, h) = primitive_box(prim);
        lo = lo.inf(&l);
        hi = hi.sup(&h);
    }
    (lo, hi)
}

/// Probes the region where both persons' meshes or proxies may overlap and
/// cross-tabulates "inside both proxies" against "inside both meshes".
/// Meshes are given in the same world pose as the bodies.
pub fn proxy_vs_mesh_agreement(
    meshes: [&TriangleMesh; PERSONS],
    bodies: &[PosedBody; PERSONS],
    config: &AgreementConfig,
) -> Result<Agreement> {
    let oracles = [MeshOracle::new(meshes[0])?, MeshOracle::new(meshes[1])?];
    let (lo_a, hi_a) = body_box(meshes[0], &bodies[0]);
    let (lo_b, hi_b) = body_box(meshes[1], &bodies[1]);
    let lo = lo_a.sup(&lo_b);
    let hi = hi_a.inf(&hi_b);
    if (0..3).any(|k| lo[k] >= hi[k]) || !(config.resolution > 0.0) {
        return Ok(Agreement::default());
    }
    let steps = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / config.resolution).ceil().max(1.0) as usize);
    let total = steps[0] * steps[1] * steps[2];
    let outcomes: Vec<Option<(bool, bool)>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let idx = [i % steps[0], (i / steps[0]) % steps[1], i / (steps[0] * steps[1])];
            let p = Vec3::from_fn(|k, _| lo[k] + (idx[k] as f64 + 0.5) * config.resolution);
            if config.band > 0.0 && oracles.iter().any(|o| o.near_surface(&p, config.band)) {
                return None;
            }
            let by_proxy = bodies.iter().all(|b| b.primitives().any(|prim| prim.contains(&p)));
            let by_mesh = oracles.iter().all(|o| o.contains_winding(&p));
            Some((by_proxy, by_mesh))
        })
        .collect();
    let mut out = Agreement::default();
    for o in outcomes {
        match o {
            None => out.excluded += 1,
            Some((true, true)) => out.true_positive += 1,
            Some((true, false)) => out.false_positive += 1,
            Some((false, true)) => out.false_negative += 1,
            Some((false, false)) => out.true_negative += 1,
        }
    }
    Ok(out)
}
