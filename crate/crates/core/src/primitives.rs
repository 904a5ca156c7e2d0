//! Analytic cylinders and cuboids.
//!
//! Local frames: a cylinder has its bottom center at the origin and its axis
//! along local +z, spanning `z ∈ [0, height]`; a cuboid is centered at the
//! origin with its edges along the local axes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

/// Points whose slab coordinate lies within this distance of a face are
/// treated as outside the cuboid.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Below this radial distance a cylinder point has no antipodal point.
pub const AXIS_EPS: f64 = 1e-9;

/// Primitive kind and dimensions in its local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Cylinder { radius: f64, height: f64 },
    Cuboid { half_extents: Vec3 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Cylinder { radius, height } => {
                radius.is_finite() && height.is_finite() && radius > 0.0 && height > 0.0
            }
            Shape::Cuboid { half_extents } => half_extents.iter().all(|h| h.is_finite() && *h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Proxy(format!("non-positive or non-finite dimensions: {self:?}")))
        }
    }

    /// Containment in the local frame, with the same comparators as the world tests.
    pub fn contains_local(&self, p: &Vec3) -> bool {
        match *self {
            Shape::Cylinder { radius, height } => {
                p.x.hypot(p.y) < radius && 0.0 <= p.z && p.z <= height
            }
            Shape::Cuboid { half_extents } => (0..3).all(|k| {
                let below = p[k] - half_extents[k];
                let above = p[k] + half_extents[k];
                below.abs() > BOUNDARY_EPS && above.abs() > BOUNDARY_EPS && below * above < 0.0
            }),
        }
    }

    /// Center of the smallest sphere around the primitive, in local coordinates.
    pub fn local_center(&self) -> Vec3 {
        match *self {
            Shape::Cylinder { height, .. } => Vec3::new(0.0, 0.0, 0.5 * height),
            Shape::Cuboid { .. } => Vec3::zeros(),
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Cylinder { radius, height } => radius.hypot(0.5 * height),
            Shape::Cuboid { half_extents } => half_extents.norm(),
        }
    }

    pub fn surface_area(&self) -> f64 {
        match *self {
            Shape::Cylinder { radius, height } => {
                2.0 * std::f64::consts::PI * radius * (radius + height)
            }
            Shape::Cuboid { half_extents: h } => 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z),
        }
    }

    /// Maps normalized surface coordinates (see [`SurfaceSamples`]) to local meters.
    pub fn scale_unit(&self, u: &Vec3) -> Vec3 {
        match *self {
            Shape::Cylinder { radius, height } => Vec3::new(u.x * radius, u.y * radius, u.z * height),
            Shape::Cuboid { half_extents } => u.component_mul(&half_extents),
        }
    }
}

/// Cylinder in world coordinates: bottom center `a`, unit axis, height, radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub a: Vec3,
    pub axis: Vec3,
    pub h: f64,
    pub r: f64,
}

impl Cylinder {
    pub fn new(a: Vec3, axis: Vec3, h: f64, r: f64) -> Result<Self> {
        if (axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Proxy(format!("cylinder axis is not unit: |v| = {}", axis.norm())));
        }
        Shape::Cylinder { radius: r, height: h }.validate()?;
        Ok(Self { a, axis, h, r })
    }

    /// `dist(p, axis) < r` and `0 <= (p - a)·v <= h`.
    pub fn contains(&self, p: &Vec3) -> bool {
        let rel = p - self.a;
        let t = rel.dot(&self.axis);
        let radial = (rel - t * self.axis).norm();
        radial < self.r && 0.0 <= t && t <= self.h
    }
}

/// Oriented box in world coordinates.
///
/// `face_vertices[k]` holds, for the face pair normal to basis column `k`, the
/// corner on the positive face and the diagonally opposite corner on the
/// negative face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub center: Vec3,
    pub basis: Mat3,
    pub half_extents: Vec3,
    pub face_vertices: [[Vec3; 2]; 3],
}

impl Cuboid {
    pub fn new(center: Vec3, basis: Mat3, half_extents: Vec3) -> Result<Self> {
        let gram = basis.transpose() * basis;
        if (gram - Mat3::identity()).abs().max() > 1e-9 {
            return Err(Error::Proxy("cuboid basis is not orthonormal".into()));
        }
        Shape::Cuboid { half_extents }.validate()?;
        Ok(Self::assemble(center, basis, half_extents))
    }

    /// Builds the cuboid without validating the basis or extents.
    pub(crate) fn assemble(center: Vec3, basis: Mat3, half_extents: Vec3) -> Self {
        let diagonal = basis * half_extents;
        Self {
            center,
            basis,
            half_extents,
            face_vertices: [[center + diagonal, center - diagonal]; 3],
        }
    }

    /// Slab test per face pair: the offsets of `p` from the two diagonal
    /// vertices, measured along the pair's face normal, must have opposite
    /// signs for every pair. Points within [`BOUNDARY_EPS`] of a face are
    /// outside.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| {
            let normal = self.basis.column(k);
            let [v1, v2] = &self.face_vertices[k];
            let s1 = (p - v1).dot(&normal);
            let s2 = (p - v2).dot(&normal);
            s1.abs() > BOUNDARY_EPS && s2.abs() > BOUNDARY_EPS && s1 * s2 < 0.0
        })
    }
}

/// Surface samples of one primitive, stored in normalized coordinates so the
/// same pattern can be re-scaled when a proxy stretches with its segment.
///
/// Cylinder: `(x / r, y / r, z / h)`; cuboid: `(x / hx, y / hy, z / hz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSamples {
    /// Dimensions used for the area-weighted allocation.
    pub shape: Shape,
    pub unit_points: Vec<Vec3>,
}

impl SurfaceSamples {
    pub fn len(&self) -> usize {
        self.unit_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_points.is_empty()
    }

    /// Sample coordinates in meters for the sampling dimensions.
    pub fn local_points(&self) -> Vec<Vec3> {
        self.local_points_for(&self.shape)
    }

    /// Sample coordinates in meters for (possibly stretched) dimensions.
    pub fn local_points_for(&self, shape: &Shape) -> Vec<Vec3> {
        self.unit_points.iter().map(|u| shape.scale_unit(u)).collect()
    }
}

const PLASTIC: f64 = 1.324_717_957_244_746;

/// One surface region with its own low-discrepancy stream.
///
/// Every region is closed under the local reflection `y -> -y`. Its sequence
/// starts with `lead` points lying on the `y = 0` plane, then continues with
/// mirrored pairs, so any completed prefix is itself mirror-symmetric.
struct Region {
    area: f64,
    lead: usize,
    offset: [f64; 2],
    emitted: usize,
    generate: fn(&Shape, &RegionDraw) -> Vec3,
}

/// One draw from a region stream.
enum RegionDraw {
    /// Point on the mirror plane; `index` distinguishes the lead points.
    OnPlane { index: usize, u: f64 },
    /// Point in the `y >= 0` half (or on the `+y` face) from a 2D R2 draw.
    Half { u: f64, v: f64 },
}

impl Region {
    fn new(area: f64, lead: usize, rng: &mut ChaCha8Rng, generate: fn(&Shape, &RegionDraw) -> Vec3) -> Self {
        Self {
            area,
            lead,
            offset: [rng.gen::<f64>(), rng.gen::<f64>()],
            emitted: 0,
            generate,
        }
    }

    fn next_unit_len(&self) -> usize {
        if self.emitted < self.lead {
            self.lead
        } else {
            2
        }
    }

    /// Emits the next unit (lead block or mirrored pair).
    fn emit(&mut self, shape: &Shape, out: &mut Vec<Vec3>) {
        if self.emitted < self.lead {
            for index in 0..self.lead {
                let u = frac(self.offset[0] + (index as f64 + 0.5) / self.lead as f64 * 0.999_999);
                out.push((self.generate)(shape, &RegionDraw::OnPlane { index, u }));
            }
            self.emitted = self.lead;
        } else {
            let k = ((self.emitted - self.lead) / 2) as f64;
            let u = frac(self.offset[0] + k / PLASTIC);
            let v = frac(self.offset[1] + k / (PLASTIC * PLASTIC));
            let p = (self.generate)(shape, &RegionDraw::Half { u, v });
            out.push(p);
            out.push(Vec3::new(p.x, -p.y, p.z));
            self.emitted += 2;
        }
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Uniform, deterministic surface sampling.
///
/// Points are handed to surface regions in area proportion, one unit at a
/// time (always to the region that is least filled after receiving the
/// unit, ties to the lowest region), and placed with a seeded R2
/// low-discrepancy sequence. Because allocation is sequential, the samples
/// for `n` are a prefix of the samples for any larger count.
pub fn sample_surface(shape: &Shape, n: usize, seed: u64) -> Result<SurfaceSamples> {
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    shape.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regions = match *shape {
        Shape::Cylinder { radius, height } => {
            let lateral = 2.0 * std::f64::consts::PI * radius * height;
            let cap = std::f64::consts::PI * radius * radius;
            vec![
                Region::new(lateral, 2, &mut rng, cylinder_lateral),
                Region::new(cap, 2, &mut rng, cylinder_bottom),
                Region::new(cap, 2, &mut rng, cylinder_top),
            ]
        }
        Shape::Cuboid { half_extents: h } => {
            let ax = 4.0 * h.y * h.z;
            let ay = 4.0 * h.x * h.z;
            let az = 4.0 * h.x * h.y;
            vec![
                Region::new(ax, 1, &mut rng, cuboid_pos_x),
                Region::new(ax, 1, &mut rng, cuboid_neg_x),
                Region::new(az, 1, &mut rng, cuboid_pos_z),
                Region::new(az, 1, &mut rng, cuboid_neg_z),
                Region::new(2.0 * ay, 0, &mut rng, cuboid_y_pair),
            ]
        }
    };

    let mut local = Vec::with_capacity(n + 1);
    while local.len() < n {
        let pick = regions
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r.emitted + r.next_unit_len()) as f64 / r.area))
            .fold(None::<(usize, f64)>, |best, (i, fill)| match best {
                Some((_, f)) if f <= fill => best,
                _ => Some((i, fill)),
            })
            .map(|(i, _)| i)
            .expect("at least one region");
        regions[pick].emit(shape, &mut local);
    }
    local.truncate(n);

    let unit_points = local
        .iter()
        .map(|p| match *shape {
            Shape::Cylinder { radius, height } => Vec3::new(p.x / radius, p.y / radius, p.z / height),
            Shape::Cuboid { half_extents } => p.component_div(&half_extents),
        })
        .collect();
    Ok(SurfaceSamples {
        shape: *shape,
        unit_points,
    })
}

fn cyl_dims(shape: &Shape) -> (f64, f64) {
    match *shape {
        Shape::Cylinder { radius, height } => (radius, height),
        Shape::Cuboid { .. } => unreachable!("cylinder region on a cuboid"),
    }
}

fn box_dims(shape: &Shape) -> Vec3 {
    match *shape {
        Shape::Cuboid { half_extents } => half_extents,
        Shape::Cylinder { .. } => unreachable!("cuboid region on a cylinder"),
    }
}

fn cylinder_lateral(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    let (r, h) = cyl_dims(shape);
    match *draw {
        // One lead point at theta = 0, the other at theta = pi.
        RegionDraw::OnPlane { index, u } => {
            let x = if index == 0 { r } else { -r };
            Vec3::new(x, 0.0, u * h)
        }
        RegionDraw::Half { u, v } => {
            let theta = std::f64::consts::PI * u;
            Vec3::new(r * theta.cos(), r * theta.sin(), v * h)
        }
    }
}

fn cap_point(r: f64, z: f64, draw: &RegionDraw) -> Vec3 {
    match *draw {
        RegionDraw::OnPlane { index, u } => {
            let x = r * u.sqrt();
            Vec3::new(if index == 0 { x } else { -x }, 0.0, z)
        }
        RegionDraw::Half { u, v } => {
            let rho = r * u.sqrt();
            let theta = std::f64::consts::PI * v;
            Vec3::new(rho * theta.cos(), rho * theta.sin(), z)
        }
    }
}

fn cylinder_bottom(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    let (r, _) = cyl_dims(shape);
    cap_point(r, 0.0, draw)
}

fn cylinder_top(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    let (r, h) = cyl_dims(shape);
    cap_point(r, h, draw)
}

fn x_face(shape: &Shape, draw: &RegionDraw, sign: f64) -> Vec3 {
    let h = box_dims(shape);
    match *draw {
        RegionDraw::OnPlane { u, .. } => Vec3::new(sign * h.x, 0.0, (2.0 * u - 1.0) * h.z),
        RegionDraw::Half { u, v } => Vec3::new(sign * h.x, u * h.y, (2.0 * v - 1.0) * h.z),
    }
}

fn z_face(shape: &Shape, draw: &RegionDraw, sign: f64) -> Vec3 {
    let h = box_dims(shape);
    match *draw {
        RegionDraw::OnPlane { u, .. } => Vec3::new((2.0 * u - 1.0) * h.x, 0.0, sign * h.z),
        RegionDraw::Half { u, v } => Vec3::new((2.0 * v - 1.0) * h.x, u * h.y, sign * h.z),
    }
}

fn cuboid_pos_x(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    x_face(shape, draw, 1.0)
}

fn cuboid_neg_x(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    x_face(shape, draw, -1.0)
}

fn cuboid_pos_z(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    z_face(shape, draw, 1.0)
}

fn cuboid_neg_z(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    z_face(shape, draw, -1.0)
}

// The +y face; its mirror partner lands on the -y face.
fn cuboid_y_pair(shape: &Shape, draw: &RegionDraw) -> Vec3 {
    let h = box_dims(shape);
    match *draw {
        RegionDraw::Half { u, v } => Vec3::new((2.0 * u - 1.0) * h.x, h.y, (2.0 * v - 1.0) * h.z),
        RegionDraw::OnPlane { .. } => unreachable!("y face pair has no on-plane lead"),
    }
}

/// Reflection through the primitive's symmetry: the axis line for cylinders
/// (cap points keep their height), the center for cuboids.
pub fn antipodal(shape: &Shape, p: &Vec3) -> Result<Vec3> {
    match shape {
        Shape::Cylinder { .. } => {
            if p.x.hypot(p.y) < AXIS_EPS {
                return Err(Error::UndefinedAntipodal);
            }
            Ok(Vec3::new(-p.x, -p.y, p.z))
        }
        Shape::Cuboid { .. } => Ok(-p),
    }
}

/// Distance from an interior local point to the nearest surface point.
pub fn penetration_depth(shape: &Shape, p: &Vec3) -> Result<f64> {
    if !shape.contains_local(p) {
        return Err(Error::NotInterior);
    }
    Ok(match *shape {
        Shape::Cylinder { radius, height } => {
            let radial = radius - p.x.hypot(p.y);
            radial.min(p.z).min(height - p.z)
        }
        Shape::Cuboid { half_extents } => (0..3)
            .map(|k| half_extents[k] - p[k].abs())
            .fold(f64::INFINITY, f64::min),
    })
}
