use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{segment_frames, PrimitiveKind, SegmentFrame, Skeleton};
use crate::primitives::{sample_surface, Cuboid, Cylinder, Shape, SurfaceSamples};
use crate::{Error, Mat3, Result, Vec3};

/// Fitted dimensions of one segment's primitive.
///
/// Cylinder height is `h_scale` times the current segment length; cuboid
/// half-extents are fixed, with the third extent running along the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SegmentProxy {
    Cylinder { r: f64, h_scale: f64 },
    Cuboid { half_extents: Vec3 },
}

impl SegmentProxy {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            SegmentProxy::Cylinder { .. } => PrimitiveKind::Cylinder,
            SegmentProxy::Cuboid { .. } => PrimitiveKind::Cuboid,
        }
    }

    /// Local shape for a segment of the given length.
    pub fn shape(&self, length: f64) -> Shape {
        match *self {
            SegmentProxy::Cylinder { r, h_scale } => Shape::Cylinder {
                radius: r,
                height: h_scale * length,
            },
            SegmentProxy::Cuboid { half_extents } => Shape::Cuboid { half_extents },
        }
    }

    /// Uniformly scales every metric dimension by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            SegmentProxy::Cylinder { r, h_scale } => SegmentProxy::Cylinder { r: r * s, h_scale },
            SegmentProxy::Cuboid { half_extents } => SegmentProxy::Cuboid {
                half_extents: half_extents * s,
            },
        }
    }

    fn validate(&self) -> bool {
        match *self {
            SegmentProxy::Cylinder { r, h_scale } => r.is_finite() && h_scale.is_finite() && r > 0.0 && h_scale > 0.0,
            SegmentProxy::Cuboid { half_extents } => half_extents.iter().all(|h| h.is_finite() && *h > 0.0),
        }
    }
}

/// Proxy dimensions for one body shape, one entry per skeleton segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyParams {
    #[serde(default = "schema_tag")]
    pub schema: String,
    /// Settings of the run that produced the file, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub segments: Vec<SegmentProxy>,
}

fn schema_tag() -> String {
    crate::SCHEMA_VERSION.to_string()
}

impl ProxyParams {
    pub fn new(segments: Vec<SegmentProxy>) -> Self {
        Self {
            schema: schema_tag(),
            config: None,
            segments,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text).map_err(|e| Error::json("proxy parameters", e))?;
        if params.schema != crate::SCHEMA_VERSION {
            return Err(Error::Proxy(format!("unsupported schema {}", params.schema)));
        }
        if let Some(i) = params.segments.iter().position(|p| !p.validate()) {
            return Err(Error::Proxy(format!("segment {i} has non-positive dimensions")));
        }
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("proxy parameters serialize")
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.segments.iter().map(|p| p.scaled(s)).collect())
    }

    pub fn check_against(&self, skeleton: &Skeleton) -> Result<()> {
        if self.segments.len() != skeleton.segment_count() {
            return Err(Error::Proxy(format!(
                "{} proxies for {} segments",
                self.segments.len(),
                skeleton.segment_count()
            )));
        }
        for (i, (p, seg)) in self.segments.iter().zip(skeleton.segments()).enumerate() {
            if p.kind() != seg.primitive {
                return Err(Error::Proxy(format!(
                    "segment {i} ({}) is a {:?} but its proxy is a {:?}",
                    seg.name,
                    seg.primitive,
                    p.kind()
                )));
            }
            if !p.validate() {
                return Err(Error::Proxy(format!("segment {i} has non-positive dimensions")));
            }
        }
        Ok(())
    }
}

/// A primitive evaluated in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorldPrimitive {
    Cylinder(Cylinder),
    Cuboid(Cuboid),
}

impl WorldPrimitive {
    pub fn contains(&self, p: &Vec3) -> bool {
        match self {
            WorldPrimitive::Cylinder(c) => c.contains(p),
            WorldPrimitive::Cuboid(c) => c.contains(p),
        }
    }
}

/// A primitive placed for one frame: `world = origin + rotation * local`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosedPrimitive {
    pub segment: usize,
    pub shape: Shape,
    pub rotation: Mat3,
    pub origin: Vec3,
    pub world: WorldPrimitive,
    center: Vec3,
    radius: f64,
}

impl PosedPrimitive {
    pub fn new(segment: usize, shape: Shape, rotation: Mat3, origin: Vec3) -> Self {
        let world = match shape {
            Shape::Cylinder { radius, height } => WorldPrimitive::Cylinder(Cylinder {
                a: origin,
                axis: rotation.column(2).into_owned(),
                h: height,
                r: radius,
            }),
            Shape::Cuboid { half_extents } => WorldPrimitive::Cuboid(Cuboid::assemble(origin, rotation, half_extents)),
        };
        Self {
            segment,
            shape,
            rotation,
            origin,
            world,
            center: origin + rotation * shape.local_center(),
            radius: shape.bounding_radius(),
        }
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.origin + self.rotation * local
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        self.rotation.transpose() * (world - self.origin)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.world.contains(p)
    }

    /// Bounding sphere center.
    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn bounding_radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementWarning {
    pub segment: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub primitives: Vec<PosedPrimitive>,
    pub warnings: Vec<PlacementWarning>,
}

/// Attaches every proxy rigidly to its segment frame.
///
/// Cylinders start at the segment origin and run along the axis; cuboids sit
/// on the segment midpoint. Degenerate segments are left out and reported.
pub fn place_proxies(params: &ProxyParams, frames: &[SegmentFrame]) -> Result<Placement> {
    if params.segments.len() != frames.len() {
        return Err(Error::Proxy(format!(
            "{} proxies for {} segment frames",
            params.segments.len(),
            frames.len()
        )));
    }
    let mut primitives = Vec::with_capacity(frames.len());
    let mut warnings = Vec::new();
    for (segment, (proxy, frame)) in params.segments.iter().zip(frames).enumerate() {
        if frame.degenerate {
            warnings.push(PlacementWarning {
                segment,
                message: "zero-length segment, primitive skipped".into(),
            });
            continue;
        }
        let shape = proxy.shape(frame.length);
        let origin = match proxy {
            SegmentProxy::Cylinder { .. } => frame.origin,
            SegmentProxy::Cuboid { .. } => frame.midpoint(),
        };
        primitives.push(PosedPrimitive::new(segment, shape, frame.basis, origin));
    }
    Ok(Placement { primitives, warnings })
}

/// Surface sample counts per primitive kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub cylinder: usize,
    pub cuboid: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            cylinder: 30,
            cuboid: 36,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn uniform(count: usize, seed: u64) -> Self {
        Self {
            cylinder: count,
            cuboid: count,
            seed,
        }
    }
}

/// One body's proxies together with their (pose-independent) surface samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyProxies {
    pub params: ProxyParams,
    pub samples: Vec<SurfaceSamples>,
}

/// A body posed for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedBody {
    pub frames: Vec<SegmentFrame>,
    /// Indexed by segment; `None` for degenerate segments.
    pub primitives: Vec<Option<PosedPrimitive>>,
    /// World sample points, indexed by segment then sample.
    pub samples: Vec<Vec<Vec3>>,
    pub warnings: Vec<PlacementWarning>,
}

impl PosedBody {
    pub fn primitives(&self) -> impl Iterator<Item = &PosedPrimitive> {
        self.primitives.iter().flatten()
    }

    pub fn sample_count(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }
}

fn segment_seed(seed: u64, segment: usize) -> u64 {
    seed ^ (segment as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl BodyProxies {
    /// Samples every proxy once. Cylinder sample allocation uses the segment
    /// length in `reference_pose`; the pattern then stretches with the segment.
    pub fn new(
        skeleton: &Skeleton,
        params: ProxyParams,
        reference_pose: &[Vec3],
        config: &SampleConfig,
    ) -> Result<Self> {
        params.check_against(skeleton)?;
        let frames = segment_frames(skeleton, reference_pose)?;
        let samples = params
            .segments
            .iter()
            .zip(&frames)
            .enumerate()
            .map(|(s, (proxy, frame))| {
                let (shape, n) = match *proxy {
                    SegmentProxy::Cylinder { r, h_scale } => {
                        let height = if frame.degenerate { 2.0 * r } else { h_scale * frame.length };
                        (Shape::Cylinder { radius: r, height }, config.cylinder)
                    }
                    SegmentProxy::Cuboid { half_extents } => (Shape::Cuboid { half_extents }, config.cuboid),
                };
                sample_surface(&shape, n, segment_seed(config.seed, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, samples })
    }

    pub fn total_samples(&self) -> usize {
        self.samples.iter().map(SurfaceSamples::len).sum()
    }

    pub fn pose(&self, skeleton: &Skeleton, joints: &[Vec3]) -> Result<PosedBody> {
        let frames = segment_frames(skeleton, joints)?;
        let placement = place_proxies(&self.params, &frames)?;
        let mut primitives = vec![None; frames.len()];
        let mut samples = vec![Vec::new(); frames.len()];
        for prim in placement.primitives {
            samples[prim.segment] = self.samples[prim.segment]
                .unit_points
                .iter()
                .map(|u| prim.to_world(&prim.shape.scale_unit(u)))
                .collect();
            primitives[prim.segment] = Some(prim);
        }
        Ok(PosedBody {
            frames,
            primitives,
            samples,
            warnings: placement.warnings,
        })
    }

    /// Accumulates `(∂p/∂joints)ᵀ g` into `out` for the world position `p` of
    /// one sample, using the analytic derivative of the rigid attachment
    /// (translation, segment axis, lateral reference and cylinder stretch).
    pub fn pull_back_sample(
        &self,
        skeleton: &Skeleton,
        frame: &SegmentFrame,
        segment: usize,
        sample: usize,
        joints: &[Vec3],
        g: &Vec3,
        out: &mut [Vec3],
    ) {
        if frame.degenerate {
            return;
        }
        let seg = &skeleton.segments()[segment];
        let unit = self.samples[segment].unit_points[sample];
        let (ja, jb) = (seg.joint_a, seg.joint_b);
        let x = frame.basis.column(0).into_owned();
        let z = frame.axis;

        let (s, mut c_a, mut c_b) = match self.params.segments[segment] {
            SegmentProxy::Cylinder { r, h_scale } => {
                let t = unit.z * h_scale;
                (Vec3::new(unit.x * r, unit.y * r, 0.0), g * (1.0 - t), g * t)
            }
            SegmentProxy::Cuboid { half_extents } => (unit.component_mul(&half_extents), g * 0.5, g * 0.5),
        };

        let c_y = g * s.y;
        let mut c_x = g * s.x + c_y.cross(&z);
        let mut c_z = g * s.z + x.cross(&c_y);

        let w = frame.lateral_vector(joints);
        let u = w - w.dot(&z) * z;
        let c_u = (c_x - x * x.dot(&c_x)) / u.norm();
        c_z -= w * z.dot(&c_u) + c_u * w.dot(&z);
        c_x = c_u - z * z.dot(&c_u);
        if let super::LateralRef::Joints { from, to } = frame.lateral {
            out[to] += c_x;
            out[from] -= c_x;
        }

        let g_axis = (c_z - z * z.dot(&c_z)) / frame.length;
        c_b += g_axis;
        c_a -= g_axis;
        out[ja] += c_a;
        out[jb] += c_b;
    }
}
