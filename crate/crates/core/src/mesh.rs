//! Triangle meshes: OBJ ingestion and a few closed synthetic shapes.

use std::collections::HashMap;
use std::path::Path;

use crate::primitives::Shape;
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Mesh(format!("{} vertices, need at least 3", vertices.len())));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Mesh(format!("vertex {i} has a non-finite coordinate")));
        }
        if let Some((f, _)) = faces
            .iter()
            .enumerate()
            .find(|(_, f)| f.iter().any(|&i| i >= vertices.len()))
        {
            return Err(Error::Mesh(format!("face {f} references a missing vertex")));
        }
        Ok(Self { vertices, faces })
    }

    /// Parses `v` and `f` records; everything else is ignored. Faces must be
    /// triangles; `v/vt/vn` index forms and negative indices are accepted.
    pub fn from_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Mesh(format!("line {}: {e}", lineno + 1)))?;
                    if coords.len() != 3 {
                        return Err(Error::Mesh(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                    }
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = parts
                        .map(|tok| parse_obj_index(tok, vertices.len()))
                        .collect::<Option<_>>()
                        .ok_or_else(|| Error::Mesh(format!("line {}: bad face index", lineno + 1)))?;
                    if idx.len() != 3 {
                        return Err(Error::Mesh(format!(
                            "line {}: face with {} vertices, only triangles are accepted",
                            lineno + 1,
                            idx.len()
                        )));
                    }
                    faces.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_obj(&text)
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        out
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Checks that every undirected edge is shared by exactly two faces.
    pub fn check_watertight(&self) -> Result<()> {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if self.faces.is_empty() {
            return Err(Error::OpenMesh("mesh has no faces".into()));
        }
        match edges.iter().find(|(_, &n)| n != 2) {
            Some(((a, b), n)) => Err(Error::OpenMesh(format!("edge ({a}, {b}) is used by {n} faces"))),
            None => Ok(()),
        }
    }

    /// Volume enclosed by a closed, outward-oriented mesh.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Concatenates meshes into one vertex/face list.
    pub fn merge(parts: &[TriangleMesh]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for part in parts {
            let base = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            faces.extend(part.faces.iter().map(|f| f.map(|i| i + base)));
        }
        Self::new(vertices, faces)
    }
}

fn parse_obj_index(token: &str, count: usize) -> Option<usize> {
    let raw: i64 = token.split('/').next()?.parse().ok()?;
    let idx = match raw {
        0 => return None,
        r if r > 0 => r as usize - 1,
        r => count.checked_sub(r.unsigned_abs() as usize)?,
    };
    (idx < count).then_some(idx)
}

/// Any unit vector perpendicular to `axis`, and the completing right-handed pair.
fn perpendicular_pair(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - helper.dot(axis) * axis).normalize();
    (e1, axis.cross(&e1))
}

/// Surface of revolution around the segment `a -> b` from a profile of
/// `(distance along the axis, radius)` pairs running from one pole to the
/// other. The first and last profile entries must have zero radius.
pub fn lathe(a: &Vec3, b: &Vec3, profile: &[(f64, f64)], around: usize) -> Result<TriangleMesh> {
    if profile.len() < 3 || around < 3 {
        return Err(Error::Mesh("lathe needs at least 3 profile points and 3 steps around".into()));
    }
    let axis = (b - a).normalize();
    let (e1, e2) = perpendicular_pair(&axis);
    let rings = profile.len() - 2;
    let mut vertices = vec![a + profile[0].0 * axis];
    for &(t, rho) in &profile[1..profile.len() - 1] {
        for j in 0..around {
            let theta = std::f64::consts::TAU * j as f64 / around as f64;
            vertices.push(a + t * axis + rho * (theta.cos() * e1 + theta.sin() * e2));
        }
    }
    let top = vertices.len();
    vertices.push(a + profile[profile.len() - 1].0 * axis);

    let ring = |i: usize, j: usize| 1 + i * around + j % around;
    let mut faces = Vec::new();
    for j in 0..around {
        faces.push([0, ring(0, j + 1), ring(0, j)]);
    }
    for i in 0..rings - 1 {
        for j in 0..around {
            faces.push([ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)]);
        }
    }
    for j in 0..around {
        faces.push([top, ring(rings - 1, j), ring(rings - 1, j + 1)]);
    }
    TriangleMesh::new(vertices, faces)
}

/// Closed cylinder with flat caps at `a` and `b`.
pub fn cylinder_mesh(a: &Vec3, b: &Vec3, radius: f64, around: usize, rings: usize) -> Result<TriangleMesh> {
    let length = (b - a).norm();
    let rings = rings.max(2);
    let cap_steps = 3;
    let mut profile = vec![(0.0, 0.0)];
    profile.extend((1..cap_steps).map(|k| (0.0, radius * k as f64 / cap_steps as f64)));
    profile.extend((0..rings).map(|i| (length * i as f64 / (rings - 1) as f64, radius)));
    profile.extend((1..cap_steps).rev().map(|k| (length, radius * k as f64 / cap_steps as f64)));
    profile.push((length, 0.0));
    lathe(a, b, &profile, around)
}

/// Capsule: cylinder of the given radius around `a -> b` with hemispherical ends.
pub fn capsule_mesh(a: &Vec3, b: &Vec3, radius: f64, around: usize, rings: usize) -> Result<TriangleMesh> {
    let length = (b - a).norm();
    let rings = rings.max(2);
    let lat = (around / 4).max(3);
    let mut profile = Vec::new();
    for k in 0..=lat {
        let phi = -std::f64::consts::FRAC_PI_2 * (1.0 - k as f64 / lat as f64);
        profile.push((radius * phi.sin(), radius * phi.cos()));
    }
    profile.extend((1..rings - 1).map(|i| (length * i as f64 / (rings - 1) as f64, radius)));
    for k in 0..=lat {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / lat as f64;
        profile.push((length + radius * phi.sin(), radius * phi.cos()));
    }
    profile[0].1 = 0.0;
    let last = profile.len() - 1;
    profile[last].1 = 0.0;
    lathe(a, b, &profile, around)
}

/// Icosphere obtained by repeated midpoint subdivision of an icosahedron.
pub fn icosphere(center: &Vec3, radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vec3::new(c[0], c[1], c[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        faces = faces
            .iter()
            .flat_map(|&[a, b, c]| {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    let vertices = vertices.iter().map(|v| center + radius * v).collect();
    TriangleMesh { vertices, faces }
}

/// Axis-aligned box with outward-facing triangles.
pub fn box_mesh(center: &Vec3, half: &Vec3) -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
            center + Vec3::new(s(1) * half.x, s(2) * half.y, s(4) * half.z)
        })
        .collect();
    let faces = vec![
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
    ];
    TriangleMesh { vertices, faces }
}

/// Closed mesh of a primitive placed at `origin` with local axes `rotation`
/// (cylinders start at `origin`, cuboids are centered on it).
pub fn primitive_mesh(shape: &Shape, rotation: &Mat3, origin: &Vec3, around: usize) -> Result<TriangleMesh> {
    match *shape {
        Shape::Cylinder { radius, height } => {
            let b = origin + rotation.column(2) * height;
            cylinder_mesh(origin, &b, radius, around, 2)
        }
        Shape::Cuboid { half_extents } => {
            let mut mesh = box_mesh(&Vec3::zeros(), &half_extents);
            for v in &mut mesh.vertices {
                *v = origin + rotation * *v;
            }
            Ok(mesh)
        }
    }
}
