//! Triangle meshes of the end-effector and uniform surface sampling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{ply, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &triangles {
            for &i in t {
                if i >= vertices.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        vertices: vertices.len(),
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn triangle_normal(&self, t: usize) -> Option<Vec3> {
        let [a, b, c] = self.corners(t);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        (len > 0.0).then(|| n / len)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Bounding sphere around the vertex centroid.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        if self.vertices.is_empty() {
            return (Vec3::zeros(), 0.0);
        }
        let c = self.vertices.iter().fold(Vec3::zeros(), |a, v| a + v) / self.vertices.len() as f64;
        let r = self.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
        (c, r)
    }

    /// Unsigned distance from `p` to the closest triangle (brute force).
    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Wavefront OBJ text with a leading comment documenting the counts.
    pub fn to_obj(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# {title}: {} vertices, {} faces",
            self.vertices.len(),
            self.triangles.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
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
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Loads an OBJ or PLY mesh, chosen by file extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("obj") => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_obj(&text, path)
        }
        Some("ply") => mesh_from_ply(path),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "expected a .obj or .ply mesh".into(),
        }),
    }
}

/// Parses `v` and `f` records; faces with more than three corners are
/// fan-triangulated. Indices are 1-based, negative indices count back from
/// the latest vertex.
pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let coords: Vec<f64> = words
                    .take(3)
                    .map(|w| w.parse::<f64>().map_err(|_| err(ln, format!("bad coordinate `{w}`"))))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(err(ln, "vertex needs three coordinates".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut corners = Vec::new();
                for w in words {
                    let head = w.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| err(ln, format!("bad face index `{w}`")))?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(err(ln, "face index 0 is invalid".into()));
                    };
                    if resolved < 0 {
                        return Err(err(ln, format!("relative index {idx} before first vertex")));
                    }
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(err(ln, "face needs at least three corners".into()));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn mesh_from_ply(path: &Path) -> Result<TriangleMesh> {
    let data = ply::read_ply(path)?;
    let malformed = |m: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: m.to_string(),
    };
    let vertex = data.element("vertex").ok_or_else(|| malformed("no vertex element"))?;
    let (x, y, z) = match (vertex.column("x"), vertex.column("y"), vertex.column("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(malformed("vertex element lacks x/y/z")),
    };
    let vertices = vertex
        .rows
        .iter()
        .map(|r| Vec3::new(r[x][0], r[y][0], r[z][0]))
        .collect();
    let face = data.element("face").ok_or_else(|| malformed("no face element"))?;
    let col = face
        .column("vertex_indices")
        .or_else(|| face.column("vertex_index"))
        .ok_or_else(|| malformed("face element lacks vertex_indices"))?;
    let mut triangles = Vec::new();
    for row in &face.rows {
        let idx: Vec<usize> = row[col].iter().map(|&v| v as usize).collect();
        if idx.len() < 3 {
            return Err(malformed("face with fewer than three corners"));
        }
        for k in 1..idx.len() - 1 {
            triangles.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// `n` i.i.d. points uniform over the surface: triangles drawn in proportion
/// to area, then a folded uniform barycentric pair. Each point carries its
/// triangle's geometric normal.
pub fn sample_uniform(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    let (cloud, _) = sample_uniform_with_faces(mesh, n, seed)?;
    Ok(cloud)
}

/// Like [`sample_uniform`], also returning the source triangle of each point.
pub fn sample_uniform_with_faces(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<(PointCloud, Vec<usize>)> {
    if n == 0 {
        return Err(Error::param("n", "sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(mesh, n, &mut rng)
}

pub(crate) fn sample_with_rng(
    mesh: &TriangleMesh,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(PointCloud, Vec<usize>)> {
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).collect();
    if !areas.iter().any(|a| *a > 0.0) {
        return Err(Error::EmptyMesh);
    }
    let pick = WeightedIndex::new(&areas).map_err(|_| Error::EmptyMesh)?;
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        let t = pick.sample(rng);
        let [a, b, c] = mesh.corners(t);
        let mut u: f64 = rng.random();
        let mut v: f64 = rng.random();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        positions.push(a + (b - a) * u + (c - a) * v);
        normals.push(mesh.triangle_normal(t).expect("positive-area triangle"));
        faces.push(t);
    }
    let cloud = PointCloud::new(positions).with_normals(normals)?;
    Ok((cloud, faces))
}

struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BoxFace {
    Bottom,
}

impl MeshBuilder {
    fn quad(&mut self, a: usize, b: usize, c: usize, d: usize) {
        self.triangles.push([a, b, c]);
        self.triangles.push([a, c, d]);
    }

    /// Axis-aligned box with outward winding.
    fn add_box(&mut self, lo: Vec3, hi: Vec3, skip: &[BoxFace]) {
        let base = self.vertices.len();
        for k in 0..8 {
            self.vertices.push(Vec3::new(
                if k & 1 == 0 { lo.x } else { hi.x },
                if k & 2 == 0 { lo.y } else { hi.y },
                if k & 4 == 0 { lo.z } else { hi.z },
            ));
        }
        let v = |k: usize| base + k;
        if !skip.contains(&BoxFace::Bottom) {
            self.quad(v(0), v(2), v(3), v(1));
        }
        self.quad(v(4), v(5), v(7), v(6)); // top
        self.quad(v(0), v(1), v(5), v(4)); // -y
        self.quad(v(2), v(6), v(7), v(3)); // +y
        self.quad(v(0), v(4), v(6), v(2)); // -x
        self.quad(v(1), v(3), v(7), v(5)); // +x
    }

    /// Open-topped cylinder about the z axis.
    fn add_cylinder(&mut self, radius: f64, z0: f64, z1: f64, segments: usize) {
        let base = self.vertices.len();
        for z in [z0, z1] {
            for k in 0..segments {
                let a = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                self.vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
            }
        }
        let center = self.vertices.len();
        self.vertices.push(Vec3::new(0.0, 0.0, z0));
        for k in 0..segments {
            let k1 = (k + 1) % segments;
            self.quad(base + k, base + k1, base + segments + k1, base + segments + k);
            self.triangles.push([center, base + k1, base + k]);
        }
    }
}

/// A parallel-jaw gripper about 10 cm across: a palm block, two fingers and
/// a mounting flange. Invariant under a 180° turn about the model z axis.
pub fn gripper_mesh() -> TriangleMesh {
    let mut b = MeshBuilder {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    b.add_box(Vec3::new(-0.05, -0.015, 0.0), Vec3::new(0.05, 0.015, 0.04), &[]);
    b.add_box(Vec3::new(0.02, -0.01, 0.04), Vec3::new(0.04, 0.01, 0.09), &[BoxFace::Bottom]);
    b.add_box(Vec3::new(-0.04, -0.01, 0.04), Vec3::new(-0.02, 0.01, 0.09), &[BoxFace::Bottom]);
    b.add_cylinder(0.014, -0.012, 0.0, 16);
    TriangleMesh::new(b.vertices, b.triangles).expect("valid gripper mesh")
}

/// Axis-aligned unit cube `[0, 1]^3`, two triangles per face.
pub fn unit_cube() -> TriangleMesh {
    box_mesh(Vec3::zeros(), Vec3::repeat(1.0)).expect("valid cube")
}

/// Closed axis-aligned box between two corners.
pub fn box_mesh(lo: Vec3, hi: Vec3) -> Result<TriangleMesh> {
    let mut b = MeshBuilder {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    b.add_box(lo, hi, &[]);
    TriangleMesh::new(b.vertices, b.triangles)
}
