//! Point clouds and the operations every pipeline stage leans on.

mod kdtree;
pub mod ply;

use std::collections::HashMap;

pub use kdtree::{Neighbor, NeighborQuery, SpatialIndex};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidTransform, Vec3};

pub type Rgb = [f64; 3];

/// Positions in meters with optional per-point colors (`[0, 1]` RGB) and
/// unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    positions: Vec<Vec3>,
    colors: Option<Vec<Rgb>>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>) -> Self {
        Self {
            positions,
            colors: None,
            normals: None,
        }
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.positions.len() {
            return Err(Error::AttributeLength {
                attribute: "colors",
                expected: self.positions.len(),
                found: colors.len(),
            });
        }
        self.colors = Some(colors);
        Ok(self)
    }

    /// Attaches normals, normalizing each to unit length.
    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.positions.len() {
            return Err(Error::AttributeLength {
                attribute: "normals",
                expected: self.positions.len(),
                found: normals.len(),
            });
        }
        let normals = normals
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 && len.is_finite() {
                    Ok(n / len)
                } else {
                    Err(Error::param("normals", "zero or non-finite normal"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    /// Subset in the order of `ids`.
    pub fn select(&self, ids: &[usize]) -> PointCloud {
        PointCloud {
            positions: ids.iter().map(|&i| self.positions[i]).collect(),
            colors: self.colors.as_ref().map(|c| ids.iter().map(|&i| c[i]).collect()),
            normals: self.normals.as_ref().map(|n| ids.iter().map(|&i| n[i]).collect()),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            positions: self.positions.iter().map(|p| t.apply(p)).collect(),
            colors: self.colors.clone(),
            normals: self
                .normals
                .as_ref()
                .map(|n| n.iter().map(|v| t.apply_vector(v)).collect()),
        }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.is_empty() {
            return None;
        }
        let sum = self.positions.iter().fold(Vec3::zeros(), |acc, p| acc + p);
        Some(sum / self.len() as f64)
    }

    pub fn flip_normals(&mut self) {
        if let Some(n) = self.normals.as_mut() {
            n.iter_mut().for_each(|v| *v = -*v);
        }
    }

    fn replace_normals(&self, normals: Vec<Vec3>) -> PointCloud {
        PointCloud {
            positions: self.positions.clone(),
            colors: self.colors.clone(),
            normals: Some(normals),
        }
    }

    pub fn index(&self) -> SpatialIndex {
        SpatialIndex::new(&self.positions)
    }
}

/// Concatenates clouds. Non-empty inputs must agree on which attributes
/// they carry.
pub fn merge(clouds: &[PointCloud]) -> Result<PointCloud> {
    let mut reference: Option<&PointCloud> = None;
    for c in clouds.iter().filter(|c| !c.is_empty()) {
        match reference {
            None => reference = Some(c),
            Some(r) => {
                if r.colors.is_some() != c.colors.is_some() {
                    return Err(Error::AttributeMismatch("colors"));
                }
                if r.normals.is_some() != c.normals.is_some() {
                    return Err(Error::AttributeMismatch("normals"));
                }
            }
        }
    }
    let Some(reference) = reference else {
        return Ok(clouds.first().cloned().unwrap_or_default());
    };
    let total = clouds.iter().map(PointCloud::len).sum();
    let mut out = PointCloud {
        positions: Vec::with_capacity(total),
        colors: reference.colors.as_ref().map(|_| Vec::with_capacity(total)),
        normals: reference.normals.as_ref().map(|_| Vec::with_capacity(total)),
    };
    for c in clouds.iter().filter(|c| !c.is_empty()) {
        out.positions.extend_from_slice(&c.positions);
        if let (Some(dst), Some(src)) = (out.colors.as_mut(), c.colors.as_ref()) {
            dst.extend_from_slice(src);
        }
        if let (Some(dst), Some(src)) = (out.normals.as_mut(), c.normals.as_ref()) {
            dst.extend_from_slice(src);
        }
    }
    Ok(out)
}

#[derive(Default)]
struct VoxelAccum {
    position: Vec3,
    color: Vec3,
    normal: Vec3,
    first: usize,
    count: usize,
}

/// Replaces the points in each occupied voxel (key `floor(p / voxel)`) by
/// their centroid. Colors are averaged; normals averaged and renormalized.
/// Output order follows the first point seen in each voxel.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(Error::NonPositiveVoxel(voxel));
    }
    let mut slots: HashMap<[i64; 3], usize> = HashMap::with_capacity(cloud.len() / 4 + 1);
    let mut acc: Vec<VoxelAccum> = Vec::new();
    for (i, p) in cloud.positions.iter().enumerate() {
        let key = [
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        ];
        let slot = *slots.entry(key).or_insert_with(|| {
            acc.push(VoxelAccum {
                first: i,
                ..Default::default()
            });
            acc.len() - 1
        });
        let a = &mut acc[slot];
        a.position += p;
        if let Some(c) = &cloud.colors {
            a.color += Vec3::from(c[i]);
        }
        if let Some(n) = &cloud.normals {
            a.normal += n[i];
        }
        a.count += 1;
    }
    let positions = acc.iter().map(|a| a.position / a.count as f64).collect();
    let colors = cloud.colors.as_ref().map(|_| {
        acc.iter()
            .map(|a| {
                let c = a.color / a.count as f64;
                [c.x, c.y, c.z]
            })
            .collect()
    });
    let normals = cloud.normals.as_ref().map(|src| {
        acc.iter()
            .map(|a| {
                let len = a.normal.norm();
                if len > 1e-12 {
                    a.normal / len
                } else {
                    src[a.first]
                }
            })
            .collect()
    });
    Ok(PointCloud {
        positions,
        colors,
        normals,
    })
}

/// Normal of each point from the covariance of its `k` nearest neighbors
/// (the point included), oriented toward `viewpoint`.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Vec3) -> Result<PointCloud> {
    let index = cloud.index();
    estimate_normals_with_index(cloud, &index, k, viewpoint)
}

pub fn estimate_normals_with_index(
    cloud: &PointCloud,
    index: &SpatialIndex,
    k: usize,
    viewpoint: &Vec3,
) -> Result<PointCloud> {
    let mut normals = pca_normals(cloud, index, k)?;
    for (n, p) in normals.iter_mut().zip(&cloud.positions) {
        if n.dot(&(viewpoint - p)) < 0.0 {
            *n = -*n;
        }
    }
    Ok(cloud.replace_normals(normals))
}

/// Normals oriented away from the cloud centroid. Used when the cloud is a
/// compact object seen from several sides, where no single viewpoint works.
pub fn estimate_normals_outward(cloud: &PointCloud, index: &SpatialIndex, k: usize) -> Result<PointCloud> {
    let centroid = cloud.centroid().ok_or(Error::InsufficientPoints { needed: k, found: 0 })?;
    let mut out = estimate_normals_with_index(cloud, index, k, &centroid)?;
    out.flip_normals();
    Ok(out)
}

/// Re-estimates normals from local geometry, keeping the sign of the
/// normals the cloud already carries (e.g. mesh face normals).
pub fn refine_normals(cloud: &PointCloud, index: &SpatialIndex, k: usize) -> Result<PointCloud> {
    let prior = cloud.normals.as_ref().ok_or(Error::MissingNormals)?;
    let mut normals = pca_normals(cloud, index, k)?;
    for (n, old) in normals.iter_mut().zip(prior) {
        if n.dot(old) < 0.0 {
            *n = -*n;
        }
    }
    Ok(cloud.replace_normals(normals))
}

fn pca_normals(cloud: &PointCloud, index: &SpatialIndex, k: usize) -> Result<Vec<Vec3>> {
    if k < 3 {
        return Err(Error::param("k", "normal estimation needs k >= 3"));
    }
    if cloud.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            found: cloud.len(),
        });
    }
    Ok(cloud
        .positions
        .iter()
        .map(|p| {
            let nbrs = index.knn(p, k);
            smallest_eigenvector(nbrs.iter().map(|nb| &cloud.positions[nb.id]))
        })
        .collect())
}

fn smallest_eigenvector<'a>(points: impl Iterator<Item = &'a Vec3> + Clone) -> Vec3 {
    let mut n = 0usize;
    let mut mean = Vec3::zeros();
    for p in points.clone() {
        mean += p;
        n += 1;
    }
    mean /= n as f64;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let i = eig.eigenvalues.imin();
    let v: Vec3 = eig.eigenvectors.column(i).into_owned();
    v.normalize()
}
