//! Fast point feature histograms.
//!
//! Each descriptor is three 11-bin histograms over the pair angles
//! (α, φ, θ), each normalized to sum to 100. A point's simplified histogram
//! (SPFH) covers the pairs it forms with its radius neighbors; the FPFH
//! blends the neighbors' SPFHs weighted by inverse distance.

use std::f64::consts::PI;

use crate::cloud::{Neighbor, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const BINS_PER_FEATURE: usize = 11;
pub const DESCRIPTOR_LEN: usize = 3 * BINS_PER_FEATURE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpfhDescriptor(pub [f64; DESCRIPTOR_LEN]);

impl Default for FpfhDescriptor {
    fn default() -> Self {
        Self([0.0; DESCRIPTOR_LEN])
    }
}

impl FpfhDescriptor {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| *b == 0.0)
    }

    pub fn distance2(&self, other: &FpfhDescriptor) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn block_sums(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for (j, b) in self.0.iter().enumerate() {
            s[j / BINS_PER_FEATURE] += b;
        }
        s
    }
}

/// Darboux-frame pair features `(α, φ, θ)` for an oriented point pair.
///
/// The frame is anchored at whichever point's normal makes the smaller angle
/// with the connecting line. `None` for coincident points or when the first
/// normal is parallel to the connecting line.
pub fn pair_features(p1: &Vec3, n1: &Vec3, p2: &Vec3, n2: &Vec3) -> Option<[f64; 3]> {
    let mut dp = p2 - p1;
    let dist = dp.norm();
    if dist == 0.0 {
        return None;
    }
    let angle1 = n1.dot(&dp) / dist;
    let angle2 = n2.dot(&dp) / dist;
    let (src_n, tgt_n, phi) = if angle1.abs().acos() > angle2.abs().acos() {
        dp = -dp;
        (n2, n1, -angle2)
    } else {
        (n1, n2, angle1)
    };
    let v = dp.cross(src_n);
    let v_norm = v.norm();
    if v_norm == 0.0 {
        return None;
    }
    let v = v / v_norm;
    let w = src_n.cross(&v);
    let alpha = v.dot(tgt_n);
    let theta = w.dot(tgt_n).atan2(src_n.dot(tgt_n));
    Some([alpha, phi, theta])
}

fn bin_unit(x: f64) -> usize {
    let b = (BINS_PER_FEATURE as f64 * (x + 1.0) * 0.5).floor();
    b.clamp(0.0, (BINS_PER_FEATURE - 1) as f64) as usize
}

fn bin_angle(x: f64) -> usize {
    let b = (BINS_PER_FEATURE as f64 * (x + PI) / (2.0 * PI)).floor();
    b.clamp(0.0, (BINS_PER_FEATURE - 1) as f64) as usize
}

/// Bin indices into the 33-vector for the three features.
pub fn feature_bins(f: &[f64; 3]) -> [usize; 3] {
    [
        bin_unit(f[0]),
        BINS_PER_FEATURE + bin_unit(f[1]),
        2 * BINS_PER_FEATURE + bin_angle(f[2]),
    ]
}

pub fn compute_fpfh(cloud: &PointCloud, radius: f64) -> Result<Vec<FpfhDescriptor>> {
    compute_fpfh_with_index(cloud, &cloud.index(), radius)
}

pub fn compute_fpfh_with_index(
    cloud: &PointCloud,
    index: &SpatialIndex,
    radius: f64,
) -> Result<Vec<FpfhDescriptor>> {
    let normals = cloud.normals().ok_or(Error::MissingNormals)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", "must be positive"));
    }
    let positions = cloud.positions();

    // neighbor lists exclude the point itself and exact duplicates
    let neighbors: Vec<Vec<Neighbor>> = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut nb = index.radius(p, radius);
            nb.retain(|n| n.id != i && n.dist2 > 0.0);
            nb.sort_unstable_by_key(|n| n.id);
            nb
        })
        .collect();

    let spfh: Vec<[f64; DESCRIPTOR_LEN]> = (0..positions.len())
        .map(|i| {
            let mut hist = [0.0; DESCRIPTOR_LEN];
            let mut valid = 0usize;
            for nb in &neighbors[i] {
                let j = nb.id;
                if let Some(f) = pair_features(&positions[i], &normals[i], &positions[j], &normals[j]) {
                    for b in feature_bins(&f) {
                        hist[b] += 1.0;
                    }
                    valid += 1;
                }
            }
            if valid > 0 {
                let scale = 100.0 / valid as f64;
                hist.iter_mut().for_each(|h| *h *= scale);
            }
            hist
        })
        .collect();

    Ok(neighbors
        .iter()
        .map(|nbrs| {
            let mut hist = [0.0; DESCRIPTOR_LEN];
            for nb in nbrs {
                let w = 1.0 / nb.distance();
                for (h, s) in hist.iter_mut().zip(spfh[nb.id].iter()) {
                    *h += w * s;
                }
            }
            let mut sums = [0.0; 3];
            for (j, h) in hist.iter().enumerate() {
                sums[j / BINS_PER_FEATURE] += h;
            }
            for (j, h) in hist.iter_mut().enumerate() {
                let s = sums[j / BINS_PER_FEATURE];
                if s > 0.0 {
                    *h *= 100.0 / s;
                }
            }
            FpfhDescriptor(hist)
        })
        .collect())
}
