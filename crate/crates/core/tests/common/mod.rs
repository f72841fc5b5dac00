#![allow(dead_code)]

use std::f64::consts::PI;

use gripper_label::cloud::PointCloud;
use gripper_label::{RigidTransform, Vec3};
use rand::Rng;

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_pose(rng: &mut impl Rng, max_translation: f64) -> RigidTransform {
    let axis = unit_vector(rng);
    let t = Vec3::new(
        rng.random_range(-max_translation..max_translation),
        rng.random_range(-max_translation..max_translation),
        rng.random_range(-max_translation..max_translation),
    );
    RigidTransform::from_axis_angle(axis, rng.random_range(0.0..PI)).with_translation(t)
}

/// Random points in a cube of side `size` with random unit normals.
pub fn random_oriented_cloud(rng: &mut impl Rng, n: usize, size: f64) -> PointCloud {
    let pts = (0..n)
        .map(|_| Vec3::new(rng.random_range(0.0..size), rng.random_range(0.0..size), rng.random_range(0.0..size)))
        .collect();
    let normals = (0..n).map(|_| unit_vector(rng)).collect();
    PointCloud::new(pts).with_normals(normals).unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force FPFH, written from the definitions:
//
//  * pair (s, t): the source s is the point whose normal is closer to the
//    connecting line; d = (p_t - p_s) / |p_t - p_s|, u = n_s, v = d × u
//    normalized, w = u × v.
//  * α = v·n_t, φ = u·d, θ = atan2(w·n_t, u·n_t).
//  * 11 bins per feature over [-1, 1], [-1, 1] and [-π, π]; α, φ, θ blocks.
//  * SPFH(p): histogram over neighbors within r (self and coincident points
//    excluded), each block scaled to sum to 100.
//  * FPFH(p) = Σ_k SPFH(k) / |p - p_k|, each block rescaled to sum to 100.

const BINS: usize = 11;

fn oracle_pair(ps: Vec3, ns: Vec3, pt: Vec3, nt: Vec3) -> Option<[f64; 3]> {
    let diff = pt - ps;
    let len = diff.norm();
    if len == 0.0 {
        return None;
    }
    let d = diff / len;
    // angle between each normal's line and the connecting line
    let a_s = ns.dot(&d).abs().min(1.0).acos();
    let a_t = nt.dot(&d).abs().min(1.0).acos();
    let (ps_n, pt_n, d) = if a_s > a_t { (nt, ns, -d) } else { (ns, nt, d) };
    let u = ps_n;
    let v = d.cross(&u);
    if v.norm() == 0.0 {
        return None;
    }
    let v = v.normalize();
    let w = u.cross(&v);
    Some([v.dot(&pt_n), u.dot(&d), w.dot(&pt_n).atan2(u.dot(&pt_n))])
}

fn oracle_bin(x: f64, lo: f64, hi: f64) -> usize {
    let b = ((x - lo) / (hi - lo) * BINS as f64).floor();
    if b < 0.0 {
        0
    } else if b >= BINS as f64 {
        BINS - 1
    } else {
        b as usize
    }
}

fn normalize_blocks(h: &mut [f64; 33]) {
    for block in h.chunks_mut(BINS) {
        let s: f64 = block.iter().sum();
        if s > 0.0 {
            block.iter_mut().for_each(|x| *x *= 100.0 / s);
        }
    }
}

pub fn fpfh_oracle(points: &[Vec3], normals: &[Vec3], radius: f64) -> Vec<[f64; 33]> {
    let n = points.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let d = (points[j] - points[i]).norm();
                    j != i && d > 0.0 && d <= radius
                })
                .collect()
        })
        .collect();
    let spfh: Vec<[f64; 33]> = (0..n)
        .map(|i| {
            let mut h = [0.0; 33];
            for &j in &neighbors[i] {
                if let Some([alpha, phi, theta]) = oracle_pair(points[i], normals[i], points[j], normals[j]) {
                    h[oracle_bin(alpha, -1.0, 1.0)] += 1.0;
                    h[BINS + oracle_bin(phi, -1.0, 1.0)] += 1.0;
                    h[2 * BINS + oracle_bin(theta, -PI, PI)] += 1.0;
                }
            }
            normalize_blocks(&mut h);
            h
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut h = [0.0; 33];
            for &k in &neighbors[i] {
                let w = 1.0 / (points[k] - points[i]).norm();
                for b in 0..33 {
                    h[b] += w * spfh[k][b];
                }
            }
            normalize_blocks(&mut h);
            h
        })
        .collect()
}
