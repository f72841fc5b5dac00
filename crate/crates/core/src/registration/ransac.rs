use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fpfh::FpfhDescriptor;
use super::kabsch::kabsch;
use super::RegistrationResult;
use crate::cloud::{PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacParams {
    pub max_iterations: usize,
    pub confidence: f64,
    pub inlier_distance: f64,
    /// Minimum ratio between matching edge lengths of a sample.
    pub edge_similarity: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            confidence: 0.999,
            inlier_distance: 0.0075,
            edge_similarity: 0.9,
            seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::param("confidence", "must lie in (0, 1)"));
        }
        if !(self.inlier_distance > 0.0 && self.inlier_distance.is_finite()) {
            return Err(Error::param("inlier_distance", "must be positive"));
        }
        if !(self.edge_similarity > 0.0 && self.edge_similarity <= 1.0) {
            return Err(Error::param("edge_similarity", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

const SAMPLE: usize = 3;

/// Nearest target descriptor for every source descriptor (ties: lower id).
pub fn match_descriptors(source: &[FpfhDescriptor], target: &[FpfhDescriptor]) -> Vec<usize> {
    source
        .iter()
        .map(|s| {
            let mut best = (f64::INFINITY, 0usize);
            for (j, t) in target.iter().enumerate() {
                let d = s.distance2(t);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

/// Fraction of source points with a target neighbor within `max_dist`, and
/// the RMSE over those inliers.
pub fn evaluate(
    source: &[Vec3],
    target: &SpatialIndex,
    t: &RigidTransform,
    max_dist: f64,
) -> (f64, f64) {
    if source.is_empty() {
        return (0.0, 0.0);
    }
    let max2 = max_dist * max_dist;
    let mut inliers = 0usize;
    let mut sq = 0.0;
    for p in source {
        if let Some(nb) = target.nearest(&t.apply(p)) {
            if nb.dist2 <= max2 {
                inliers += 1;
                sq += nb.dist2;
            }
        }
    }
    let rmse = if inliers > 0 { (sq / inliers as f64).sqrt() } else { 0.0 };
    (inliers as f64 / source.len() as f64, rmse)
}

fn edges_agree(src: &[Vec3; SAMPLE], dst: &[Vec3; SAMPLE], ratio: f64) -> bool {
    for a in 0..SAMPLE {
        for b in a + 1..SAMPLE {
            let ds = (src[a] - src[b]).norm();
            let dt = (dst[a] - dst[b]).norm();
            if ds.min(dt) < ratio * ds.max(dt) {
                return false;
            }
        }
    }
    true
}

/// Draws needed so that an all-inlier sample has appeared with `confidence`,
/// given the fraction `inlier_ratio` of correspondences that are inliers.
fn iterations_needed(inlier_ratio: f64, confidence: f64) -> f64 {
    let w = inlier_ratio.powi(SAMPLE as i32);
    if w >= 1.0 {
        return 0.0;
    }
    if w <= 0.0 {
        return f64::INFINITY;
    }
    (1.0 - confidence).ln() / (1.0 - w).ln()
}

/// Feature-matched RANSAC: estimates `T` with `T(source) ≈ target`.
///
/// Deterministic for a fixed seed. If no sample survives the checks the
/// identity is returned with fitness 0.
pub fn ransac_register(
    source: &PointCloud,
    target: &PointCloud,
    source_features: &[FpfhDescriptor],
    target_features: &[FpfhDescriptor],
    params: &RansacParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    if source_features.len() != source.len() || target_features.len() != target.len() {
        return Err(Error::param("features", "one descriptor per point required"));
    }
    for (len, _) in [(source.len(), "source"), (target.len(), "target")] {
        if len < SAMPLE {
            return Err(Error::InsufficientPoints { needed: SAMPLE, found: len });
        }
    }
    let matches = match_descriptors(source_features, target_features);
    let index = target.index();
    let src = source.positions();
    let dst = target.positions();
    let max2 = params.inlier_distance * params.inlier_distance;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(RigidTransform, f64, f64)> = None;
    let mut iterations = 0usize;
    let mut needed = f64::INFINITY;
    while iterations < params.max_iterations && (iterations as f64) < needed {
        iterations += 1;
        let ids = rand::seq::index::sample(&mut rng, src.len(), SAMPLE);
        let s: [Vec3; SAMPLE] = std::array::from_fn(|k| src[ids.index(k)]);
        let d: [Vec3; SAMPLE] = std::array::from_fn(|k| dst[matches[ids.index(k)]]);
        if !edges_agree(&s, &d, params.edge_similarity) {
            continue;
        }
        let Ok(t) = kabsch(&s, &d) else { continue };
        if s.iter().zip(&d).any(|(a, b)| (t.apply(a) - b).norm_squared() > max2) {
            continue;
        }
        let (fitness, rmse) = evaluate(src, &index, &t, params.inlier_distance);
        let better = match &best {
            None => fitness > 0.0,
            Some((_, f, r)) => fitness > *f || (fitness == *f && rmse < *r),
        };
        if better {
            best = Some((t, fitness, rmse));
            let agree = src
                .iter()
                .zip(&matches)
                .filter(|(p, &m)| (t.apply(p) - dst[m]).norm_squared() <= max2)
                .count();
            needed = iterations_needed(agree as f64 / src.len() as f64, params.confidence);
        }
    }
    Ok(match best {
        Some((transform, fitness, inlier_rmse)) => RegistrationResult {
            transform,
            fitness,
            inlier_rmse,
            iterations,
            converged: true,
        },
        None => RegistrationResult {
            transform: RigidTransform::identity(),
            fitness: 0.0,
            inlier_rmse: 0.0,
            iterations,
            converged: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_exit_bound() {
        assert_eq!(iterations_needed(1.0, 0.999), 0.0);
        assert!(iterations_needed(0.0, 0.999).is_infinite());
        // w = 0.5 -> 1/8 per draw; ln(0.001)/ln(7/8) ≈ 51.7
        assert!((iterations_needed(0.5, 0.999) - 51.73).abs() < 0.01);
    }

    #[test]
    fn descriptor_matching_prefers_lower_id_on_ties() {
        let a = FpfhDescriptor([1.0; 33]);
        let b = FpfhDescriptor([2.0; 33]);
        assert_eq!(match_descriptors(&[a], &[b, a, a]), vec![1]);
    }

    #[test]
    fn rejects_bad_params() {
        let p = RansacParams { confidence: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RansacParams { inlier_distance: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
