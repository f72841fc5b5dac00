use nalgebra::{Matrix6, Vector6};

use super::kabsch::kabsch;
use super::RegistrationResult;
use crate::cloud::{PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcpVariant {
    PointToPoint,
    PointToPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcpParams {
    pub max_correspondence_distance: f64,
    pub max_iterations: usize,
    /// Stop once `|ΔRMSE| / RMSE` drops below this.
    pub relative_rmse: f64,
    /// `None` picks point-to-plane whenever the target carries normals.
    pub variant: Option<IcpVariant>,
    /// Results below this fitness are reported as not converged.
    pub min_fitness: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_correspondence_distance: 0.0125,
            max_iterations: 50,
            relative_rmse: 1e-6,
            variant: None,
            min_fitness: 0.3,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_correspondence_distance > 0.0 && self.max_correspondence_distance.is_finite()) {
            return Err(Error::param("max_correspondence_distance", "must be positive"));
        }
        if !(self.relative_rmse >= 0.0) {
            return Err(Error::param("relative_rmse", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.min_fitness) {
            return Err(Error::param("min_fitness", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Per-iteration record, mostly for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpStep {
    pub fitness: f64,
    pub inlier_rmse: f64,
    /// RMSE of the previous inlier set under this step's transform.
    pub carried_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct IcpOutcome {
    pub result: RegistrationResult,
    pub history: Vec<IcpStep>,
}

struct Matches {
    pairs: Vec<(usize, usize)>,
    fitness: f64,
    rmse: f64,
}

fn correspond(src: &[Vec3], target: &SpatialIndex, t: &RigidTransform, max2: f64) -> Matches {
    let mut pairs = Vec::new();
    let mut sq = 0.0;
    for (i, p) in src.iter().enumerate() {
        if let Some(nb) = target.nearest(&t.apply(p)) {
            if nb.dist2 <= max2 {
                pairs.push((i, nb.id));
                sq += nb.dist2;
            }
        }
    }
    let rmse = if pairs.is_empty() { 0.0 } else { (sq / pairs.len() as f64).sqrt() };
    Matches {
        fitness: pairs.len() as f64 / src.len().max(1) as f64,
        rmse,
        pairs,
    }
}

fn carried_rmse(src: &[Vec3], target: &SpatialIndex, t: &RigidTransform, pairs: &[(usize, usize)]) -> f64 {
    let sq: f64 = pairs
        .iter()
        .map(|(i, _)| target.nearest(&t.apply(&src[*i])).map_or(0.0, |n| n.dist2))
        .sum();
    (sq / pairs.len() as f64).sqrt()
}

fn point_to_point_step(
    src: &[Vec3],
    dst: &[Vec3],
    t: &RigidTransform,
    pairs: &[(usize, usize)],
) -> Option<RigidTransform> {
    let a: Vec<Vec3> = pairs.iter().map(|(i, _)| t.apply(&src[*i])).collect();
    let b: Vec<Vec3> = pairs.iter().map(|(_, j)| dst[*j]).collect();
    kabsch(&a, &b).ok()
}

/// Linearized point-to-plane update: minimizes Σ ((ω×p + τ + p − q)·n)².
fn point_to_plane_step(
    src: &[Vec3],
    dst: &[Vec3],
    normals: &[Vec3],
    t: &RigidTransform,
    pairs: &[(usize, usize)],
) -> Option<RigidTransform> {
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    for (i, j) in pairs {
        let p = t.apply(&src[*i]);
        let n = normals[*j];
        let c = p.cross(&n);
        let row = Vector6::new(c.x, c.y, c.z, n.x, n.y, n.z);
        let r = (p - dst[*j]).dot(&n);
        ata += row * row.transpose();
        atb -= row * r;
    }
    let x = ata.cholesky()?.solve(&atb);
    let omega = Vec3::new(x[0], x[1], x[2]);
    let angle = omega.norm();
    let rot = if angle > 0.0 {
        RigidTransform::from_axis_angle(omega / angle, angle)
    } else {
        RigidTransform::identity()
    };
    Some(rot.with_translation(Vec3::new(x[3], x[4], x[5])))
}

/// Refines `init` so that `T(source) ≈ target`.
///
/// A step is only accepted if it does not raise the RMSE of the previous
/// inlier set; otherwise iteration stops at the last accepted pose.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpOutcome> {
    icp_with_index(source, target, &target.index(), init, params)
}

pub fn icp_with_index(
    source: &PointCloud,
    target: &PointCloud,
    index: &SpatialIndex,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpOutcome> {
    params.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, found: 0 });
    }
    let variant = params.variant.unwrap_or(if target.normals().is_some() {
        IcpVariant::PointToPlane
    } else {
        IcpVariant::PointToPoint
    });
    let normals = match variant {
        IcpVariant::PointToPlane => Some(target.normals().ok_or(Error::MissingNormals)?),
        IcpVariant::PointToPoint => None,
    };
    let src = source.positions();
    let dst = target.positions();
    let max2 = params.max_correspondence_distance.powi(2);

    let mut t = *init;
    let mut cur = correspond(src, index, &t, max2);
    if cur.pairs.is_empty() {
        return Err(Error::NoCorrespondences {
            max_distance: params.max_correspondence_distance,
        });
    }
    let mut history = vec![IcpStep {
        fitness: cur.fitness,
        inlier_rmse: cur.rmse,
        carried_rmse: cur.rmse,
    }];
    let mut settled = false;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        let step = match normals {
            Some(n) => point_to_plane_step(src, dst, n, &t, &cur.pairs)
                .or_else(|| point_to_point_step(src, dst, &t, &cur.pairs)),
            None => point_to_point_step(src, dst, &t, &cur.pairs),
        };
        let Some(step) = step else {
            settled = true;
            break;
        };
        let next_t = step.compose(&t);
        let carried = carried_rmse(src, index, &next_t, &cur.pairs);
        if carried > cur.rmse {
            settled = true;
            break;
        }
        let next = correspond(src, index, &next_t, max2);
        if next.pairs.is_empty() {
            break;
        }
        iterations += 1;
        history.push(IcpStep {
            fitness: next.fitness,
            inlier_rmse: next.rmse,
            carried_rmse: carried,
        });
        let prev_rmse = cur.rmse;
        t = next_t;
        cur = next;
        if prev_rmse == 0.0 || (prev_rmse - cur.rmse).abs() / prev_rmse < params.relative_rmse {
            settled = true;
            break;
        }
    }
    Ok(IcpOutcome {
        result: RegistrationResult {
            transform: t,
            fitness: cur.fitness,
            inlier_rmse: cur.rmse,
            iterations,
            converged: settled && cur.fitness >= params.min_fitness,
        },
        history,
    })
}
