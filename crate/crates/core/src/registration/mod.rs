//! Model-to-scene rigid registration: FPFH-matched RANSAC for the coarse
//! pose, ICP for refinement. The model is always the source; results map
//! model coordinates into the scene frame.

mod fpfh;
mod icp;
mod kabsch;
mod ransac;

use std::cell::OnceCell;

pub use fpfh::{
    compute_fpfh, compute_fpfh_with_index, feature_bins, pair_features, FpfhDescriptor, BINS_PER_FEATURE,
    DESCRIPTOR_LEN,
};
pub use icp::{icp, icp_with_index, IcpOutcome, IcpParams, IcpStep, IcpVariant};
pub use kabsch::{kabsch, residual};
pub use ransac::{evaluate, match_descriptors, ransac_register, RansacParams};

use crate::cloud::{estimate_normals_outward, refine_normals, voxel_downsample, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::geometry::{PoseJson, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    /// Fraction of source points with a target neighbor within the inlier distance.
    pub fitness: f64,
    pub inlier_rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegistrationJson {
    pub q: [f64; 4],
    pub t: [f64; 3],
    pub fitness: f64,
    pub inlier_rmse: f64,
    pub iterations: usize,
}

impl RegistrationResult {
    pub fn to_json(&self) -> RegistrationJson {
        let PoseJson { q, t } = self.transform.to_json();
        RegistrationJson {
            q,
            t,
            fitness: self.fitness,
            inlier_rmse: self.inlier_rmse,
            iterations: self.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    pub voxel_size: f64,
    pub normal_k: usize,
    pub fpfh_radius: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            voxel_size: 0.005,
            normal_k: 30,
            fpfh_radius: 0.025,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::NonPositiveVoxel(self.voxel_size));
        }
        if self.normal_k < 3 {
            return Err(Error::param("normal_k", "must be at least 3"));
        }
        if !(self.fpfh_radius > 0.0 && self.fpfh_radius.is_finite()) {
            return Err(Error::param("fpfh_radius", "must be positive"));
        }
        Ok(())
    }
}

/// A downsampled cloud with normals and one descriptor per point.
#[derive(Debug, Clone)]
pub struct FeatureCloud {
    pub cloud: PointCloud,
    pub features: Vec<FpfhDescriptor>,
}

/// Downsamples, estimates normals and computes FPFH descriptors.
///
/// Normals keep the sign of any normals already on `cloud`; without them
/// they point away from the centroid.
pub fn prepare_features(cloud: &PointCloud, params: &FeatureParams) -> Result<FeatureCloud> {
    params.validate()?;
    let down = voxel_downsample(cloud, params.voxel_size)?;
    let k = params.normal_k.min(down.len());
    if k < 3 {
        return Err(Error::InsufficientPoints { needed: 3, found: down.len() });
    }
    let index = down.index();
    let down = if down.normals().is_some() {
        refine_normals(&down, &index, k)?
    } else {
        estimate_normals_outward(&down, &index, k)?
    };
    let features = compute_fpfh_with_index(&down, &index, params.fpfh_radius)?;
    Ok(FeatureCloud { cloud: down, features })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalParams {
    pub features: FeatureParams,
    pub ransac: RansacParams,
    pub icp: IcpParams,
}

impl GlobalParams {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.ransac.validate()?;
        self.icp.validate()
    }
}

/// Registration target. Descriptors are computed on first use, so scenes
/// that are only ever refined never pay for them.
pub struct Scene {
    cloud: PointCloud,
    index: SpatialIndex,
    features: OnceCell<FeatureCloud>,
}

impl Scene {
    pub fn new(cloud: PointCloud) -> Self {
        let index = cloud.index();
        Self {
            cloud,
            index,
            features: OnceCell::new(),
        }
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn features(&self, params: &FeatureParams) -> Result<&FeatureCloud> {
        if let Some(f) = self.features.get() {
            return Ok(f);
        }
        let f = prepare_features(&self.cloud, params)?;
        Ok(self.features.get_or_init(|| f))
    }
}

/// A model prepared once for repeated registration against scenes.
#[derive(Debug, Clone)]
pub struct ModelRegistrar {
    model: PointCloud,
    features: FeatureCloud,
    params: GlobalParams,
}

impl ModelRegistrar {
    pub fn new(model: PointCloud, params: GlobalParams) -> Result<Self> {
        params.validate()?;
        if model.is_empty() {
            return Err(Error::InsufficientPoints { needed: 3, found: 0 });
        }
        let features = prepare_features(&model, &params.features)?;
        Ok(Self { model, features, params })
    }

    pub fn model(&self) -> &PointCloud {
        &self.model
    }

    pub fn params(&self) -> &GlobalParams {
        &self.params
    }

    /// Downsampled model with its descriptors.
    pub fn features(&self) -> &FeatureCloud {
        &self.features
    }

    /// RANSAC on the feature clouds only.
    pub fn coarse(&self, scene: &Scene) -> Result<RegistrationResult> {
        let target = scene.features(&self.params.features)?;
        ransac_register(
            &self.features.cloud,
            &target.cloud,
            &self.features.features,
            &target.features,
            &self.params.ransac,
        )
    }

    /// Coarse alignment followed by ICP on the full clouds.
    pub fn global(&self, scene: &Scene) -> Result<RegistrationResult> {
        let coarse = self.coarse(scene)?;
        self.refine(scene, &coarse.transform)
    }

    pub fn refine(&self, scene: &Scene, init: &RigidTransform) -> Result<RegistrationResult> {
        Ok(self.refine_detailed(scene, init)?.result)
    }

    pub fn refine_detailed(&self, scene: &Scene, init: &RigidTransform) -> Result<IcpOutcome> {
        icp_with_index(&self.model, &scene.cloud, &scene.index, init, &self.params.icp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_geodesic, Vec3};
    use crate::mesh::{gripper_mesh, sample_uniform};

    #[test]
    fn json_shape() {
        let r = RegistrationResult {
            transform: RigidTransform::from_translation(1.0, 2.0, 3.0),
            fitness: 0.5,
            inlier_rmse: 0.001,
            iterations: 7,
            converged: true,
        };
        let v = serde_json::to_value(r.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(keys.len(), 5);
        for k in ["q", "t", "fitness", "inlier_rmse", "iterations"] {
            assert!(keys.contains(&k));
        }
    }

    #[test]
    fn global_recovers_pose_on_gripper() {
        let model = sample_uniform(&gripper_mesh(), 5000, 1).unwrap();
        let truth = RigidTransform::from_axis_angle(Vec3::new(0.3, -1.0, 0.4).normalize(), 1.2)
            .with_translation(Vec3::new(0.1, 0.2, 0.5));
        let registrar = ModelRegistrar::new(model.clone(), GlobalParams::default()).unwrap();
        let scene = Scene::new(model.transformed(&truth));
        let r = registrar.global(&scene).unwrap();
        assert!(r.fitness > 0.99, "{r:?}");
        assert!((r.transform.translation() - truth.translation()).norm() < 1e-4);
        // the gripper is two-fold symmetric: accept either branch
        let flipped = truth.compose(&RigidTransform::rotation_z(std::f64::consts::PI));
        let err = rotation_geodesic(&r.transform, &truth).min(rotation_geodesic(&r.transform, &flipped));
        assert!(err < 0.1f64.to_radians());
    }
}
