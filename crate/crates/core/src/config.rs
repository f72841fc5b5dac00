//! Pipeline configuration: one JSON document, every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::mesh::{gripper_mesh, load_mesh, TriangleMesh};
use crate::registration::{FeatureParams, GlobalParams, IcpParams, RansacParams};
use crate::segmentation::{ClusterParams, ColorFilter};
use crate::tracking::{model_cloud, SymmetryGroup, SymmetrySpec, TrackerParams};

/// Symmetry checks on the mesh vertices must agree to this many meters.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// OBJ or PLY mesh; `None` uses the built-in gripper.
    pub path: Option<PathBuf>,
    pub sample_count: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            path: None,
            sample_count: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// Adds `delta = pose⁻¹ ∘ action` to each label record.
    pub relative_actions: bool,
    /// Leaves flagged steps out of labels.jsonl instead of keeping them
    /// with their flags.
    pub drop_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Backproject every n-th pixel in each image direction.
    pub pixel_stride: usize,
    pub voxel_size: f64,
    pub color_filter: ColorFilter,
    pub cluster: ClusterParams,
    pub normal_k: usize,
    pub fpfh_radius: f64,
    pub ransac: RansacParams,
    pub icp: IcpParams,
    pub symmetry: Option<SymmetrySpec>,
    pub reregistration_threshold: f64,
    pub model: ModelConfig,
    pub jobs: usize,
    pub export: ExportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let features = FeatureParams::default();
        Self {
            pixel_stride: 1,
            voxel_size: features.voxel_size,
            color_filter: ColorFilter::default(),
            cluster: ClusterParams::default(),
            normal_k: features.normal_k,
            fpfh_radius: features.fpfh_radius,
            ransac: RansacParams::default(),
            icp: IcpParams::default(),
            symmetry: Some(SymmetrySpec {
                axis: [0.0, 0.0, 1.0],
                order: 2,
            }),
            reregistration_threshold: 0.3,
            model: ModelConfig::default(),
            jobs: 1,
            export: ExportConfig::default(),
        }
    }
}

fn scoped(prefix: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("{prefix}{name}"), reason),
        Error::NonPositiveVoxel(v) => Error::config(format!("{prefix}voxel_size"), format!("must be positive, got {v}")),
        other => other,
    })
}

impl PipelineConfig {
    /// Reads and validates a config file. A relative model path is taken
    /// relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if let (Some(model), Some(dir)) = (&config.model.path, path.parent()) {
            if model.is_relative() {
                config.model.path = Some(dir.join(model));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixel_stride == 0 {
            return Err(Error::config("pixel_stride", "must be at least 1"));
        }
        scoped("", self.features().validate())?;
        scoped("color_filter.", self.color_filter.validate())?;
        scoped("cluster.", self.cluster.validate())?;
        scoped("ransac.", self.ransac.validate())?;
        scoped("icp.", self.icp.validate())?;
        if !(0.0..=1.0).contains(&self.reregistration_threshold) {
            return Err(Error::config("reregistration_threshold", "must lie in [0, 1]"));
        }
        if let Some(s) = &self.symmetry {
            SymmetryGroup::cyclic(s).map_err(|e| Error::config("symmetry", e.to_string()))?;
        }
        if let Some(p) = &self.model.path {
            if !p.is_file() {
                return Err(Error::config("model.path", format!("{} does not exist", p.display())));
            }
        }
        if self.model.sample_count < 3 {
            return Err(Error::config("model.sample_count", "must be at least 3"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn features(&self) -> FeatureParams {
        FeatureParams {
            voxel_size: self.voxel_size,
            normal_k: self.normal_k,
            fpfh_radius: self.fpfh_radius,
        }
    }

    pub fn tracker_params(&self) -> TrackerParams {
        TrackerParams {
            registration: GlobalParams {
                features: self.features(),
                ransac: self.ransac,
                icp: self.icp,
            },
            reregistration_threshold: self.reregistration_threshold,
        }
    }

    /// Overrides every seed in the config.
    pub fn reseed(&mut self, seed: u64) {
        self.ransac.seed = seed;
        self.model.seed = seed;
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config with run-time settings that cannot change results
    /// (`jobs`) reset to their defaults.
    pub fn canonical(&self) -> PipelineConfig {
        PipelineConfig { jobs: 1, ..self.clone() }
    }

    /// SHA-256 of the compact JSON form of [`Self::canonical`].
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(&self.canonical()).expect("config serializes").as_bytes())
    }

    pub fn symmetry_group(&self) -> Result<SymmetryGroup> {
        SymmetryGroup::from_spec(self.symmetry.as_ref())
    }

    /// Mesh, symmetric model cloud and validated symmetry group.
    pub fn load_model(&self) -> Result<LoadedModel> {
        let (mesh, hash) = match &self.model.path {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
                (load_mesh(p)?, sha256_hex(&bytes))
            }
            None => {
                let mesh = gripper_mesh();
                let hash = sha256_hex(mesh.to_obj("built-in gripper").as_bytes());
                (mesh, hash)
            }
        };
        let group = self.symmetry_group()?;
        group.validate(mesh.vertices(), SYMMETRY_TOLERANCE)?;
        let cloud = model_cloud(&mesh, self.model.sample_count, self.model.seed, &group)?;
        Ok(LoadedModel {
            mesh,
            cloud,
            group,
            hash,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub mesh: TriangleMesh,
    pub cloud: PointCloud,
    pub group: SymmetryGroup,
    /// SHA-256 of the mesh file (or of the built-in mesh's OBJ text).
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
