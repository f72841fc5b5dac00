//! Whole-demonstration pipeline: segment every frame, track the gripper,
//! and turn the pose track into (pose, next pose) action labels.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cloud::{merge, refine_normals, voxel_downsample, PointCloud};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::{backproject_frame, CameraModel, DepthImage, PoseJson, RigidTransform, Vec3};
use crate::segmentation::extract_end_effector;
use crate::tracking::{PoseTrack, SymmetryGroup, TrackMethod, Tracker};

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub id: String,
    pub source: Option<PathBuf>,
    pub cameras: Vec<CameraModel>,
    /// `frames[t][c]` is the view of camera `c` at time `t`.
    pub frames: Vec<Vec<DepthImage>>,
}

impl Demonstration {
    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::param("cameras", "at least one camera required"));
        }
        for (t, views) in self.frames.iter().enumerate() {
            if views.len() != self.cameras.len() {
                return Err(Error::param(
                    "frames",
                    format!("frame {t} has {} views for {} cameras", views.len(), self.cameras.len()),
                ));
            }
            for (cam, img) in self.cameras.iter().zip(views) {
                if img.width() != cam.width || img.height() != cam.height {
                    return Err(Error::DimensionMismatch {
                        expected_w: cam.width,
                        expected_h: cam.height,
                        found_w: img.width(),
                        found_h: img.height(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// All views of one frame backprojected and merged into the world frame.
///
/// Each point's normal slot holds the unit direction toward the camera that
/// saw it. Downsampling averages these, and [`segment_frame`] uses them to
/// orient the estimated surface normals.
pub fn merged_frame(cameras: &[CameraModel], views: &[DepthImage], stride: usize) -> Result<PointCloud> {
    let clouds = cameras
        .iter()
        .zip(views)
        .map(|(cam, img)| {
            let cloud = backproject_frame(cam, img, stride)?;
            let eye = cam.center();
            let views: Vec<Vec3> = cloud.positions().iter().map(|p| eye - p).collect();
            cloud.with_normals(views)
        })
        .collect::<Result<Vec<_>>>()?;
    merge(&clouds)
}

/// Merged, downsampled and segmented end-effector points with normals.
/// Returns an empty cloud when fewer than three points survive.
pub fn segment_frame(cameras: &[CameraModel], views: &[DepthImage], config: &PipelineConfig) -> Result<PointCloud> {
    let merged = merged_frame(cameras, views, config.pixel_stride)?;
    if merged.is_empty() {
        return Ok(merged);
    }
    let down = voxel_downsample(&merged, config.voxel_size)?;
    let segment = extract_end_effector(&down, &config.color_filter, &config.cluster)?;
    if segment.len() < 3 {
        return Ok(PointCloud::new(Vec::new()));
    }
    let k = config.normal_k.min(segment.len());
    refine_normals(&segment, &segment.index(), k)
}

/// `(track[t], track[t + 1])` for every `t` but the last.
pub fn shift_actions(track: &PoseTrack) -> Result<Vec<(RigidTransform, RigidTransform)>> {
    if track.len() < 2 {
        return Err(Error::TooShortTrack(track.len()));
    }
    Ok(track.entries.windows(2).map(|w| (w[0].pose, w[1].pose)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelStep {
    pub t: usize,
    pub pose: RigidTransform,
    pub action: RigidTransform,
    pub fitness: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub t: usize,
    pub pose: PoseJson,
    pub action: PoseJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<PoseJson>,
    pub fitness: f64,
    pub flags: Vec<String>,
    /// Gripper opening; not estimated.
    pub aperture: Option<f64>,
}

fn method_flag(method: TrackMethod) -> Option<&'static str> {
    match method {
        TrackMethod::Global | TrackMethod::Seeded => None,
        TrackMethod::ReRegistered => Some("re-registered"),
        TrackMethod::Empty => Some("empty"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDemonstration {
    pub id: String,
    pub track: PoseTrack,
    pub steps: Vec<LabelStep>,
}

impl LabeledDemonstration {
    pub fn from_track(id: impl Into<String>, track: PoseTrack) -> Result<Self> {
        let pairs = shift_actions(&track)?;
        let steps = pairs
            .into_iter()
            .enumerate()
            .map(|(t, (pose, action))| {
                let mut flags = Vec::new();
                if let Some(f) = method_flag(track.entries[t].method) {
                    flags.push(format!("pose:{f}"));
                }
                if let Some(f) = method_flag(track.entries[t + 1].method) {
                    flags.push(format!("action:{f}"));
                }
                LabelStep {
                    t,
                    pose,
                    action,
                    fitness: track.entries[t].fitness,
                    flags,
                }
            })
            .collect();
        Ok(Self {
            id: id.into(),
            track,
            steps,
        })
    }

    pub fn flagged_steps(&self) -> usize {
        self.steps.iter().filter(|s| !s.flags.is_empty()).count()
    }

    pub fn mean_fitness(&self) -> f64 {
        let n = self.track.len().max(1) as f64;
        self.track.entries.iter().map(|e| e.fitness).sum::<f64>() / n
    }

    pub fn records(&self, relative: bool, drop_flagged: bool) -> Vec<LabelRecord> {
        self.steps
            .iter()
            .filter(|s| !(drop_flagged && !s.flags.is_empty()))
            .map(|s| LabelRecord {
                t: s.t,
                pose: s.pose.to_json(),
                action: s.action.to_json(),
                delta: relative.then(|| s.pose.inverse().compose(&s.action).to_json()),
                fitness: s.fitness,
                flags: s.flags.clone(),
                aperture: None,
            })
            .collect()
    }

    pub fn labels_jsonl(&self, relative: bool, drop_flagged: bool) -> String {
        let mut out = String::new();
        for r in self.records(relative, drop_flagged) {
            out.push_str(&serde_json::to_string(&r).expect("label record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Segments every frame, tracks the model through them and shifts the
/// track into action labels.
pub fn label_demonstration(
    demo: &Demonstration,
    model: &PointCloud,
    group: &SymmetryGroup,
    config: &PipelineConfig,
) -> Result<LabeledDemonstration> {
    demo.validate()?;
    if model.is_empty() {
        return Err(Error::InsufficientPoints { needed: 3, found: 0 });
    }
    let mut tracker = Tracker::new(model.clone(), group.clone(), &config.tracker_params())?;
    for views in &demo.frames {
        let segment = segment_frame(&demo.cameras, views, config)?;
        tracker.push(&segment)?;
    }
    LabeledDemonstration::from_track(demo.id.clone(), tracker.finish())
}
