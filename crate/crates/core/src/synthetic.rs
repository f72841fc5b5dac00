//! Synthetic multi-view RGB-D demonstrations with known poses.
//!
//! Objects are rendered by splatting dense surface samples into a per-pixel
//! z-buffer. Every pixel also records which object it came from, giving an
//! exact membership label for segmentation checks.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, write_demonstration, write_label_png, GROUND_TRUTH_FILE};
use crate::error::{Error, Result};
use crate::cloud::merge;
use crate::geometry::{
    backproject_frame_indexed, rotation_geodesic, CameraModel, DepthImage, PoseJson, RigidTransform, Vec3,
};
use crate::labeling::Demonstration;
use crate::mesh::{box_mesh, gripper_mesh, load_mesh, sample_with_rng, TriangleMesh};
use crate::segmentation::{extract_end_effector_ids, ClusterParams, ColorFilter};
use crate::tracking::SymmetryGroup;

pub const LABEL_BACKGROUND: u8 = 0;
pub const LABEL_GRIPPER: u8 = 1;
pub const LABEL_CLUTTER: u8 = 2;
pub const LABEL_SPECK: u8 = 3;

/// Upper bound on surface samples per object.
const MAX_SPLATS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Gaussian depth noise, meters.
    pub depth_sigma: f64,
    /// Gaussian noise per color channel on the `[0, 1]` scale.
    pub color_sigma: f64,
    /// Probability that a valid pixel goes missing.
    pub dropout: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            depth_sigma: 0.002,
            color_sigma: 0.02,
            dropout: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            depth_sigma: 0.0,
            color_sigma: 0.0,
            dropout: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth_sigma >= 0.0 && self.depth_sigma.is_finite()) {
            return Err(Error::config("noise.depth_sigma", format!("must be >= 0, got {}", self.depth_sigma)));
        }
        if !(self.color_sigma >= 0.0 && self.color_sigma.is_finite()) {
            return Err(Error::config("noise.color_sigma", format!("must be >= 0, got {}", self.color_sigma)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("noise.dropout", format!("must lie in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

/// A static gray box standing in for scene clutter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterBox {
    pub center: [f64; 3],
    pub size: [f64; 3],
    /// Rotation about the world z axis, radians.
    pub yaw: f64,
    pub gray: f64,
}

/// A handful of green points that should not be mistaken for the gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Speck {
    pub center: [f64; 3],
    pub points: usize,
    pub radius: f64,
}

/// Everything needed to render one demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub trajectory: Vec<RigidTransform>,
    pub cameras: Vec<CameraModel>,
    pub noise: NoiseModel,
    pub clutter: Vec<ClutterBox>,
    pub speck: Option<Speck>,
    pub gripper_color: [f64; 3],
    /// When false the gripper is left out entirely (a fully occluded demo).
    pub gripper_visible: bool,
    /// Surface samples per pixel footprint at the nearest depth.
    pub samples_per_pixel: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.trajectory.is_empty() {
            return Err(Error::config("trajectory", "needs at least one pose"));
        }
        if self.cameras.is_empty() {
            return Err(Error::config("cameras", "needs at least one camera"));
        }
        for (i, c) in self.cameras.iter().enumerate() {
            c.validate().map_err(|e| Error::config(format!("cameras[{i}]"), e.to_string()))?;
        }
        if !(self.samples_per_pixel > 0.0 && self.samples_per_pixel.is_finite()) {
            return Err(Error::config("samples_per_pixel", "must be positive"));
        }
        if !self.gripper_color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::config("gripper_color", "channels must lie in [0, 1]"));
        }
        for (i, b) in self.clutter.iter().enumerate() {
            if !b.size.iter().all(|s| *s > 0.0 && s.is_finite()) {
                return Err(Error::config(format!("clutter[{i}].size"), "must be positive"));
            }
            if !(0.0..=1.0).contains(&b.gray) {
                return Err(Error::config(format!("clutter[{i}].gray"), "must lie in [0, 1]"));
            }
        }
        if let Some(s) = &self.speck {
            if s.points == 0 || !(s.radius >= 0.0) {
                return Err(Error::config("speck", "needs points > 0 and radius >= 0"));
            }
        }
        Ok(())
    }
}

/// Surface samples of one object in its own frame.
#[derive(Debug, Clone)]
struct Splats {
    points: Vec<Vec3>,
    /// Source triangle of each sample; empty for loose points.
    faces: Vec<usize>,
    triangles: Vec<[Vec3; 3]>,
    color: [f64; 3],
    label: u8,
}

/// Distance along `dir` from the origin to triangle `tri`, if the ray hits it.
fn ray_triangle(dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    // Möller–Trumbore with the ray origin at zero
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let s = -tri[0];
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = dir.dot(&q) / det;
    const EPS: f64 = 1e-9;
    if u < -EPS || v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 0.0).then_some(t)
}

#[derive(Debug, Clone)]
struct ZBuffer {
    width: usize,
    depth: Vec<f64>,
    color: Vec<[f64; 3]>,
    label: Vec<u8>,
}

impl ZBuffer {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            depth: vec![f64::INFINITY; width * height],
            color: vec![[0.0; 3]; width * height],
            label: vec![LABEL_BACKGROUND; width * height],
        }
    }

    fn splat(&mut self, cam: &CameraModel, pose: &RigidTransform, splats: &Splats) {
        // object frame -> camera frame in one transform
        let to_cam = cam.extrinsic.inverse().compose(pose);
        let triangles: Vec<[Vec3; 3]> = splats.triangles.iter().map(|t| t.map(|c| to_cam.apply(&c))).collect();
        let (w, h) = (cam.width as f64, cam.height as f64);
        for (k, p) in splats.points.iter().enumerate() {
            let q = to_cam.apply(p);
            if q.z <= 0.0 {
                continue;
            }
            let u = (cam.fx * q.x / q.z + cam.cx).round();
            let v = (cam.fy * q.y / q.z + cam.cy).round();
            if u < 0.0 || v < 0.0 || u >= w || v >= h {
                continue;
            }
            // The sample only marks its triangle as a candidate; the depth is
            // where the pixel-center ray meets that triangle.
            let z = match splats.faces.get(k) {
                Some(&f) => {
                    let ray = Vec3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
                    match ray_triangle(&ray, &triangles[f]) {
                        Some(t) => t,
                        None => continue,
                    }
                }
                None => q.z,
            };
            let i = v as usize * self.width + u as usize;
            if z < self.depth[i] {
                self.depth[i] = z;
                self.color[i] = splats.color;
                self.label[i] = splats.label;
            }
        }
    }

    /// Applies noise and quantizes. Pixels that lose their depth also lose
    /// their label, so labels stay in step with valid depth.
    fn finish(mut self, height: usize, noise: &NoiseModel, rng: &mut impl Rng) -> (DepthImage, Vec<u8>) {
        let mut img = DepthImage::empty(self.width, height);
        for v in 0..height {
            for u in 0..self.width {
                let i = v * self.width + u;
                if self.label[i] == LABEL_BACKGROUND {
                    continue;
                }
                if noise.dropout > 0.0 && rng.random::<f64>() < noise.dropout {
                    self.label[i] = LABEL_BACKGROUND;
                    continue;
                }
                let mut d = self.depth[i];
                if noise.depth_sigma > 0.0 {
                    d += noise.depth_sigma * rng.sample::<f64, _>(StandardNormal);
                }
                let mut c = self.color[i];
                if noise.color_sigma > 0.0 {
                    for ch in c.iter_mut() {
                        *ch += noise.color_sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let d = d as f32;
                if !(d > 0.0) {
                    self.label[i] = LABEL_BACKGROUND;
                    continue;
                }
                img.set(u, v, d, c.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8));
            }
        }
        (img, self.label)
    }
}

/// Samples needed for `spp` samples per pixel footprint at `depth`.
fn splat_count(area: f64, depth: f64, cameras: &[CameraModel], spp: f64) -> usize {
    let f2 = cameras.iter().map(|c| c.fx * c.fy).fold(0.0, f64::max);
    let footprint = depth * depth / f2;
    ((spp * area / footprint).ceil() as usize).clamp(1, MAX_SPLATS)
}

/// Smallest camera depth reached by a sphere of `radius` at any `centers`.
fn nearest_depth(cameras: &[CameraModel], centers: impl Iterator<Item = Vec3> + Clone, radius: f64) -> f64 {
    let mut best = f64::INFINITY;
    for cam in cameras {
        let inv = cam.extrinsic.inverse();
        for c in centers.clone() {
            best = best.min(inv.apply(&c).z - radius);
        }
    }
    best.max(0.05)
}

fn sample_splats(mesh: &TriangleMesh, n: usize, color: [f64; 3], label: u8, rng: &mut impl Rng) -> Result<Splats> {
    let (cloud, faces) = sample_with_rng(mesh, n, rng)?;
    Ok(Splats {
        points: cloud.positions().to_vec(),
        faces,
        triangles: (0..mesh.triangles().len()).map(|t| mesh.corners(t)).collect(),
        color,
        label,
    })
}

fn clutter_pose(b: &ClutterBox) -> RigidTransform {
    RigidTransform::rotation_z(b.yaw).with_translation(Vec3::from(b.center))
}

fn frame_rng(seed: u64, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame as u64 + 1);
    rng
}

/// Renders one posed mesh with a single flat color.
pub fn render_depth_image(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    cam: &CameraModel,
    color: [f64; 3],
    noise: &NoiseModel,
    seed: u64,
) -> Result<DepthImage> {
    noise.validate()?;
    let (center, radius) = mesh.bounding_sphere();
    let depth = nearest_depth(std::slice::from_ref(cam), std::iter::once(pose.apply(&center)), radius);
    let n = splat_count(mesh.surface_area(), depth, std::slice::from_ref(cam), 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splats = sample_splats(mesh, n, color, LABEL_GRIPPER, &mut rng)?;
    let mut z = ZBuffer::new(cam.width, cam.height);
    z.splat(cam, pose, &splats);
    let mut rng = frame_rng(seed, 0);
    Ok(z.finish(cam.height, noise, &mut rng).0)
}

#[derive(Debug, Clone)]
pub struct SyntheticDemo {
    pub demo: Demonstration,
    pub truth: Vec<RigidTransform>,
    /// `labels[t][c]` holds one membership label per pixel.
    pub labels: Vec<Vec<Vec<u8>>>,
}

/// Renders every frame of `scenario`. Static clutter is rendered once per
/// camera; noise uses an independent stream per frame.
pub fn generate_synthetic_demo(mesh: &TriangleMesh, scenario: &ScenarioConfig, id: &str) -> Result<SyntheticDemo> {
    scenario.validate()?;
    let cams = &scenario.cameras;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let (center, radius) = mesh.bounding_sphere();
    let depth = nearest_depth(cams, scenario.trajectory.iter().map(|p| p.apply(&center)), radius);
    let n = splat_count(mesh.surface_area(), depth, cams, scenario.samples_per_pixel);
    let gripper = sample_splats(mesh, n, scenario.gripper_color, LABEL_GRIPPER, &mut rng)?;

    let mut statics = Vec::new();
    for b in &scenario.clutter {
        let half = Vec3::from(b.size) / 2.0;
        let m = box_mesh(-half, half)?;
        let pose = clutter_pose(b);
        let depth = nearest_depth(cams, std::iter::once(Vec3::from(b.center)), half.norm());
        let n = splat_count(m.surface_area(), depth, cams, scenario.samples_per_pixel);
        statics.push((pose, sample_splats(&m, n, [b.gray; 3], LABEL_CLUTTER, &mut rng)?));
    }
    if let Some(s) = &scenario.speck {
        let points = (0..s.points)
            .map(|_| {
                let dir = Vec3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                dir.normalize() * s.radius * rng.random::<f64>().cbrt()
            })
            .collect();
        let splats = Splats {
            points,
            faces: Vec::new(),
            triangles: Vec::new(),
            color: scenario.gripper_color,
            label: LABEL_SPECK,
        };
        statics.push((RigidTransform::from_translation(s.center[0], s.center[1], s.center[2]), splats));
    }
    let backgrounds: Vec<ZBuffer> = cams
        .iter()
        .map(|cam| {
            let mut z = ZBuffer::new(cam.width, cam.height);
            for (pose, s) in &statics {
                z.splat(cam, pose, s);
            }
            z
        })
        .collect();

    let mut frames = Vec::with_capacity(scenario.trajectory.len());
    let mut labels = Vec::with_capacity(scenario.trajectory.len());
    for (t, pose) in scenario.trajectory.iter().enumerate() {
        let mut rng = frame_rng(scenario.seed, t);
        let mut views = Vec::with_capacity(cams.len());
        let mut view_labels = Vec::with_capacity(cams.len());
        for (cam, bg) in cams.iter().zip(&backgrounds) {
            let mut z = bg.clone();
            if scenario.gripper_visible {
                z.splat(cam, pose, &gripper);
            }
            let (img, lab) = z.finish(cam.height, &scenario.noise, &mut rng);
            views.push(img);
            view_labels.push(lab);
        }
        frames.push(views);
        labels.push(view_labels);
    }
    Ok(SyntheticDemo {
        demo: Demonstration {
            id: id.to_string(),
            source: None,
            cameras: cams.clone(),
            frames,
        },
        truth: scenario.trajectory.clone(),
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub frame_index: usize,
    pub q: [f64; 4],
    pub t: [f64; 3],
}

pub fn ground_truth_jsonl(truth: &[RigidTransform]) -> String {
    let mut out = String::new();
    for (i, p) in truth.iter().enumerate() {
        let PoseJson { q, t } = p.to_json();
        let r = TruthRecord { frame_index: i, q, t };
        out.push_str(&serde_json::to_string(&r).expect("truth record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<RigidTransform>> {
    let records: Vec<TruthRecord> = dataset::read_jsonl(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.frame_index != i {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected frame_index {i}, found {}", r.frame_index),
                });
            }
            RigidTransform::from_quaternion(r.q, r.t)
        })
        .collect()
}

/// Writes the demo in the dataset layout plus label masks and ground truth.
pub fn write_synthetic_demo(dir: &Path, synth: &SyntheticDemo) -> Result<()> {
    write_demonstration(dir, &synth.demo)?;
    for (t, views) in synth.labels.iter().enumerate() {
        for (c, lab) in views.iter().enumerate() {
            let cam = &synth.demo.cameras[c];
            write_label_png(&dataset::view_path(dir, t, c, "label.png"), cam.width, cam.height, lab)?;
        }
    }
    dataset::write_lines(&dir.join(GROUND_TRUTH_FILE), &ground_truth_jsonl(&synth.truth))
}

/// Translation and symmetry-aware rotation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub translation: f64,
    pub rotation: f64,
}

pub fn pose_error(estimated: &RigidTransform, truth: &RigidTransform, group: &SymmetryGroup) -> PoseError {
    let rotation = group
        .elements()
        .iter()
        .map(|g| rotation_geodesic(&estimated.compose(g), truth))
        .fold(f64::INFINITY, f64::min);
    PoseError {
        translation: (estimated.translation() - truth.translation()).norm(),
        rotation,
    }
}

/// Nearest-rank percentile of unsorted data; `p` in (0, 1].
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (p * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub translation_median: f64,
    pub translation_p95: f64,
    pub rotation_median_deg: f64,
    pub rotation_p95_deg: f64,
    /// Fraction of frames within both thresholds.
    pub within: f64,
}

pub fn error_stats(errors: &[PoseError], max_translation: f64, max_rotation: f64) -> ErrorStats {
    let t: Vec<f64> = errors.iter().map(|e| e.translation).collect();
    let r: Vec<f64> = errors.iter().map(|e| e.rotation.to_degrees()).collect();
    let ok = errors
        .iter()
        .filter(|e| e.translation <= max_translation && e.rotation <= max_rotation)
        .count();
    ErrorStats {
        count: errors.len(),
        translation_median: percentile(&t, 0.5),
        translation_p95: percentile(&t, 0.95),
        rotation_median_deg: percentile(&r, 0.5),
        rotation_p95_deg: percentile(&r, 0.95),
        within: if errors.is_empty() { 0.0 } else { ok as f64 / errors.len() as f64 },
    }
}

/// Segmentation of one full-resolution frame scored against membership labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    /// Points selected as gripper.
    pub selected: usize,
    /// Points whose pixel belongs to the gripper.
    pub gripper: usize,
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Backprojects every pixel of every view, runs end-effector extraction and
/// compares the selection with `labels[c]`. Empty selections count as
/// precision 1; frames without gripper pixels count as recall 1.
pub fn segmentation_score(
    cameras: &[CameraModel],
    views: &[DepthImage],
    labels: &[Vec<u8>],
    filter: &ColorFilter,
    cluster: &ClusterParams,
) -> Result<SegmentationScore> {
    let mut clouds = Vec::with_capacity(views.len());
    let mut point_labels = Vec::new();
    for ((cam, img), lab) in cameras.iter().zip(views).zip(labels) {
        let (cloud, pixels) = backproject_frame_indexed(cam, img, 1)?;
        point_labels.extend(pixels.iter().map(|&p| lab[p]));
        clouds.push(cloud);
    }
    let merged = merge(&clouds)?;
    let ids = if merged.is_empty() {
        Vec::new()
    } else {
        extract_end_effector_ids(&merged, filter, cluster)?
    };
    let gripper = point_labels.iter().filter(|&&l| l == LABEL_GRIPPER).count();
    let true_positives = ids.iter().filter(|&&i| point_labels[i] == LABEL_GRIPPER).count();
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    Ok(SegmentationScore {
        selected: ids.len(),
        gripper,
        true_positives,
        precision: ratio(true_positives, ids.len()),
        recall: ratio(true_positives, gripper),
    })
}

// ---------------------------------------------------------------------------
// Scenario files

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraRig {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    /// Horizontal distance from the workspace center.
    pub radius: f64,
    /// Height above the workspace center.
    pub elevation: f64,
}

impl Default for CameraRig {
    fn default() -> Self {
        Self {
            count: 3,
            width: 320,
            height: 240,
            focal: 300.0,
            radius: 0.45,
            elevation: 0.35,
        }
    }
}

impl CameraRig {
    /// Cameras evenly spaced in azimuth, all looking at `center`.
    pub fn cameras(&self, center: Vec3) -> Result<Vec<CameraModel>> {
        (0..self.count)
            .map(|k| {
                let az = TAU * k as f64 / self.count as f64 + PI / 6.0;
                let eye = center + Vec3::new(self.radius * az.cos(), self.radius * az.sin(), self.elevation);
                CameraModel::look_at(eye, center, Vec3::z(), self.focal, self.focal, self.width, self.height)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Static,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSpec {
    pub kind: MotionKind,
    pub center: [f64; 3],
    /// Largest translation between consecutive frames, meters.
    pub max_step_translation: f64,
    /// Largest rotation between consecutive frames, degrees.
    pub max_step_rotation_deg: f64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        Self {
            kind: MotionKind::Smooth,
            center: [0.0, 0.0, 0.25],
            max_step_translation: 0.01,
            max_step_rotation_deg: 5.0,
        }
    }
}

/// Gripper pointing down (model +z to world -z), turned by `yaw`.
fn downward(yaw: f64) -> RigidTransform {
    RigidTransform::rotation_z(yaw).compose(&RigidTransform::from_axis_angle(Vec3::x(), PI))
}

/// A drifting, wobbling and turning trajectory whose consecutive steps stay
/// within the given bounds by construction.
pub fn smooth_trajectory(frames: usize, center: Vec3, max_step: f64, max_rot: f64, rng: &mut impl Rng) -> Vec<RigidTransform> {
    let n = frames.max(2) as f64 - 1.0;
    let heading = rng.random_range(0.0..TAU);
    let travel = (0.5 * max_step * n).min(0.08);
    let drift = Vec3::new(heading.cos(), heading.sin(), 0.0) * (travel / n);
    let start = center - drift * (n / 2.0);
    let amp = Vec3::new(0.02, 0.02, 0.015);
    let w_t = (TAU * 1.5 / n).min(0.5 * max_step / amp.norm());
    let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));

    let (a_yaw, a_pitch, a_roll) = (30f64.to_radians(), 15f64.to_radians(), 15f64.to_radians());
    let yaw_rate = 0.35 * max_rot * rng.random_range(-1.0..1.0f64).signum();
    let w_r = (TAU / n).min(0.65 * max_rot / (a_yaw + a_pitch + a_roll));
    let rphase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
    let yaw0 = rng.random_range(0.0..TAU);

    (0..frames)
        .map(|i| {
            let t = i as f64;
            let wobble = Vec3::new(
                amp.x * (w_t * t + phase[0]).sin(),
                amp.y * (w_t * t + phase[1]).sin(),
                amp.z * (w_t * t + phase[2]).sin(),
            );
            let yaw = yaw0 + yaw_rate * t + a_yaw * (w_r * t + rphase[0]).sin();
            let pitch = a_pitch * (w_r * t + rphase[1]).sin();
            let roll = a_roll * (w_r * t + rphase[2]).sin();
            let r = RigidTransform::rotation_z(yaw)
                .compose(&RigidTransform::from_axis_angle(Vec3::y(), pitch))
                .compose(&RigidTransform::from_axis_angle(Vec3::x(), roll))
                .compose(&RigidTransform::from_axis_angle(Vec3::x(), PI));
            r.with_translation(start + drift * t + wobble)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterSpec {
    pub boxes: usize,
    pub size_min: f64,
    pub size_max: f64,
    pub gray_min: f64,
    pub gray_max: f64,
    /// Boxes are placed in this horizontal annulus around the center.
    pub ring_min: f64,
    pub ring_max: f64,
    /// Vertical offset of box centers relative to the workspace center.
    pub height_offset: f64,
}

impl Default for ClutterSpec {
    fn default() -> Self {
        Self {
            boxes: 4,
            size_min: 0.026,
            size_max: 0.044,
            gray_min: 0.3,
            gray_max: 0.7,
            ring_min: 0.14,
            ring_max: 0.22,
            height_offset: -0.1,
        }
    }
}

impl ClutterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.size_min > 0.0 && self.size_min <= self.size_max) {
            return Err(Error::config("clutter.size_min", "need 0 < size_min <= size_max"));
        }
        if !(0.0 <= self.gray_min && self.gray_min <= self.gray_max && self.gray_max <= 1.0) {
            return Err(Error::config("clutter.gray_min", "need 0 <= gray_min <= gray_max <= 1"));
        }
        if !(0.0 <= self.ring_min && self.ring_min <= self.ring_max) {
            return Err(Error::config("clutter.ring_min", "need 0 <= ring_min <= ring_max"));
        }
        Ok(())
    }

    pub fn generate(&self, center: Vec3, rng: &mut impl Rng) -> Vec<ClutterBox> {
        (0..self.boxes)
            .map(|k| {
                // spread azimuths so boxes rarely overlap
                let az = TAU * (k as f64 + rng.random_range(0.0..0.6)) / self.boxes.max(1) as f64;
                let r = rng.random_range(self.ring_min..=self.ring_max);
                let size: [f64; 3] = std::array::from_fn(|_| rng.random_range(self.size_min..=self.size_max));
                ClutterBox {
                    center: [
                        center.x + r * az.cos(),
                        center.y + r * az.sin(),
                        center.z + self.height_offset,
                    ],
                    size,
                    yaw: rng.random_range(0.0..PI),
                    gray: rng.random_range(self.gray_min..=self.gray_max),
                }
            })
            .collect()
    }
}

/// JSON scenario description for `synth`. Each demo gets its own seed
/// derived from `seed` and the demo index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub demos: usize,
    pub frames: usize,
    pub seed: u64,
    pub rig: CameraRig,
    /// Explicit cameras; overrides `rig` when present.
    pub cameras: Option<Vec<CameraModel>>,
    pub motion: MotionSpec,
    pub noise: NoiseModel,
    pub clutter: ClutterSpec,
    pub adversarial_speck: bool,
    pub gripper_color: [f64; 3],
    pub samples_per_pixel: f64,
    /// Demo indices rendered without the gripper.
    pub hidden_demos: Vec<usize>,
    /// OBJ or PLY mesh; `None` uses the built-in gripper.
    pub mesh: Option<PathBuf>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            demos: 1,
            frames: 100,
            seed: 0,
            rig: CameraRig::default(),
            cameras: None,
            motion: MotionSpec::default(),
            noise: NoiseModel::default(),
            clutter: ClutterSpec::default(),
            adversarial_speck: false,
            gripper_color: [0.1, 0.8, 0.2],
            samples_per_pixel: 20.0,
            hidden_demos: Vec::new(),
            mesh: None,
        }
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if let (Some(m), Some(dir)) = (&s.mesh, path.parent()) {
            if m.is_relative() {
                s.mesh = Some(dir.join(m));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.clutter.validate()?;
        if self.demos == 0 {
            return Err(Error::config("demos", "must be at least 1"));
        }
        if self.frames == 0 {
            return Err(Error::config("frames", "must be at least 1"));
        }
        if !(self.motion.max_step_translation >= 0.0 && self.motion.max_step_rotation_deg >= 0.0) {
            return Err(Error::config("motion", "step bounds must be non-negative"));
        }
        if self.cameras.as_ref().is_some_and(Vec::is_empty) || (self.cameras.is_none() && self.rig.count == 0) {
            return Err(Error::config("rig.count", "needs at least one camera"));
        }
        if let Some(m) = &self.mesh {
            if !m.is_file() {
                return Err(Error::config("mesh", format!("{} does not exist", m.display())));
            }
        }
        Ok(())
    }

    pub fn load_mesh(&self) -> Result<TriangleMesh> {
        match &self.mesh {
            Some(p) => load_mesh(p),
            None => Ok(gripper_mesh()),
        }
    }

    pub fn demo_seed(&self, demo: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(demo as u64);
        rng.random()
    }

    pub fn demo_id(&self, demo: usize) -> String {
        format!("demo_{demo:03}")
    }

    pub fn scenario(&self, demo: usize) -> Result<ScenarioConfig> {
        let seed = self.demo_seed(demo);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let center = Vec3::from(self.motion.center);
        let cameras = match &self.cameras {
            Some(c) => c.clone(),
            None => self.rig.cameras(center)?,
        };
        let trajectory = match self.motion.kind {
            MotionKind::Static => vec![downward(rng.random_range(0.0..TAU)).with_translation(center); self.frames],
            MotionKind::Smooth => smooth_trajectory(
                self.frames,
                center,
                self.motion.max_step_translation,
                self.motion.max_step_rotation_deg.to_radians(),
                &mut rng,
            ),
        };
        let clutter = self.clutter.generate(center, &mut rng);
        let speck = self.adversarial_speck.then(|| {
            let az = rng.random_range(0.0..TAU);
            Speck {
                center: [center.x + 0.12 * az.cos(), center.y + 0.12 * az.sin(), center.z - 0.12],
                points: 20,
                radius: 0.004,
            }
        });
        let scenario = ScenarioConfig {
            trajectory,
            cameras,
            noise: self.noise,
            clutter,
            speck,
            gripper_color: self.gripper_color,
            gripper_visible: !self.hidden_demos.contains(&demo),
            samples_per_pixel: self.samples_per_pixel,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
