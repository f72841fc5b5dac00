//! Rigid transforms, pinhole cameras and depth backprojection.
//!
//! Poses map a local frame into the world frame. Camera extrinsics follow the
//! same convention: they take camera-frame points (x right, y down, z along
//! the optical axis) into the world frame.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

const ORTHONORMAL_DRIFT: f64 = 1e-12;

/// A proper rigid-body motion: `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a transform from a rotation matrix, projecting it onto SO(3)
    /// when it is not orthonormal to working precision.
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        let rotation = if orthonormal_drift(&rotation) > ORTHONORMAL_DRIFT {
            nearest_rotation(&rotation)
        } else {
            rotation
        };
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::new(x, y, z),
        }
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        Self {
            rotation: Rotation3::from_axis_angle(&axis, angle).into_inner(),
            translation: Vec3::zeros(),
        }
    }

    pub fn rotation_z(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::z(), angle)
    }

    /// From a (not necessarily normalized) quaternion `w, x, y, z` and a translation.
    pub fn from_quaternion(q: [f64; 4], t: [f64; 3]) -> Result<Self> {
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::param("quaternion", "must be finite and non-zero"));
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Ok(Self::new(
            unit.to_rotation_matrix().into_inner(),
            Vec3::from(t),
        ))
    }

    pub fn with_translation(mut self, translation: Vec3) -> Self {
        self.translation = translation;
        self
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Unit quaternion `[w, x, y, z]` with `w >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let q = q.quaternion();
        let mut out = [q.w, q.i, q.j, q.k];
        let flip = out[0] < 0.0
            || (out[0] == 0.0 && out[1..].iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0));
        if flip {
            out.iter_mut().for_each(|c| *c = -*c);
        }
        out
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    pub fn to_json(&self) -> PoseJson {
        PoseJson {
            q: self.quaternion(),
            t: self.translation_array(),
        }
    }

    /// Frobenius norm of `RᵀR - I`.
    pub fn orthonormal_error(&self) -> f64 {
        orthonormal_drift(&self.rotation)
    }
}

/// Serialized pose: unit quaternion `(w, x, y, z)` and translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    pub q: [f64; 4],
    pub t: [f64; 3],
}

impl TryFrom<PoseJson> for RigidTransform {
    type Error = Error;

    fn try_from(p: PoseJson) -> Result<Self> {
        RigidTransform::from_quaternion(p.q, p.t)
    }
}

fn orthonormal_drift(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Closest rotation matrix in the Frobenius sense.
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Angle of the relative rotation between `a` and `b`, in `[0, π]`.
///
/// Evaluated as `atan2(sin, cos)` of the relative rotation rather than
/// `acos((tr - 1) / 2)`, which loses precision for small angles.
pub fn rotation_geodesic(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let r = a.rotation.transpose() * b.rotation;
    let cos2 = r.trace() - 1.0;
    let sin2 = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
    .norm();
    sin2.atan2(cos2).clamp(0.0, std::f64::consts::PI)
}

/// Pinhole camera without distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Camera frame to world frame.
    pub extrinsic: RigidTransform,
    /// Meters per unit for 16-bit depth PNGs.
    pub depth_scale: Option<f64>,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        extrinsic: RigidTransform,
    ) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsic,
            depth_scale: None,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite()) {
            return Err(Error::param("fx", format!("must be positive, got {}", self.fx)));
        }
        if !(self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::param("fy", format!("must be positive, got {}", self.fy)));
        }
        if !(0.0..self.width as f64).contains(&self.cx) {
            return Err(Error::param("cx", format!("{} outside [0, {})", self.cx, self.width)));
        }
        if !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::param("cy", format!("{} outside [0, {})", self.cy, self.height)));
        }
        if let Some(s) = self.depth_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("depth_scale", "must be positive"));
            }
        }
        Ok(())
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        *self.extrinsic.translation()
    }

    /// Lifts pixel `(u, v)` at depth `d` into the world frame:
    /// `extrinsic * (d (u - cx) / fx, d (v - cy) / fy, d)`.
    pub fn backproject_pixel(&self, u: f64, v: f64, d: f64) -> Result<Vec3> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidDepth(d));
        }
        let local = Vec3::new(d * (u - self.cx) / self.fx, d * (v - self.cy) / self.fy, d);
        Ok(self.extrinsic.apply(&local))
    }

    /// Projects a world point to `(u, v, depth)`; `None` when behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        let local = self.extrinsic.inverse().apply(p);
        if local.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * local.x / local.z + self.cx,
            self.fy * local.y / local.z + self.cy,
            local.z,
        ))
    }

    /// A camera at `eye` whose optical axis points at `target`; `up` is the
    /// world direction that should appear upward in the image.
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        fx: f64,
        fy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let z = (target - eye).normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-9 {
            return Err(Error::Degenerate("look_at: up is parallel to viewing direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Mat3::from_columns(&[x, y, z]);
        let extrinsic = RigidTransform::new(rotation, eye);
        Self::new(
            fx,
            fy,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
            extrinsic,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ExtrinsicJson {
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    tx: f64,
    ty: f64,
    tz: f64,
}

#[derive(Serialize, Deserialize)]
struct CameraJson {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    extrinsic: ExtrinsicJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_scale: Option<f64>,
}

impl Serialize for CameraModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let q = self.extrinsic.quaternion();
        let t = self.extrinsic.translation();
        CameraJson {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            extrinsic: ExtrinsicJson {
                qw: q[0],
                qx: q[1],
                qy: q[2],
                qz: q[3],
                tx: t.x,
                ty: t.y,
                tz: t.z,
            },
            depth_scale: self.depth_scale,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CameraModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CameraJson::deserialize(d)?;
        let e = raw.extrinsic;
        let extrinsic = RigidTransform::from_quaternion([e.qw, e.qx, e.qy, e.qz], [e.tx, e.ty, e.tz])
            .map_err(D::Error::custom)?;
        let cam = CameraModel {
            fx: raw.fx,
            fy: raw.fy,
            cx: raw.cx,
            cy: raw.cy,
            width: raw.width,
            height: raw.height,
            extrinsic,
            depth_scale: raw.depth_scale,
        };
        cam.validate().map_err(D::Error::custom)?;
        Ok(cam)
    }
}

/// One RGB-D view. Depth is stored in meters as `f32`; zero, negative or
/// non-finite depth marks a missing pixel. Colors are 8-bit on disk and are
/// kept that way in memory, exposed as `[0, 1]` floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    depth: Vec<f32>,
    color: Vec<[u8; 3]>,
}

impl DepthImage {
    /// An image with every pixel missing and black.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![0.0; width * height],
            color: vec![[0; 3]; width * height],
        }
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        depth: Vec<f32>,
        color: Vec<[u8; 3]>,
    ) -> Result<Self> {
        let n = width * height;
        if depth.len() != n {
            return Err(Error::AttributeLength {
                attribute: "depth",
                expected: n,
                found: depth.len(),
            });
        }
        if color.len() != n {
            return Err(Error::AttributeLength {
                attribute: "color",
                expected: n,
                found: color.len(),
            });
        }
        Ok(Self {
            width,
            height,
            depth,
            color,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth_raw(&self) -> &[f32] {
        &self.depth
    }

    pub fn color_raw(&self) -> &[[u8; 3]] {
        &self.color
    }

    /// Depth in meters, or `None` for a missing pixel.
    pub fn depth(&self, u: usize, v: usize) -> Option<f64> {
        let d = self.depth[v * self.width + u] as f64;
        (d.is_finite() && d > 0.0).then_some(d)
    }

    pub fn color(&self, u: usize, v: usize) -> [f64; 3] {
        let c = self.color[v * self.width + u];
        [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0]
    }

    pub fn set(&mut self, u: usize, v: usize, depth: f32, color: [u8; 3]) {
        let i = v * self.width + u;
        self.depth[i] = depth;
        self.color[i] = color;
    }

    pub fn clear(&mut self, u: usize, v: usize) {
        self.depth[v * self.width + u] = 0.0;
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite() && **d > 0.0).count()
    }
}

/// Backprojects every `stride`-th pixel with valid depth, carrying its color.
pub fn backproject_frame(cam: &CameraModel, img: &DepthImage, stride: usize) -> Result<PointCloud> {
    backproject_frame_indexed(cam, img, stride).map(|(cloud, _)| cloud)
}

/// Like [`backproject_frame`], also returning the row-major pixel index of
/// each output point.
pub fn backproject_frame_indexed(
    cam: &CameraModel,
    img: &DepthImage,
    stride: usize,
) -> Result<(PointCloud, Vec<usize>)> {
    if img.width != cam.width || img.height != cam.height {
        return Err(Error::DimensionMismatch {
            expected_w: cam.width,
            expected_h: cam.height,
            found_w: img.width,
            found_h: img.height,
        });
    }
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut pixels = Vec::new();
    for v in (0..img.height).step_by(stride) {
        for u in (0..img.width).step_by(stride) {
            if let Some(d) = img.depth(u, v) {
                positions.push(cam.backproject_pixel(u as f64, v as f64, d)?);
                colors.push(img.color(u, v));
                pixels.push(v * img.width + u);
            }
        }
    }
    let cloud = PointCloud::new(positions).with_colors(colors)?;
    Ok((cloud, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_transform_eq(a: &RigidTransform, b: &RigidTransform, eps: f64) {
        assert!(
            (a.rotation() - b.rotation()).norm() < eps,
            "rotation {a:?} vs {b:?}"
        );
        assert!((a.translation() - b.translation()).norm() < eps);
    }

    #[test]
    fn compose_basics() {
        let id = RigidTransform::identity();
        assert_eq!(id.compose(&id), id);

        let rz90 = RigidTransform::rotation_z(FRAC_PI_2);
        assert_transform_eq(&rz90.compose(&rz90), &RigidTransform::rotation_z(PI), 1e-12);

        let t = RigidTransform::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 0.7)
            .with_translation(Vec3::new(0.3, -1.0, 2.0));
        assert_transform_eq(&t.compose(&t.inverse()), &id, 1e-12);
    }

    #[test]
    fn pose_json_text_round_trips() {
        // values whose shortest decimal form needs all 17 digits
        let p = PoseJson {
            q: [0.06137645255494926, 0.611231384305414, 0.7771474021017255, -0.1366420188609497],
            t: [0.018113670093899154, 0.029771250270596943, 0.23618804318792344],
        };
        let text = serde_json::to_string(&p).unwrap();
        let back: PoseJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn invert_basics() {
        assert_eq!(RigidTransform::identity().inverse(), RigidTransform::identity());
        let t = RigidTransform::from_translation(1.0, 2.0, 3.0).inverse();
        assert_eq!(t.translation_array(), [-1.0, -2.0, -3.0]);
    }

    #[test]
    fn apply_basics() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(RigidTransform::identity().apply(&p), p);
        let q = RigidTransform::rotation_z(FRAC_PI_2).apply(&Vec3::x());
        assert_abs_diff_eq!(q, Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn geodesic_basics() {
        let id = RigidTransform::identity();
        let t = RigidTransform::from_axis_angle(Vec3::new(0.2, 1.0, 0.1), 1.1);
        assert_eq!(rotation_geodesic(&t, &t), 0.0);
        assert_abs_diff_eq!(
            rotation_geodesic(&id, &RigidTransform::rotation_z(FRAC_PI_2)),
            FRAC_PI_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            rotation_geodesic(&id, &RigidTransform::rotation_z(PI)),
            PI,
            epsilon = 1e-12
        );
        // small angles stay accurate
        let tiny = RigidTransform::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 1e-10);
        assert_abs_diff_eq!(rotation_geodesic(&id, &tiny), 1e-10, epsilon = 1e-15);
    }

    #[test]
    fn drifted_rotation_is_projected() {
        let mut r = *RigidTransform::rotation_z(0.3).rotation();
        r[(0, 1)] += 1e-6;
        let t = RigidTransform::new(r, Vec3::zeros());
        assert!(t.orthonormal_error() < 1e-12);
        assert!((t.rotation().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quaternion_round_trip() {
        let t = RigidTransform::from_axis_angle(Vec3::new(-0.3, 0.5, 0.8), 2.9)
            .with_translation(Vec3::new(0.1, 0.2, 0.3));
        let json = t.to_json();
        assert!(json.q[0] >= 0.0);
        let back = RigidTransform::try_from(json).unwrap();
        assert_transform_eq(&t, &back, 1e-12);
    }

    fn test_camera(extrinsic: RigidTransform) -> CameraModel {
        CameraModel::new(100.0, 100.0, 50.0, 50.0, 200, 100, extrinsic).unwrap()
    }

    #[test]
    fn backproject_pixel_examples() {
        let unit = CameraModel::new(1.0, 1.0, 0.0, 0.0, 4, 4, RigidTransform::identity()).unwrap();
        assert_eq!(unit.backproject_pixel(0.0, 0.0, 2.0).unwrap(), Vec3::new(0.0, 0.0, 2.0));

        let cam = test_camera(RigidTransform::identity());
        assert_eq!(cam.backproject_pixel(150.0, 50.0, 1.0).unwrap(), Vec3::new(1.0, 0.0, 1.0));

        let cam = test_camera(RigidTransform::from_translation(0.0, 0.0, 1.0));
        assert_eq!(cam.backproject_pixel(150.0, 50.0, 1.0).unwrap(), Vec3::new(1.0, 0.0, 2.0));
    }

    #[test]
    fn backproject_rejects_bad_depth() {
        let cam = test_camera(RigidTransform::identity());
        for d in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(cam.backproject_pixel(1.0, 1.0, d), Err(Error::InvalidDepth(_))));
        }
    }

    #[test]
    fn camera_rejects_bad_intrinsics() {
        let id = RigidTransform::identity();
        assert!(CameraModel::new(0.0, 1.0, 1.0, 1.0, 4, 4, id).is_err());
        assert!(CameraModel::new(1.0, 1.0, 4.0, 1.0, 4, 4, id).is_err());
        assert!(CameraModel::new(1.0, 1.0, 1.0, -0.5, 4, 4, id).is_err());
    }

    #[test]
    fn camera_json_round_trip() {
        let ext = RigidTransform::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.4)
            .with_translation(Vec3::new(0.5, 0.0, -0.2));
        let mut cam = test_camera(ext);
        cam.depth_scale = Some(0.001);
        let text = serde_json::to_string(&cam).unwrap();
        assert!(text.contains("\"qw\""));
        let back: CameraModel = serde_json::from_str(&text).unwrap();
        assert_transform_eq(&back.extrinsic, &cam.extrinsic, 1e-12);
        assert_eq!(back.depth_scale, Some(0.001));
        let bad = text.replace("\"fx\":100.0", "\"fx\":-1.0");
        assert!(serde_json::from_str::<CameraModel>(&bad).is_err());
    }

    #[test]
    fn backproject_frame_cases() {
        let cam = CameraModel::new(10.0, 10.0, 0.5, 0.5, 2, 2, RigidTransform::identity()).unwrap();
        let img = DepthImage::empty(2, 2);
        assert!(backproject_frame(&cam, &img, 1).unwrap().is_empty());

        let mut img = DepthImage::empty(2, 2);
        img.set(1, 0, 1.5, [0, 255, 0]);
        let cloud = backproject_frame(&cam, &img, 1).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.positions()[0], cam.backproject_pixel(1.0, 0.0, 1.5).unwrap());
        assert_eq!(cloud.colors().unwrap()[0], [0.0, 1.0, 0.0]);

        let mut nan_img = DepthImage::empty(2, 2);
        nan_img.set(0, 0, f32::NAN, [1, 1, 1]);
        assert!(backproject_frame(&cam, &nan_img, 1).unwrap().is_empty());

        let wrong = DepthImage::empty(3, 2);
        assert!(matches!(
            backproject_frame(&cam, &wrong, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stride_skips_pixels() {
        let cam = CameraModel::new(10.0, 10.0, 1.0, 1.0, 4, 4, RigidTransform::identity()).unwrap();
        let depth = vec![1.0f32; 16];
        let img = DepthImage::from_parts(4, 4, depth, vec![[9; 3]; 16]).unwrap();
        assert_eq!(backproject_frame(&cam, &img, 1).unwrap().len(), 16);
        let (cloud, pixels) = backproject_frame_indexed(&cam, &img, 2).unwrap();
        assert_eq!(cloud.len(), 4);
        assert_eq!(pixels, vec![0, 2, 8, 10]);
    }

    #[test]
    fn look_at_points_optical_axis_at_target() {
        let cam = CameraModel::look_at(
            Vec3::new(0.5, 0.2, 0.4),
            Vec3::zeros(),
            Vec3::z(),
            300.0,
            300.0,
            320,
            240,
        )
        .unwrap();
        let (u, v, d) = cam.project(&Vec3::zeros()).unwrap();
        assert_abs_diff_eq!(u, cam.cx, epsilon = 1e-9);
        assert_abs_diff_eq!(v, cam.cy, epsilon = 1e-9);
        assert_abs_diff_eq!(d, Vec3::new(0.5, 0.2, 0.4).norm(), epsilon = 1e-12);
        // world up maps to image up (smaller v)
        let (_, v_up, _) = cam.project(&Vec3::new(0.0, 0.0, 0.05)).unwrap();
        assert!(v_up < cam.cy);
    }
}
