//! Frame-to-frame pose tracking of the gripper model.

use std::str::FromStr;

use crate::cloud::{PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::geometry::{rotation_geodesic, RigidTransform, Vec3};
use crate::mesh::{sample_uniform, TriangleMesh};
use crate::registration::{GlobalParams, ModelRegistrar, RegistrationResult, Scene};

/// Rotational symmetry about an axis through the model origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub axis: [f64; 3],
    pub order: u32,
}

impl FromStr for SymmetrySpec {
    type Err = Error;

    /// `"x,y,z:order"`, e.g. `"0,0,1:2"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::config("symmetry", format!("{reason} in {s:?}; expected \"x,y,z:order\""));
        let (axis, order) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let parts: Vec<f64> = axis
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("bad axis component"))?;
        let axis: [f64; 3] = parts.try_into().map_err(|_| bad("axis needs three components"))?;
        let order = order.trim().parse().map_err(|_| bad("bad order"))?;
        Ok(SymmetrySpec { axis, order })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGroup {
    elements: Vec<RigidTransform>,
}

impl Default for SymmetryGroup {
    fn default() -> Self {
        Self::trivial()
    }
}

impl SymmetryGroup {
    pub fn trivial() -> Self {
        Self {
            elements: vec![RigidTransform::identity()],
        }
    }

    /// Cyclic group of `order` rotations about `axis`.
    pub fn cyclic(spec: &SymmetrySpec) -> Result<Self> {
        let axis = Vec3::from(spec.axis);
        if !(axis.norm() > 1e-12) || !axis.iter().all(|c| c.is_finite()) {
            return Err(Error::Symmetry("axis must be a finite nonzero vector".into()));
        }
        if spec.order == 0 {
            return Err(Error::Symmetry("order must be at least 1".into()));
        }
        let axis = axis.normalize();
        let elements = (0..spec.order)
            .map(|k| {
                if k == 0 {
                    RigidTransform::identity()
                } else {
                    RigidTransform::from_axis_angle(axis, std::f64::consts::TAU * k as f64 / spec.order as f64)
                }
            })
            .collect();
        Ok(Self { elements })
    }

    pub fn from_spec(spec: Option<&SymmetrySpec>) -> Result<Self> {
        spec.map_or_else(|| Ok(Self::trivial()), Self::cyclic)
    }

    /// Identity is inserted first if missing.
    pub fn from_elements(mut elements: Vec<RigidTransform>) -> Self {
        let is_identity = |g: &RigidTransform| {
            rotation_geodesic(g, &RigidTransform::identity()) == 0.0 && g.translation().norm() == 0.0
        };
        if !elements.first().is_some_and(is_identity) {
            elements.retain(|g| !is_identity(g));
            elements.insert(0, RigidTransform::identity());
        }
        Self { elements }
    }

    pub fn elements(&self) -> &[RigidTransform] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Smallest rotation angle among the non-identity elements.
    pub fn min_rotation(&self) -> Option<f64> {
        self.elements[1..]
            .iter()
            .map(|g| rotation_geodesic(g, &RigidTransform::identity()))
            .min_by(f64::total_cmp)
    }

    /// Checks that every element maps `points` onto themselves.
    pub fn validate(&self, points: &[Vec3], tolerance: f64) -> Result<()> {
        for (k, g) in self.elements.iter().enumerate().skip(1) {
            let moved: Vec<Vec3> = points.iter().map(|p| g.apply(p)).collect();
            let d = hausdorff(points, &moved);
            if d > tolerance {
                return Err(Error::Symmetry(format!(
                    "element {k} moves the model by {d:.3e} (tolerance {tolerance:.1e})"
                )));
            }
        }
        Ok(())
    }

    /// Replicates `cloud` under every element, making it exactly invariant.
    pub fn symmetrize(&self, cloud: &PointCloud) -> PointCloud {
        let mut positions = Vec::with_capacity(cloud.len() * self.len());
        let mut normals = cloud.normals().map(|_| Vec::with_capacity(cloud.len() * self.len()));
        for g in &self.elements {
            positions.extend(cloud.positions().iter().map(|p| g.apply(p)));
            if let (Some(out), Some(src)) = (normals.as_mut(), cloud.normals()) {
                out.extend(src.iter().map(|n| g.apply_vector(n)));
            }
        }
        let out = PointCloud::new(positions);
        match normals {
            Some(n) => out.with_normals(n).expect("rotated unit normals"),
            None => out,
        }
    }
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn directed(from: &[Vec3], to: &SpatialIndex) -> f64 {
        from.iter()
            .filter_map(|p| to.nearest(p))
            .map(|n| n.dist2)
            .fold(0.0, f64::max)
            .sqrt()
    }
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    directed(a, &SpatialIndex::new(b)).max(directed(b, &SpatialIndex::new(a)))
}

/// Uniform surface samples made exactly invariant under `group`:
/// `n / |G|` samples, replicated under each element.
pub fn model_cloud(mesh: &TriangleMesh, n: usize, seed: u64, group: &SymmetryGroup) -> Result<PointCloud> {
    let base = n / group.len();
    if base == 0 {
        return Err(Error::param("sample_count", "smaller than the symmetry group"));
    }
    Ok(group.symmetrize(&sample_uniform(mesh, base, seed)?))
}

/// The branch `pose∘g` closest in rotation to `prev` (ties: group order).
pub fn resolve_symmetry(pose: &RigidTransform, prev: &RigidTransform, group: &SymmetryGroup) -> RigidTransform {
    let mut best = *pose;
    let mut best_d = f64::INFINITY;
    for g in group.elements() {
        let candidate = pose.compose(g);
        let d = rotation_geodesic(&candidate, prev);
        if d < best_d {
            best = candidate;
            best_d = d;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackMethod {
    Global,
    Seeded,
    ReRegistered,
    /// Nothing segmented; pose carried over from the previous frame.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEntry {
    pub pose: RigidTransform,
    pub fitness: f64,
    pub inlier_rmse: f64,
    pub method: TrackMethod,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PoseRecord {
    pub frame_index: usize,
    pub q: [f64; 4],
    pub t: [f64; 3],
    pub fitness: f64,
    pub inlier_rmse: f64,
    pub method: TrackMethod,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoseTrack {
    pub entries: Vec<TrackEntry>,
    /// Number of times global registration ran.
    pub global_registrations: usize,
}

impl PoseTrack {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> Vec<PoseRecord> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let p = e.pose.to_json();
                PoseRecord {
                    frame_index: i,
                    q: p.q,
                    t: p.t,
                    fitness: e.fitness,
                    inlier_rmse: e.inlier_rmse,
                    method: e.method,
                }
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.records() {
            out.push_str(&serde_json::to_string(&r).expect("pose record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn count(&self, method: TrackMethod) -> usize {
        self.entries.iter().filter(|e| e.method == method).count()
    }

    /// Frames whose rotation jumps by more than half the smallest symmetry
    /// rotation relative to the previous frame.
    pub fn branch_flips(&self, group: &SymmetryGroup) -> usize {
        let Some(limit) = group.min_rotation() else { return 0 };
        self.entries
            .windows(2)
            .filter(|w| rotation_geodesic(&w[0].pose, &w[1].pose) > limit / 2.0)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerParams {
    pub registration: GlobalParams,
    /// Seeded results below this fitness trigger global re-registration.
    pub reregistration_threshold: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            registration: GlobalParams::default(),
            reregistration_threshold: 0.3,
        }
    }
}

/// Incremental tracker; feed frames in order with [`Tracker::push`].
pub struct Tracker {
    registrar: ModelRegistrar,
    group: SymmetryGroup,
    threshold: f64,
    track: PoseTrack,
}

impl Tracker {
    pub fn new(model: PointCloud, group: SymmetryGroup, params: &TrackerParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.reregistration_threshold) {
            return Err(Error::param("reregistration_threshold", "must lie in [0, 1]"));
        }
        Ok(Self {
            registrar: ModelRegistrar::new(model, params.registration)?,
            group,
            threshold: params.reregistration_threshold,
            track: PoseTrack::default(),
        })
    }

    pub fn registrar(&self) -> &ModelRegistrar {
        &self.registrar
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    fn global(&mut self, scene: &Scene) -> Result<RegistrationResult> {
        self.track.global_registrations += 1;
        self.registrar.global(scene)
    }

    pub fn push(&mut self, frame: &PointCloud) -> Result<&TrackEntry> {
        let index = self.track.len();
        let prev = self.track.entries.last().map(|e| e.pose);
        let entry = match prev {
            None => {
                if frame.len() < 3 {
                    return Err(Error::EmptyFrame(0));
                }
                let r = self.global(&Scene::new(frame.clone()))?;
                TrackEntry {
                    pose: r.transform,
                    fitness: r.fitness,
                    inlier_rmse: r.inlier_rmse,
                    method: TrackMethod::Global,
                }
            }
            Some(prev) if frame.len() < 3 => TrackEntry {
                pose: prev,
                fitness: 0.0,
                inlier_rmse: 0.0,
                method: TrackMethod::Empty,
            },
            Some(prev) => {
                let scene = Scene::new(frame.clone());
                let seeded = match self.registrar.refine(&scene, &prev) {
                    Ok(r) => Some(r),
                    Err(Error::NoCorrespondences { .. }) => None,
                    Err(e) => return Err(e),
                };
                let mut entry = match seeded {
                    Some(r) => TrackEntry {
                        pose: resolve_symmetry(&r.transform, &prev, &self.group),
                        fitness: r.fitness,
                        inlier_rmse: r.inlier_rmse,
                        method: TrackMethod::Seeded,
                    },
                    None => TrackEntry {
                        pose: prev,
                        fitness: 0.0,
                        inlier_rmse: 0.0,
                        method: TrackMethod::Seeded,
                    },
                };
                if entry.fitness < self.threshold {
                    // keep the seeded pose if the global attempt is no better
                    if let Ok(r) = self.global(&scene) {
                        if r.fitness > entry.fitness {
                            entry.pose = resolve_symmetry(&r.transform, &prev, &self.group);
                            entry.fitness = r.fitness;
                            entry.inlier_rmse = r.inlier_rmse;
                        }
                    }
                    entry.method = TrackMethod::ReRegistered;
                }
                entry
            }
        };
        debug_assert_eq!(index, self.track.len());
        self.track.entries.push(entry);
        Ok(self.track.entries.last().expect("just pushed"))
    }

    pub fn finish(self) -> PoseTrack {
        self.track
    }
}

pub fn track_sequence(
    frames: &[PointCloud],
    model: &PointCloud,
    group: &SymmetryGroup,
    params: &TrackerParams,
) -> Result<PoseTrack> {
    if frames.is_empty() {
        return Err(Error::TooShortTrack(0));
    }
    let mut tracker = Tracker::new(model.clone(), group.clone(), params)?;
    for frame in frames {
        tracker.push(frame)?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gripper_mesh;
    use std::f64::consts::PI;

    fn half_turn() -> SymmetryGroup {
        SymmetryGroup::cyclic(&SymmetrySpec { axis: [0.0, 0.0, 1.0], order: 2 }).unwrap()
    }

    #[test]
    fn trivial_group_keeps_pose() {
        let pose = RigidTransform::from_axis_angle(Vec3::x(), 0.7);
        let prev = RigidTransform::rotation_z(2.0);
        assert_eq!(resolve_symmetry(&pose, &prev, &SymmetryGroup::trivial()), pose);
    }

    #[test]
    fn flipped_pose_snaps_back() {
        let prev = RigidTransform::from_axis_angle(Vec3::new(1.0, 1.0, 0.0).normalize(), 0.4)
            .with_translation(Vec3::new(0.1, 0.0, 0.3));
        let pose = prev.compose(&RigidTransform::rotation_z(PI));
        let out = resolve_symmetry(&pose, &prev, &half_turn());
        assert!(rotation_geodesic(&out, &prev) < 1e-12);
        assert!((out.translation() - prev.translation()).norm() < 1e-15);
    }

    #[test]
    fn spec_parsing() {
        let s: SymmetrySpec = "0,0,1:2".parse().unwrap();
        assert_eq!(s, SymmetrySpec { axis: [0.0, 0.0, 1.0], order: 2 });
        assert!("0,0:2".parse::<SymmetrySpec>().is_err());
        assert!("0,0,1".parse::<SymmetrySpec>().is_err());
        assert!(SymmetryGroup::cyclic(&SymmetrySpec { axis: [0.0; 3], order: 2 }).is_err());
    }

    #[test]
    fn gripper_symmetry_validates() {
        let mesh = gripper_mesh();
        half_turn().validate(mesh.vertices(), 1e-6).unwrap();
        let quarter = SymmetryGroup::cyclic(&SymmetrySpec { axis: [0.0, 0.0, 1.0], order: 4 }).unwrap();
        assert!(matches!(quarter.validate(mesh.vertices(), 1e-6), Err(Error::Symmetry(_))));
    }

    #[test]
    fn symmetrized_cloud_is_invariant() {
        let g = half_turn();
        let cloud = model_cloud(&gripper_mesh(), 1000, 4, &g).unwrap();
        assert_eq!(cloud.len(), 1000);
        g.validate(cloud.positions(), 1e-12).unwrap();
    }

    #[test]
    fn min_rotation() {
        assert_eq!(SymmetryGroup::trivial().min_rotation(), None);
        assert!((half_turn().min_rotation().unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn empty_first_frame_is_error() {
        let model = model_cloud(&gripper_mesh(), 2000, 0, &half_turn()).unwrap();
        let frames = vec![PointCloud::new(vec![])];
        assert!(matches!(
            track_sequence(&frames, &model, &half_turn(), &TrackerParams::default()),
            Err(Error::EmptyFrame(0))
        ));
    }

    #[test]
    fn static_sequence_is_seeded_and_stable() {
        let group = half_turn();
        let model = model_cloud(&gripper_mesh(), 3000, 0, &group).unwrap();
        let truth = RigidTransform::from_axis_angle(Vec3::x(), PI)
            .with_translation(Vec3::new(0.0, 0.0, 0.3));
        let scene = model.transformed(&truth);
        let mut frames = vec![scene; 10];
        frames.insert(5, PointCloud::new(vec![]));
        let track = track_sequence(&frames, &model, &group, &TrackerParams::default()).unwrap();
        assert_eq!(track.len(), 11);
        assert_eq!(track.entries[0].method, TrackMethod::Global);
        assert_eq!(track.entries[5].method, TrackMethod::Empty);
        assert_eq!(track.entries[5].fitness, 0.0);
        assert_eq!(track.global_registrations, 1);
        for e in &track.entries[1..] {
            if e.method != TrackMethod::Empty {
                assert_eq!(e.method, TrackMethod::Seeded);
            }
            assert!((e.pose.translation() - track.entries[0].pose.translation()).norm() < 1e-3);
            assert!(rotation_geodesic(&e.pose, &track.entries[0].pose) < 0.5f64.to_radians());
        }
        assert_eq!(track.branch_flips(&group), 0);
        let jsonl = track.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines[5].contains("\"method\":\"empty\""));
    }
}
