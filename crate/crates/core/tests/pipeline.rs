//! Tracking, labeling and the synthetic harness, end to end.

use gripper_label::cloud::PointCloud;
use gripper_label::config::PipelineConfig;
use gripper_label::dataset::{load_demonstration, GROUND_TRUTH_FILE};
use gripper_label::error::Error;
use gripper_label::geometry::backproject_frame_indexed;
use gripper_label::labeling::{label_demonstration, merged_frame};
use gripper_label::synthetic::{
    error_stats, generate_synthetic_demo, pose_error, read_ground_truth, write_synthetic_demo, ClutterSpec,
    MotionKind, MotionSpec, NoiseModel, ScenarioFile, LABEL_BACKGROUND, LABEL_GRIPPER,
};
use gripper_label::tracking::{track_sequence, TrackMethod, TrackerParams};
use gripper_label::{RigidTransform, Vec3};

fn model_views(poses: &[RigidTransform]) -> (PointCloud, Vec<PointCloud>) {
    let config = PipelineConfig::default();
    let model = config.load_model().unwrap();
    let frames = poses.iter().map(|p| model.cloud.transformed(p)).collect();
    (model.cloud, frames)
}

fn steady_poses(n: usize) -> Vec<RigidTransform> {
    (0..n)
        .map(|i| {
            RigidTransform::from_axis_angle(Vec3::new(0.2, 0.1, 1.0).normalize(), 0.3 + 0.02 * i as f64)
                .with_translation(Vec3::new(0.1 + 0.002 * i as f64, 0.0, 0.5))
        })
        .collect()
}

#[test]
fn global_registration_runs_once_plus_reregistrations() {
    let mut poses = steady_poses(8);
    // a jump the seeded refinement cannot follow
    for p in poses.iter_mut().skip(5) {
        *p = p.with_translation(p.translation() + Vec3::new(0.3, 0.0, 0.0));
    }
    let (model, frames) = model_views(&poses);
    let config = PipelineConfig::default();
    let group = config.symmetry_group().unwrap();
    let track = track_sequence(&frames, &model, &group, &config.tracker_params()).unwrap();
    let re = track.count(TrackMethod::ReRegistered);
    assert_eq!(re, 1, "{:?}", track.entries.iter().map(|e| e.method).collect::<Vec<_>>());
    assert_eq!(track.entries[5].method, TrackMethod::ReRegistered);
    assert_eq!(track.global_registrations, 1 + re);
    let err = pose_error(&track.entries[7].pose, &poses[7], &group);
    assert!(err.translation < 1e-4 && err.rotation < 1e-3, "{err:?}");
}

#[test]
fn tracking_is_deterministic() {
    let (model, frames) = model_views(&steady_poses(5));
    let config = PipelineConfig::default();
    let group = config.symmetry_group().unwrap();
    let params: TrackerParams = config.tracker_params();
    let a = track_sequence(&frames, &model, &group, &params).unwrap();
    let b = track_sequence(&frames, &model, &group, &params).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
}

#[test]
fn empty_frame_carries_the_previous_pose() {
    let poses = steady_poses(5);
    let (model, mut frames) = model_views(&poses);
    frames[2] = PointCloud::new(Vec::new());
    let config = PipelineConfig::default();
    let group = config.symmetry_group().unwrap();
    let track = track_sequence(&frames, &model, &group, &config.tracker_params()).unwrap();
    assert_eq!(track.len(), 5);
    let e = &track.entries[2];
    assert_eq!(e.method, TrackMethod::Empty);
    assert_eq!(e.fitness, 0.0);
    assert_eq!(e.pose, track.entries[1].pose);
    let err = pose_error(&track.entries[4].pose, &poses[4], &group);
    assert!(err.translation < 1e-4, "{err:?}");

    frames[0] = PointCloud::new(Vec::new());
    let err = track_sequence(&frames, &model, &group, &config.tracker_params()).unwrap_err();
    assert!(matches!(err, Error::EmptyFrame(0)), "{err}");
}

fn scenario(frames: usize) -> ScenarioFile {
    ScenarioFile {
        frames,
        ..Default::default()
    }
}

#[test]
fn fifty_frame_demo_labels_within_five_millimeters() {
    let config = PipelineConfig::default();
    let model = config.load_model().unwrap();
    let synth = generate_synthetic_demo(&model.mesh, &scenario(50).scenario(0).unwrap(), "demo_000").unwrap();
    let labeled = label_demonstration(&synth.demo, &model.cloud, &model.group, &config).unwrap();
    assert_eq!(labeled.steps.len(), 49);

    // poses are the track prefix, actions its suffix
    for (t, s) in labeled.steps.iter().enumerate() {
        assert_eq!(s.pose, labeled.track.entries[t].pose);
        assert_eq!(s.action, labeled.track.entries[t + 1].pose);
    }
    let errors: Vec<_> = labeled
        .steps
        .iter()
        .map(|s| pose_error(&s.action, &synth.truth[s.t + 1], &model.group))
        .collect();
    let stats = error_stats(&errors, 0.005, 2f64.to_radians());
    assert!(stats.translation_median < 0.005, "{stats:?}");
}

#[test]
fn static_demo_actions_match_poses() {
    let config = PipelineConfig::default();
    let model = config.load_model().unwrap();
    let file = ScenarioFile {
        frames: 10,
        motion: MotionSpec {
            kind: MotionKind::Static,
            ..Default::default()
        },
        ..Default::default()
    };
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0).unwrap(), "static").unwrap();
    let labeled = label_demonstration(&synth.demo, &model.cloud, &model.group, &config).unwrap();
    for e in &labeled.track.entries[1..] {
        assert_eq!(e.method, TrackMethod::Seeded);
    }
    for s in &labeled.steps {
        let e = pose_error(&s.action, &s.pose, &model.group);
        assert!(e.translation < 1e-3 && e.rotation < 0.5f64.to_radians(), "{e:?}");
    }
}

#[test]
fn demo_without_green_fails_on_frame_zero() {
    let config = PipelineConfig::default();
    let model = config.load_model().unwrap();
    let file = ScenarioFile {
        frames: 3,
        hidden_demos: vec![0],
        ..Default::default()
    };
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0).unwrap(), "hidden").unwrap();
    let err = label_demonstration(&synth.demo, &model.cloud, &model.group, &config).unwrap_err();
    assert!(matches!(err, Error::EmptyFrame(0)), "{err}");
}

#[test]
fn noiseless_green_points_lie_on_the_posed_mesh() {
    let config = PipelineConfig::default();
    let model = config.load_model().unwrap();
    let file = ScenarioFile {
        frames: 1,
        noise: NoiseModel::none(),
        clutter: ClutterSpec {
            boxes: 0,
            ..Default::default()
        },
        ..Default::default()
    };
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0).unwrap(), "d").unwrap();
    let merged = merged_frame(&synth.demo.cameras, &synth.demo.frames[0], 1).unwrap();
    let green = gripper_label::segmentation::filter_by_color(&merged, &config.color_filter).unwrap();
    assert!(green.len() > 1000);
    let posed = model.mesh.transformed(&synth.truth[0]);
    for p in green.positions() {
        assert!(posed.distance_to_surface(p) < 1e-6);
    }
}

#[test]
fn membership_labels_are_exhaustive_and_exclusive() {
    let model = PipelineConfig::default().load_model().unwrap();
    let file = ScenarioFile {
        frames: 3,
        adversarial_speck: true,
        ..Default::default()
    };
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0).unwrap(), "d").unwrap();
    for (views, labels) in synth.demo.frames.iter().zip(&synth.labels) {
        for ((cam, img), lab) in synth.demo.cameras.iter().zip(views).zip(labels) {
            assert_eq!(lab.len(), cam.width * cam.height);
            let (_, pixels) = backproject_frame_indexed(cam, img, 1).unwrap();
            let mut valid = vec![false; lab.len()];
            pixels.iter().for_each(|&p| valid[p] = true);
            for (l, v) in lab.iter().zip(&valid) {
                // one label per pixel, and background exactly where depth is missing
                assert!(*l <= 3);
                assert_eq!(*l != LABEL_BACKGROUND, *v);
            }
        }
    }
    let gripper: usize = synth.labels.iter().flatten().flatten().filter(|l| **l == LABEL_GRIPPER).count();
    assert!(gripper > 0);
}

#[test]
fn generation_is_seed_deterministic_and_round_trips_through_disk() {
    let model = PipelineConfig::default().load_model().unwrap();
    let file = scenario(3);
    let a = generate_synthetic_demo(&model.mesh, &file.scenario(1).unwrap(), "demo_001").unwrap();
    let b = generate_synthetic_demo(&model.mesh, &file.scenario(1).unwrap(), "demo_001").unwrap();
    assert_eq!(a.demo, b.demo);
    assert_eq!(a.labels, b.labels);
    let other = generate_synthetic_demo(&model.mesh, &file.scenario(2).unwrap(), "demo_002").unwrap();
    assert_ne!(a.truth, other.truth);

    let dir = tempfile::tempdir().unwrap();
    let demo_dir = dir.path().join("demo_001");
    write_synthetic_demo(&demo_dir, &a).unwrap();
    let back = load_demonstration(&demo_dir).unwrap();
    assert_eq!(back.frames, a.demo.frames);
    for (x, y) in back.cameras.iter().zip(&a.demo.cameras) {
        assert_eq!((x.fx, x.fy, x.cx, x.cy, x.width, x.height), (y.fx, y.fy, y.cx, y.cy, y.width, y.height));
        assert!((x.extrinsic.rotation() - y.extrinsic.rotation()).norm() < 1e-12);
        assert!((x.extrinsic.translation() - y.extrinsic.translation()).norm() < 1e-12);
    }
    let truth = read_ground_truth(&demo_dir.join(GROUND_TRUTH_FILE)).unwrap();
    for (x, y) in truth.iter().zip(&a.truth) {
        assert!(pose_error(x, y, &Default::default()).translation < 1e-12);
    }
}
