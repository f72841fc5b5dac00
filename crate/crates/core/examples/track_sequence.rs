//! Tracks the gripper through segmented frames: one global registration on
//! the first frame, then ICP seeded with the previous pose.
//!
//! cargo run --release --example track_sequence

use std::time::Instant;

use gripper_label::config::PipelineConfig;
use gripper_label::labeling::segment_frame;
use gripper_label::registration::{ModelRegistrar, Scene};
use gripper_label::synthetic::{generate_synthetic_demo, pose_error, ScenarioFile};
use gripper_label::tracking::{track_sequence, TrackMethod};

fn main() -> gripper_label::Result<()> {
    let config = PipelineConfig::default();
    let model = config.load_model()?;
    let file = ScenarioFile { frames: 30, ..Default::default() };
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0)?, "demo_000")?;
    let frames = synth
        .demo
        .frames
        .iter()
        .map(|views| segment_frame(&synth.demo.cameras, views, &config))
        .collect::<gripper_label::Result<Vec<_>>>()?;

    let start = Instant::now();
    let track = track_sequence(&frames, &model.cloud, &model.group, &config.tracker_params())?;
    let elapsed = start.elapsed();
    for (t, (e, truth)) in track.entries.iter().zip(&synth.truth).enumerate() {
        let err = pose_error(&e.pose, truth, &model.group);
        println!(
            "{t:3} {:<13} fitness {:.3}  error {:.2} mm {:.2}°",
            format!("{:?}", e.method),
            e.fitness,
            err.translation * 1e3,
            err.rotation.to_degrees()
        );
    }
    println!(
        "{} frames in {elapsed:.2?}; {} global, {} re-registered, {} branch flips",
        track.len(),
        track.global_registrations,
        track.count(TrackMethod::ReRegistered),
        track.branch_flips(&model.group)
    );

    // the same scene registered both ways
    let registrar = ModelRegistrar::new(model.cloud.clone(), config.tracker_params().registration)?;
    let scene = Scene::new(frames[1].clone());
    let start = Instant::now();
    registrar.global(&scene)?;
    let global = start.elapsed();
    let scene = Scene::new(frames[1].clone());
    let start = Instant::now();
    registrar.refine(&scene, &track.entries[0].pose)?;
    let seeded = start.elapsed();
    println!("frame 1: global {global:.2?}, seeded {seeded:.2?}");
    Ok(())
}
