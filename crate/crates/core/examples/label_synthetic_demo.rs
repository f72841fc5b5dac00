//! Renders a noisy, cluttered 100-frame demonstration, labels it and scores
//! the labels against ground truth.
//!
//! cargo run --release --example label_synthetic_demo [seed]

use std::time::Instant;

use gripper_label::config::PipelineConfig;
use gripper_label::labeling::label_demonstration;
use gripper_label::synthetic::{
    error_stats, generate_synthetic_demo, pose_error, ScenarioFile, LABEL_CLUTTER, LABEL_GRIPPER,
};
use gripper_label::tracking::TrackMethod;

fn main() -> gripper_label::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let file = ScenarioFile { seed, ..Default::default() };
    let config = PipelineConfig::default();
    let model = config.load_model()?;

    let start = Instant::now();
    let synth = generate_synthetic_demo(&model.mesh, &file.scenario(0)?, "demo_000")?;
    println!("rendered {} frames in {:.2?}", synth.demo.len(), start.elapsed());

    let (mut gripper, mut clutter) = (0usize, 0usize);
    for l in synth.labels.iter().flatten().flatten() {
        match *l {
            LABEL_GRIPPER => gripper += 1,
            LABEL_CLUTTER => clutter += 1,
            _ => {}
        }
    }
    println!("clutter fraction {:.3}", clutter as f64 / (clutter + gripper) as f64);

    let start = Instant::now();
    let labeled = label_demonstration(&synth.demo, &model.cloud, &model.group, &config)?;
    println!("labeled in {:.2?}", start.elapsed());

    let errors: Vec<_> = labeled
        .track
        .entries
        .iter()
        .zip(&synth.truth)
        .map(|(e, t)| pose_error(&e.pose, t, &model.group))
        .collect();
    let stats = error_stats(&errors, 0.005, 2f64.to_radians());
    println!(
        "translation median {:.2} mm, p95 {:.2} mm; rotation median {:.2}°, p95 {:.2}°",
        stats.translation_median * 1e3,
        stats.translation_p95 * 1e3,
        stats.rotation_median_deg,
        stats.rotation_p95_deg
    );
    println!(
        "global registrations {}, re-registered frames {}, branch flips {}, mean fitness {:.3}",
        labeled.track.global_registrations,
        labeled.track.count(TrackMethod::ReRegistered),
        labeled.track.branch_flips(&model.group),
        labeled.mean_fitness()
    );
    Ok(())
}
