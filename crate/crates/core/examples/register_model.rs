//! Global registration of the symmetric gripper model against posed copies
//! of itself: RANSAC on FPFH matches, then ICP.
//!
//! cargo run --release --example register_model [trials]

use std::time::Instant;

use gripper_label::config::PipelineConfig;
use gripper_label::registration::{ModelRegistrar, Scene};
use gripper_label::synthetic::pose_error;
use gripper_label::{RigidTransform, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pose(rng: &mut impl Rng) -> RigidTransform {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let t = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.2..1.0));
    RigidTransform::from_axis_angle(axis.normalize(), rng.random_range(0.0..std::f64::consts::PI)).with_translation(t)
}

fn main() -> gripper_label::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let config = PipelineConfig::default();
    let model = config.load_model()?;
    let registrar = ModelRegistrar::new(model.cloud.clone(), config.tracker_params().registration)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut good = 0;
    for k in 0..trials {
        let truth = random_pose(&mut rng);
        let scene = Scene::new(model.cloud.transformed(&truth));
        let coarse = registrar.coarse(&scene)?;
        let fine = registrar.refine(&scene, &coarse.transform)?;
        let e = pose_error(&fine.transform, &truth, &model.group);
        let ok = e.translation <= 1e-4 && e.rotation.to_degrees() <= 0.1;
        good += ok as usize;
        println!(
            "trial {k}: ransac fitness {:.3} after {} draws, icp fitness {:.4}, error {:.2e} m {:.2e}°",
            coarse.fitness,
            coarse.iterations,
            fine.fitness,
            e.translation,
            e.rotation.to_degrees()
        );
    }
    println!("{good}/{trials} within 1e-4 m and 0.1° in {:.2?}", start.elapsed());
    Ok(())
}
