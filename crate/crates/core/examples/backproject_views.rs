//! Renders one noiseless frame of the gripper from three cameras, lifts every
//! view into the world frame and merges them. Each gripper point should lie
//! on the posed mesh.
//!
//! cargo run --release --example backproject_views [out.ply]

use gripper_label::cloud::merge;
use gripper_label::cloud::ply::{write_point_cloud, PlyFormat};
use gripper_label::geometry::backproject_frame_indexed;
use gripper_label::mesh::gripper_mesh;
use gripper_label::synthetic::{generate_synthetic_demo, ClutterSpec, NoiseModel, ScenarioFile, LABEL_GRIPPER};

fn main() -> gripper_label::Result<()> {
    let file = ScenarioFile {
        frames: 1,
        noise: NoiseModel::none(),
        clutter: ClutterSpec { boxes: 0, ..Default::default() },
        ..Default::default()
    };
    let mesh = gripper_mesh();
    let synth = generate_synthetic_demo(&mesh, &file.scenario(0)?, "demo_000")?;
    let posed = mesh.transformed(&synth.truth[0]);

    let mut clouds = Vec::new();
    for (c, (cam, img)) in synth.demo.cameras.iter().zip(&synth.demo.frames[0]).enumerate() {
        let (cloud, pixels) = backproject_frame_indexed(cam, img, 1)?;
        let worst = cloud
            .positions()
            .iter()
            .zip(&pixels)
            .filter(|(_, &px)| synth.labels[0][c][px] == LABEL_GRIPPER)
            .map(|(p, _)| posed.distance_to_surface(p))
            .fold(0.0f64, f64::max);
        println!(
            "camera {c} at {:.3?}: {} points, farthest gripper point {:.2e} m off the mesh",
            cam.center().as_slice(),
            cloud.len(),
            worst
        );
        clouds.push(cloud);
    }
    let merged = merge(&clouds)?;
    println!("merged {} points", merged.len());

    if let Some(path) = std::env::args().nth(1) {
        write_point_cloud(path.as_ref(), &merged, PlyFormat::BinaryLittleEndian)?;
        println!("wrote {path}");
    }
    Ok(())
}
