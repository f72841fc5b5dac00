//! Samples the gripper fixture uniformly by area and compares per-triangle
//! counts with the area fractions.
//!
//! cargo run --release --example sample_mesh [mesh.obj] [n]

use std::path::PathBuf;

use gripper_label::cloud::ply::{write_point_cloud, PlyFormat};
use gripper_label::mesh::{load_mesh, sample_uniform_with_faces};

fn main() -> gripper_label::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/gripper.obj"));
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);

    let mesh = load_mesh(&path)?;
    let (cloud, faces) = sample_uniform_with_faces(&mesh, n, 0)?;
    let area = mesh.surface_area();
    println!(
        "{}: {} vertices, {} triangles, {:.1} cm² surface",
        path.display(),
        mesh.vertices().len(),
        mesh.triangles().len(),
        area * 1e4
    );

    let mut counts = vec![0usize; mesh.triangles().len()];
    for f in faces {
        counts[f] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let expected = n as f64 * mesh.triangle_area(t) / area;
            if expected > 0.0 { (c as f64 - expected).powi(2) / expected } else { 0.0 }
        })
        .sum();
    println!("chi-square over triangles: {chi2:.1} ({} degrees of freedom)", counts.len() - 1);
    let worst = cloud
        .positions()
        .iter()
        .map(|p| mesh.distance_to_surface(p))
        .fold(0.0f64, f64::max);
    println!("farthest sample from the surface: {worst:.1e} m");

    let out = std::env::temp_dir().join("gripper_samples.ply");
    write_point_cloud(&out, &cloud, PlyFormat::Ascii)?;
    println!("wrote {}", out.display());
    Ok(())
}
