//! Writes the built-in gripper mesh as an OBJ file.
//!
//! cargo run --example write_gripper_fixture [path]

use std::path::PathBuf;

use gripper_label::mesh::gripper_mesh;

fn main() -> std::io::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/gripper.obj"));
    let mesh = gripper_mesh();
    std::fs::write(&path, mesh.to_obj("parallel-jaw gripper, meters"))?;
    println!("{}: {} vertices, {} triangles", path.display(), mesh.vertices().len(), mesh.triangles().len());
    Ok(())
}
