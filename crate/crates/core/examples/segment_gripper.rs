//! Color segmentation against exact per-pixel membership labels, with and
//! without a small green speck of adversarial clutter.
//!
//! cargo run --release --example segment_gripper

use gripper_label::config::PipelineConfig;
use gripper_label::labeling::segment_frame;
use gripper_label::mesh::gripper_mesh;
use gripper_label::synthetic::{generate_synthetic_demo, segmentation_score, ScenarioFile};

fn main() -> gripper_label::Result<()> {
    let config = PipelineConfig::default();
    let mesh = gripper_mesh();
    for speck in [false, true] {
        let file = ScenarioFile {
            frames: 5,
            adversarial_speck: speck,
            ..Default::default()
        };
        let synth = generate_synthetic_demo(&mesh, &file.scenario(0)?, "demo_000")?;
        println!("adversarial speck: {speck}");
        for (t, views) in synth.demo.frames.iter().enumerate() {
            let s = segmentation_score(
                &synth.demo.cameras,
                views,
                &synth.labels[t],
                &config.color_filter,
                &config.cluster,
            )?;
            let seg = segment_frame(&synth.demo.cameras, views, &config)?;
            println!(
                "  frame {t}: {} of {} gripper points selected, precision {:.4}, recall {:.4}; {} after downsampling",
                s.true_positives, s.gripper, s.precision, s.recall, seg.len()
            );
        }
    }
    Ok(())
}
