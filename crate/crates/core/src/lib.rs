//! Pose labels for hand-held gripper demonstrations from multi-view RGB-D.
//!
//! Frames are backprojected into a world-frame cloud, the green gripper is
//! segmented out, a mesh-sampled model is registered to it and tracked over
//! time, and each frame is labeled with the pose of the next one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cloud;
pub mod config;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod labeling;
pub mod mesh;
pub mod registration;
pub mod segmentation;
pub mod synthetic;
pub mod tracking;

pub use error::{Error, Result};
pub use geometry::{CameraModel, DepthImage, RigidTransform, Vec3};
