use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {0}: depth must be finite and positive")]
    InvalidDepth(f64),

    #[error("image is {found_w}x{found_h} but camera expects {expected_w}x{expected_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("point clouds disagree on attribute `{0}`")]
    AttributeMismatch(&'static str),

    #[error("attribute `{attribute}` has {found} entries for {expected} points")]
    AttributeLength {
        attribute: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("voxel size must be positive, got {0}")]
    NonPositiveVoxel(f64),

    #[error("need at least {needed} points, got {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("spatial index is empty")]
    EmptyIndex,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point cloud has no colors")]
    MissingColors,

    #[error("point cloud has no normals")]
    MissingNormals,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("face references vertex {index} but mesh has {vertices} vertices")]
    IndexOutOfRange { index: usize, vertices: usize },

    #[error("mesh has no triangle with positive area")]
    EmptyMesh,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no correspondences within {max_distance} m")]
    NoCorrespondences { max_distance: f64 },

    #[error("frame {0} has no segmented end-effector points")]
    EmptyFrame(usize),

    #[error("pose track has {0} entries; at least 2 are needed to form actions")]
    TooShortTrack(usize),

    #[error("symmetry check failed: {0}")]
    Symmetry(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dataset layout error at {path}: {reason}")]
    Layout { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
