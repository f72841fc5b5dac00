//! On-disk dataset layout.
//!
//! ```text
//! <dataset>/<demo_id>/cameras.json
//! <dataset>/<demo_id>/frame_<t>/view_<c>.depth.bin   (or .depth.png)
//! <dataset>/<demo_id>/frame_<t>/view_<c>.color.png
//! <dataset>/<demo_id>/frame_<t>/view_<c>.label.png   (synthetic only)
//! <dataset>/<demo_id>/ground_truth.jsonl             (synthetic only)
//! ```
//!
//! `.depth.bin` is a 16-byte header (`DPTH`, width and height as u32, a
//! reserved f32) followed by row-major little-endian f32 meters.
//! `.depth.png` is 16-bit grayscale scaled by the camera's `depth_scale`
//! (default 1 mm per unit).

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, RgbImage};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, DepthImage};
use crate::labeling::Demonstration;

pub const CAMERAS_FILE: &str = "cameras.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;
const DEPTH_MAGIC: &[u8; 4] = b"DPTH";

fn layout(path: &Path, reason: impl Into<String>) -> Error {
    Error::Layout {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn frame_dir(demo_dir: &Path, t: usize) -> PathBuf {
    demo_dir.join(format!("frame_{t}"))
}

pub fn view_path(demo_dir: &Path, t: usize, c: usize, kind: &str) -> PathBuf {
    frame_dir(demo_dir, t).join(format!("view_{c}.{kind}"))
}

/// Demo directories (those holding a cameras file), sorted by name.
pub fn list_demonstrations(dataset: &Path) -> Result<Vec<PathBuf>> {
    if !dataset.is_dir() {
        return Err(layout(dataset, "not a directory"));
    }
    let mut demos: Vec<PathBuf> = fs::read_dir(dataset)
        .map_err(|e| Error::io(dataset, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(CAMERAS_FILE).is_file())
        .collect();
    demos.sort();
    Ok(demos)
}

pub fn demo_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub fn read_cameras(path: &Path) -> Result<Vec<CameraModel>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cams: Vec<CameraModel> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if cams.is_empty() {
        return Err(layout(path, "no cameras listed"));
    }
    Ok(cams)
}

pub fn write_json_pretty<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_depth_bin(path: &Path, width: usize, height: usize, depth: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + 4 * depth.len());
    bytes.extend_from_slice(DEPTH_MAGIC);
    bytes.extend_from_slice(&(width as u32).to_le_bytes());
    bytes.extend_from_slice(&(height as u32).to_le_bytes());
    bytes.extend_from_slice(&1.0f32.to_le_bytes());
    for d in depth {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_depth_bin(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != DEPTH_MAGIC {
        return Err(layout(path, "missing DPTH header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (w, h) = (word(4), word(8));
    if bytes.len() != 16 + 4 * w * h {
        return Err(layout(path, format!("expected {w}x{h} f32 values")));
    }
    let depth = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((w, h, depth))
}

pub fn read_depth_png(path: &Path, scale: f64) -> Result<(usize, usize, Vec<f32>)> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_luma16();
    let (w, h) = img.dimensions();
    let depth = img.pixels().map(|p| (p.0[0] as f64 * scale) as f32).collect();
    Ok((w as usize, h as usize, depth))
}

pub fn write_depth_png(path: &Path, width: usize, height: usize, depth: &[f32], scale: f64) -> Result<()> {
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(width as u32, height as u32, |u, v| {
        let d = depth[v as usize * width + u as usize] as f64;
        let q = if d.is_finite() && d > 0.0 { (d / scale).round().clamp(0.0, u16::MAX as f64) } else { 0.0 };
        Luma([q as u16])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_color_png(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.pixels().map(|p| p.0).collect()))
}

pub fn write_color_png(path: &Path, width: usize, height: usize, color: &[[u8; 3]]) -> Result<()> {
    let img = RgbImage::from_fn(width as u32, height as u32, |u, v| image::Rgb(color[v as usize * width + u as usize]));
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_label_png(path: &Path, width: usize, height: usize, labels: &[u8]) -> Result<()> {
    let img = GrayImage::from_raw(width as u32, height as u32, labels.to_vec())
        .ok_or_else(|| layout(path, "label buffer does not match image size"))?;
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_label_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

fn read_view(demo_dir: &Path, t: usize, c: usize, cam: &CameraModel) -> Result<DepthImage> {
    let bin = view_path(demo_dir, t, c, "depth.bin");
    let png = view_path(demo_dir, t, c, "depth.png");
    let (w, h, depth) = if bin.is_file() {
        read_depth_bin(&bin)?
    } else if png.is_file() {
        read_depth_png(&png, cam.depth_scale.unwrap_or(DEFAULT_DEPTH_SCALE))?
    } else {
        return Err(layout(&bin, "no depth image (.depth.bin or .depth.png)"));
    };
    let color_path = view_path(demo_dir, t, c, "color.png");
    if !color_path.is_file() {
        return Err(layout(&color_path, "missing color image"));
    }
    let (cw, ch, color) = read_color_png(&color_path)?;
    if (w, h) != (cam.width, cam.height) || (cw, ch) != (w, h) {
        return Err(layout(
            &color_path,
            format!("view is {w}x{h} (color {cw}x{ch}) but camera {c} is {}x{}", cam.width, cam.height),
        ));
    }
    DepthImage::from_parts(w, h, depth, color)
}

/// Number of consecutive `frame_<t>` directories starting at 0.
pub fn count_frames(demo_dir: &Path) -> usize {
    (0..).take_while(|t| frame_dir(demo_dir, *t).is_dir()).count()
}

pub fn load_demonstration(demo_dir: &Path) -> Result<Demonstration> {
    let cameras = read_cameras(&demo_dir.join(CAMERAS_FILE))?;
    let n = count_frames(demo_dir);
    if n == 0 {
        return Err(layout(demo_dir, "no frame_0 directory"));
    }
    let frames = (0..n)
        .map(|t| {
            cameras
                .iter()
                .enumerate()
                .map(|(c, cam)| read_view(demo_dir, t, c, cam))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let demo = Demonstration {
        id: demo_id(demo_dir),
        source: Some(demo_dir.to_path_buf()),
        cameras,
        frames,
    };
    demo.validate()?;
    Ok(demo)
}

/// Writes cameras and every view (depth as `.depth.bin`, lossless).
pub fn write_demonstration(demo_dir: &Path, demo: &Demonstration) -> Result<()> {
    demo.validate()?;
    fs::create_dir_all(demo_dir).map_err(|e| Error::io(demo_dir, e))?;
    write_json_pretty(&demo_dir.join(CAMERAS_FILE), &demo.cameras)?;
    for (t, views) in demo.frames.iter().enumerate() {
        let dir = frame_dir(demo_dir, t);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (c, img) in views.iter().enumerate() {
            write_depth_bin(&view_path(demo_dir, t, c, "depth.bin"), img.width(), img.height(), img.depth_raw())?;
            write_color_png(&view_path(demo_dir, t, c, "color.png"), img.width(), img.height(), img.color_raw())?;
        }
    }
    Ok(())
}

pub fn write_lines(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a JSON Lines file, reporting the failing line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;

    fn demo() -> Demonstration {
        let cam = CameraModel::new(50.0, 50.0, 3.5, 2.5, 8, 6, RigidTransform::from_translation(0.1, 0.0, 0.0)).unwrap();
        let mut img = DepthImage::empty(8, 6);
        img.set(1, 2, 0.731_25, [10, 200, 30]);
        img.set(7, 5, 1.5, [255, 0, 7]);
        Demonstration {
            id: "d".into(),
            source: None,
            cameras: vec![cam],
            frames: vec![vec![img.clone()], vec![img]],
        }
    }

    #[test]
    fn demonstration_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo_a");
        let d = demo();
        write_demonstration(&path, &d).unwrap();
        let back = load_demonstration(&path).unwrap();
        assert_eq!(back.frames, d.frames);
        assert_eq!(back.cameras, d.cameras);
        assert_eq!(back.id, "demo_a");
        assert_eq!(list_demonstrations(dir.path()).unwrap(), vec![path]);
    }

    #[test]
    fn depth_png_uses_scale() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        write_depth_png(&p, 2, 1, &[0.5, 0.0], 0.001).unwrap();
        let (w, h, d) = read_depth_png(&p, 0.001).unwrap();
        assert_eq!((w, h), (2, 1));
        assert!((d[0] - 0.5).abs() < 1e-6);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn missing_color_is_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo");
        write_demonstration(&path, &demo()).unwrap();
        fs::remove_file(view_path(&path, 1, 0, "color.png")).unwrap();
        let err = load_demonstration(&path).unwrap_err();
        assert!(matches!(err, Error::Layout { .. }));
        assert!(err.to_string().contains("view_0.color.png"));
    }

    #[test]
    fn bad_depth_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.depth.bin");
        fs::write(&p, b"nope").unwrap();
        assert!(read_depth_bin(&p).is_err());
    }

    #[test]
    fn jsonl_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "1\n\n2\nnope\n").unwrap();
        let err = read_jsonl::<i32>(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }
}
