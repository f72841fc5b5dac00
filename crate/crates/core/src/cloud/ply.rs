//! Minimal PLY reader/writer (ASCII and binary little-endian).
//!
//! Point clouds use the vertex properties `x y z [red green blue] [nx ny nz]`,
//! with colors stored as `uchar`. Meshes add a `face` element with a
//! `vertex_indices` (or `vertex_index`) list.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, ScalarType),
    List(String, ScalarType, ScalarType),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List(n, _, _) => n,
        }
    }
}

#[derive(Debug, Clone)]
struct ElementDef {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Parsed element rows. Scalars and lists are both stored as `Vec<f64>`
/// (a scalar is a one-entry list).
#[derive(Debug, Clone)]
pub struct PlyElement {
    pub name: String,
    pub property_names: Vec<String>,
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl PlyElement {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.property_names.iter().position(|p| p == name)
    }
}

#[derive(Debug, Clone)]
pub struct PlyData {
    pub elements: Vec<PlyElement>,
}

impl PlyData {
    pub fn element(&self, name: &str) -> Option<&PlyElement> {
        self.elements.iter().find(|e| e.name == name)
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_ply(path: &Path) -> Result<PlyData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes, path)
}

pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<PlyData> {
    // header
    let mut pos = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut defs: Vec<ElementDef> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(path, line_no + 1, "unterminated header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| parse_err(path, line_no + 1, "header is not UTF-8"))?
            .trim_end_matches('\r')
            .trim();
        pos += end + 1;
        line_no += 1;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("ply") if line_no == 1 => {}
            _ if line_no == 1 => return Err(parse_err(path, 1, "missing `ply` magic")),
            Some("format") => {
                format = Some(match words.next() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    other => {
                        return Err(parse_err(path, line_no, format!("unsupported format {other:?}")))
                    }
                })
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = words.next().ok_or_else(|| parse_err(path, line_no, "element name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(path, line_no, "element count"))?;
                defs.push(ElementDef {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let def = defs
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line_no, "property before element"))?;
                let ty = words.next().ok_or_else(|| parse_err(path, line_no, "property type"))?;
                if ty == "list" {
                    let ct = words.next().and_then(ScalarType::parse);
                    let it = words.next().and_then(ScalarType::parse);
                    let name = words.next();
                    match (ct, it, name) {
                        (Some(ct), Some(it), Some(n)) => {
                            def.props.push(Property::List(n.to_string(), ct, it))
                        }
                        _ => return Err(parse_err(path, line_no, "malformed list property")),
                    }
                } else {
                    let st = ScalarType::parse(ty)
                        .ok_or_else(|| parse_err(path, line_no, format!("unknown type `{ty}`")))?;
                    let name = words.next().ok_or_else(|| parse_err(path, line_no, "property name"))?;
                    def.props.push(Property::Scalar(name.to_string(), st));
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(parse_err(path, line_no, format!("unexpected header keyword `{other}`")))
            }
        }
    }
    let format = format.ok_or_else(|| parse_err(path, line_no, "missing format line"))?;
    let body = &bytes[pos..];
    let elements = match format {
        PlyFormat::Ascii => parse_ascii_body(body, &defs, path, line_no)?,
        PlyFormat::BinaryLittleEndian => parse_binary_body(body, &defs, path)?,
    };
    Ok(PlyData { elements })
}

fn parse_ascii_body(body: &[u8], defs: &[ElementDef], path: &Path, header_lines: usize) -> Result<Vec<PlyElement>> {
    let text = std::str::from_utf8(body).map_err(|_| parse_err(path, header_lines + 1, "body is not UTF-8"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header_lines + i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut out = Vec::new();
    for def in defs {
        let mut rows = Vec::with_capacity(def.count);
        for _ in 0..def.count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse_err(path, header_lines, format!("truncated `{}` element", def.name)))?;
            let mut nums = line.split_whitespace().map(|w| {
                w.parse::<f64>()
                    .map_err(|_| parse_err(path, ln, format!("bad number `{w}`")))
            });
            let mut next = || nums.next().unwrap_or_else(|| Err(parse_err(path, ln, "too few values")));
            let mut row = Vec::with_capacity(def.props.len());
            for prop in &def.props {
                match prop {
                    Property::Scalar(..) => row.push(vec![next()?]),
                    Property::List(..) => {
                        let n = next()? as usize;
                        let items = (0..n).map(|_| next()).collect::<Result<Vec<_>>>()?;
                        row.push(items);
                    }
                }
            }
            rows.push(row);
        }
        out.push(PlyElement {
            name: def.name.clone(),
            property_names: def.props.iter().map(|p| p.name().to_string()).collect(),
            rows,
        });
    }
    Ok(out)
}

fn parse_binary_body(body: &[u8], defs: &[ElementDef], path: &Path) -> Result<Vec<PlyElement>> {
    let mut off = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let slice = body
            .get(off..off + n)
            .ok_or_else(|| parse_err(path, 0, format!("binary body truncated at byte offset {off}")))?;
        off += n;
        Ok(slice)
    };
    let mut out = Vec::new();
    for def in defs {
        let mut rows = Vec::with_capacity(def.count);
        for _ in 0..def.count {
            let mut row = Vec::with_capacity(def.props.len());
            for prop in &def.props {
                match prop {
                    Property::Scalar(_, t) => row.push(vec![t.read_le(take(t.size())?)]),
                    Property::List(_, ct, it) => {
                        let n = ct.read_le(take(ct.size())?) as usize;
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            items.push(it.read_le(take(it.size())?));
                        }
                        row.push(items);
                    }
                }
            }
            rows.push(row);
        }
        out.push(PlyElement {
            name: def.name.clone(),
            property_names: def.props.iter().map(|p| p.name().to_string()).collect(),
            rows,
        });
    }
    Ok(out)
}

/// Reads the `vertex` element of a PLY file as a point cloud.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let data = read_ply(path)?;
    let vertex = data
        .element("vertex")
        .ok_or_else(|| parse_err(path, 0, "no vertex element"))?;
    let col = |n: &str| vertex.column(n);
    let (x, y, z) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, 0, "vertex element lacks x/y/z")),
    };
    let positions = vertex
        .rows
        .iter()
        .map(|r| Vec3::new(r[x][0], r[y][0], r[z][0]))
        .collect();
    let mut cloud = PointCloud::new(positions);
    if let (Some(r), Some(g), Some(b)) = (col("red"), col("green"), col("blue")) {
        let colors = vertex
            .rows
            .iter()
            .map(|row| [row[r][0] / 255.0, row[g][0] / 255.0, row[b][0] / 255.0])
            .collect();
        cloud = cloud.with_colors(colors)?;
    }
    if let (Some(a), Some(b), Some(c)) = (col("nx"), col("ny"), col("nz")) {
        let normals = vertex
            .rows
            .iter()
            .map(|row| Vec3::new(row[a][0], row[b][0], row[c][0]))
            .collect();
        cloud = cloud.with_normals(normals)?;
    }
    Ok(cloud)
}

fn color_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    let bytes = encode_point_cloud(cloud, format);
    fs::write(path, bytes).map_err(|e| Error::io(PathBuf::from(path), e))
}

pub fn encode_point_cloud(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut out = Vec::new();
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let _ = writeln!(out, "ply\nformat {fmt} 1.0\nelement vertex {}", cloud.len());
    let _ = writeln!(out, "property double x\nproperty double y\nproperty double z");
    if cloud.colors().is_some() {
        let _ = writeln!(out, "property uchar red\nproperty uchar green\nproperty uchar blue");
    }
    if cloud.normals().is_some() {
        let _ = writeln!(out, "property double nx\nproperty double ny\nproperty double nz");
    }
    let _ = writeln!(out, "end_header");
    for i in 0..cloud.len() {
        let p = cloud.positions()[i];
        let c = cloud.colors().map(|c| c[i].map(color_u8));
        let n = cloud.normals().map(|n| n[i]);
        match format {
            PlyFormat::Ascii => {
                let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
                if let Some(c) = c {
                    let _ = write!(out, " {} {} {}", c[0], c[1], c[2]);
                }
                if let Some(n) = n {
                    let _ = write!(out, " {} {} {}", n.x, n.y, n.z);
                }
                out.push(b'\n');
            }
            PlyFormat::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(c) = c {
                    out.extend_from_slice(&c);
                }
                if let Some(n) = n {
                    for v in [n.x, n.y, n.z] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
        }
    }
    out
}
