//! Mesh ingestion: OBJ (+MTL), PLY and STL parsing into an indexed triangle mesh.

mod obj;
mod ply;
mod stl;
mod writer;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

pub use writer::write_obj;

/// Albedo used for faces that reference no material.
pub const DEFAULT_ALBEDO: [f64; 3] = [0.8, 0.8, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Ply,
    Stl,
}

impl MeshFormat {
    pub fn from_extension(path: &Path) -> Option<MeshFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

impl fmt::Display for MeshFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Ply => "ply",
            MeshFormat::Stl => "stl",
        })
    }
}

/// Position of a syntax error: a 1-based line for text formats, a byte
/// offset for binary ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("malformed {format} file at {location}: {message}")]
    MalformedFile {
        format: MeshFormat,
        location: Location,
        message: String,
    },
    #[error("empty geometry: {0}")]
    EmptyGeometry(&'static str),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("unknown mesh format for {0}")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MeshError {
    pub(crate) fn malformed(format: MeshFormat, location: Location, message: impl Into<String>) -> Self {
        MeshError::MalformedFile {
            format,
            location,
            message: message.into(),
        }
    }
}

/// Decoded 8-bit RGBA texture, row 0 at the top of the image.
#[derive(Clone, PartialEq)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub rgba: Vec<u8>,
}

impl fmt::Debug for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Texture")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Texture {
    /// Decodes an 8-bit RGB or RGBA PNG. Anything else is unsupported.
    pub fn decode_png(bytes: &[u8]) -> Result<Texture, MeshError> {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder
            .read_info()
            .map_err(|e| MeshError::UnsupportedFeature(format!("texture is not a readable PNG: {e}")))?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| MeshError::UnsupportedFeature("texture too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| MeshError::UnsupportedFeature(format!("texture decode failed: {e}")))?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(MeshError::UnsupportedFeature(format!(
                "texture bit depth {:?}; only 8-bit PNG is supported",
                info.bit_depth
            )));
        }
        let pixels = info.width as usize * info.height as usize;
        let rgba = match info.color_type {
            png::ColorType::Rgba => buf[..pixels * 4].to_vec(),
            png::ColorType::Rgb => buf[..pixels * 3]
                .chunks_exact(3)
                .flat_map(|p| [p[0], p[1], p[2], 255])
                .collect(),
            other => {
                return Err(MeshError::UnsupportedFeature(format!(
                    "texture color type {other:?}; only RGB/RGBA PNG is supported"
                )))
            }
        };
        Ok(Texture {
            width: info.width,
            height: info.height,
            rgba,
        })
    }

    pub fn texel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    /// Linear RGB in [0,1]^3.
    pub albedo: [f64; 3],
    /// When present, multiplies `albedo` at the UV-sampled location.
    pub texture: Option<Arc<Texture>>,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            name: "default".into(),
            albedo: DEFAULT_ALBEDO,
            texture: None,
        }
    }
}

/// Per-corner attribute with its own index triples parallel to `Mesh::triangles`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedAttribute<T> {
    pub values: Vec<T>,
    pub indices: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Option<IndexedAttribute<Vec3>>,
    pub uvs: Option<IndexedAttribute<[f64; 2]>>,
    pub materials: Vec<Material>,
    pub triangle_material: Vec<u32>,
}

impl Mesh {
    /// Builds a single-material mesh from raw positions and triangles.
    pub fn from_triangles(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Mesh {
        let n = triangles.len();
        Mesh {
            vertices,
            triangles,
            normals: None,
            uvs: None,
            materials: vec![Material::default()],
            triangle_material: vec![0; n],
        }
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= nv) {
                return Err(format!("triangle {t} indexes past {nv} vertices"));
            }
        }
        if let Some(n) = &self.normals {
            check_attribute("normal", n, self.triangles.len())?;
            for (i, v) in n.values.iter().enumerate() {
                if (v.length() - 1.0).abs() > 1e-6 {
                    return Err(format!("normal {i} is not unit length"));
                }
            }
        }
        if let Some(uv) = &self.uvs {
            check_attribute("uv", uv, self.triangles.len())?;
            if uv.values.iter().any(|c| !(0.0..=1.0).contains(&c[0]) || !(0.0..=1.0).contains(&c[1])) {
                return Err("uv outside [0,1]^2".into());
            }
        }
        if self.triangle_material.len() != self.triangles.len() {
            return Err("triangle_material length differs from triangle count".into());
        }
        if self
            .triangle_material
            .iter()
            .any(|&m| m as usize >= self.materials.len())
        {
            return Err("triangle material index out of range".into());
        }
        for m in &self.materials {
            if m.albedo.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(format!("material {} albedo outside [0,1]", m.name));
            }
        }
        Ok(())
    }
}

fn check_attribute<T>(name: &str, attr: &IndexedAttribute<T>, n_tris: usize) -> Result<(), String> {
    if attr.indices.len() != n_tris {
        return Err(format!("{name} index triples do not parallel triangles"));
    }
    let n = attr.values.len();
    if attr.indices.iter().flatten().any(|&i| i as usize >= n) {
        return Err(format!("{name} index out of range"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

/// Resolves a file referenced from inside a mesh (material library, texture)
/// to its bytes. Returning `None` means the reference is unavailable.
pub trait Resolver {
    fn resolve(&self, name: &str) -> Option<Vec<u8>>;
}

/// Resolver for in-memory parsing: every external reference is missing.
pub struct NoExternalFiles;

impl Resolver for NoExternalFiles {
    fn resolve(&self, _name: &str) -> Option<Vec<u8>> {
        None
    }
}

/// Resolves references relative to a directory on disk.
pub struct DirResolver<'a>(pub &'a Path);

impl Resolver for DirResolver<'_> {
    fn resolve(&self, name: &str) -> Option<Vec<u8>> {
        let rel = name.replace('\\', "/");
        std::fs::read(self.0.join(rel)).ok()
    }
}

/// Parses raw file content. External references (MTL, textures) are treated as missing.
pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<Mesh, MeshError> {
    parse_mesh_with(bytes, format, &NoExternalFiles)
}

pub fn parse_mesh_with(bytes: &[u8], format: MeshFormat, resolver: &dyn Resolver) -> Result<Mesh, MeshError> {
    if bytes.is_empty() {
        return Err(MeshError::malformed(format, Location::Offset(0), "empty input"));
    }
    if bytes.starts_with(&[0x1f, 0x8b]) {
        return Err(MeshError::UnsupportedFeature("gzip-compressed mesh".into()));
    }
    let mesh = match format {
        MeshFormat::Obj => obj::parse(bytes, resolver)?,
        MeshFormat::Ply => ply::parse(bytes)?,
        MeshFormat::Stl => stl::parse(bytes)?,
    };
    if mesh.triangles.is_empty() {
        return Err(MeshError::EmptyGeometry("no triangles"));
    }
    debug_assert_eq!(mesh.check_invariants(), Ok(()));
    Ok(mesh)
}

/// Reads and parses a mesh file, inferring the format from its extension and
/// resolving material libraries and textures next to it.
pub fn load_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let format = MeshFormat::from_extension(path)
        .ok_or_else(|| MeshError::UnknownFormat(path.display().to_string()))?;
    let bytes = std::fs::read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_mesh_with(&bytes, format, &DirResolver(dir))
}

pub fn compute_bounds(mesh: &Mesh) -> Result<BoundingBox, MeshError> {
    let mut iter = mesh.vertices.iter();
    let first = *iter.next().ok_or(MeshError::EmptyGeometry("no vertices"))?;
    let (min, max) = iter.fold((first, first), |(lo, hi), &v| (lo.component_min(v), hi.component_max(v)));
    Ok(BoundingBox { min, max })
}

/// Replaces normals with per-vertex area-weighted averages of incident face
/// normals. Vertices without a nondegenerate incident face get +Y.
pub fn derive_normals(mut mesh: Mesh) -> Mesh {
    let mut acc = vec![Vec3::ZERO; mesh.vertices.len()];
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i as usize]);
        // |cross| is twice the triangle area, so summing raw cross products area-weights.
        let n = (b - a).cross(c - a);
        if n.length_squared() == 0.0 {
            continue;
        }
        for &i in tri {
            acc[i as usize] += n;
        }
    }
    let values = acc
        .into_iter()
        .map(|n| n.try_normalize().unwrap_or(Vec3::UNIT_Y))
        .collect();
    mesh.normals = Some(IndexedAttribute {
        values,
        indices: mesh.triangles.clone(),
    });
    mesh
}

/// Shared helpers for the text parsers.
pub(crate) fn parse_f64(tok: &str, format: MeshFormat, loc: Location) -> Result<f64, MeshError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(MeshError::malformed(format, loc, format!("non-finite number `{tok}`"))),
        Err(_) => Err(MeshError::malformed(format, loc, format!("invalid number `{tok}`"))),
    }
}

pub(crate) fn unit_or_up(v: Vec3) -> Vec3 {
    v.try_normalize().unwrap_or(Vec3::UNIT_Y)
}

/// Maps a texture coordinate into [0,1], wrapping values outside it.
pub(crate) fn wrap_uv(c: f64) -> f64 {
    if (0.0..=1.0).contains(&c) {
        c
    } else {
        c.rem_euclid(1.0)
    }
}
