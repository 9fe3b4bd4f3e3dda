use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::{
    parse_f64, unit_or_up, wrap_uv, IndexedAttribute, Location, Material, Mesh, MeshError, MeshFormat, Resolver,
    Texture,
};
use crate::math::Vec3;

const FMT: MeshFormat = MeshFormat::Obj;

#[derive(Clone, Copy)]
struct Corner {
    v: u32,
    vt: Option<u32>,
    vn: Option<u32>,
}

struct Materials<'r> {
    resolver: &'r dyn Resolver,
    list: Vec<Material>,
    by_name: HashMap<String, u32>,
    /// Definitions loaded from mtllib statements, not yet referenced.
    library: HashMap<String, Material>,
}

impl<'r> Materials<'r> {
    fn new(resolver: &'r dyn Resolver) -> Self {
        Materials {
            resolver,
            list: vec![Material::default()],
            by_name: HashMap::new(),
            library: HashMap::new(),
        }
    }

    fn load_library(&mut self, name: &str) -> Result<(), MeshError> {
        let Some(bytes) = self.resolver.resolve(name) else {
            log::warn!("material library `{name}` not found; using default albedo");
            return Ok(());
        };
        for m in parse_mtl(&bytes, self.resolver)? {
            self.library.insert(m.name.clone(), m);
        }
        Ok(())
    }

    fn index_of(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.by_name.get(name) {
            return i;
        }
        let material = self.library.get(name).cloned().unwrap_or_else(|| {
            log::warn!("material `{name}` is not defined; using default albedo");
            Material {
                name: name.to_string(),
                ..Material::default()
            }
        });
        let i = self.list.len() as u32;
        self.list.push(material);
        self.by_name.insert(name.to_string(), i);
        i
    }
}

/// Resolves a 1-based (or negative, relative) OBJ index against `len` elements.
fn resolve_index(tok: &str, len: usize, what: &str, loc: Location) -> Result<u32, MeshError> {
    let raw: i64 = tok
        .parse()
        .map_err(|_| MeshError::malformed(FMT, loc, format!("invalid {what} index `{tok}`")))?;
    let idx = match raw {
        0 => return Err(MeshError::malformed(FMT, loc, format!("{what} index 0 is invalid"))),
        r if r > 0 => r - 1,
        r => len as i64 + r,
    };
    if idx < 0 || idx as usize >= len {
        return Err(MeshError::malformed(
            FMT,
            loc,
            format!("{what} index {raw} out of range ({len} defined)"),
        ));
    }
    Ok(idx as u32)
}

fn parse_vec3(toks: &[&str], loc: Location) -> Result<Vec3, MeshError> {
    if toks.len() < 3 {
        return Err(MeshError::malformed(FMT, loc, "expected three coordinates"));
    }
    Ok(Vec3::new(
        parse_f64(toks[0], FMT, loc)?,
        parse_f64(toks[1], FMT, loc)?,
        parse_f64(toks[2], FMT, loc)?,
    ))
}

pub(super) fn parse(bytes: &[u8], resolver: &dyn Resolver) -> Result<Mesh, MeshError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| MeshError::malformed(FMT, Location::Offset(e.valid_up_to()), "invalid UTF-8"))?;

    let mut positions = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut normals = Vec::new();
    let mut polygons: Vec<(Vec<Corner>, u32)> = Vec::new();
    let mut materials = Materials::new(resolver);
    let mut current_material = 0u32;

    for (lineno, raw) in text.lines().enumerate() {
        let loc = Location::Line(lineno + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        let args: Vec<&str> = toks.collect();
        match keyword {
            "v" => positions.push(parse_vec3(&args, loc)?),
            "vn" => normals.push(unit_or_up(parse_vec3(&args, loc)?)),
            "vt" => {
                let u = args
                    .first()
                    .ok_or_else(|| MeshError::malformed(FMT, loc, "vt needs at least one coordinate"))?;
                let u = parse_f64(u, FMT, loc)?;
                let v = match args.get(1) {
                    Some(t) => parse_f64(t, FMT, loc)?,
                    None => 0.0,
                };
                texcoords.push([wrap_uv(u), wrap_uv(v)]);
            }
            "f" => {
                if args.len() < 3 {
                    return Err(MeshError::malformed(FMT, loc, "face needs at least three vertices"));
                }
                let mut corners = Vec::with_capacity(args.len());
                for a in &args {
                    let mut parts = a.split('/');
                    let v = resolve_index(parts.next().unwrap_or(""), positions.len(), "vertex", loc)?;
                    let vt = match parts.next() {
                        Some("") | None => None,
                        Some(t) => Some(resolve_index(t, texcoords.len(), "texcoord", loc)?),
                    };
                    let vn = match parts.next() {
                        Some("") | None => None,
                        Some(t) => Some(resolve_index(t, normals.len(), "normal", loc)?),
                    };
                    if parts.next().is_some() {
                        return Err(MeshError::malformed(FMT, loc, format!("bad face corner `{a}`")));
                    }
                    corners.push(Corner { v, vt, vn });
                }
                polygons.push((corners, current_material));
            }
            "usemtl" => {
                let name = args.join(" ");
                current_material = materials.index_of(&name);
            }
            "mtllib" => {
                for lib in &args {
                    materials.load_library(lib)?;
                }
            }
            // grouping, smoothing, lines, points and free-form data carry no triangles
            "o" | "g" | "s" | "l" | "p" | "mg" | "vp" | "cstype" | "deg" | "curv" | "curv2" | "surf" | "parm"
            | "trim" | "hole" | "end" | "bmat" | "step" | "usemap" | "maplib" | "shadow_obj" | "trace_obj" => {}
            other if other.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                log::debug!("ignoring OBJ statement `{other}` at {loc}");
            }
            other => {
                return Err(MeshError::malformed(FMT, loc, format!("unexpected token `{other}`")));
            }
        }
    }

    let all_uv = !polygons.is_empty() && polygons.iter().flat_map(|(c, _)| c).all(|c| c.vt.is_some());
    let all_n = !polygons.is_empty() && polygons.iter().flat_map(|(c, _)| c).all(|c| c.vn.is_some());

    let mut triangles = Vec::new();
    let mut uv_idx = Vec::new();
    let mut n_idx = Vec::new();
    let mut triangle_material = Vec::new();
    for (corners, mat) in &polygons {
        for k in 1..corners.len() - 1 {
            let tri = [corners[0], corners[k], corners[k + 1]];
            triangles.push(tri.map(|c| c.v));
            if all_uv {
                uv_idx.push(tri.map(|c| c.vt.unwrap_or(0)));
            }
            if all_n {
                n_idx.push(tri.map(|c| c.vn.unwrap_or(0)));
            }
            triangle_material.push(*mat);
        }
    }

    Ok(Mesh {
        vertices: positions,
        triangles,
        normals: all_n.then_some(IndexedAttribute {
            values: normals,
            indices: n_idx,
        }),
        uvs: all_uv.then_some(IndexedAttribute {
            values: texcoords,
            indices: uv_idx,
        }),
        materials: materials.list,
        triangle_material,
    })
}

/// Parses a Wavefront material library, keeping diffuse color and texture.
pub(super) fn parse_mtl(bytes: &[u8], resolver: &dyn Resolver) -> Result<Vec<Material>, MeshError> {
    let text = String::from_utf8_lossy(bytes);
    let mut out: Vec<Material> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let loc = Location::Line(lineno + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        let args: Vec<&str> = toks.collect();
        match keyword {
            "newmtl" => out.push(Material {
                name: args.join(" "),
                albedo: [1.0; 3],
                texture: None,
            }),
            "Kd" => {
                let m = out
                    .last_mut()
                    .ok_or_else(|| MeshError::malformed(FMT, loc, "Kd before newmtl"))?;
                let c = parse_vec3(&args, loc)?;
                m.albedo = [c.x, c.y, c.z].map(|v| v.clamp(0.0, 1.0));
            }
            "map_Kd" => {
                let m = out
                    .last_mut()
                    .ok_or_else(|| MeshError::malformed(FMT, loc, "map_Kd before newmtl"))?;
                // options such as `-s 1 1 1` precede the file name
                let Some(file) = args.last() else {
                    return Err(MeshError::malformed(FMT, loc, "map_Kd without a file"));
                };
                let is_png = Path::new(file)
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"));
                if !is_png {
                    return Err(MeshError::UnsupportedFeature(format!(
                        "texture `{file}`: only PNG textures are supported"
                    )));
                }
                match resolver.resolve(file) {
                    Some(png) => m.texture = Some(Arc::new(Texture::decode_png(&png)?)),
                    None => log::warn!("texture `{file}` not found; using flat albedo"),
                }
            }
            _ => {}
        }
    }
    Ok(out)
}
