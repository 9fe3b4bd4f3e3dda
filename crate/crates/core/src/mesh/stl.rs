use super::{parse_f64, Location, Material, Mesh, MeshError, MeshFormat};
use crate::math::Vec3;

const FMT: MeshFormat = MeshFormat::Stl;
const BINARY_HEADER: usize = 80;
const FACET_SIZE: usize = 50;

/// STL carries unindexed facets: each facet contributes three fresh vertices.
/// Facet normals are ignored and derived from winding later.
pub(super) fn parse(bytes: &[u8]) -> Result<Mesh, MeshError> {
    if let Some(n) = binary_facet_count(bytes) {
        if bytes.len() == BINARY_HEADER + 4 + n * FACET_SIZE {
            return Ok(parse_binary(bytes, n));
        }
    }
    let head = bytes.iter().skip_while(|b| b.is_ascii_whitespace()).take(5);
    if head.eq(b"solid".iter()) {
        return parse_ascii(bytes);
    }
    match binary_facet_count(bytes) {
        Some(n) => Err(MeshError::malformed(
            FMT,
            Location::Offset(BINARY_HEADER),
            format!(
                "binary STL declares {n} facets ({} bytes) but file has {} bytes",
                BINARY_HEADER + 4 + n * FACET_SIZE,
                bytes.len()
            ),
        )),
        None => Err(MeshError::malformed(FMT, Location::Offset(0), "neither ASCII nor binary STL")),
    }
}

fn binary_facet_count(bytes: &[u8]) -> Option<usize> {
    let b = bytes.get(BINARY_HEADER..BINARY_HEADER + 4)?;
    Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
}

fn mesh_from_soup(vertices: Vec<Vec3>) -> Mesh {
    let triangles = (0..vertices.len() as u32 / 3).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    Mesh::from_triangles(vertices, triangles)
}

fn parse_binary(bytes: &[u8], n: usize) -> Mesh {
    let mut vertices = Vec::with_capacity(n * 3);
    for f in 0..n {
        let base = BINARY_HEADER + 4 + f * FACET_SIZE + 12;
        for k in 0..3 {
            let at = |c: usize| {
                let o = base + k * 12 + c * 4;
                f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64
            };
            vertices.push(Vec3::new(at(0), at(1), at(2)));
        }
    }
    // Non-finite coordinates cannot be reported per-line in binary; drop those facets.
    let mut soup = Vec::with_capacity(vertices.len());
    for tri in vertices.chunks_exact(3) {
        if tri.iter().all(|v| v.is_finite()) {
            soup.extend_from_slice(tri);
        }
    }
    mesh_from_soup(soup)
}

fn parse_ascii(bytes: &[u8]) -> Result<Mesh, MeshError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| MeshError::malformed(FMT, Location::Offset(e.valid_up_to()), "invalid UTF-8"))?;
    let mut vertices = Vec::new();
    let mut loop_verts: Vec<Vec3> = Vec::new();
    let mut in_loop = false;
    for (lineno, line) in text.lines().enumerate() {
        let loc = Location::Line(lineno + 1);
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("solid") | Some("endsolid") | Some("facet") | Some("endfacet") => {}
            Some("outer") => {
                if in_loop {
                    return Err(MeshError::malformed(FMT, loc, "nested loop"));
                }
                in_loop = true;
                loop_verts.clear();
            }
            Some("vertex") => {
                if !in_loop || toks.len() < 4 {
                    return Err(MeshError::malformed(FMT, loc, "vertex outside a loop or missing coordinates"));
                }
                loop_verts.push(Vec3::new(
                    parse_f64(toks[1], FMT, loc)?,
                    parse_f64(toks[2], FMT, loc)?,
                    parse_f64(toks[3], FMT, loc)?,
                ));
            }
            Some("endloop") => {
                if !in_loop || loop_verts.len() < 3 {
                    return Err(MeshError::malformed(FMT, loc, "loop with fewer than three vertices"));
                }
                for k in 1..loop_verts.len() - 1 {
                    vertices.extend_from_slice(&[loop_verts[0], loop_verts[k], loop_verts[k + 1]]);
                }
                in_loop = false;
            }
            Some(other) => return Err(MeshError::malformed(FMT, loc, format!("unexpected keyword `{other}`"))),
        }
    }
    if in_loop {
        return Err(MeshError::malformed(FMT, Location::Line(text.lines().count()), "unterminated loop"));
    }
    let mut mesh = mesh_from_soup(vertices);
    mesh.materials = vec![Material::default()];
    Ok(mesh)
}
