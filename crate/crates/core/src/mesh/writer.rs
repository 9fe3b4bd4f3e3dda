use std::fmt::Write;

use super::Mesh;

/// Serializes geometry as OBJ text. Coordinates use Rust's shortest
/// round-trip float formatting, so parsing the output reproduces them bit-exactly.
/// Materials are not written.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(uv) = &mesh.uvs {
        for t in &uv.values {
            let _ = writeln!(out, "vt {} {}", t[0], t[1]);
        }
    }
    if let Some(n) = &mesh.normals {
        for v in &n.values {
            let _ = writeln!(out, "vn {} {} {}", v.x, v.y, v.z);
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        out.push('f');
        for k in 0..3 {
            let v = tri[k] + 1;
            let vt = mesh.uvs.as_ref().map(|a| a.indices[t][k] + 1);
            let vn = mesh.normals.as_ref().map(|a| a.indices[t][k] + 1);
            let _ = match (vt, vn) {
                (None, None) => write!(out, " {v}"),
                (Some(vt), None) => write!(out, " {v}/{vt}"),
                (None, Some(vn)) => write!(out, " {v}//{vn}"),
                (Some(vt), Some(vn)) => write!(out, " {v}/{vt}/{vn}"),
            };
        }
        out.push('\n');
    }
    out
}
