//! Visibility pass: z-buffered triangle rasterization into a per-sample
//! buffer of (triangle, perspective-correct barycentrics, view depth).

use crate::camera::Intrinsics;
use crate::math::Mat4;
use crate::mesh::Mesh;

pub(crate) const EMPTY: u32 = u32::MAX;

pub(crate) struct GBuffer {
    pub tri: Vec<u32>,
    pub bary: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
}

impl GBuffer {
    fn new(width: u32, height: u32) -> GBuffer {
        let n = width as usize * height as usize;
        GBuffer {
            tri: vec![EMPTY; n],
            bary: vec![[0.0; 3]; n],
            depth: vec![f64::INFINITY; n],
        }
    }
}

/// Twice the signed area of (a, b, p), positive when p is left of a->b in a
/// y-up frame. Screen space is y-down, so callers negate.
#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Shared edges are owned by exactly one triangle: a sample lying exactly
/// on an edge is inside only for "top" or "left" edges.
#[inline]
fn owns_edge(a: [f64; 2], b: [f64; 2]) -> bool {
    let dy = b[1] - a[1];
    let dx = b[0] - a[0];
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Rasterizes `mesh` at `width` x `height` samples. Back faces (clockwise in
/// NDC) and triangles crossing the near plane are skipped; samples outside
/// [near, far] are discarded.
pub(crate) fn rasterize(mesh: &Mesh, view: &Mat4, intrinsics: &Intrinsics, width: u32, height: u32) -> GBuffer {
    let mut gb = GBuffer::new(width, height);
    let f = intrinsics.focal();
    let fx = f / intrinsics.aspect;
    let (w, h) = (width as f64, height as f64);
    let (near, far) = (intrinsics.near, intrinsics.far);

    let view_pos: Vec<_> = mesh.vertices.iter().map(|&v| view.transform_point(v)).collect();

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let pv = tri.map(|i| view_pos[i as usize]);
        let d = pv.map(|p| -p.z);
        if d.iter().any(|&z| z < near) || d.iter().all(|&z| z > far) {
            continue;
        }
        let s: [[f64; 2]; 3] = std::array::from_fn(|k| {
            let nx = fx * pv[k].x / d[k];
            let ny = f * pv[k].y / d[k];
            [(nx + 1.0) * 0.5 * w, (1.0 - ny) * 0.5 * h]
        });
        let area = -edge(s[0], s[1], s[2]);
        if !(area > 0.0) {
            continue;
        }
        let inv_area = 1.0 / area;
        let min_x = s.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = s.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = s.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = s.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let x0 = (min_x - 0.5).ceil().max(0.0) as i64;
        let x1 = ((max_x - 0.5).floor() as i64).min(width as i64 - 1);
        let y0 = (min_y - 0.5).ceil().max(0.0) as i64;
        let y1 = ((max_y - 0.5).floor() as i64).min(height as i64 - 1);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let owns = [owns_edge(s[1], s[2]), owns_edge(s[2], s[0]), owns_edge(s[0], s[1])];
        let inv_d = d.map(|z| 1.0 / z);

        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            let row = y as usize * width as usize;
            for x in x0..=x1 {
                let p = [x as f64 + 0.5, py];
                let e = [-edge(s[1], s[2], p), -edge(s[2], s[0], p), -edge(s[0], s[1], p)];
                if (0..3).any(|k| e[k] < 0.0 || (e[k] == 0.0 && !owns[k])) {
                    continue;
                }
                let b = e.map(|v| v * inv_area);
                let recip = b[0] * inv_d[0] + b[1] * inv_d[1] + b[2] * inv_d[2];
                let z = 1.0 / recip;
                if !(near..=far).contains(&z) {
                    continue;
                }
                let i = row + x as usize;
                if z < gb.depth[i] {
                    gb.depth[i] = z;
                    gb.tri[i] = t as u32;
                    gb.bary[i] = [b[0] * inv_d[0] * z, b[1] * inv_d[1] * z, b[2] * inv_d[2] * z];
                }
            }
        }
    }
    gb
}
