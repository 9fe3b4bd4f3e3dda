#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use orbitforge::camera::rng::XorShift64Star;
use orbitforge::math::Vec3;
use orbitforge::mesh::Mesh;
use orbitforge::raster::ImageBuffer;

pub fn echo_scorer() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_echo-scorer"))
}

pub fn orbitforge_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_orbitforge"))
}

/// Axis-aligned cube with outward counter-clockwise faces.
pub fn cube_obj(half: f64) -> String {
    let mut s = String::new();
    for i in 0..8 {
        let x = if i & 1 == 0 { -half } else { half };
        let y = if i & 2 == 0 { -half } else { half };
        let z = if i & 4 == 0 { -half } else { half };
        writeln!(s, "v {x} {y} {z}").unwrap();
    }
    // vertex index = 1 + x_bit + 2 y_bit + 4 z_bit
    let faces = [
        [1, 3, 4, 2], // -z
        [5, 6, 8, 7], // +z
        [1, 5, 7, 3], // -x
        [2, 4, 8, 6], // +x
        [1, 2, 6, 5], // -y
        [3, 7, 8, 4], // +y
    ];
    for f in faces {
        writeln!(s, "f {} {} {}", f[0], f[1], f[2]).unwrap();
        writeln!(s, "f {} {} {}", f[0], f[2], f[3]).unwrap();
    }
    s
}

pub fn tetra_obj() -> String {
    "v 1 1 1\nv -1 -1 1\nv -1 1 -1\nv 1 -1 -1\nf 1 2 4\nf 1 4 3\nf 1 3 2\nf 2 3 4\n".into()
}

/// Latitude-longitude sphere with deterministic radial bumps; roughly
/// `2 * slices * (stacks - 1)` triangles.
pub fn sphere_obj(stacks: usize, slices: usize, seed: u64, bump: f64) -> String {
    let mut rng = XorShift64Star::new(seed);
    let mut s = String::new();
    writeln!(s, "v 0 1 0").unwrap();
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            let r = 1.0 + bump * (rng.next_unit() - 0.5);
            writeln!(s, "v {} {} {}", r * phi.sin() * theta.cos(), r * phi.cos(), -r * phi.sin() * theta.sin()).unwrap();
        }
    }
    writeln!(s, "v 0 -1 0").unwrap();
    let bottom = 2 + (stacks - 1) * slices;
    let idx = |ring: usize, j: usize| 2 + ring * slices + (j % slices);
    for j in 0..slices {
        writeln!(s, "f 1 {} {}", idx(0, j), idx(0, j + 1)).unwrap();
    }
    for ring in 0..stacks - 2 {
        for j in 0..slices {
            let (a, b, c, d) = (idx(ring, j), idx(ring + 1, j), idx(ring + 1, j + 1), idx(ring, j + 1));
            writeln!(s, "f {a} {b} {c}\nf {a} {c} {d}").unwrap();
        }
    }
    for j in 0..slices {
        writeln!(s, "f {bottom} {} {}", idx(stacks - 2, j + 1), idx(stacks - 2, j)).unwrap();
    }
    s
}

/// Unit cube with per-face UVs, a material library and a checker texture.
pub fn write_textured_cube(dir: &Path) -> PathBuf {
    let mut tex = Vec::new();
    for y in 0..16u32 {
        for x in 0..16u32 {
            let on = (x / 4 + y / 4) % 2 == 0;
            tex.extend_from_slice(if on { &[230, 60, 40, 255] } else { &[40, 90, 220, 255] });
        }
    }
    ImageBuffer::from_rgba(16, 16, tex).write_png(&dir.join("checker.png")).unwrap();
    std::fs::write(dir.join("cube.mtl"), "newmtl skin\nKd 1 1 1\nmap_Kd checker.png\n").unwrap();
    let mut obj = String::from("mtllib cube.mtl\nusemtl skin\n");
    let body = cube_obj(0.5);
    obj.push_str(&body.lines().filter(|l| l.starts_with("v ")).map(|l| format!("{l}\n")).collect::<String>());
    obj.push_str("vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n");
    for l in body.lines().filter(|l| l.starts_with("f ")).enumerate() {
        let (k, line) = l;
        let ids: Vec<&str> = line[2..].split_whitespace().collect();
        let uv = if k % 2 == 0 { [1, 2, 3] } else { [1, 3, 4] };
        writeln!(obj, "f {}/{} {}/{} {}/{}", ids[0], uv[0], ids[1], uv[1], ids[2], uv[2]).unwrap();
    }
    let path = dir.join("cube.obj");
    std::fs::write(&path, obj).unwrap();
    path
}

/// Random triangle soup with vertices in a skewed box.
pub fn random_mesh(rng: &mut XorShift64Star, n_vertices: usize, n_triangles: usize) -> Mesh {
    let scale = Vec3::new(0.1 + 5.0 * rng.next_unit(), 0.1 + 5.0 * rng.next_unit(), 0.1 + 5.0 * rng.next_unit());
    let offset = Vec3::new(20.0 * rng.next_unit() - 10.0, 20.0 * rng.next_unit() - 10.0, 20.0 * rng.next_unit() - 10.0);
    let vertices = (0..n_vertices)
        .map(|_| {
            Vec3::new(
                offset.x + scale.x * rng.next_unit(),
                offset.y + scale.y * rng.next_unit(),
                offset.z + scale.z * rng.next_unit(),
            )
        })
        .collect();
    let triangles = (0..n_triangles)
        .map(|_| std::array::from_fn(|_| (rng.next_u64() % n_vertices as u64) as u32))
        .collect();
    Mesh::from_triangles(vertices, triangles)
}

/// Recursively collects `(relative path, bytes)` of every PNG under `dir`.
pub fn png_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "png") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
