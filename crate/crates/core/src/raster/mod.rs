//! Software renderer for normalized meshes.
//!
//! Shading is Lambertian with inverse-square point lights:
//!
//! ```text
//! radiance = albedo * k * (I_ambient + sum_j I_j * max(0, n.l_j) / d_j^2)
//! ```
//!
//! clamped to [0, 1] and quantized linearly to 8 bits. `k` is
//! [`LightingSetup::exposure`], 0.25 by default, which maps ambient-only
//! lighting of a unit albedo to mid-grey.

mod gbuffer;
mod image;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{build_orbit, view_matrix, CameraError, CameraPose, CameraRig, Intrinsics};
use crate::math::Vec3;
use crate::mesh::{derive_normals, Mesh, Texture};

pub use image::{ImageBuffer, ImageError};

pub const COARSE_VIEWS: usize = 8;
pub const FINE_VIEWS: usize = 85;
pub const COARSE_RESOLUTION: u32 = 256;
pub const FINE_RESOLUTION: u32 = 512;
pub const DEFAULT_EXPOSURE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("rig has {rig} views but the {preset:?} preset expects {expected}")]
    ViewCountMismatch {
        preset: PresetKind,
        rig: usize,
        expected: usize,
    },
    #[error("invalid preset: {0}")]
    InvalidPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    pub position: Vec3,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingSetup {
    pub ambient_intensity: f64,
    pub point_lights: Vec<PointLight>,
    /// Normalization constant `k` applied to total irradiance.
    pub exposure: f64,
}

/// Ambient 2.0 plus three 8.0-intensity point lights at distance 2 on the
/// left, right and rear of the object.
pub fn default_lighting() -> LightingSetup {
    let light = |x, z| PointLight {
        position: Vec3::new(x, 0.0, z),
        intensity: 8.0,
    };
    LightingSetup {
        ambient_intensity: 2.0,
        point_lights: vec![light(-2.0, 0.0), light(2.0, 0.0), light(0.0, -2.0)],
        exposure: DEFAULT_EXPOSURE,
    }
}

/// Linear radiance of a surface point, each channel clamped to [0, 1].
pub fn shade(albedo: [f64; 3], position: Vec3, normal: Vec3, lighting: &LightingSetup) -> [f64; 3] {
    let mut irradiance = lighting.ambient_intensity;
    for light in &lighting.point_lights {
        let to_light = light.position - position;
        let d2 = to_light.length_squared();
        if d2 <= 0.0 {
            continue;
        }
        let cos = normal.dot(to_light) / d2.sqrt();
        irradiance += light.intensity * cos.max(0.0) / d2;
    }
    let k = lighting.exposure * irradiance;
    albedo.map(|a| (a * k).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TextureFilter {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Samples per pixel edge; 2 means a 2x2 box filter.
    pub supersample: u32,
    pub filter: TextureFilter,
}

impl RenderOptions {
    pub fn coarse() -> Self {
        RenderOptions {
            supersample: 1,
            filter: TextureFilter::Nearest,
        }
    }

    pub fn fine() -> Self {
        RenderOptions {
            supersample: 2,
            filter: TextureFilter::Bilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderPreset {
    pub kind: PresetKind,
    pub width: u32,
    pub height: u32,
    pub n_views: usize,
}

impl RenderPreset {
    pub fn coarse() -> Self {
        RenderPreset {
            kind: PresetKind::Coarse,
            width: COARSE_RESOLUTION,
            height: COARSE_RESOLUTION,
            n_views: COARSE_VIEWS,
        }
    }

    pub fn fine() -> Self {
        RenderPreset {
            kind: PresetKind::Fine,
            width: FINE_RESOLUTION,
            height: FINE_RESOLUTION,
            n_views: FINE_VIEWS,
        }
    }

    pub fn for_kind(kind: PresetKind) -> Self {
        match kind {
            PresetKind::Coarse => Self::coarse(),
            PresetKind::Fine => Self::fine(),
        }
    }

    pub fn with_resolution(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        let expected = match self.kind {
            PresetKind::Coarse => COARSE_VIEWS,
            PresetKind::Fine => FINE_VIEWS,
        };
        if self.n_views != expected {
            return Err(RasterError::InvalidPreset(format!(
                "{:?} preset must have {expected} views, got {}",
                self.kind, self.n_views
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RasterError::InvalidPreset("zero resolution".into()));
        }
        Ok(())
    }

    pub fn options(&self) -> RenderOptions {
        match self.kind {
            PresetKind::Coarse => RenderOptions::coarse(),
            PresetKind::Fine => RenderOptions::fine(),
        }
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            aspect: self.width as f64 / self.height as f64,
            width: self.width,
            height: self.height,
            ..Intrinsics::square(self.width)
        }
    }

    /// Coarse rigs use the fixed mid-range radius; fine rigs draw one radius
    /// in [1.6, 2.0] from `seed`.
    pub fn build_rig(&self, seed: u64) -> Result<CameraRig, RasterError> {
        self.validate()?;
        let range = match self.kind {
            PresetKind::Coarse => (crate::camera::COARSE_RADIUS, crate::camera::COARSE_RADIUS),
            PresetKind::Fine => crate::camera::FINE_RADIUS_RANGE,
        };
        Ok(build_orbit(self.n_views, range, seed, self.intrinsics())?)
    }
}

fn sample_texture(tex: &Texture, uv: [f64; 2], filter: TextureFilter) -> [f64; 3] {
    let (w, h) = (tex.width as f64, tex.height as f64);
    let to_rgb = |t: [u8; 4]| [t[0], t[1], t[2]].map(|c| c as f64 / 255.0);
    match filter {
        TextureFilter::Nearest => {
            let x = ((uv[0] * w).floor() as i64).clamp(0, tex.width as i64 - 1) as u32;
            let y = (((1.0 - uv[1]) * h).floor() as i64).clamp(0, tex.height as i64 - 1) as u32;
            to_rgb(tex.texel(x, y))
        }
        TextureFilter::Bilinear => {
            let fx = uv[0] * w - 0.5;
            let fy = (1.0 - uv[1]) * h - 0.5;
            let (x0, y0) = (fx.floor(), fy.floor());
            let (tx, ty) = (fx - x0, fy - y0);
            let cx = |x: f64| (x as i64).clamp(0, tex.width as i64 - 1) as u32;
            let cy = |y: f64| (y as i64).clamp(0, tex.height as i64 - 1) as u32;
            let c00 = to_rgb(tex.texel(cx(x0), cy(y0)));
            let c10 = to_rgb(tex.texel(cx(x0 + 1.0), cy(y0)));
            let c01 = to_rgb(tex.texel(cx(x0), cy(y0 + 1.0)));
            let c11 = to_rgb(tex.texel(cx(x0 + 1.0), cy(y0 + 1.0)));
            std::array::from_fn(|k| {
                let top = c00[k] * (1.0 - tx) + c10[k] * tx;
                let bottom = c01[k] * (1.0 - tx) + c11[k] * tx;
                top * (1.0 - ty) + bottom * ty
            })
        }
    }
}

fn with_normals(mesh: &Mesh) -> std::borrow::Cow<'_, Mesh> {
    if mesh.normals.is_some() {
        std::borrow::Cow::Borrowed(mesh)
    } else {
        std::borrow::Cow::Owned(derive_normals(mesh.clone()))
    }
}

/// Renders one view. Meshes without normals get area-weighted vertex
/// normals derived on the fly.
pub fn render_view(
    mesh: &Mesh,
    pose: &CameraPose,
    intrinsics: &Intrinsics,
    lighting: &LightingSetup,
    options: RenderOptions,
) -> Result<ImageBuffer, RasterError> {
    intrinsics.validate()?;
    let view = view_matrix(pose)?;
    let mesh = with_normals(mesh);
    let normals = mesh.normals.as_ref().expect("normals derived above");
    let ss = options.supersample.max(1);
    let (sw, sh) = (intrinsics.width * ss, intrinsics.height * ss);
    let gb = gbuffer::rasterize(&mesh, &view, intrinsics, sw, sh);

    let shade_sample = |i: usize| -> Option<[f64; 3]> {
        let t = gb.tri[i];
        if t == gbuffer::EMPTY {
            return None;
        }
        let t = t as usize;
        let b = gb.bary[i];
        let tri = mesh.triangles[t];
        let pos = (0..3).fold(Vec3::ZERO, |acc, k| acc + mesh.vertices[tri[k] as usize] * b[k]);
        let ni = normals.indices[t];
        let interp = (0..3).fold(Vec3::ZERO, |acc, k| acc + normals.values[ni[k] as usize] * b[k]);
        let normal = interp.try_normalize().unwrap_or_else(|| {
            let [a, bb, c] = tri.map(|v| mesh.vertices[v as usize]);
            (bb - a).cross(c - a).try_normalize().unwrap_or(Vec3::UNIT_Y)
        });
        let material = &mesh.materials[mesh.triangle_material[t] as usize];
        let mut albedo = material.albedo;
        if let (Some(tex), Some(uvs)) = (&material.texture, &mesh.uvs) {
            let ui = uvs.indices[t];
            let uv = [0, 1].map(|c| (0..3).map(|k| uvs.values[ui[k] as usize][c] * b[k]).sum::<f64>());
            let texel = sample_texture(tex, uv, options.filter);
            albedo = std::array::from_fn(|c| albedo[c] * texel[c]);
        }
        Some(shade(albedo, pos, normal, lighting))
    };

    let mut img = ImageBuffer::transparent(intrinsics.width, intrinsics.height);
    let spp = (ss * ss) as f64;
    for y in 0..intrinsics.height {
        for x in 0..intrinsics.width {
            let mut sum = [0.0; 3];
            let mut covered = 0u32;
            let mut depth = f64::INFINITY;
            for sy in 0..ss {
                for sx in 0..ss {
                    let i = ((y * ss + sy) * sw + x * ss + sx) as usize;
                    if let Some(c) = shade_sample(i) {
                        covered += 1;
                        depth = depth.min(gb.depth[i]);
                        for k in 0..3 {
                            sum[k] += c[k];
                        }
                    }
                }
            }
            if covered == 0 {
                continue;
            }
            let p = (y as usize * intrinsics.width as usize + x as usize) * 4;
            for k in 0..3 {
                img.rgba[p + k] = quantize(sum[k] / covered as f64);
            }
            img.rgba[p + 3] = quantize(covered as f64 / spp);
            img.depth[p / 4] = depth as f32;
        }
    }
    Ok(img)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Per-pixel index of the visible triangle, without shading or supersampling.
pub fn visibility(mesh: &Mesh, pose: &CameraPose, intrinsics: &Intrinsics) -> Result<Vec<Option<u32>>, RasterError> {
    intrinsics.validate()?;
    let view = view_matrix(pose)?;
    let gb = gbuffer::rasterize(mesh, &view, intrinsics, intrinsics.width, intrinsics.height);
    Ok(gb.tri.into_iter().map(|t| (t != gbuffer::EMPTY).then_some(t)).collect())
}

/// Renders every pose of `rig`, in frame order.
pub fn render_asset(
    mesh: &Mesh,
    rig: &CameraRig,
    preset: &RenderPreset,
    lighting: &LightingSetup,
) -> Result<Vec<ImageBuffer>, RasterError> {
    if rig.poses.len() != preset.n_views {
        return Err(RasterError::ViewCountMismatch {
            preset: preset.kind,
            rig: rig.poses.len(),
            expected: preset.n_views,
        });
    }
    let mesh = with_normals(mesh);
    let options = preset.options();
    rig.poses
        .iter()
        .map(|pose| render_view(&mesh, pose, &rig.intrinsics, lighting, options))
        .collect()
}
