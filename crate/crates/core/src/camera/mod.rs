//! Orbital camera rigs and the view/projection transforms shared by both render passes.
//!
//! Conventions: frame 0 sits at azimuth 0 on the +Z axis; azimuth grows
//! counterclockwise seen from +Y, so frame `i` is at
//! `(r sin θ, 0, r cos θ)` with `θ = i * 360 / n` degrees. Cameras are
//! right-handed and look down their local -Z axis. Pixel (0, 0) is the
//! top-left corner of the image and pixel centers sit at half-integers.

mod metadata;
pub mod rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Mat4, Vec3, Vec4};

pub use metadata::{rig_from_json, rig_to_json};

pub const DEFAULT_FOV_Y_DEG: f64 = 50.0;
pub const DEFAULT_NEAR: f64 = 0.01;
pub const DEFAULT_FAR: f64 = 10.0;
pub const FINE_RADIUS_RANGE: (f64, f64) = (1.6, 2.0);
pub const COARSE_RADIUS: f64 = 1.8;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("invalid radius range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("an orbit needs at least 2 views, got {0}")]
    TooFewViews(usize),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("degenerate pose: up vector parallel to the view direction or position equals target")]
    DegeneratePose,
    #[error("point is behind the camera")]
    BehindCamera,
    #[error("camera metadata: {0}")]
    Metadata(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fov_y_deg: f64,
    pub aspect: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

impl Intrinsics {
    /// Square image with the default 50 degree vertical field of view.
    pub fn square(size: u32) -> Intrinsics {
        Intrinsics {
            fov_y_deg: DEFAULT_FOV_Y_DEG,
            aspect: 1.0,
            width: size,
            height: size,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: String| Err(CameraError::InvalidIntrinsics(m));
        if !(self.fov_y_deg > 0.0 && self.fov_y_deg < 180.0) {
            return bad(format!("fov_y {} outside (0, 180)", self.fov_y_deg));
        }
        if self.width == 0 || self.height == 0 {
            return bad("zero-sized image".into());
        }
        let expected = self.width as f64 / self.height as f64;
        if (self.aspect - expected).abs() > 1e-12 * expected {
            return bad(format!("aspect {} does not match {}x{}", self.aspect, self.width, self.height));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return bad(format!("near {} / far {} must satisfy 0 < near < far", self.near, self.far));
        }
        Ok(())
    }

    /// Focal term `1 / tan(fov_y / 2)`.
    pub fn focal(&self) -> f64 {
        1.0 / (self.fov_y_deg.to_radians() / 2.0).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    pub frame_index: u32,
}

impl CameraPose {
    /// Azimuth of the position around +Y in degrees, in [0, 360).
    pub fn azimuth_deg(&self) -> f64 {
        self.position.x.atan2(self.position.z).to_degrees().rem_euclid(360.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub intrinsics: Intrinsics,
    pub poses: Vec<CameraPose>,
    pub radius: f64,
    pub seed: u64,
}

/// Builds an `n_views` circular orbit at 0 degree elevation. One radius is
/// drawn for the whole rig from `radius_range` with the seeded generator.
pub fn build_orbit(
    n_views: usize,
    radius_range: (f64, f64),
    seed: u64,
    intrinsics: Intrinsics,
) -> Result<CameraRig, CameraError> {
    let (lo, hi) = radius_range;
    if !(lo > 0.0) || !(lo <= hi) || !hi.is_finite() {
        return Err(CameraError::InvalidRange { lo, hi });
    }
    if n_views < 2 {
        return Err(CameraError::TooFewViews(n_views));
    }
    intrinsics.validate()?;
    let mut rng = rng::XorShift64Star::new(seed);
    let radius = lo + (hi - lo) * rng.next_unit();
    let poses = (0..n_views)
        .map(|i| {
            let theta = (i as f64 * 360.0 / n_views as f64).to_radians();
            CameraPose {
                position: Vec3::new(radius * theta.sin(), 0.0, radius * theta.cos()),
                target: Vec3::ZERO,
                up: Vec3::UNIT_Y,
                frame_index: i as u32,
            }
        })
        .collect();
    Ok(CameraRig {
        intrinsics,
        poses,
        radius,
        seed,
    })
}

/// Right-handed look-at transform from world to camera space.
pub fn view_matrix(pose: &CameraPose) -> Result<Mat4, CameraError> {
    let forward = (pose.target - pose.position)
        .try_normalize()
        .ok_or(CameraError::DegeneratePose)?;
    let side = forward.cross(pose.up);
    if side.length() < 1e-12 * pose.up.length().max(1e-300) {
        return Err(CameraError::DegeneratePose);
    }
    let s = side.try_normalize().ok_or(CameraError::DegeneratePose)?;
    let u = s.cross(forward);
    let e = pose.position;
    Ok(Mat4::from_rows([
        [s.x, s.y, s.z, -s.dot(e)],
        [u.x, u.y, u.z, -u.dot(e)],
        [-forward.x, -forward.y, -forward.z, forward.dot(e)],
        [0.0, 0.0, 0.0, 1.0],
    ]))
}

/// OpenGL-style perspective projection mapping the view frustum to NDC [-1, 1]^3.
pub fn projection_matrix(intrinsics: &Intrinsics) -> Mat4 {
    let f = intrinsics.focal();
    let (n, fa) = (intrinsics.near, intrinsics.far);
    Mat4::from_rows([
        [f / intrinsics.aspect, 0.0, 0.0, 0.0],
        [0.0, f, 0.0, 0.0],
        [0.0, 0.0, (fa + n) / (n - fa), 2.0 * fa * n / (n - fa)],
        [0.0, 0.0, -1.0, 0.0],
    ])
}

/// Maps normalized device coordinates to continuous pixel coordinates.
pub fn ndc_to_pixel(ndc_x: f64, ndc_y: f64, intrinsics: &Intrinsics) -> [f64; 2] {
    [
        (ndc_x + 1.0) * 0.5 * intrinsics.width as f64,
        (1.0 - ndc_y) * 0.5 * intrinsics.height as f64,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Continuous pixel coordinates; pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
    pub pixel: [f64; 2],
    /// Distance along the camera's -Z axis.
    pub depth: f64,
}

pub fn project(point: Vec3, pose: &CameraPose, intrinsics: &Intrinsics) -> Result<Projection, CameraError> {
    let view = view_matrix(pose)?;
    let p = view.transform_point(point);
    let depth = -p.z;
    if !(depth > 0.0) {
        return Err(CameraError::BehindCamera);
    }
    let clip = projection_matrix(intrinsics).mul_vec4(Vec4::point(p));
    let pixel = ndc_to_pixel(clip.x / clip.w, clip.y / clip.w, intrinsics);
    Ok(Projection { pixel, depth })
}
