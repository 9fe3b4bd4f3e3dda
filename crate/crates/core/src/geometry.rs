//! Pre-render normalization: center on the vertex centroid, optionally rotate
//! about a principal axis, then scale so the largest bounding-box edge is 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{apply3, Axis, Vec3};
use crate::mesh::{compute_bounds, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRotation {
    pub axis: Axis,
    pub degrees: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    /// Translation added to every vertex (the negated centroid).
    pub centroid_applied: Vec3,
    pub scale_applied: f64,
    pub rotation_applied: Option<AxisRotation>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("mesh has no vertices or no triangles")]
    EmptyGeometry,
    #[error("all vertices coincide; extent is zero")]
    DegenerateExtent,
}

pub fn normalize(mesh: &Mesh, rotation: Option<AxisRotation>) -> Result<(Mesh, NormalizationReport), GeometryError> {
    if mesh.vertices.is_empty() || mesh.triangles.is_empty() {
        return Err(GeometryError::EmptyGeometry);
    }
    let n = mesh.vertices.len() as f64;
    let sum = mesh.vertices.iter().fold(Vec3::ZERO, |acc, &v| acc + v);
    let centroid = sum / n;

    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = *v - centroid;
    }
    if let Some(r) = rotation {
        let m = r.axis.rotation(r.degrees);
        for v in &mut out.vertices {
            *v = apply3(&m, *v);
        }
        if let Some(normals) = &mut out.normals {
            for nrm in &mut normals.values {
                *nrm = apply3(&m, *nrm).try_normalize().unwrap_or(Vec3::UNIT_Y);
            }
        }
    }

    let extent = compute_bounds(&out)
        .map_err(|_| GeometryError::EmptyGeometry)?
        .extent()
        .max_element();
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(GeometryError::DegenerateExtent);
    }
    let scale = 1.0 / extent;
    for v in &mut out.vertices {
        *v = *v * scale;
    }

    Ok((
        out,
        NormalizationReport {
            centroid_applied: -centroid,
            scale_applied: scale,
            rotation_applied: rotation,
        },
    ))
}
