//! Per-asset `cameras.json`: intrinsics, rig radius and seed, and every frame
//! with its row-major view matrix. Reals are written with 17 significant
//! digits so every value reparses to the identical double.

use std::fmt::Write;

use serde::Deserialize;

use super::{view_matrix, CameraError, CameraPose, CameraRig, Intrinsics};
use crate::math::Vec3;

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn vec3(v: Vec3) -> String {
    format!("[{}, {}, {}]", real(v.x), real(v.y), real(v.z))
}

pub fn rig_to_json(rig: &CameraRig) -> Result<String, CameraError> {
    let i = &rig.intrinsics;
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(
        s,
        "  \"intrinsics\": {{\"fov_y_deg\": {}, \"aspect\": {}, \"width\": {}, \"height\": {}, \"near\": {}, \"far\": {}}},",
        real(i.fov_y_deg),
        real(i.aspect),
        i.width,
        i.height,
        real(i.near),
        real(i.far)
    );
    let _ = writeln!(s, "  \"radius\": {},", real(rig.radius));
    let _ = writeln!(s, "  \"seed\": {},", rig.seed);
    s.push_str(
        "  \"convention\": {\"frame0_axis\": \"+Z\", \"direction\": \"counterclockwise viewed from +Y\", \
         \"elevation_deg\": 0, \"camera_forward\": \"-Z\", \"pixel_origin\": \"top-left\"},\n",
    );
    s.push_str("  \"frames\": [\n");
    for (k, pose) in rig.poses.iter().enumerate() {
        let m = view_matrix(pose)?;
        let rows: Vec<String> = m
            .rows
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|&v| real(v)).collect::<Vec<_>>().join(", ")))
            .collect();
        let _ = write!(
            s,
            "    {{\"frame_index\": {}, \"position\": {}, \"target\": {}, \"up\": {}, \"view_matrix\": [{}]}}",
            pose.frame_index,
            vec3(pose.position),
            vec3(pose.target),
            vec3(pose.up),
            rows.join(", ")
        );
        s.push_str(if k + 1 < rig.poses.len() { ",\n" } else { "\n" });
    }
    s.push_str("  ]\n}\n");
    Ok(s)
}

#[derive(Deserialize)]
struct FrameDoc {
    frame_index: u32,
    position: [f64; 3],
    target: [f64; 3],
    up: [f64; 3],
    view_matrix: [[f64; 4]; 4],
}

#[derive(Deserialize)]
struct RigDoc {
    intrinsics: Intrinsics,
    radius: f64,
    seed: u64,
    frames: Vec<FrameDoc>,
}

/// Parses a `cameras.json` document and checks that every stored view
/// matrix agrees with its pose.
pub fn rig_from_json(text: &str) -> Result<CameraRig, CameraError> {
    let doc: RigDoc = serde_json::from_str(text).map_err(|e| CameraError::Metadata(e.to_string()))?;
    doc.intrinsics.validate()?;
    let mut poses = Vec::with_capacity(doc.frames.len());
    for (k, f) in doc.frames.into_iter().enumerate() {
        if f.frame_index as usize != k {
            return Err(CameraError::Metadata(format!("frame {k} has index {}", f.frame_index)));
        }
        let pose = CameraPose {
            position: f.position.into(),
            target: f.target.into(),
            up: f.up.into(),
            frame_index: f.frame_index,
        };
        let m = view_matrix(&pose)?;
        if m.rows != f.view_matrix {
            return Err(CameraError::Metadata(format!("frame {k} view matrix disagrees with its pose")));
        }
        poses.push(pose);
    }
    Ok(CameraRig {
        intrinsics: doc.intrinsics,
        poses,
        radius: doc.radius,
        seed: doc.seed,
    })
}
