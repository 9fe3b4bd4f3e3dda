use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use super::{AssetRecord, Manifest, PipelineConfig, PipelineError, Stage};
use crate::geometry::normalize;
use crate::mesh::{load_mesh, MeshFormat};

/// Hex characters kept from the SHA-256 content digest.
pub const ASSET_ID_LEN: usize = 32;

pub fn asset_id_for(bytes: &[u8]) -> String {
    let mut id = hex::encode(Sha256::digest(bytes));
    id.truncate(ASSET_ID_LEN);
    id
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub ingested: usize,
    pub failed: usize,
    /// Existing records that gained a new source path.
    pub updated: usize,
    /// Files whose content was already recorded under the same path.
    pub unchanged: usize,
    pub unreadable: Vec<PathBuf>,
}

fn mesh_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            PipelineError::io(&path, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")))
        })?;
        if entry.file_type().is_file() && MeshFormat::from_extension(entry.path()).is_some() {
            out.push(std::path::absolute(entry.path()).map_err(|e| PipelineError::io(entry.path(), e))?);
        }
    }
    Ok(out)
}

/// Registers every mesh file under `config.input_dir`. Parse or normalization
/// failures become failed records; content already in the manifest only has
/// new source paths appended.
pub fn ingest(config: &PipelineConfig, manifest: &Manifest) -> Result<IngestSummary, PipelineError> {
    if !config.input_dir.is_dir() {
        return Err(PipelineError::Config(format!(
            "input directory {} does not exist",
            config.input_dir.display()
        )));
    }
    let mut summary = IngestSummary::default();
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for path in mesh_files(&config.input_dir)? {
        match std::fs::read(&path) {
            Ok(bytes) => groups.entry(asset_id_for(&bytes)).or_default().push(path),
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                summary.unreadable.push(path);
            }
        }
    }

    for (asset_id, paths) in groups {
        if let Some(mut existing) = manifest.get(&asset_id) {
            let fresh: Vec<PathBuf> = paths.into_iter().filter(|p| !existing.source_paths.contains(p)).collect();
            if fresh.is_empty() {
                summary.unchanged += 1;
            } else {
                existing.source_paths.extend(fresh);
                existing.source_paths.sort();
                manifest.append(&existing)?;
                summary.updated += 1;
            }
            continue;
        }
        let started = Instant::now();
        let mut record = AssetRecord::new(asset_id, paths[0].clone());
        record.source_paths = paths;
        let parsed = load_mesh(&record.source_path)
            .map_err(|e| e.to_string())
            .and_then(|mesh| normalize(&mesh, config.rotation).map(|n| (mesh, n)).map_err(|e| e.to_string()));
        record = match parsed {
            Ok((mesh, (_, report))) => {
                record.triangles = mesh.triangles.len();
                record.normalization = Some(report);
                summary.ingested += 1;
                record
            }
            Err(e) => {
                summary.failed += 1;
                record.failed(Stage::Ingest, e)
            }
        };
        record
            .timings
            .insert(Stage::Ingest.name().into(), started.elapsed().as_secs_f64() * 1e3);
        manifest.append(&record)?;
    }
    Ok(summary)
}
