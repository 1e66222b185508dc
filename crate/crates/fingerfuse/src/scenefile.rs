//! Scene files: a JSON array of `{id, center: [x, y, z], radius}` spheres,
//! millimeters in the world frame.

use std::fs;
use std::io;
use std::path::Path;

use fingerfuse_core::geom::Vec3;
use fingerfuse_core::interact::SceneObject;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

#[derive(Serialize, Deserialize)]
struct ObjectDto {
    id: String,
    center: [f64; 3],
    radius: f64,
}

pub fn read_scene(path: &Path) -> Result<Vec<SceneObject>, SceneFileError> {
    let text = fs::read_to_string(path)
        .map_err(|e| SceneFileError::Io { path: path.display().to_string(), source: e })?;
    let dtos: Vec<ObjectDto> = serde_json::from_str(&text)
        .map_err(|e| SceneFileError::Format { path: path.display().to_string(), msg: e.to_string() })?;
    dtos.into_iter()
        .map(|d| {
            SceneObject::new(d.id, Vec3::new(d.center[0], d.center[1], d.center[2]), d.radius)
                .map_err(|e| SceneFileError::Format {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })
        })
        .collect()
}

pub fn write_scene(path: &Path, objects: &[SceneObject]) -> Result<(), SceneFileError> {
    let dtos: Vec<ObjectDto> = objects
        .iter()
        .map(|o| ObjectDto {
            id: o.id.clone(),
            center: [o.center.x, o.center.y, o.center.z],
            radius: o.radius,
        })
        .collect();
    let text = serde_json::to_string_pretty(&dtos).expect("scene serializes");
    fs::write(path, text)
        .map_err(|e| SceneFileError::Io { path: path.display().to_string(), source: e })
}
