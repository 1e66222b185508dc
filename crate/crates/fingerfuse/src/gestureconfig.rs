//! Per-texture gesture tuning as key = value text. Unset keys keep the
//! mousepad defaults; `#` starts a comment.
//!
//! Keys match the [`GestureConfig`] fields: `name` (or `texture_name`),
//! `contact_squal_threshold`, `tap_window_ms`, `tap_max_delta`,
//! `doubletap_window_ms`, `doubletap_max_offset`, `press_squal_threshold`,
//! `press_dwell_ms`.

use std::fs;
use std::io;
use std::path::Path;

use fingerfuse_core::gestures::GestureConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GestureConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

pub fn read_config(path: &Path) -> Result<GestureConfig, GestureConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| GestureConfigError::Io { path: path.display().to_string(), source: e })?;
    parse_config(&text).map_err(|(line, msg)| {
        if line == 0 {
            GestureConfigError::Invalid { path: path.display().to_string(), msg }
        } else {
            GestureConfigError::Format { path: path.display().to_string(), line, msg }
        }
    })
}

/// Errors are (1-based line, message); line 0 means a whole-config
/// validation failure.
pub fn parse_config(text: &str) -> Result<GestureConfig, (usize, String)> {
    let mut cfg = GestureConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| (lineno, format!("expected key = value, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| (lineno, format!("bad {what} value {value:?}"));
        match key {
            "name" | "texture_name" => cfg.texture_name = value.to_string(),
            "contact_squal_threshold" => {
                cfg.contact_squal_threshold = value.parse().map_err(|_| bad(key))?
            }
            "tap_window_ms" => cfg.tap_window_ms = value.parse().map_err(|_| bad(key))?,
            "tap_max_delta" => cfg.tap_max_delta = value.parse().map_err(|_| bad(key))?,
            "doubletap_window_ms" => {
                cfg.doubletap_window_ms = value.parse().map_err(|_| bad(key))?
            }
            "doubletap_max_offset" => {
                cfg.doubletap_max_offset = value.parse().map_err(|_| bad(key))?
            }
            "press_squal_threshold" => {
                cfg.press_squal_threshold = value.parse().map_err(|_| bad(key))?
            }
            "press_dwell_ms" => cfg.press_dwell_ms = value.parse().map_err(|_| bad(key))?,
            other => return Err((lineno, format!("unknown key {other:?}"))),
        }
    }
    cfg.validate().map_err(|e| (0, e.to_string()))?;
    Ok(cfg)
}
