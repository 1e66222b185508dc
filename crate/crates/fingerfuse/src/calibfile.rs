//! Calibration sample CSV: header `speed_ips,counts`, one sample per row.

use std::fs;
use std::io;
use std::path::Path;

use fingerfuse_core::optical::CalibrationSample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> CalibFileError {
    CalibFileError::Format { path: path.display().to_string(), line, msg: msg.into() }
}

pub fn read_samples(path: &Path) -> Result<Vec<CalibrationSample>, CalibFileError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CalibFileError::Io { path: path.display().to_string(), source: e })?;
    let mut lines = text.lines().enumerate();

    match lines.next() {
        Some((_, header)) if header.trim_end() == "speed_ips,counts" => {}
        Some((_, header)) => {
            return Err(format_err(path, 1, format!("expected header speed_ips,counts, found {header:?}")))
        }
        None => return Err(format_err(path, 1, "empty file")),
    }

    let mut out = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(format_err(path, lineno, "expected exactly 2 fields")),
        };
        let speed_ips: f64 = a
            .trim()
            .parse()
            .map_err(|_| format_err(path, lineno, format!("bad speed {a:?}")))?;
        let counts: f64 = b
            .trim()
            .parse()
            .map_err(|_| format_err(path, lineno, format!("bad counts {b:?}")))?;
        if !speed_ips.is_finite() || !counts.is_finite() {
            return Err(format_err(path, lineno, "values must be finite"));
        }
        out.push(CalibrationSample { speed_ips, counts });
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[CalibrationSample]) -> Result<(), CalibFileError> {
    let mut text = String::from("speed_ips,counts\n");
    for s in samples {
        text.push_str(&format!("{},{}\n", s.speed_ips, s.counts));
    }
    fs::write(path, text).map_err(|e| CalibFileError::Io { path: path.display().to_string(), source: e })
}
