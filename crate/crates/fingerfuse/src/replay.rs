//! Replays a wire-protocol log into a pose/gesture stream. The log carries
//! no clock, so frames are stamped at the configured report rate. Frames
//! with dx = dy = 0 are orientation-only: the pose turns but does not
//! translate.

use std::io::{self, BufRead};

use fingerfuse_core::fusion::{AxisMap, FormFactor, FusionState, PosePoint};
use fingerfuse_core::optical::SensorConfig;
use fingerfuse_core::protocol::{parse_line, ProtocolError, WireGesture};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("read: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ProtocolError },
    #[error("line {line}: quaternion is unusably small (norm {norm:.3e})")]
    DegenerateOrientation { line: usize, norm: f64 },
    #[error("config: {0}")]
    Config(String),
}

/// One replayed frame: the assigned time, the fused pose, and the frame's
/// gesture flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub t: f64,
    pub pose: PosePoint,
    pub dx: i32,
    pub dy: i32,
    pub gesture: WireGesture,
}

pub fn replay<R: BufRead>(
    input: R,
    cfg: SensorConfig,
    ff: FormFactor,
) -> Result<Vec<ReplayRow>, ReplayError> {
    let mut fusion = FusionState::new(cfg, ff, AxisMap::default(), None)
        .map_err(|e| ReplayError::Config(e.to_string()))?;
    let dt = cfg.report_dt();
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame =
            parse_line(&line).map_err(|e| ReplayError::Parse { line: lineno, source: e })?;
        let norm = frame.q.norm();
        if norm < 1e-6 {
            return Err(ReplayError::DegenerateOrientation { line: lineno, norm });
        }
        let t = rows.len() as f64 * dt;
        let pose = fusion.step(t, frame.dx as f64, frame.dy as f64, &frame.q.normalized());
        let gesture = frame.gesture().expect("parser rejects illegal flag pairs");
        rows.push(ReplayRow { t, pose, dx: frame.dx, dy: frame.dy, gesture });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct RowDto {
    t: f64,
    pos: [f64; 3],
    quat: [f64; 4],
    dx: i32,
    dy: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    gesture: Option<&'static str>,
}

/// One JSON object per row; quaternions `[w, x, y, z]`.
pub fn render_jsonl(rows: &[ReplayRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let p = r.pose.position;
        let q = r.pose.orientation;
        let dto = RowDto {
            t: r.t,
            pos: [p.x, p.y, p.z],
            quat: [q.w, q.x, q.y, q.z],
            dx: r.dx,
            dy: r.dy,
            gesture: match r.gesture {
                WireGesture::None => None,
                WireGesture::Tap => Some("tap"),
                WireGesture::DoubleTap => Some("double_tap"),
            },
        };
        out.push_str(&serde_json::to_string(&dto).expect("row serializes"));
        out.push('\n');
    }
    out
}
