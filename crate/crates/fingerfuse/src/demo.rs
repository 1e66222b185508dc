//! Interaction demo: runs a trace against a scene and logs what the
//! device would command. Contacts that qualify as taps (or double-taps)
//! cast the pointing ray and select; any other contact with motion spins
//! the current selection by its stroke.

use fingerfuse_core::fusion::{plane_orientation, run_pipeline, FormFactor, PosePoint};
use fingerfuse_core::geom::Vec3;
use fingerfuse_core::gestures::{GestureConfig, GestureDetector, GestureEvent, GestureKind};
use fingerfuse_core::interact::{
    pointing_ray, rotation_from_stroke, select, RotationGain, SceneObject,
};
use fingerfuse_core::optical::counts_to_mm;
use fingerfuse_core::simtrace::Trace;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("fusion: {0}")]
    Fusion(String),
    #[error("gestures: {0}")]
    Gestures(String),
}

/// One logged command.
#[derive(Debug, Clone, PartialEq)]
pub enum DemoCommand {
    /// A tap cast the pointing ray; `hit` is the selected object, if any.
    Select { t: f64, kind: GestureKind, hit: Option<String> },
    /// A non-tap contact stroked the selected object.
    Rotate { t: f64, target: String, axis: Vec3, angle_rad: f64 },
}

fn pose_at(poses: &[PosePoint], t: f64) -> Option<&PosePoint> {
    // Last pose at or before t; events always stem from a sample time.
    match poses.binary_search_by(|p| p.t.partial_cmp(&t).expect("ordered times")) {
        Ok(i) => Some(&poses[i]),
        Err(0) => None,
        Err(i) => Some(&poses[i - 1]),
    }
}

/// Replays the trace and interprets its gestures against the scene.
pub fn run_demo(
    scene: &[SceneObject],
    trace: &Trace,
    ff: FormFactor,
    config: GestureConfig,
    gain: RotationGain,
) -> Result<Vec<DemoCommand>, DemoError> {
    let poses = run_pipeline(&trace.imu, &trace.optical, trace.meta.cfg, ff, None)
        .map_err(|e| DemoError::Fusion(e.to_string()))?;
    let mut detector = GestureDetector::new(config).map_err(|e| DemoError::Gestures(e.to_string()))?;
    let mut events: Vec<GestureEvent> = Vec::new();
    for s in &trace.optical {
        events.extend(detector.update(s));
    }
    events.extend(detector.finish());
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("ordered times"));

    // A tap's timestamp equals its contact-end timestamp, so contacts that
    // tapped are excluded from stroking by time match.
    let tap_times: Vec<f64> = events
        .iter()
        .filter(|e| matches!(e.kind, GestureKind::Tap | GestureKind::DoubleTap))
        .map(|e| e.t)
        .collect();

    let mut commands = Vec::new();
    let mut selected: Option<String> = None;
    for e in &events {
        match e.kind {
            GestureKind::Tap | GestureKind::DoubleTap => {
                let Some(pose) = pose_at(&poses, e.t) else { continue };
                let ray = pointing_ray(&pose.orientation, pose.position);
                let hit = select(&ray, scene).map(str::to_owned);
                selected = hit.clone().or(selected);
                commands.push(DemoCommand::Select { t: e.t, kind: e.kind, hit });
            }
            GestureKind::ContactEnd => {
                if tap_times.contains(&e.t) {
                    continue;
                }
                let (Some(target), Some(pose)) = (selected.clone(), pose_at(&poses, e.t)) else {
                    continue;
                };
                let stroke = [
                    counts_to_mm(e.location.0 as f64, &trace.meta.cfg),
                    counts_to_mm(e.location.1 as f64, &trace.meta.cfg),
                ];
                let plane = plane_orientation(&pose.orientation, ff);
                if let Some(cmd) = rotation_from_stroke(stroke, &plane, gain) {
                    commands.push(DemoCommand::Rotate {
                        t: e.t,
                        target,
                        axis: cmd.axis,
                        angle_rad: cmd.angle,
                    });
                }
            }
            _ => {}
        }
    }
    Ok(commands)
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum CommandDto<'a> {
    Select { t: f64, gesture: &'static str, hit: Option<&'a str> },
    Rotate { t: f64, target: &'a str, axis: [f64; 3], angle_rad: f64 },
}

/// One JSON object per command.
pub fn render_jsonl(commands: &[DemoCommand]) -> String {
    let mut out = String::new();
    for c in commands {
        let dto = match c {
            DemoCommand::Select { t, kind, hit } => CommandDto::Select {
                t: *t,
                gesture: match kind {
                    GestureKind::DoubleTap => "double_tap",
                    _ => "tap",
                },
                hit: hit.as_deref(),
            },
            DemoCommand::Rotate { t, target, axis, angle_rad } => CommandDto::Rotate {
                t: *t,
                target,
                axis: [axis.x, axis.y, axis.z],
                angle_rad: *angle_rad,
            },
        };
        out.push_str(&serde_json::to_string(&dto).expect("command serializes"));
        out.push('\n');
    }
    out
}
