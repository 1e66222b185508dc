//! Orientation + optical-flow fusion into a 3D relative trajectory.
//!
//! The attitude filter fixes the orientation of the 2D plane the optical
//! sensor slides on; each optical delta is a step within that plane, rotated
//! into the world frame and accumulated. Positions are relative to the
//! stream origin (the device has no absolute position reference), and the
//! whole pipeline is deterministic.

use alloc::vec::Vec;

use crate::ahrs::{Ahrs, AhrsError, AhrsGains, ImuSample};
#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::geom::{euler_to_quat, quat_to_euler, rotate, Quaternion, Vec3};
use crate::optical::{counts_to_mm, AccelerationModel, OpticalSample, SensorConfig, SpeedTracker};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("axis map must be a signed permutation of the two sensor axes")]
    InvalidAxisMap,
    #[error(transparent)]
    Ahrs(#[from] AhrsError),
}

/// How the device is worn; decides how finger attitude maps to the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormFactor {
    /// Sensor on the fingernail, optical axis along the finger: the touch
    /// plane is pitched 90 degrees from the finger orientation.
    FingernailMount,
    /// Sensor on the finger pad, facing the surface: plane = finger.
    #[default]
    PadMount,
    /// Ring mount; same geometry as the pad mount.
    Ring,
}

/// One fused output sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePoint {
    pub t: f64,
    /// World frame, millimeters, relative to the stream origin.
    pub position: Vec3,
    /// Finger attitude as supplied by the orientation source.
    pub orientation: Quaternion,
}

/// Signed permutation mapping sensor (dx, dy) onto the plane's (x, y).
/// The sensor's axis orientation relative to the finger is a mounting
/// choice, so it is configuration, not code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub m: [[f64; 2]; 2],
}

impl Default for AxisMap {
    fn default() -> Self {
        AxisMap { m: [[1.0, 0.0], [0.0, 1.0]] }
    }
}

impl AxisMap {
    /// Swap/sign matrices only: exactly one ±1 per row, distinct columns.
    pub fn validate(&self) -> Result<(), FusionError> {
        let row_col = |row: &[f64; 2]| -> Option<usize> {
            match (row[0], row[1]) {
                (1.0 | -1.0, 0.0) => Some(0),
                (0.0, 1.0 | -1.0) => Some(1),
                _ => None,
            }
        };
        match (row_col(&self.m[0]), row_col(&self.m[1])) {
            (Some(a), Some(b)) if a != b => Ok(()),
            _ => Err(FusionError::InvalidAxisMap),
        }
    }

    fn apply(&self, dx: f64, dy: f64) -> (f64, f64) {
        (
            self.m[0][0] * dx + self.m[0][1] * dy,
            self.m[1][0] * dx + self.m[1][1] * dy,
        )
    }
}

/// Touch-plane attitude for a finger attitude and mounting. Pad and ring
/// mounts ride flat on the surface; the fingernail mount stands the sensor
/// up, so the plane is the finger attitude pitched up 90 degrees.
pub fn plane_orientation(finger: &Quaternion, ff: FormFactor) -> Quaternion {
    match ff {
        FormFactor::PadMount | FormFactor::Ring => *finger,
        FormFactor::FingernailMount => match quat_to_euler(&finger.normalized()) {
            Ok(mut e) => {
                e.pitch += core::f64::consts::FRAC_PI_2;
                euler_to_quat(&e)
            }
            // Unreachable for a normalized input; keep the finger attitude.
            Err(_) => *finger,
        },
    }
}

/// Per-frame speed-distortion undo (see the optical module for the model).
#[derive(Debug, Clone)]
struct Corrector {
    model: AccelerationModel,
    tracker: SpeedTracker,
}

/// Running fusion state: one per stream, stepped sequentially.
#[derive(Debug, Clone)]
pub struct FusionState {
    cfg: SensorConfig,
    ff: FormFactor,
    axis_map: AxisMap,
    corrector: Option<Corrector>,
    position: Vec3,
    last_t: Option<f64>,
}

impl FusionState {
    pub fn new(
        cfg: SensorConfig,
        ff: FormFactor,
        axis_map: AxisMap,
        correction: Option<AccelerationModel>,
    ) -> Result<FusionState, FusionError> {
        axis_map.validate()?;
        Ok(FusionState {
            cfg,
            ff,
            axis_map,
            corrector: correction.map(|model| Corrector { model, tracker: SpeedTracker::new() }),
            position: Vec3::ZERO,
            last_t: None,
        })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    /// Advances the trajectory by one optical frame. Deltas are counts
    /// (fractional allowed: corrected counts are not integers); the
    /// orientation is the finger attitude current at time `t`.
    pub fn step(&mut self, t: f64, dx: f64, dy: f64, orientation: &Quaternion) -> PosePoint {
        let dt = match self.last_t {
            Some(prev) if t > prev => t - prev,
            // First frame or a non-advancing timestamp: assume one report
            // period for the speed estimate.
            _ => 1.0 / self.cfg.report_rate,
        };
        self.last_t = Some(t);

        let (mut px, mut py) = self.axis_map.apply(dx, dy);
        if let Some(c) = self.corrector.as_mut() {
            let reported = (px * px + py * py).sqrt();
            let recovered = c.model.invert_reported_magnitude(reported, dt);
            let speed = c.tracker.push(recovered / (dt * c.model.cpi()));
            // correct_counts only rejects out-of-range speeds; the tracker
            // clamps into range, so this cannot fail.
            if let Ok(cx) = c.model.correct_counts(px, speed) {
                px = cx;
            }
            if let Ok(cy) = c.model.correct_counts(py, speed) {
                py = cy;
            }
        }

        let in_plane = Vec3::new(counts_to_mm(px, &self.cfg), counts_to_mm(py, &self.cfg), 0.0);
        let plane = plane_orientation(orientation, self.ff);
        self.position = self.position + rotate(&plane, in_plane);
        PosePoint { t, position: self.position, orientation: *orientation }
    }
}

/// Runs the whole pipeline over paired streams: attitude from the IMU
/// samples, displacement from the optical samples.
///
/// Each optical sample is paired with the attitude after consuming every
/// IMU sample at or before its timestamp (last-value-hold; both streams
/// nominally run at the same rate, so the skew is at most one period). The
/// filter starts from the first IMU sample's accel/mag attitude, falling
/// back to identity when that is degenerate (zero or parallel vectors).
/// The first optical sample anchors the origin: it emits position (0,0,0)
/// and its deltas are not integrated, since there is no prior frame for
/// them to be relative to.
pub fn run_pipeline(
    imu_stream: &[ImuSample],
    optical_stream: &[OpticalSample],
    cfg: SensorConfig,
    ff: FormFactor,
    correction: Option<AccelerationModel>,
) -> Result<Vec<PosePoint>, FusionError> {
    let axis_map = AxisMap::default();
    let mut state = FusionState::new(cfg, ff, axis_map, correction)?;
    let mut out = Vec::with_capacity(optical_stream.len());
    if optical_stream.is_empty() {
        return Ok(out);
    }

    let mut ahrs = match imu_stream.first() {
        Some(first) => Ahrs::from_accel_mag(AhrsGains::default(), first.accel, first.mag)
            .unwrap_or_else(|_| Ahrs::new(AhrsGains::default()).expect("default gains are valid")),
        None => Ahrs::new(AhrsGains::default()).expect("default gains are valid"),
    };

    let mut imu_idx = 0;
    let mut orientation = ahrs.attitude_quaternion();
    for (k, frame) in optical_stream.iter().enumerate() {
        while imu_idx < imu_stream.len() && imu_stream[imu_idx].t <= frame.t {
            orientation = ahrs.update(&imu_stream[imu_idx])?;
            imu_idx += 1;
        }
        if k == 0 {
            state.last_t = Some(frame.t);
            out.push(PosePoint { t: frame.t, position: Vec3::ZERO, orientation });
        } else {
            out.push(state.step(frame.t, frame.dx as f64, frame.dy as f64, &orientation));
        }
    }
    Ok(out)
}
