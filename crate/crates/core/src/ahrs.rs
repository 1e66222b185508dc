//! Orientation estimation from a 9-DOF IMU stream.
//!
//! The filter is the classic DCM complementary scheme: gyro rates are
//! integrated exactly on the rotation group each step, and a PI feedback
//! term steers the attitude toward the accelerometer's gravity direction
//! (roll/pitch) and the magnetometer's horizontal heading (yaw), which pins
//! the slow gyro drift. The matrix is re-orthonormalized every update with
//! the symmetric half-error Gram-Schmidt correction.
//!
//! `kp` and `ki` are per-update correction gains (radians of correction per
//! radian of error per sample, and its accumulated integral), not rates to
//! be scaled by dt: at the default 50 Hz and `kp = 0.2`, a static attitude
//! error decays with a time constant of well under a second, which is what
//! the convergence contract below requires.

use crate::geom::{dcm_to_quat, rotation_vector_to_dcm, Dcm, GeomError, Quaternion, Vec3};
#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::geom::quat_to_dcm;
use thiserror::Error;

/// Standard gravity, m/s^2.
pub const GRAVITY_MPS2: f64 = 9.80665;

/// Longest tolerated gap between consecutive samples, seconds.
pub const MAX_STEP_S: f64 = 0.1;

/// Errors from filter construction and updates.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AhrsError {
    #[error("gains must be nonnegative (kp={kp}, ki={ki})")]
    InvalidGains { kp: f64, ki: f64 },
    #[error("sample timestamp {t} does not advance past {last_t}")]
    NonMonotonicTime { t: f64, last_t: f64 },
    #[error("time step {dt} s exceeds the {MAX_STEP_S} s update limit")]
    StepTooLarge { dt: f64 },
    #[error("reference vectors too small or collinear to fix an attitude")]
    DegenerateReference,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// One timestamped 9-DOF reading, all in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Seconds; strictly increasing within a stream.
    pub t: f64,
    /// Angular rate, rad/s.
    pub gyro: Vec3,
    /// Specific force, m/s^2; reads +g on the up axis when stationary.
    pub accel: Vec3,
    /// Normalized local magnetic field; its horizontal component defines
    /// the yaw reference (points along world +x at zero yaw).
    pub mag: Vec3,
}

/// PI drift-correction gains, per update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AhrsGains {
    pub kp: f64,
    pub ki: f64,
}

impl Default for AhrsGains {
    fn default() -> Self {
        AhrsGains { kp: 0.2, ki: 0.005 }
    }
}

/// Attitude filter state. One instance per stream; updates are sequential.
#[derive(Debug, Clone)]
pub struct Ahrs {
    attitude: Dcm,
    integral: Vec3,
    gains: AhrsGains,
    last_t: Option<f64>,
}

impl Ahrs {
    /// Filter starting at the identity attitude.
    pub fn new(gains: AhrsGains) -> Result<Self, AhrsError> {
        Self::with_attitude(gains, Quaternion::IDENTITY)
    }

    /// Filter starting at a given attitude.
    pub fn with_attitude(gains: AhrsGains, initial: Quaternion) -> Result<Self, AhrsError> {
        if !(gains.kp >= 0.0 && gains.ki >= 0.0) {
            return Err(AhrsError::InvalidGains { kp: gains.kp, ki: gains.ki });
        }
        Ok(Ahrs { attitude: quat_to_dcm(&initial)?, integral: Vec3::ZERO, gains, last_t: None })
    }

    /// Filter initialized directly from one accelerometer + magnetometer
    /// reading: gravity fixes the vertical, the horizontalized field fixes
    /// heading. Exact for a static, undisturbed sample, so a pipeline needs
    /// no settling time.
    pub fn from_accel_mag(gains: AhrsGains, accel: Vec3, mag: Vec3) -> Result<Self, AhrsError> {
        let mut filter = Self::new(gains)?;
        filter.attitude = attitude_from_accel_mag(accel, mag)?;
        Ok(filter)
    }

    pub fn gains(&self) -> AhrsGains {
        self.gains
    }

    /// Current attitude as a direction cosine matrix (body to world).
    pub fn attitude_dcm(&self) -> &Dcm {
        &self.attitude
    }

    /// Current attitude as a unit quaternion (body to world).
    pub fn attitude_quaternion(&self) -> Quaternion {
        dcm_to_quat(&self.attitude)
    }

    /// Advances the filter by one sample and returns the new attitude.
    ///
    /// The first sample fixes the stream clock and applies corrections only
    /// (there is no interval to integrate rates over yet). A zero
    /// accelerometer vector skips the gravity correction for that step; a
    /// near-vertical magnetic field (horizontal component below 1e-3) skips
    /// the yaw correction.
    pub fn update(&mut self, sample: &ImuSample) -> Result<Quaternion, AhrsError> {
        let dt = match self.last_t {
            Some(last_t) => {
                let dt = sample.t - last_t;
                if dt <= 0.0 {
                    return Err(AhrsError::NonMonotonicTime { t: sample.t, last_t });
                }
                if dt > MAX_STEP_S {
                    return Err(AhrsError::StepTooLarge { dt });
                }
                dt
            }
            None => 0.0,
        };

        let mut error = Vec3::ZERO;
        if self.gains.kp > 0.0 || self.gains.ki > 0.0 {
            if let Ok(a_hat) = sample.accel.normalized() {
                // Row 2 of the DCM is the world up axis seen from the body.
                error = error + a_hat.cross(self.attitude.row(2));
            }
            let mag_world = self.attitude.mul_vec(sample.mag);
            let horiz = Vec3::new(mag_world.x, mag_world.y, 0.0);
            let h = horiz.norm();
            if h >= 1e-3 {
                // Heading error about world z, mapped back to the body frame.
                let err_world = Vec3::new(0.0, 0.0, -mag_world.y / h);
                error = error + self.attitude.transpose().mul_vec(err_world);
            }
        }
        self.integral = self.integral + error * self.gains.ki;
        let theta = sample.gyro * dt + error * self.gains.kp + self.integral;

        self.attitude = self.attitude.mul(&rotation_vector_to_dcm(theta));
        orthonormalize(&mut self.attitude);
        self.last_t = Some(sample.t);
        Ok(self.attitude_quaternion())
    }
}

/// Attitude from a single static accelerometer + magnetometer pair.
pub fn attitude_from_accel_mag(accel: Vec3, mag: Vec3) -> Result<Dcm, AhrsError> {
    let up_b = accel.normalized().map_err(|_| AhrsError::DegenerateReference)?;
    let horiz = mag - up_b * mag.dot(up_b);
    let north_b = horiz.normalized().map_err(|_| AhrsError::DegenerateReference)?;
    // Rows are the world axes expressed in the body frame: x = heading
    // reference, z = up, y completes the right-handed set.
    Ok(Dcm::from_rows(north_b, up_b.cross(north_b), up_b))
}

/// Symmetric Gram-Schmidt renormalization: split the row0/row1 coupling
/// error evenly, rebuild row2 as their cross product, rescale all rows.
fn orthonormalize(m: &mut Dcm) {
    let (r0, r1) = (m.row(0), m.row(1));
    let half_err = 0.5 * r0.dot(r1);
    let t0 = r0 - r1 * half_err;
    let t1 = r1 - r0 * half_err;
    let t2 = t0.cross(t1);
    m.set_row(0, t0 * (1.0 / t0.norm()));
    m.set_row(1, t1 * (1.0 / t1.norm()));
    m.set_row(2, t2 * (1.0 / t2.norm()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{angle_between, euler_to_quat, quat_to_euler, rotate, EulerAngles};
    use alloc::vec::Vec;

    fn deg(rad: f64) -> f64 {
        rad.to_degrees()
    }

    /// Angle of the relative rotation between two attitudes, radians.
    fn attitude_error(a: &Dcm, b: &Dcm) -> f64 {
        let rel = a.transpose().mul(b);
        let c = ((rel.m[0][0] + rel.m[1][1] + rel.m[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    fn static_sample(t: f64, attitude: &Quaternion) -> ImuSample {
        let m = quat_to_dcm(attitude).unwrap().transpose();
        ImuSample {
            t,
            gyro: Vec3::ZERO,
            accel: m.mul_vec(Vec3::new(0.0, 0.0, GRAVITY_MPS2)),
            mag: m.mul_vec(Vec3::new(1.0, 0.0, 0.0)),
        }
    }

    #[test]
    fn init_cases() {
        let f = Ahrs::new(AhrsGains::default()).unwrap();
        assert_eq!(*f.attitude_dcm(), Dcm::IDENTITY);
        let q30 = euler_to_quat(&EulerAngles::new(0.0, 30f64.to_radians(), 0.0));
        let f = Ahrs::with_attitude(AhrsGains::default(), q30).unwrap();
        assert!(attitude_error(f.attitude_dcm(), &quat_to_dcm(&q30).unwrap()) < 1e-12);
        assert!(matches!(
            Ahrs::new(AhrsGains { kp: -1.0, ki: 0.005 }),
            Err(AhrsError::InvalidGains { .. })
        ));
    }

    #[test]
    fn gyro_only_integrates_exactly() {
        let mut f = Ahrs::new(AhrsGains { kp: 0.0, ki: 0.0 }).unwrap();
        for k in 0..=50 {
            let s = ImuSample {
                t: k as f64 * 0.02,
                gyro: Vec3::new(0.0, 0.0, 1.0),
                accel: Vec3::new(0.0, 0.0, GRAVITY_MPS2),
                mag: Vec3::new(1.0, 0.0, 0.0),
            };
            f.update(&s).unwrap();
        }
        let e = quat_to_euler(&f.attitude_quaternion()).unwrap();
        assert!((e.yaw - 1.0).abs() <= 1e-3, "yaw {}", e.yaw);
        assert!(e.roll.abs() < 1e-9 && e.pitch.abs() < 1e-9);
    }

    #[test]
    fn small_tilt_converges_within_five_seconds() {
        let tilt = euler_to_quat(&EulerAngles::new(4f64.to_radians(), 3f64.to_radians(), 0.0));
        let mut f = Ahrs::with_attitude(AhrsGains::default(), tilt).unwrap();
        let level = Quaternion::IDENTITY;
        for k in 0..=250 {
            f.update(&static_sample(k as f64 * 0.02, &level)).unwrap();
        }
        let e = quat_to_euler(&f.attitude_quaternion()).unwrap();
        assert!(deg(e.roll).abs() < 0.5 && deg(e.pitch).abs() < 0.5);
    }

    #[test]
    fn static_roll_reference_is_recovered() {
        let rolled = euler_to_quat(&EulerAngles::new(30f64.to_radians(), 0.0, 0.0));
        let mut f = Ahrs::new(AhrsGains::default()).unwrap();
        for k in 0..=500 {
            // accel = (0, g sin30, g cos30), mag untouched by an x roll.
            f.update(&static_sample(k as f64 * 0.02, &rolled)).unwrap();
        }
        let e = quat_to_euler(&f.attitude_quaternion()).unwrap();
        assert!((deg(e.roll) - 30.0).abs() < 0.5, "roll {}", deg(e.roll));
    }

    #[test]
    fn convergence_is_monotone_at_one_second_checkpoints() {
        let target = euler_to_quat(&EulerAngles::new(0.2, -0.3, 0.4));
        let start = target * Quaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.2), 30f64.to_radians()).unwrap();
        let mut f = Ahrs::with_attitude(AhrsGains::default(), start.normalized()).unwrap();
        let truth = quat_to_dcm(&target).unwrap();
        let mut errors: Vec<f64> = Vec::new();
        for k in 0..=500 {
            f.update(&static_sample(k as f64 * 0.02, &target)).unwrap();
            if k % 50 == 0 {
                errors.push(attitude_error(f.attitude_dcm(), &truth));
            }
        }
        for w in errors.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "checkpoint errors not decreasing: {errors:?}");
        }
        assert!(deg(*errors.last().unwrap()) <= 0.5);
    }

    #[test]
    fn timestamps_must_advance_and_steps_are_bounded() {
        let mut f = Ahrs::new(AhrsGains::default()).unwrap();
        let q = Quaternion::IDENTITY;
        f.update(&static_sample(1.0, &q)).unwrap();
        assert!(matches!(f.update(&static_sample(1.0, &q)), Err(AhrsError::NonMonotonicTime { .. })));
        assert!(matches!(f.update(&static_sample(2.0, &q)), Err(AhrsError::StepTooLarge { .. })));
        f.update(&static_sample(1.05, &q)).unwrap();
    }

    #[test]
    fn zero_accel_skips_gravity_correction() {
        let mut f = Ahrs::new(AhrsGains::default()).unwrap();
        let s = ImuSample { t: 0.0, gyro: Vec3::ZERO, accel: Vec3::ZERO, mag: Vec3::new(1.0, 0.0, 0.0) };
        f.update(&s).unwrap();
        assert!(attitude_error(f.attitude_dcm(), &Dcm::IDENTITY) < 1e-12);
    }

    #[test]
    fn attitude_from_references_is_exact() {
        let tilt = 30f64.to_radians();
        let m = attitude_from_accel_mag(
            Vec3::new(0.0, GRAVITY_MPS2 * tilt.sin(), GRAVITY_MPS2 * tilt.cos()),
            Vec3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let want = quat_to_dcm(&euler_to_quat(&EulerAngles::new(tilt, 0.0, 0.0))).unwrap();
        assert!(attitude_error(&m, &want) < 1e-12);
        assert!(matches!(attitude_from_accel_mag(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)), Err(AhrsError::DegenerateReference)));
        assert!(matches!(
            attitude_from_accel_mag(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 2.0)),
            Err(AhrsError::DegenerateReference)
        ));
    }

    #[test]
    fn orientation_output_tracks_body_forward() {
        // After a 90 degree yaw turn, body +y points along world -x.
        let mut f = Ahrs::new(AhrsGains { kp: 0.0, ki: 0.0 }).unwrap();
        let n = 50;
        for k in 0..=n {
            let s = ImuSample {
                t: k as f64 * 0.02,
                gyro: Vec3::new(0.0, 0.0, core::f64::consts::FRAC_PI_2),
                accel: Vec3::ZERO,
                mag: Vec3::ZERO,
            };
            f.update(&s).unwrap();
        }
        let fwd = rotate(&f.attitude_quaternion(), Vec3::new(0.0, 1.0, 0.0));
        assert!(angle_between(fwd, Vec3::new(-1.0, 0.0, 0.0)).unwrap() < 1e-6);
    }
}
