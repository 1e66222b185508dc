//! Rotation and vector algebra shared by every processing stage: quaternions,
//! direction cosine matrices, Euler angles, and pointing rays.
//!
//! Conventions are fixed once here so the rest of the stack never has to
//! renegotiate them:
//!
//! * rotations are active and right-handed;
//! * [`Quaternion`] is Hamilton-ordered `(w, x, y, z)` and maps body-frame
//!   vectors into the world frame;
//! * [`EulerAngles`] uses the intrinsic Z-Y-X order (yaw about z, then pitch
//!   about y, then roll about x), the usual AHRS output convention, so a
//!   mounting offset becomes a single-axis addition on pitch;
//! * [`Dcm`] is laid out so that `m * v` equals `rotate(q, v)` when
//!   `m = quat_to_dcm(q)`.

#[allow(unused_imports)]
use crate::flt::FloatExt;
use thiserror::Error;

/// Accepted deviation of a rotation quaternion's norm from 1.
pub const QUAT_NORM_TOL: f64 = 1e-6;

/// Errors from rotation/vector constructions.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    /// A quaternion used as a rotation must have norm 1 within [`QUAT_NORM_TOL`].
    #[error("quaternion norm {norm} is outside 1 +/- {tol}")]
    NotNormalized { norm: f64, tol: f64 },
    /// A direction or angle was requested from a zero-length vector.
    #[error("zero-length vector where a direction is required")]
    ZeroVector,
}

/// 3-component vector. Units are contextual: millimeters for positions,
/// rad/s for angular rates, m/s^2 for accelerations, unitless for directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Errors on (near-)zero input.
    pub fn normalized(self) -> Result<Vec3, GeomError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::ZeroVector);
        }
        Ok(self * (1.0 / n))
    }
}

impl core::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl core::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl core::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl core::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Hamilton quaternion `(w, x, y, z)`; unit quaternions represent rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Quaternion, GeomError> {
        let u = axis.normalized()?;
        let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
        Ok(Quaternion::new(c, s * u.x, s * u.y, s * u.z))
    }

    /// Rotation encoded as axis * angle; the zero vector maps to identity.
    /// Exact for any magnitude, so repeated integration stays on the group.
    pub fn from_rotation_vector(v: Vec3) -> Quaternion {
        let angle = v.norm();
        if angle < 1e-300 {
            return Quaternion::IDENTITY;
        }
        let half = angle / 2.0;
        let k = half.sin() / angle;
        Quaternion::new(half.cos(), v.x * k, v.y * k, v.z * k)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Rescale to unit norm. Input must be nonzero.
    pub fn normalized(self) -> Quaternion {
        let n = self.norm();
        debug_assert!(n > 0.0, "cannot normalize a zero quaternion");
        let k = 1.0 / n;
        Quaternion::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    fn check_normalized(self) -> Result<Quaternion, GeomError> {
        let n = self.norm();
        if (n - 1.0).abs() > QUAT_NORM_TOL {
            return Err(GeomError::NotNormalized { norm: n, tol: QUAT_NORM_TOL });
        }
        Ok(self.normalized())
    }
}

/// Hamilton product: `q1 * q2` applies `q2` first, then `q1`.
impl core::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

/// Direction cosine matrix: 3x3 orthonormal rotation matrix, row-major.
/// `m.m[r][c]` is row `r`, column `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dcm {
    pub m: [[f64; 3]; 3],
}

impl Default for Dcm {
    fn default() -> Self {
        Dcm::IDENTITY
    }
}

impl Dcm {
    pub const IDENTITY: Dcm = Dcm { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn set_row(&mut self, i: usize, v: Vec3) {
        self.m[i] = [v.x, v.y, v.z];
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Dcm {
        Dcm { m: [[r0.x, r0.y, r0.z], [r1.x, r1.y, r1.z], [r2.x, r2.y, r2.z]] }
    }

    pub fn transpose(&self) -> Dcm {
        let m = &self.m;
        Dcm {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul(&self, o: &Dcm) -> Dcm {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        Dcm { m: r }
    }

    /// Largest absolute element of `M^T M - I`; 0 for a perfect rotation.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.transpose().mul(self);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                let e = (g.m[i][j] - target).abs();
                if e > worst {
                    worst = e;
                }
            }
        }
        worst
    }
}

/// Intrinsic Z-Y-X Euler angles in radians: applying yaw about z, then pitch
/// about y, then roll about x reproduces the rotation. Pitch is confined to
/// [-pi/2, pi/2] on extraction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        EulerAngles { roll, pitch, yaw }
    }
}

/// Half-line in 3D: `origin + t * direction` for `t >= 0`, direction unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`. Errors on a zero direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray, GeomError> {
        Ok(Ray { origin, direction: direction.normalized()? })
    }
}

/// Rotation matrix of `q`: `quat_to_dcm(q).mul_vec(v) == rotate(q, v)`.
/// The quaternion must be unit within [`QUAT_NORM_TOL`].
pub fn quat_to_dcm(q: &Quaternion) -> Result<Dcm, GeomError> {
    let q = q.check_normalized()?;
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Ok(Dcm {
        m: [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ],
    })
}

/// Quaternion of a rotation matrix (Shepperd's method: branch on the largest
/// diagonal combination for numerical stability). Result has `w >= 0`.
pub fn dcm_to_quat(m: &Dcm) -> Quaternion {
    let a = &m.m;
    let trace = a[0][0] + a[1][1] + a[2][2];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion::new(s / 4.0, (a[2][1] - a[1][2]) / s, (a[0][2] - a[2][0]) / s, (a[1][0] - a[0][1]) / s)
    } else if a[0][0] > a[1][1] && a[0][0] > a[2][2] {
        let s = (1.0 + a[0][0] - a[1][1] - a[2][2]).sqrt() * 2.0;
        Quaternion::new((a[2][1] - a[1][2]) / s, s / 4.0, (a[0][1] + a[1][0]) / s, (a[0][2] + a[2][0]) / s)
    } else if a[1][1] > a[2][2] {
        let s = (1.0 + a[1][1] - a[0][0] - a[2][2]).sqrt() * 2.0;
        Quaternion::new((a[0][2] - a[2][0]) / s, (a[0][1] + a[1][0]) / s, s / 4.0, (a[1][2] + a[2][1]) / s)
    } else {
        let s = (1.0 + a[2][2] - a[0][0] - a[1][1]).sqrt() * 2.0;
        Quaternion::new((a[1][0] - a[0][1]) / s, (a[0][2] + a[2][0]) / s, (a[1][2] + a[2][1]) / s, s / 4.0)
    };
    let q = q.normalized();
    if q.w < 0.0 {
        Quaternion::new(-q.w, -q.x, -q.y, -q.z)
    } else {
        q
    }
}

/// Euler angles of a rotation matrix in the fixed Z-Y-X convention.
///
/// At gimbal lock (|pitch| = pi/2, where only yaw-roll sums are observable)
/// the canonical choice is roll = 0 with yaw absorbing the remainder.
pub fn dcm_to_euler(m: &Dcm) -> EulerAngles {
    let a = &m.m;
    let sp = (-a[2][0]).clamp(-1.0, 1.0);
    if sp.abs() >= 1.0 - 1e-12 {
        let pitch = if sp > 0.0 { core::f64::consts::FRAC_PI_2 } else { -core::f64::consts::FRAC_PI_2 };
        EulerAngles { roll: 0.0, pitch, yaw: (-a[0][1]).atan2(a[1][1]) }
    } else {
        EulerAngles {
            roll: a[2][1].atan2(a[2][2]),
            pitch: sp.asin(),
            yaw: a[1][0].atan2(a[0][0]),
        }
    }
}

/// Composes intrinsic Z-Y-X angles into the equivalent rotation quaternion.
pub fn euler_to_quat(e: &EulerAngles) -> Quaternion {
    let (sr, cr) = ((e.roll / 2.0).sin(), (e.roll / 2.0).cos());
    let (sp, cp) = ((e.pitch / 2.0).sin(), (e.pitch / 2.0).cos());
    let (sy, cy) = ((e.yaw / 2.0).sin(), (e.yaw / 2.0).cos());
    let qz = Quaternion::new(cy, 0.0, 0.0, sy);
    let qy = Quaternion::new(cp, 0.0, sp, 0.0);
    let qx = Quaternion::new(cr, sr, 0.0, 0.0);
    (qz * qy * qx).normalized()
}

/// Euler angles of a quaternion (via its rotation matrix).
pub fn quat_to_euler(q: &Quaternion) -> Result<EulerAngles, GeomError> {
    Ok(dcm_to_euler(&quat_to_dcm(q)?))
}

/// Rotation matrix of the axis-angle vector `v` (axis * angle, radians) via
/// the closed-form Rodrigues formula. Exact for any magnitude, which keeps
/// repeated gyro integration on the rotation group; series fallback below
/// 1e-6 rad avoids 0/0.
pub fn rotation_vector_to_dcm(v: Vec3) -> Dcm {
    let angle2 = v.norm_squared();
    let angle = angle2.sqrt();
    let (a, b) = if angle < 1e-6 {
        // sin(x)/x and (1 - cos(x))/x^2 by series; error below 1e-26 here.
        (1.0 - angle2 / 6.0, 0.5 - angle2 / 24.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / angle2)
    };
    let (x, y, z) = (v.x, v.y, v.z);
    Dcm {
        m: [
            [1.0 - b * (y * y + z * z), -a * z + b * x * y, a * y + b * x * z],
            [a * z + b * x * y, 1.0 - b * (x * x + z * z), -a * x + b * y * z],
            [-a * y + b * x * z, a * x + b * y * z, 1.0 - b * (x * x + y * y)],
        ],
    }
}

/// Rotates `v` by `q` (active rotation, body to world for attitude
/// quaternions). `q` is assumed unit; norm error passes through linearly.
pub fn rotate(q: &Quaternion, v: Vec3) -> Vec3 {
    // v' = v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z)
    let u = Vec3::new(q.x, q.y, q.z);
    let t = u.cross(v) * 2.0;
    v + t * q.w + u.cross(t)
}

/// Angle between two nonzero vectors in [0, pi]; the dot product is clamped
/// to [-1, 1] before arccos to absorb rounding.
pub fn angle_between(u: Vec3, v: Vec3) -> Result<f64, GeomError> {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
        return Err(GeomError::ZeroVector);
    }
    Ok((u.dot(v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}
