//! Synthetic sensor traces with exact ground truth.
//!
//! A trace walks one of six target shapes at a chosen size on a plane
//! tilted about the world x axis, sampling IMU, optical flow, and true pose
//! at the report rate. The construction mirrors the evaluation design it
//! stands in for: 3 textures x 4 sizes x 6 shapes x 5 repetitions, each
//! repetition with its own seed and tilt.
//!
//! Optical counts are quantized with per-axis error diffusion: the
//! fractional carry never exceeds half a count, so cumulative position
//! error from rounding stays below one count-quantum regardless of trace
//! length. Plain rounding would bias short paths instead.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ahrs::{ImuSample, GRAVITY_MPS2};
#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::fusion::PosePoint;
use crate::geom::{euler_to_quat, rotate, EulerAngles, Vec3};
use crate::optical::{
    gaussian, mm_to_counts, AccelerationModel, OpticalError, OpticalSample, SensorConfig,
    MAX_SPEED_IPS, MAX_SQUAL, MM_PER_INCH,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Sizes used by the reference evaluation, millimeters.
pub const STANDARD_SIZES_MM: [f64; 4] = [12.0, 21.0, 42.0, 84.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid shape spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid texture profile: {0}")]
    InvalidTexture(&'static str),
    #[error(transparent)]
    Optical(#[from] OpticalError),
}

/// Surface the trace is "drawn" on; sets the SQUAL band and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureProfile {
    pub name: String,
    /// Uniform SQUAL draw while in contact, inclusive bounds.
    pub contact_squal_range: (u8, u8),
    /// Gaussian count noise per frame per axis when noise is enabled.
    pub noise_sd: f64,
}

impl TextureProfile {
    /// All three reference textures track with SQUAL between 30 and 50.
    fn reference(name: &str) -> TextureProfile {
        TextureProfile { name: String::from(name), contact_squal_range: (30, 50), noise_sd: 0.5 }
    }

    pub fn mousepad() -> TextureProfile {
        Self::reference("mousepad")
    }

    pub fn jeans() -> TextureProfile {
        Self::reference("jeans")
    }

    pub fn wood() -> TextureProfile {
        Self::reference("wood")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (lo, hi) = self.contact_squal_range;
        if lo > hi {
            return Err(SimError::InvalidTexture("squal range is reversed"));
        }
        if hi > MAX_SQUAL {
            return Err(SimError::InvalidTexture("squal range exceeds 169"));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(SimError::InvalidTexture("noise sd must be nonnegative"));
        }
        Ok(())
    }
}

/// The six target shapes, each spanning a size x size box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    HLine,
    VLine,
    Diagonal,
    Triangle,
    Square,
    Circle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::HLine,
        ShapeKind::VLine,
        ShapeKind::Diagonal,
        ShapeKind::Triangle,
        ShapeKind::Square,
        ShapeKind::Circle,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ShapeKind::HLine => "hline",
            ShapeKind::VLine => "vline",
            ShapeKind::Diagonal => "diagonal",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
        }
    }
}

/// Drawing-speed schedule along the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedProfile {
    /// Fixed speed, inch/s.
    Constant { ips: f64 },
    /// Ramp up over the first quarter of the path, cruise at the peak for
    /// half, ramp down over the last quarter.
    Trapezoidal { peak_ips: f64 },
}

impl Default for SpeedProfile {
    fn default() -> Self {
        SpeedProfile::Constant { ips: 1.0 }
    }
}

impl SpeedProfile {
    fn peak(self) -> f64 {
        match self {
            SpeedProfile::Constant { ips } => ips,
            SpeedProfile::Trapezoidal { peak_ips } => peak_ips,
        }
    }
}

/// One shape instance to trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub size_mm: f64,
    /// Plane tilt about the world x axis, degrees in [0, 90].
    pub tilt_deg: f64,
    pub speed: SpeedProfile,
    /// Permits sizes outside the standard evaluation set.
    pub allow_custom_size: bool,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, size_mm: f64, tilt_deg: f64) -> ShapeSpec {
        ShapeSpec { kind, size_mm, tilt_deg, speed: SpeedProfile::default(), allow_custom_size: false }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.size_mm > 0.0) {
            return Err(SimError::InvalidSpec("size must be positive"));
        }
        if !self.allow_custom_size && !STANDARD_SIZES_MM.iter().any(|s| *s == self.size_mm) {
            return Err(SimError::InvalidSpec("size outside the standard set; enable custom sizes"));
        }
        if !(0.0..=90.0).contains(&self.tilt_deg) {
            return Err(SimError::InvalidSpec("tilt outside [0, 90] degrees"));
        }
        let peak = self.speed.peak();
        if !(peak > 0.0) {
            return Err(SimError::InvalidSpec("speed must be positive"));
        }
        if peak > MAX_SPEED_IPS {
            return Err(SimError::InvalidSpec("peak speed above 7 inch/s"));
        }
        Ok(())
    }
}

/// Arc length of the ideal shape outline.
pub fn analytic_perimeter(kind: ShapeKind, size_mm: f64) -> f64 {
    match kind {
        ShapeKind::HLine | ShapeKind::VLine => size_mm,
        ShapeKind::Diagonal => size_mm * core::f64::consts::SQRT_2,
        // Base plus two equal slanted sides of an isosceles triangle.
        ShapeKind::Triangle => size_mm * (1.0 + 5.0f64.sqrt()),
        ShapeKind::Square => 4.0 * size_mm,
        ShapeKind::Circle => core::f64::consts::PI * size_mm,
    }
}

/// Trace provenance and generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub id: String,
    pub shape: ShapeSpec,
    pub texture: TextureProfile,
    pub seed: u64,
    pub cfg: SensorConfig,
    pub distorted: bool,
    pub noisy: bool,
}

/// A generated trace: three equal-length streams on one time base.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub imu: Vec<ImuSample>,
    pub optical: Vec<OpticalSample>,
    pub ground_truth: Vec<PosePoint>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.optical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.optical.is_empty()
    }

    /// Structural invariants: equal stream lengths, shared timestamps,
    /// ground truth anchored at the origin, SQUAL in range.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.imu.len() != self.optical.len() || self.optical.len() != self.ground_truth.len() {
            return Err(SimError::InvalidSpec("stream lengths differ"));
        }
        if let Some(first) = self.ground_truth.first() {
            if first.position.norm() != 0.0 {
                return Err(SimError::InvalidSpec("ground truth must start at the origin"));
            }
        }
        for ((imu, opt), gt) in self.imu.iter().zip(&self.optical).zip(&self.ground_truth) {
            if imu.t != opt.t || opt.t != gt.t {
                return Err(SimError::InvalidSpec("streams disagree on timestamps"));
            }
            if opt.squal > MAX_SQUAL {
                return Err(SimError::InvalidSpec("squal out of range"));
            }
        }
        Ok(())
    }
}

/// In-plane corner sequence, millimeters; shapes start at the origin.
fn waypoints(kind: ShapeKind, size: f64) -> Vec<[f64; 2]> {
    match kind {
        ShapeKind::HLine => alloc::vec![[0.0, 0.0], [size, 0.0]],
        ShapeKind::VLine => alloc::vec![[0.0, 0.0], [0.0, size]],
        ShapeKind::Diagonal => alloc::vec![[0.0, 0.0], [size, size]],
        ShapeKind::Triangle => alloc::vec![[0.0, 0.0], [size, 0.0], [size / 2.0, size], [0.0, 0.0]],
        ShapeKind::Square => alloc::vec![[0.0, 0.0], [size, 0.0], [size, size], [0.0, size], [0.0, 0.0]],
        ShapeKind::Circle => Vec::new(), // handled parametrically
    }
}

/// Constant-speed sampling. Polyline segments snap their frame count to the
/// nearest whole number so every corner lands on a frame boundary (the
/// sampled path length then equals the perimeter exactly); the circle is
/// stepped at uniform angle, whose chord shortfall is far below 0.1% at
/// these sizes.
fn sample_constant(kind: ShapeKind, size: f64, step_mm: f64) -> Vec<[f64; 2]> {
    let mut pts = alloc::vec![[0.0, 0.0]];
    if kind == ShapeKind::Circle {
        let r = size / 2.0;
        let n = ((core::f64::consts::PI * size / step_mm).round() as usize).max(3);
        for k in 1..=n {
            let th = core::f64::consts::TAU * k as f64 / n as f64;
            pts.push([r * th.sin(), r * (1.0 - th.cos())]);
        }
        return pts;
    }
    let wp = waypoints(kind, size);
    for seg in wp.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = ((len / step_mm).round() as usize).max(1);
        for k in 1..=n {
            let f = k as f64 / n as f64;
            pts.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
        }
    }
    pts
}

/// Point at arc length `s` along the shape outline.
fn point_at_arc_length(kind: ShapeKind, size: f64, s: f64) -> [f64; 2] {
    if kind == ShapeKind::Circle {
        let r = size / 2.0;
        let th = s / r;
        return [r * th.sin(), r * (1.0 - th.cos())];
    }
    let wp = waypoints(kind, size);
    let mut remaining = s.max(0.0);
    for seg in wp.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if remaining <= len {
            let f = remaining / len;
            return [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f];
        }
        remaining -= len;
    }
    *wp.last().unwrap_or(&[0.0, 0.0])
}

/// Trapezoidal sampling: quarter of the distance ramping up, half cruising,
/// quarter ramping down. Corners are not snapped to frames here, so the
/// sampled length under-runs the perimeter by the tiny corner-cut chords.
fn sample_trapezoid(kind: ShapeKind, size: f64, peak_mm_s: f64, dt: f64) -> Vec<[f64; 2]> {
    let total = analytic_perimeter(kind, size);
    let ramp = total / 4.0;
    let t_ramp = 2.0 * ramp / peak_mm_s;
    let t_cruise = (total / 2.0) / peak_mm_s;
    let t_total = 2.0 * t_ramp + t_cruise;
    let accel = peak_mm_s / t_ramp;
    let arc_at = |t: f64| -> f64 {
        if t <= t_ramp {
            0.5 * accel * t * t
        } else if t <= t_ramp + t_cruise {
            ramp + peak_mm_s * (t - t_ramp)
        } else {
            let tail = (t_total - t).max(0.0);
            total - 0.5 * accel * tail * tail
        }
    };
    let n = (t_total / dt).ceil() as usize;
    (0..=n)
        .map(|k| point_at_arc_length(kind, size, arc_at((k as f64 * dt).min(t_total)).min(total)))
        .collect()
}

/// Generates one trace. Deterministic for a given seed and flag set: the
/// random stream covers SQUAL (one draw per frame) and, when enabled, two
/// noise draws per moving frame, in frame order.
pub fn generate_trace(
    spec: &ShapeSpec,
    texture: &TextureProfile,
    cfg: &SensorConfig,
    seed: u64,
    distortion: Option<&AccelerationModel>,
    noise: bool,
) -> Result<Trace, SimError> {
    spec.validate()?;
    texture.validate()?;
    let dt = 1.0 / cfg.report_rate;
    let points = match spec.speed {
        SpeedProfile::Constant { ips } => sample_constant(spec.kind, spec.size_mm, ips * MM_PER_INCH * dt),
        SpeedProfile::Trapezoidal { peak_ips } => {
            sample_trapezoid(spec.kind, spec.size_mm, peak_ips * MM_PER_INCH, dt)
        }
    };

    let plane = euler_to_quat(&EulerAngles { roll: spec.tilt_deg.to_radians(), pitch: 0.0, yaw: 0.0 });
    let inverse = plane.conjugate();
    let accel_body = rotate(&inverse, Vec3::new(0.0, 0.0, GRAVITY_MPS2));
    let mag_body = rotate(&inverse, Vec3::new(1.0, 0.0, 0.0));

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (lo, hi) = texture.contact_squal_range;
    let mut imu = Vec::with_capacity(points.len());
    let mut optical = Vec::with_capacity(points.len());
    let mut ground_truth = Vec::with_capacity(points.len());
    let mut carry = [0.0f64; 2];

    for (k, p) in points.iter().enumerate() {
        let t = k as f64 * dt;
        let (dx, dy) = if k == 0 {
            (0, 0)
        } else {
            let prev = points[k - 1];
            let dmm = [p[0] - prev[0], p[1] - prev[1]];
            let speed_ips = (dmm[0] * dmm[0] + dmm[1] * dmm[1]).sqrt() / MM_PER_INCH / dt;
            let mut counts = [mm_to_counts(dmm[0], cfg), mm_to_counts(dmm[1], cfg)];
            if let Some(model) = distortion {
                for c in &mut counts {
                    *c = model.distort_counts(*c, speed_ips)?;
                }
            }
            if noise {
                for c in &mut counts {
                    *c += gaussian(&mut rng) * texture.noise_sd;
                }
            }
            let mut q = [0i32; 2];
            for axis in 0..2 {
                carry[axis] += counts[axis];
                q[axis] = carry[axis].round() as i32;
                carry[axis] -= q[axis] as f64;
            }
            (q[0], q[1])
        };
        let squal = rng.gen_range(lo..=hi);
        imu.push(ImuSample { t, gyro: Vec3::ZERO, accel: accel_body, mag: mag_body });
        optical.push(OpticalSample { t, dx, dy, squal });
        ground_truth.push(PosePoint {
            t,
            position: rotate(&plane, Vec3::new(p[0], p[1], 0.0)),
            orientation: plane,
        });
    }

    let meta = TraceMeta {
        id: format!("{}_{:03}mm_{}", texture.name, spec.size_mm as u32, spec.kind.slug()),
        shape: spec.clone(),
        texture: texture.clone(),
        seed,
        cfg: *cfg,
        distorted: distortion.is_some(),
        noisy: noise,
    };
    Ok(Trace { meta, imu, optical, ground_truth })
}

/// One cell-repetition of the reference evaluation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEntry {
    pub id: String,
    pub spec: ShapeSpec,
    pub texture: TextureProfile,
    pub seed: u64,
}

/// The full evaluation matrix: 3 textures x 4 sizes x 6 shapes x 5
/// repetitions = 360 entries, each with a seeded uniform tilt in [0, 90]
/// degrees and its own generation seed. Deterministic in `seed`; entry ids
/// are stable across runs.
pub fn reference_matrix(seed: u64) -> Vec<MatrixEntry> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let textures = [TextureProfile::mousepad(), TextureProfile::jeans(), TextureProfile::wood()];
    let mut entries = Vec::with_capacity(360);
    for texture in &textures {
        for &size in &STANDARD_SIZES_MM {
            for kind in ShapeKind::ALL {
                for rep in 1..=5 {
                    let tilt = rng.gen::<f64>() * 90.0;
                    let trace_seed = rng.gen::<u64>();
                    entries.push(MatrixEntry {
                        id: format!("{}_{:03}mm_{}_r{}", texture.name, size as u32, kind.slug(), rep),
                        spec: ShapeSpec::new(kind, size, tilt),
                        texture: texture.clone(),
                        seed: trace_seed,
                    });
                }
            }
        }
    }
    entries
}
