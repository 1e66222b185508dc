//! Optical-flow sensor model: counts/distance conversion, the speed-dependent
//! acceleration distortion measured on the reference device, forward
//! simulation of that distortion, least-squares calibration, and correction.
//!
//! The sensor reports integer motion counts per frame. Its reading over a
//! fixed traverse is not constant but varies with movement speed; the
//! built-in models capture that relation as a polynomial in speed (inch/s)
//! over the calibrated range [0, 7] ips, one model per resolution setting.
//! Distortion is applied and removed as the ratio of the model value at the
//! current speed to its value at rest, so zero-speed motion is untouched and
//! the correction is an exact inverse at matching speed.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::stats::{f_sf, t_quantile, t_two_sided_p};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Largest value the surface-quality register can report.
pub const MAX_SQUAL: u8 = 169;

/// Millimeters per inch; the sensor resolution is specified in counts/inch.
pub const MM_PER_INCH: f64 = 25.4;

/// Calibrated speed range of the distortion models, inch/s.
pub const MIN_SPEED_IPS: f64 = 0.0;
/// Upper end of the calibrated speed range; faster motion is clamped here
/// by the per-frame corrector rather than extrapolating the polynomial.
pub const MAX_SPEED_IPS: f64 = 7.0;

/// Errors from sensor modeling and calibration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticalError {
    #[error("speed {speed} ips is outside the calibrated range [0, 7] ips")]
    SpeedOutOfRange { speed: f64 },
    #[error("fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("design matrix is rank-deficient (too few distinct speeds)")]
    DegenerateFit,
    #[error("polynomial degree {degree} is not supported (expected 2 or 3)")]
    UnsupportedDegree { degree: usize },
    #[error("acceleration model must stay positive over the calibrated speed range")]
    NonPositiveModel,
    #[error("invalid sensor config: {0}")]
    InvalidConfig(&'static str),
}

/// One raw optical report: relative motion since the previous frame plus the
/// surface-quality register value (0 when no surface is visible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSample {
    /// Timestamp, seconds; strictly increasing within a stream.
    pub t: f64,
    /// Relative motion, integer counts.
    pub dx: i32,
    pub dy: i32,
    /// Surface quality in [0, 169].
    pub squal: u8,
}

impl OpticalSample {
    pub fn new(t: f64, dx: i32, dy: i32, squal: u8) -> Result<Self, OpticalError> {
        if squal > MAX_SQUAL {
            return Err(OpticalError::InvalidConfig("squal above 169"));
        }
        Ok(OpticalSample { t, dx, dy, squal })
    }
}

/// Static sensor parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Resolution, counts per inch of surface travel.
    pub cpi: f64,
    /// Internal imaging rate, frames/s.
    pub frame_rate: f64,
    /// Rate at which motion reports are consumed downstream, Hz.
    pub report_rate: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { cpi: 400.0, frame_rate: 1500.0, report_rate: 50.0 }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), OpticalError> {
        if !(self.cpi > 0.0) {
            return Err(OpticalError::InvalidConfig("cpi must be positive"));
        }
        if !(self.frame_rate > 0.0) {
            return Err(OpticalError::InvalidConfig("frame_rate must be positive"));
        }
        if !(self.report_rate > 0.0) {
            return Err(OpticalError::InvalidConfig("report_rate must be positive"));
        }
        Ok(())
    }

    /// Seconds between consecutive motion reports.
    pub fn report_dt(&self) -> f64 {
        1.0 / self.report_rate
    }
}

/// Converts motion counts to millimeters at the configured resolution.
pub fn counts_to_mm(counts: f64, cfg: &SensorConfig) -> f64 {
    counts / cfg.cpi * MM_PER_INCH
}

/// Converts millimeters to (fractional) motion counts.
pub fn mm_to_counts(mm: f64, cfg: &SensorConfig) -> f64 {
    mm / MM_PER_INCH * cfg.cpi
}

/// Polynomial model of reported counts per 1-inch traverse as a function of
/// movement speed (inch/s), valid over [0, 7] ips. Coefficients are stored
/// low order first: counts(s) = c0 + c1 s + ... + cd s^d, degree 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelerationModel {
    cpi: f64,
    coeffs: Vec<f64>,
}

impl AccelerationModel {
    /// Builds a model, enforcing degree 2 or 3 and positivity over the
    /// calibrated speed range.
    pub fn new(cpi: f64, coeffs: Vec<f64>) -> Result<Self, OpticalError> {
        if !(cpi > 0.0) {
            return Err(OpticalError::InvalidConfig("cpi must be positive"));
        }
        let degree = coeffs.len().saturating_sub(1);
        if !(2..=3).contains(&degree) {
            return Err(OpticalError::UnsupportedDegree { degree });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(OpticalError::InvalidConfig("non-finite coefficient"));
        }
        let model = AccelerationModel { cpi, coeffs };
        let mut s = MIN_SPEED_IPS;
        while s <= MAX_SPEED_IPS {
            if model.eval(s) <= 0.0 {
                return Err(OpticalError::NonPositiveModel);
            }
            s += 0.01;
        }
        Ok(model)
    }

    /// Built-in calibration for the 400 cpi resolution setting (quadratic).
    pub fn calibrated_400cpi() -> AccelerationModel {
        AccelerationModel { cpi: 400.0, coeffs: vec![410.8021, 10.4840, -1.4685] }
    }

    /// Built-in calibration for the 800 cpi resolution setting (cubic).
    pub fn calibrated_800cpi() -> AccelerationModel {
        AccelerationModel { cpi: 800.0, coeffs: vec![780.3591, 63.1833, -14.6930, 1.0582] }
    }

    pub fn cpi(&self) -> f64 {
        self.cpi
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn eval(&self, speed: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * speed + c;
        }
        acc
    }

    /// Model value: counts reported over a 1-inch traverse at `speed` ips.
    /// Speeds outside the calibrated range are an error; the relation was
    /// never measured there.
    pub fn model_counts(&self, speed: f64) -> Result<f64, OpticalError> {
        if !(MIN_SPEED_IPS..=MAX_SPEED_IPS).contains(&speed) {
            return Err(OpticalError::SpeedOutOfRange { speed });
        }
        Ok(self.eval(speed))
    }

    /// Ratio of the model at `speed` to the model at rest; the per-frame
    /// distortion factor. Clamps speed into the calibrated range.
    pub fn distortion_ratio_clamped(&self, speed: f64) -> f64 {
        let s = speed.clamp(MIN_SPEED_IPS, MAX_SPEED_IPS);
        self.eval(s) / self.eval(0.0)
    }

    /// Applies the speed distortion to an ideal count reading. Normalized so
    /// zero-speed motion is unchanged.
    pub fn distort_counts(&self, true_counts: f64, speed: f64) -> Result<f64, OpticalError> {
        Ok(true_counts * self.model_counts(speed)? / self.eval(0.0))
    }

    /// Inverse of [`Self::distort_counts`] at the same speed:
    /// `correct_counts(distort_counts(c, s), s) == c` within 1e-9 relative.
    pub fn correct_counts(&self, reported: f64, speed: f64) -> Result<f64, OpticalError> {
        Ok(reported * self.eval(0.0) / self.model_counts(speed)?)
    }

    /// Recovers the true per-frame count magnitude from a distorted report.
    ///
    /// A frame that truly moved `u` counts in `dt` seconds moved at
    /// `u / (dt * cpi)` ips and so reports `g(u) = u * ratio(u / (dt * cpi))`
    /// counts. `g` is strictly increasing over the calibrated range for the
    /// built-in models, so the true magnitude is found by bisection; reports
    /// beyond `g(7 ips * dt * cpi)` divide out the ratio at 7 ips instead of
    /// extrapolating.
    pub fn invert_reported_magnitude(&self, reported: f64, dt: f64) -> f64 {
        debug_assert!(reported >= 0.0 && dt > 0.0);
        if reported == 0.0 {
            return 0.0;
        }
        let counts_per_ips = dt * self.cpi;
        let u_max = MAX_SPEED_IPS * counts_per_ips;
        let g = |u: f64| u * self.distortion_ratio_clamped(u / counts_per_ips);
        if reported >= g(u_max) {
            return reported / self.distortion_ratio_clamped(MAX_SPEED_IPS);
        }
        let (mut lo, mut hi) = (0.0f64, u_max);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < reported {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// One calibration observation: total counts reported over a fixed 1-inch
/// traverse at a controlled speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub speed_ips: f64,
    pub counts: f64,
}

/// Per-coefficient inference from a least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientStat {
    pub value: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// Two-sided p-value against zero.
    pub p_value: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

/// Goodness-of-fit summary for a polynomial calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitStats {
    /// 1 - SSres/SStot; defined as 0 when the responses are constant.
    pub r_squared: f64,
    /// Residual variance SSres / dof.
    pub residual_variance: f64,
    /// Residual degrees of freedom: n - (degree + 1).
    pub dof: usize,
    pub coefficients: Vec<CoefficientStat>,
}

/// A fitted acceleration model together with its fit statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: AccelerationModel,
    pub stats: FitStats,
}

/// Simple-regression summary over the low-speed regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope significance: F-test on 1 and n-2 degrees of freedom.
    pub p_value: f64,
    /// Samples used (after restricting to the low-speed range).
    pub n: usize,
}

/// Householder QR least squares: solves min ||X b - y|| for an n x k design
/// given row-wise, returning (beta, ssres, diag of (X^T X)^-1).
///
/// The orthogonal decomposition is used instead of the normal equations for
/// conditioning; the residual sum of squares falls out of the transformed
/// response tail for free.
fn qr_least_squares(design: &mut [f64], n: usize, k: usize, y: &mut [f64]) -> Result<(Vec<f64>, f64, Vec<f64>), OpticalError> {
    debug_assert_eq!(design.len(), n * k);
    debug_assert_eq!(y.len(), n);
    let at = |a: &[f64], i: usize, j: usize| a[i * k + j];

    let mut col_scale = 0.0f64;
    for j in 0..k {
        for i in 0..n {
            col_scale = col_scale.max(at(design, i, j).abs());
        }
    }
    if col_scale == 0.0 {
        return Err(OpticalError::DegenerateFit);
    }

    for j in 0..k {
        // Householder vector for column j, rows j..n.
        let mut norm2 = 0.0;
        for i in j..n {
            norm2 += at(design, i, j) * at(design, i, j);
        }
        let norm = norm2.sqrt();
        if norm <= 1e-12 * col_scale {
            return Err(OpticalError::DegenerateFit);
        }
        let pivot = at(design, j, j);
        let alpha = if pivot >= 0.0 { -norm } else { norm };
        // v = x - alpha e1 (stored in place of the column below the diagonal).
        let v0 = pivot - alpha;
        let vtv = norm2 - pivot * pivot + v0 * v0;
        // Apply H = I - 2 v v^T / v^T v to the remaining columns and to y.
        for c in (j + 1)..k {
            let mut dot = v0 * at(design, j, c);
            for i in (j + 1)..n {
                dot += at(design, i, j) * at(design, i, c);
            }
            let f = 2.0 * dot / vtv;
            design[j * k + c] -= f * v0;
            for i in (j + 1)..n {
                design[i * k + c] -= f * at(design, i, j);
            }
        }
        let mut dot = v0 * y[j];
        for i in (j + 1)..n {
            dot += at(design, i, j) * y[i];
        }
        let f = 2.0 * dot / vtv;
        y[j] -= f * v0;
        for i in (j + 1)..n {
            y[i] -= f * at(design, i, j);
        }
        design[j * k + j] = alpha;
        // Sub-diagonal entries of this column now hold v and are never read
        // again as matrix data.
    }

    // Back-substitute R beta = Q^T y (first k rows of the transformed y).
    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = y[j];
        for c in (j + 1)..k {
            acc -= at(design, j, c) * beta[c];
        }
        beta[j] = acc / at(design, j, j);
    }

    let mut ssres = 0.0;
    for yi in y.iter().take(n).skip(k) {
        ssres += yi * yi;
    }

    // diag((X^T X)^-1) = row norms of R^-1.
    let mut rinv = vec![0.0; k * k];
    for col in 0..k {
        // Solve R x = e_col; x is upper triangular in col.
        for j in (0..=col).rev() {
            let mut acc = if j == col { 1.0 } else { 0.0 };
            for c in (j + 1)..=col {
                acc -= at(design, j, c) * rinv[c * k + col];
            }
            rinv[j * k + col] = acc / at(design, j, j);
        }
    }
    let mut xtx_inv_diag = vec![0.0; k];
    for j in 0..k {
        let mut acc = 0.0;
        for m in j..k {
            acc += rinv[j * k + m] * rinv[j * k + m];
        }
        xtx_inv_diag[j] = acc;
    }

    Ok((beta, ssres, xtx_inv_diag))
}

/// Ordinary least squares of counts on powers of speed (degree 2 or 3) with
/// per-coefficient inference. At least `degree + 2` samples spanning enough
/// distinct speeds are required.
pub fn fit_polynomial(samples: &[CalibrationSample], degree: usize, cpi: f64) -> Result<FittedModel, OpticalError> {
    if !(2..=3).contains(&degree) {
        return Err(OpticalError::UnsupportedDegree { degree });
    }
    let k = degree + 1;
    let n = samples.len();
    if n < degree + 2 {
        return Err(OpticalError::TooFewSamples { needed: degree + 2, got: n });
    }
    if samples.iter().any(|s| s.speed_ips < 0.0) {
        return Err(OpticalError::SpeedOutOfRange { speed: MIN_SPEED_IPS - 1.0 });
    }

    let mut design = vec![0.0; n * k];
    let mut y = vec![0.0; n];
    for (i, s) in samples.iter().enumerate() {
        let mut p = 1.0;
        for j in 0..k {
            design[i * k + j] = p;
            p *= s.speed_ips;
        }
        y[i] = s.counts;
    }
    let mean_y = samples.iter().map(|s| s.counts).sum::<f64>() / n as f64;
    let sstot: f64 = samples.iter().map(|s| (s.counts - mean_y) * (s.counts - mean_y)).sum();

    let (beta, ssres, xtx_inv_diag) = qr_least_squares(&mut design, n, k, &mut y)?;

    let dof = n - k;
    let residual_variance = ssres / dof as f64;
    let r_squared = if sstot > 0.0 { 1.0 - ssres / sstot } else { 0.0 };
    let tcrit = t_quantile(0.975, dof as f64);
    let coefficients = beta
        .iter()
        .zip(xtx_inv_diag.iter())
        .map(|(&b, &d)| {
            let se = (residual_variance * d).sqrt();
            let t = if se > 0.0 { b / se } else if b == 0.0 { 0.0 } else { f64::INFINITY * b.signum() };
            CoefficientStat {
                value: b,
                std_error: se,
                t_value: t,
                p_value: t_two_sided_p(t, dof as f64),
                ci95_low: b - tcrit * se,
                ci95_high: b + tcrit * se,
            }
        })
        .collect();

    let model = AccelerationModel::new(cpi, beta)?;
    Ok(FittedModel { model, stats: FitStats { r_squared, residual_variance, dof, coefficients } })
}

/// Simple OLS of counts on speed over the low-speed regime (samples faster
/// than 3 ips are excluded; the linear relation only holds there).
pub fn fit_linear(samples: &[CalibrationSample]) -> Result<LinearFit, OpticalError> {
    let kept: Vec<&CalibrationSample> = samples.iter().filter(|s| (0.0..=3.0).contains(&s.speed_ips)).collect();
    let n = kept.len();
    if n < 3 {
        return Err(OpticalError::TooFewSamples { needed: 3, got: n });
    }
    let mean_x = kept.iter().map(|s| s.speed_ips).sum::<f64>() / n as f64;
    let mean_y = kept.iter().map(|s| s.counts).sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut sstot = 0.0;
    for s in &kept {
        sxx += (s.speed_ips - mean_x) * (s.speed_ips - mean_x);
        sxy += (s.speed_ips - mean_x) * (s.counts - mean_y);
        sstot += (s.counts - mean_y) * (s.counts - mean_y);
    }
    if sxx <= 0.0 {
        return Err(OpticalError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssres: f64 = kept
        .iter()
        .map(|s| {
            let r = s.counts - (intercept + slope * s.speed_ips);
            r * r
        })
        .sum();
    let (r_squared, p_value) = if sstot > 0.0 {
        let r2 = 1.0 - ssres / sstot;
        let p = if ssres > 0.0 {
            f_sf((sstot - ssres) / (ssres / (n - 2) as f64), 1.0, (n - 2) as f64)
        } else {
            0.0
        };
        (r2, p)
    } else {
        // Constant responses: no variance to explain.
        (0.0, 1.0)
    };
    Ok(LinearFit { slope, intercept, r_squared, p_value, n })
}

/// Moving average over the last three speed estimates, used to steady the
/// per-frame correction against count noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpeedTracker {
    buf: [f64; 3],
    len: usize,
    pos: usize,
}

impl SpeedTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pushes an instantaneous speed estimate (ips) and returns the smoothed
    /// value, clamped to the calibrated range.
    pub fn push(&mut self, speed_ips: f64) -> f64 {
        self.buf[self.pos] = speed_ips;
        self.pos = (self.pos + 1) % self.buf.len();
        if self.len < self.buf.len() {
            self.len += 1;
        }
        let mean = self.buf[..self.len.max(1)].iter().take(self.len).sum::<f64>() / self.len as f64;
        mean.clamp(MIN_SPEED_IPS, MAX_SPEED_IPS)
    }
}

/// Draws `n` synthetic calibration samples from a model: speeds uniform over
/// the calibrated range, counts = model(speed) + Gaussian(0, noise_sd).
/// Deterministic for a given seed.
pub fn synthesize_calibration(model: &AccelerationModel, n: usize, noise_sd: f64, seed: u64) -> Vec<CalibrationSample> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let speed: f64 = rng.gen::<f64>() * MAX_SPEED_IPS;
        let noise = if noise_sd > 0.0 { gaussian(&mut rng) * noise_sd } else { 0.0 };
        out.push(CalibrationSample { speed_ips: speed, counts: model.eval(speed) + noise });
    }
    out
}

/// Standard normal draw via Box-Muller (avoids a distribution dependency and
/// keeps the stream layout under our control for reproducibility).
pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}
