//! JSON Lines trace files: the first line is a metadata object, every
//! following line is one sample `{t, gyro, accel, mag, dx, dy, squal,
//! gt_pos, gt_quat}`. Paths ending in `.gz` are gzip-compressed.
//! Quaternions are stored `[w, x, y, z]`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fingerfuse_core::ahrs::ImuSample;
use fingerfuse_core::fusion::PosePoint;
use fingerfuse_core::geom::{Quaternion, Vec3};
use fingerfuse_core::optical::{OpticalSample, SensorConfig};
use fingerfuse_core::simtrace::{
    ShapeKind, ShapeSpec, SpeedProfile, TextureProfile, Trace, TraceMeta,
};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Schema { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

#[derive(Serialize, Deserialize)]
struct SpeedDto {
    profile: String,
    ips: f64,
}

#[derive(Serialize, Deserialize)]
struct ShapeDto {
    kind: String,
    size_mm: f64,
    tilt_deg: f64,
    speed: SpeedDto,
    #[serde(default)]
    allow_custom_size: bool,
}

#[derive(Serialize, Deserialize)]
struct TextureDto {
    name: String,
    squal_range: [u8; 2],
    noise_sd: f64,
}

#[derive(Serialize, Deserialize)]
struct SensorDto {
    cpi: f64,
    frame_rate: f64,
    report_rate: f64,
}

#[derive(Serialize, Deserialize)]
struct MetaDto {
    id: String,
    shape: ShapeDto,
    texture: TextureDto,
    seed: u64,
    sensor: SensorDto,
    distorted: bool,
    noisy: bool,
}

#[derive(Serialize, Deserialize)]
struct SampleDto {
    t: f64,
    gyro: [f64; 3],
    accel: [f64; 3],
    mag: [f64; 3],
    dx: i32,
    dy: i32,
    squal: u8,
    gt_pos: [f64; 3],
    gt_quat: [f64; 4],
}

fn kind_from_slug(s: &str) -> Option<ShapeKind> {
    ShapeKind::ALL.into_iter().find(|k| k.slug() == s)
}

impl MetaDto {
    fn from_meta(m: &TraceMeta) -> MetaDto {
        let (profile, ips) = match m.shape.speed {
            SpeedProfile::Constant { ips } => ("constant", ips),
            SpeedProfile::Trapezoidal { peak_ips } => ("trapezoidal", peak_ips),
        };
        MetaDto {
            id: m.id.clone(),
            shape: ShapeDto {
                kind: m.shape.kind.slug().into(),
                size_mm: m.shape.size_mm,
                tilt_deg: m.shape.tilt_deg,
                speed: SpeedDto { profile: profile.into(), ips },
                allow_custom_size: m.shape.allow_custom_size,
            },
            texture: TextureDto {
                name: m.texture.name.clone(),
                squal_range: [m.texture.contact_squal_range.0, m.texture.contact_squal_range.1],
                noise_sd: m.texture.noise_sd,
            },
            seed: m.seed,
            sensor: SensorDto {
                cpi: m.cfg.cpi,
                frame_rate: m.cfg.frame_rate,
                report_rate: m.cfg.report_rate,
            },
            distorted: m.distorted,
            noisy: m.noisy,
        }
    }

    fn into_meta(self) -> Result<TraceMeta, String> {
        let kind = kind_from_slug(&self.shape.kind)
            .ok_or_else(|| format!("unknown shape kind {:?}", self.shape.kind))?;
        let speed = match self.shape.speed.profile.as_str() {
            "constant" => SpeedProfile::Constant { ips: self.shape.speed.ips },
            "trapezoidal" => SpeedProfile::Trapezoidal { peak_ips: self.shape.speed.ips },
            other => return Err(format!("unknown speed profile {other:?}")),
        };
        Ok(TraceMeta {
            id: self.id,
            shape: ShapeSpec {
                kind,
                size_mm: self.shape.size_mm,
                tilt_deg: self.shape.tilt_deg,
                speed,
                allow_custom_size: self.shape.allow_custom_size,
            },
            texture: TextureProfile {
                name: self.texture.name,
                contact_squal_range: (self.texture.squal_range[0], self.texture.squal_range[1]),
                noise_sd: self.texture.noise_sd,
            },
            seed: self.seed,
            cfg: SensorConfig {
                cpi: self.sensor.cpi,
                frame_rate: self.sensor.frame_rate,
                report_rate: self.sensor.report_rate,
            },
            distorted: self.distorted,
            noisy: self.noisy,
        })
    }
}

fn vec3_of(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr_of(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn io_err(path: &Path, source: io::Error) -> TraceFileError {
    TraceFileError::Io { path: path.display().to_string(), source }
}

fn schema_err(path: &Path, line: usize, msg: impl Into<String>) -> TraceFileError {
    TraceFileError::Schema { path: path.display().to_string(), line, msg: msg.into() }
}

/// Reads and validates a whole trace. Schema errors carry the 1-based
/// line number.
pub fn read_trace(path: &Path) -> Result<Trace, TraceFileError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut lines = BufReader::new(reader).lines();

    let meta_line = match lines.next() {
        Some(Ok(l)) => l,
        Some(Err(e)) => return Err(io_err(path, e)),
        None => return Err(schema_err(path, 1, "missing metadata line")),
    };
    let meta: MetaDto =
        serde_json::from_str(&meta_line).map_err(|e| schema_err(path, 1, e.to_string()))?;
    let meta = meta.into_meta().map_err(|m| schema_err(path, 1, m))?;

    let mut imu = Vec::new();
    let mut optical = Vec::new();
    let mut ground_truth = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| io_err(path, e))?;
        let s: SampleDto =
            serde_json::from_str(&line).map_err(|e| schema_err(path, lineno, e.to_string()))?;
        let opt = OpticalSample::new(s.t, s.dx, s.dy, s.squal)
            .map_err(|e| schema_err(path, lineno, e.to_string()))?;
        imu.push(ImuSample {
            t: s.t,
            gyro: vec3_of(s.gyro),
            accel: vec3_of(s.accel),
            mag: vec3_of(s.mag),
        });
        optical.push(opt);
        ground_truth.push(PosePoint {
            t: s.t,
            position: vec3_of(s.gt_pos),
            orientation: Quaternion::new(s.gt_quat[0], s.gt_quat[1], s.gt_quat[2], s.gt_quat[3]),
        });
    }

    let trace = Trace { meta, imu, optical, ground_truth };
    trace
        .validate()
        .map_err(|e| TraceFileError::Invalid { path: path.display().to_string(), msg: e.to_string() })?;
    Ok(trace)
}

fn write_lines(mut w: impl Write, trace: &Trace) -> io::Result<()> {
    let meta = serde_json::to_string(&MetaDto::from_meta(&trace.meta)).expect("meta serializes");
    writeln!(w, "{meta}")?;
    for ((imu, opt), gt) in trace.imu.iter().zip(&trace.optical).zip(&trace.ground_truth) {
        let q = gt.orientation;
        let dto = SampleDto {
            t: opt.t,
            gyro: arr_of(imu.gyro),
            accel: arr_of(imu.accel),
            mag: arr_of(imu.mag),
            dx: opt.dx,
            dy: opt.dy,
            squal: opt.squal,
            gt_pos: arr_of(gt.position),
            gt_quat: [q.w, q.x, q.y, q.z],
        };
        let line = serde_json::to_string(&dto).expect("sample serializes");
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Writes a validated trace; the inverse of [`read_trace`].
pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), TraceFileError> {
    trace
        .validate()
        .map_err(|e| TraceFileError::Invalid { path: path.display().to_string(), msg: e.to_string() })?;
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    if is_gz(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), flate2::Compression::default());
        write_lines(&mut enc, trace).map_err(|e| io_err(path, e))?;
        enc.finish().map_err(|e| io_err(path, e))?.flush().map_err(|e| io_err(path, e))?;
    } else {
        write_lines(BufWriter::new(file), trace).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
