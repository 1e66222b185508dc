//! Command-line front end: generate synthetic traces, evaluate them,
//! replay wire logs, fit calibration models, parse single frames, and run
//! the interaction demo.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/validation error,
//! 4 internal invariant breach.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fingerfuse::{calibfile, demo, evaluate, gestureconfig, replay, report, scenefile, tracefile};
use fingerfuse_core::fusion::FormFactor;
use fingerfuse_core::gestures::GestureConfig;
use fingerfuse_core::interact::RotationGain;
use fingerfuse_core::optical::{fit_polynomial, AccelerationModel, CalibrationSample, SensorConfig};
use fingerfuse_core::protocol::parse_line;
use fingerfuse_core::simtrace::{
    generate_trace, reference_matrix, ShapeKind, ShapeSpec, SpeedProfile, TextureProfile, Trace,
};

#[derive(Parser)]
#[command(name = "fingerfuse", version, about = "Wearable optical+IMU input stack tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic traces (a single shape or the full matrix)
    Generate(GenerateArgs),
    /// Fuse trace files and report error statistics
    Evaluate(EvaluateArgs),
    /// Turn a wire-protocol log into a pose/gesture stream
    Replay(ReplayArgs),
    /// Fit an acceleration model to calibration samples
    Calibrate(CalibrateArgs),
    /// Parse one wire-protocol line and dump the frame
    Parse(ParseArgs),
    /// Run a trace against a scene and log interaction commands
    Demo(DemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormFactorArg {
    Pad,
    Fingernail,
    Ring,
}

impl From<FormFactorArg> for FormFactor {
    fn from(a: FormFactorArg) -> FormFactor {
        match a {
            FormFactorArg::Pad => FormFactor::PadMount,
            FormFactorArg::Fingernail => FormFactor::FingernailMount,
            FormFactorArg::Ring => FormFactor::Ring,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Hline,
    Vline,
    Diagonal,
    Triangle,
    Square,
    Circle,
}

impl From<ShapeArg> for ShapeKind {
    fn from(a: ShapeArg) -> ShapeKind {
        match a {
            ShapeArg::Hline => ShapeKind::HLine,
            ShapeArg::Vline => ShapeKind::VLine,
            ShapeArg::Diagonal => ShapeKind::Diagonal,
            ShapeArg::Triangle => ShapeKind::Triangle,
            ShapeArg::Square => ShapeKind::Square,
            ShapeArg::Circle => ShapeKind::Circle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TextureArg {
    Mousepad,
    Jeans,
    Wood,
}

impl TextureArg {
    fn profile(self) -> TextureProfile {
        match self {
            TextureArg::Mousepad => TextureProfile::mousepad(),
            TextureArg::Jeans => TextureProfile::jeans(),
            TextureArg::Wood => TextureProfile::wood(),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generate the full reference matrix (3 textures x 4 sizes x
    /// 6 shapes x 5 repetitions = 360 traces)
    #[arg(long, conflicts_with_all = ["shape", "size", "tilt", "texture"])]
    matrix: bool,
    /// Shape to draw
    #[arg(long, required_unless_present = "matrix")]
    shape: Option<ShapeArg>,
    /// Shape size, mm (12, 21, 42, or 84 unless --custom-size)
    #[arg(long, required_unless_present = "matrix")]
    size: Option<f64>,
    /// Plane tilt about world x, degrees
    #[arg(long, default_value_t = 0.0)]
    tilt: f64,
    /// Texture profile
    #[arg(long, value_enum, default_value_t = TextureArg::Mousepad)]
    texture: TextureArg,
    /// Drawing speed, inch/s
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Ramp the speed trapezoidally instead of holding it constant
    #[arg(long)]
    trapezoidal: bool,
    /// Allow sizes outside the standard set
    #[arg(long)]
    custom_size: bool,
    /// Sensor resolution, counts per inch
    #[arg(long, default_value_t = 400.0)]
    cpi: f64,
    /// Apply the built-in acceleration distortion for --cpi (400 or 800)
    #[arg(long)]
    distort: bool,
    /// Add per-texture Gaussian count noise
    #[arg(long)]
    noise: bool,
    /// RNG seed (falls back to $FINGERFUSE_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix mode: output directory; single mode: output file
    /// (defaults: traces/ or <id>.jsonl)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Matrix mode: gzip each trace file
    #[arg(long)]
    gzip: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trace files or directories of *.jsonl / *.jsonl.gz
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Report JSON path (stdout when omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the flat CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Correct counts with the built-in model matching each trace's cpi
    #[arg(long)]
    correct: bool,
    #[arg(long, value_enum, default_value_t = FormFactorArg::Pad)]
    form_factor: FormFactorArg,
}

#[derive(Args)]
struct ReplayArgs {
    /// Wire log path, or - for stdin
    input: PathBuf,
    /// Pose stream JSONL path (stdout when omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormFactorArg::Pad)]
    form_factor: FormFactorArg,
    /// Sensor resolution, counts per inch
    #[arg(long, default_value_t = 400.0)]
    cpi: f64,
    /// Frames per second assigned to the log
    #[arg(long, default_value_t = 50.0)]
    report_rate: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Samples CSV with header speed_ips,counts
    input: PathBuf,
    /// Polynomial degree (2 or 3)
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Sensor resolution the samples were captured at
    #[arg(long, default_value_t = 400.0)]
    cpi: f64,
    /// Model JSON path (stdout when omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the fitted speed-vs-counts curve (CSV, 0..7 step 0.1)
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    /// One wire-protocol line
    line: String,
}

#[derive(Args)]
struct DemoArgs {
    /// Scene JSON (array of {id, center, radius})
    #[arg(long)]
    scene: PathBuf,
    /// Trace file to replay
    #[arg(long)]
    trace: PathBuf,
    /// Gesture tuning file (key = value); mousepad defaults when omitted
    #[arg(long)]
    gesture_config: Option<PathBuf>,
    /// Rotation gain, radians per mm of stroke
    #[arg(long, default_value_t = 0.05)]
    gain: f64,
    #[arg(long, value_enum, default_value_t = FormFactorArg::Pad)]
    form_factor: FormFactorArg,
    /// Command log JSONL path (stdout when omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::Calibrate(a) => cmd_calibrate(a),
        Cmd::Parse(a) => cmd_parse(a),
        Cmd::Demo(a) => cmd_demo(a),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FINGERFUSE_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Usage(format!("FINGERFUSE_SEED must be an unsigned integer, found {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn write_or_stdout(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

fn distortion_for(cpi: f64) -> Result<AccelerationModel, Failure> {
    if cpi == 400.0 {
        Ok(AccelerationModel::calibrated_400cpi())
    } else if cpi == 800.0 {
        Ok(AccelerationModel::calibrated_800cpi())
    } else {
        Err(Failure::Usage(format!("--distort has built-in models for 400 and 800 cpi, not {cpi}")))
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed)?;
    let cfg = SensorConfig { cpi: a.cpi, ..SensorConfig::default() };
    cfg.validate().map_err(data)?;
    let distortion = if a.distort { Some(distortion_for(a.cpi)?) } else { None };

    if a.matrix {
        let dir = a.out.unwrap_or_else(|| PathBuf::from("traces"));
        fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
        let ext = if a.gzip { "jsonl.gz" } else { "jsonl" };
        for entry in reference_matrix(seed) {
            let mut trace =
                generate_trace(&entry.spec, &entry.texture, &cfg, entry.seed, distortion.as_ref(), a.noise)
                    .map_err(data)?;
            trace.meta.id = entry.id.clone();
            let path = dir.join(format!("{}.{ext}", entry.id));
            tracefile::write_trace(&path, &trace).map_err(data)?;
        }
        return Ok(());
    }

    let kind: ShapeKind = a.shape.expect("clap enforces").into();
    let size = a.size.expect("clap enforces");
    let speed = if a.trapezoidal {
        SpeedProfile::Trapezoidal { peak_ips: a.speed }
    } else {
        SpeedProfile::Constant { ips: a.speed }
    };
    let spec = ShapeSpec {
        kind,
        size_mm: size,
        tilt_deg: a.tilt,
        speed,
        allow_custom_size: a.custom_size,
    };
    let trace = generate_trace(&spec, &a.texture.profile(), &cfg, seed, distortion.as_ref(), a.noise)
        .map_err(data)?;
    let path = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.jsonl", trace.meta.id)));
    tracefile::write_trace(&path, &trace).map_err(data)
}

fn collect_trace_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?
                .filter_map(|r| r.ok().map(|d| d.path()))
                .filter(|p| {
                    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    name.ends_with(".jsonl") || name.ends_with(".jsonl.gz")
                })
                .collect();
            entries.sort();
            paths.extend(entries);
        } else if input.is_file() {
            paths.push(input.clone());
        } else {
            return Err(Failure::Data(format!("{}: no such file or directory", input.display())));
        }
    }
    if paths.is_empty() {
        return Err(Failure::Data("no trace files found".into()));
    }
    Ok(paths)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let paths = collect_trace_paths(&a.inputs)?;
    let traces: Vec<Trace> =
        paths.iter().map(|p| tracefile::read_trace(p).map_err(data)).collect::<Result<_, _>>()?;
    let jobs = a.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let eval = evaluate::evaluate_traces(&traces, a.form_factor.into(), a.correct, jobs)
        .map_err(data)?;
    if let Some(csv) = &a.csv {
        report::write_csv(csv, &eval).map_err(data)?;
    }
    match &a.out {
        Some(path) => report::write_json(path, &eval).map_err(data),
        None => write_or_stdout(None, &report::render_json(&eval)),
    }
}

fn cmd_replay(a: ReplayArgs) -> Result<(), Failure> {
    let cfg = SensorConfig { cpi: a.cpi, report_rate: a.report_rate, ..SensorConfig::default() };
    cfg.validate().map_err(data)?;
    let rows = if a.input.as_os_str() == "-" {
        replay::replay(io::stdin().lock(), cfg, a.form_factor.into()).map_err(data)?
    } else {
        let file = fs::File::open(&a.input)
            .map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
        replay::replay(BufReader::new(file), cfg, a.form_factor.into()).map_err(data)?
    };
    write_or_stdout(a.out.as_deref(), &replay::render_jsonl(&rows))
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), Failure> {
    let samples = calibfile::read_samples(&a.input).map_err(data)?;
    let fitted = fit_polynomial(&samples, a.degree, a.cpi).map_err(data)?;

    let stats = &fitted.stats;
    let dump = serde_json::json!({
        "cpi": fitted.model.cpi(),
        "degree": fitted.model.degree(),
        "coefficients": fitted.model.coefficients(),
        "r_squared": stats.r_squared,
        "residual_variance": stats.residual_variance,
        "dof": stats.dof,
        "coefficient_stats": stats.coefficients.iter().map(|c| serde_json::json!({
            "value": c.value,
            "std_error": c.std_error,
            "t_value": c.t_value,
            "p_value": c.p_value,
            "ci95_low": c.ci95_low,
            "ci95_high": c.ci95_high,
        })).collect::<Vec<_>>(),
    });

    if let Some(curve) = &a.curve {
        let mut points = Vec::new();
        for i in 0..=70 {
            let speed = i as f64 * 0.1;
            let counts = fitted.model.model_counts(speed).map_err(|e| Failure::Internal(e.to_string()))?;
            points.push(CalibrationSample { speed_ips: speed, counts });
        }
        calibfile::write_samples(curve, &points).map_err(data)?;
    }

    let mut text = serde_json::to_string_pretty(&dump).expect("model serializes");
    text.push('\n');
    write_or_stdout(a.out.as_deref(), &text)
}

fn cmd_parse(a: ParseArgs) -> Result<(), Failure> {
    let frame = parse_line(&a.line).map_err(data)?;
    let dump = serde_json::json!({
        "quat": [frame.q.w, frame.q.x, frame.q.y, frame.q.z],
        "dx": frame.dx,
        "dy": frame.dy,
        "tap_flag": frame.tap_flag,
        "dtap_flag": frame.dtap_flag,
        "gesture": frame.gesture().map(|g| match g {
            fingerfuse_core::protocol::WireGesture::None => "none",
            fingerfuse_core::protocol::WireGesture::Tap => "tap",
            fingerfuse_core::protocol::WireGesture::DoubleTap => "double_tap",
        }),
    });
    let mut text = serde_json::to_string_pretty(&dump).expect("frame serializes");
    text.push('\n');
    write_or_stdout(None, &text)
}

fn cmd_demo(a: DemoArgs) -> Result<(), Failure> {
    let scene = scenefile::read_scene(&a.scene).map_err(data)?;
    let trace = tracefile::read_trace(&a.trace).map_err(data)?;
    let config = match &a.gesture_config {
        Some(path) => gestureconfig::read_config(path).map_err(data)?,
        None => GestureConfig::default(),
    };
    let gain = RotationGain::new(a.gain).map_err(data)?;
    let commands = demo::run_demo(&scene, &trace, a.form_factor.into(), config, gain)
        .map_err(|e| Failure::Internal(e.to_string()))?;
    write_or_stdout(a.out.as_deref(), &demo::render_jsonl(&commands))
}
