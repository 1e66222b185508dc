//! End-to-end acceptance checks. Each test prints one PASS line with its
//! runtime; failures panic with a FAIL line. Budgets are asserted with
//! wall-clock time, so run these under an optimized profile.

use std::time::{Duration, Instant};

use fingerfuse::evaluate::{evaluate_traces, Evaluation};
use fingerfuse_core::ahrs::{attitude_from_accel_mag, Ahrs, AhrsGains, ImuSample};
use fingerfuse_core::evalstats::AnovaResult;
use fingerfuse_core::fusion::FormFactor;
use fingerfuse_core::geom::{dcm_to_quat, rotate, Quaternion, Ray, Vec3};
use fingerfuse_core::gestures::{GestureConfig, GestureDetector, GestureEvent, GestureKind};
use fingerfuse_core::interact::{rotation_from_stroke, select, RotationGain, SceneObject};
use fingerfuse_core::optical::{
    fit_polynomial, synthesize_calibration, AccelerationModel, OpticalSample, SensorConfig,
};
use fingerfuse_core::protocol::{emit_line, parse_line, ProtocolError, WireFrame, WireGesture};
use fingerfuse_core::simtrace::{generate_trace, reference_matrix, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const MATRIX_SEED: u64 = 7;

fn report(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "FAIL: {name}: took {elapsed:?}, budget {budget:?}"
    );
    println!("PASS: {name} ({elapsed:?})");
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Angle between two unit quaternions, radians, sign-ambiguity folded out.
fn quat_angle(a: Quaternion, b: Quaternion) -> f64 {
    let dot = (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z).abs().min(1.0);
    2.0 * dot.acos()
}

#[test]
fn anova_table_reproduction() {
    let started = Instant::now();
    let a = AnovaResult::from_components(3.331, 2, 51.602, 69);
    assert!((a.f - 2.227).abs() <= 0.001, "FAIL: F = {}", a.f);
    assert!((a.p - 0.1156).abs() <= 0.0005, "FAIL: p = {}", a.p);
    // Pin against an independently computed table to full precision.
    assert!((a.f - 2.227035773807217).abs() <= 1e-12, "FAIL: F drifted: {}", a.f);
    assert!((a.p - 0.11554362504132332).abs() <= 1e-9, "FAIL: p drifted: {}", a.p);
    report("ANOVA table reproduction (F 2.227, p 0.1156)", started, Duration::from_millis(1));
}

#[test]
fn acceleration_model_arithmetic() {
    let started = Instant::now();
    let m400 = AccelerationModel::calibrated_400cpi();
    let m800 = AccelerationModel::calibrated_800cpi();
    assert_eq!(m400.model_counts(0.0).unwrap(), 410.8021, "FAIL: 400 cpi intercept");
    assert_eq!(m800.model_counts(0.0).unwrap(), 780.3591, "FAIL: 800 cpi intercept");
    for model in [&m400, &m800] {
        for i in 0..=70 {
            let speed = i as f64 * 0.1;
            for counts in [0.25, 3.0, 40.0, 250.0] {
                let back = model
                    .correct_counts(model.distort_counts(counts, speed).unwrap(), speed)
                    .unwrap();
                assert!(
                    (back - counts).abs() <= 1e-9 * counts,
                    "FAIL: round trip at {speed} ips, {counts} counts: {back}"
                );
            }
        }
    }
    report("acceleration-model intercepts and round trip", started, Duration::from_millis(10));
}

#[test]
fn calibration_recovery() {
    let started = Instant::now();

    for truth in [AccelerationModel::calibrated_400cpi(), AccelerationModel::calibrated_800cpi()] {
        let clean = synthesize_calibration(&truth, 200, 0.0, 1);
        let fitted = fit_polynomial(&clean, truth.degree(), truth.cpi()).unwrap();
        for (got, want) in fitted.model.coefficients().iter().zip(truth.coefficients()) {
            assert!(
                (got - want).abs() <= 1e-6 * want.abs(),
                "FAIL: noiseless recovery {got} vs {want}"
            );
        }
        assert!((fitted.stats.r_squared - 1.0).abs() <= 1e-9, "FAIL: R2 {}", fitted.stats.r_squared);
    }

    // Per-coefficient 95% CI coverage over 100 noisy refits.
    let truth = AccelerationModel::calibrated_400cpi();
    let mut covered = [0u32; 3];
    for seed in 0..100 {
        let noisy = synthesize_calibration(&truth, 500, 5.0, seed);
        let fitted = fit_polynomial(&noisy, truth.degree(), truth.cpi()).unwrap();
        for (k, want) in truth.coefficients().iter().enumerate() {
            let ci = &fitted.stats.coefficients[k];
            if ci.ci95_low <= *want && *want <= ci.ci95_high {
                covered[k] += 1;
            }
        }
    }
    for (k, n) in covered.iter().enumerate() {
        assert!(*n >= 90, "FAIL: coefficient {k} covered in only {n}/100 runs");
    }

    report("calibration recovery and CI coverage", started, Duration::from_secs(5));
}

fn generate_matrix(distort: bool) -> Vec<Trace> {
    let cfg = SensorConfig::default();
    let model = AccelerationModel::calibrated_400cpi();
    let distortion = if distort { Some(&model) } else { None };
    reference_matrix(MATRIX_SEED)
        .into_iter()
        .map(|e| {
            let mut t = generate_trace(&e.spec, &e.texture, &cfg, e.seed, distortion, false)
                .expect("matrix entries are valid");
            t.meta.id = e.id;
            t
        })
        .collect()
}

fn eval(traces: &[Trace], correct: bool) -> Evaluation {
    evaluate_traces(traces, FormFactor::PadMount, correct, jobs()).expect("evaluation succeeds")
}

#[test]
fn noiseless_matrix_accuracy() {
    let started = Instant::now();
    let traces = generate_matrix(false);
    assert_eq!(traces.len(), 360, "FAIL: matrix size {}", traces.len());
    let e = eval(&traces, false);
    let pos = e.report.pooled.position.mean;
    let ori = e.report.pooled.orientation.mean;
    assert!(pos <= 0.07, "FAIL: pooled position error {pos} mm");
    assert!(ori <= 0.01, "FAIL: pooled orientation error {ori} deg");
    for t in &e.traces {
        assert!(
            t.planarity_residual_mm <= 1e-9 * t.path_length_mm,
            "FAIL: {} planarity {} over path {}",
            t.errors.id,
            t.planarity_residual_mm,
            t.path_length_mm
        );
    }
    report("noiseless 360-trace matrix accuracy and planarity", started, Duration::from_secs(30));
}

#[test]
fn distortion_drift_trend_and_correction() {
    let started = Instant::now();
    let traces = generate_matrix(true);

    let raw = eval(&traces, false);
    let sizes: Vec<u32> = raw.report.by_size.keys().copied().collect();
    assert_eq!(sizes, [12, 21, 42, 84], "FAIL: size keys {sizes:?}");
    let means: Vec<f64> = raw.report.by_size.values().map(|g| g.position.mean).collect();
    for w in means.windows(2) {
        assert!(w[1] > w[0], "FAIL: size means not increasing: {means:?}");
    }

    let fixed = eval(&traces, true);
    let before = raw.report.pooled.position.mean;
    let after = fixed.report.pooled.position.mean;
    assert!(
        after <= 0.5 * before,
        "FAIL: correction reduced {before} mm only to {after} mm"
    );
    report("distortion drift trend and >=50% correction", started, Duration::from_secs(60));
}

/// Scripted SQUAL/motion stream at 50 Hz.
fn stream(frames: &[(i32, i32, u8)]) -> Vec<OpticalSample> {
    frames
        .iter()
        .enumerate()
        .map(|(k, &(dx, dy, squal))| OpticalSample::new(k as f64 * 0.02, dx, dy, squal).unwrap())
        .collect()
}

fn run_gestures(samples: &[OpticalSample]) -> Vec<GestureEvent> {
    let mut d = GestureDetector::new(GestureConfig::default()).unwrap();
    let mut events: Vec<GestureEvent> = samples.iter().flat_map(|s| d.update(s)).collect();
    events.extend(d.finish());
    events
}

fn count(events: &[GestureEvent], kind: GestureKind) -> usize {
    events.iter().filter(|e| e.kind == kind).count()
}

/// The canonical scripted set: every entry is (stream, expected counts of
/// Tap / DoubleTap / Press, label).
fn canonical_set() -> Vec<(Vec<OpticalSample>, [usize; 3], &'static str)> {
    let mut set = Vec::new();

    // Clean 80 ms contact: a tap.
    set.push((
        stream(&[(0, 0, 45), (1, -1, 48), (2, 0, 45), (0, 0, 44), (0, 0, 0)]),
        [1, 0, 0],
        "tap",
    ));

    // Same contact but one 7-count frame after landing: rejected by motion.
    set.push((
        stream(&[(0, 0, 45), (7, 0, 48), (2, 0, 45), (0, 0, 44), (0, 0, 0)]),
        [0, 0, 0],
        "tap rejected by motion",
    ));

    // SQUAL never reaches the contact threshold: no contact at all.
    set.push((stream(&[(0, 0, 30), (1, 0, 39), (0, 0, 35), (0, 0, 0)]), [0, 0, 0], "no contact"));

    // Two short contacts, the second landing 240 ms after the first lifts
    // with a (10, -8) landing offset: a double tap.
    let mut frames = vec![(0, 0, 45), (0, 0, 46), (0, 0, 0)];
    frames.extend(std::iter::repeat((0, 0, 0)).take(9));
    frames.extend([(10, -8, 45), (0, 0, 46), (0, 0, 0)]);
    set.push((stream(&frames), [0, 1, 0], "double tap inside window"));

    // Same pair 400 ms apart: outside the window, two separate taps.
    let mut frames = vec![(0, 0, 45), (0, 0, 46), (0, 0, 0)];
    frames.extend(std::iter::repeat((0, 0, 0)).take(17));
    frames.extend([(10, -8, 45), (0, 0, 46), (0, 0, 0)]);
    set.push((stream(&frames), [2, 0, 0], "second tap outside window"));

    // Same timing but landing 20 counts away: outside the +/-15 offset.
    let mut frames = vec![(0, 0, 45), (0, 0, 46), (0, 0, 0)];
    frames.extend(std::iter::repeat((0, 0, 0)).take(9));
    frames.extend([(20, 0, 45), (0, 0, 46), (0, 0, 0)]);
    set.push((stream(&frames), [2, 0, 0], "second tap outside offset"));

    // 400 ms of SQUAL 150: exactly one press for the whole contact.
    let long: Vec<(i32, i32, u8)> =
        std::iter::repeat((0, 0, 150)).take(20).chain([(0, 0, 0)]).collect();
    set.push((stream(&long), [0, 0, 1], "single press per contact"));

    set
}

#[test]
fn gesture_canonical_suite() {
    let started = Instant::now();

    let set = canonical_set();
    let mut first: Vec<Vec<GestureEvent>> = Vec::new();
    for (samples, want, label) in &set {
        let events = run_gestures(samples);
        let got = [
            count(&events, GestureKind::Tap),
            count(&events, GestureKind::DoubleTap),
            count(&events, GestureKind::Press),
        ];
        assert_eq!(got, *want, "FAIL: {label}: {events:?}");
        first.push(events);
    }

    // Determinism: 100 repeated runs of the whole set, event-for-event.
    for _ in 0..100 {
        for ((samples, _, label), want) in set.iter().zip(&first) {
            assert_eq!(&run_gestures(samples), want, "FAIL: {label} not deterministic");
        }
    }

    report("gesture canonical set and determinism", started, Duration::from_secs(1));
}

#[test]
fn protocol_round_trip_and_rejection() {
    let started = Instant::now();

    // The reference report line round-trips byte for byte.
    let sample = "0.2, 0.4, 0.1, 0.4, -2, -4, X, O\n";
    let frame = parse_line(sample).unwrap();
    assert_eq!(emit_line(&frame).unwrap(), sample, "FAIL: sample line");

    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let gesture = match rng.gen_range(0..3) {
            0 => WireGesture::None,
            1 => WireGesture::Tap,
            _ => WireGesture::DoubleTap,
        };
        let frame =
            WireFrame::new(q, rng.gen_range(-5000..5000), rng.gen_range(-5000..5000), gesture);
        let back = parse_line(&emit_line(&frame).unwrap()).unwrap();
        for (a, b) in [
            (back.q.w, frame.q.w),
            (back.q.x, frame.q.x),
            (back.q.y, frame.q.y),
            (back.q.z, frame.q.z),
        ] {
            assert!((a - b).abs() <= 1e-6, "FAIL: quat component {a} vs {b}");
        }
        assert_eq!((back.dx, back.dy), (frame.dx, frame.dy), "FAIL: deltas");
        assert_eq!(back.gesture(), frame.gesture(), "FAIL: flags");
    }

    // Malformed corpus: every line rejected with the offending field.
    let corpus: &[(&str, ProtocolError)] = &[
        ("", ProtocolError::FieldCount { found: 1 }),
        ("1, 0, 0, 0, 0, 0, O", ProtocolError::FieldCount { found: 7 }),
        ("1, 0, 0, 0, 0, 0, O, O, O", ProtocolError::FieldCount { found: 9 }),
        ("x, 0, 0, 0, 0, 0, O, O", ProtocolError::InvalidFloat { field: 1 }),
        ("1, 1e-3, 0, 0, 0, 0, O, O", ProtocolError::InvalidFloat { field: 2 }),
        ("1, 0, nan, 0, 0, 0, O, O", ProtocolError::InvalidFloat { field: 3 }),
        ("1, 0, 0, inf, 0, 0, O, O", ProtocolError::InvalidFloat { field: 4 }),
        ("1, 0, 0, 0, 1.5, 0, O, O", ProtocolError::InvalidInteger { field: 5 }),
        ("1, 0, 0, 0, 0, 2k, O, O", ProtocolError::InvalidInteger { field: 6 }),
        ("1, 0, 0, 0, 0, 0, Y, O", ProtocolError::InvalidFlag { field: 7 }),
        ("1, 0, 0, 0, 0, 0, O, q", ProtocolError::InvalidFlag { field: 8 }),
        ("1, 0, 0, 0, 0, 0, O, X", ProtocolError::IllegalFlagPair { field: 8 }),
    ];
    for (line, want) in corpus {
        match parse_line(line) {
            Err(got) => assert_eq!(&got, want, "FAIL: {line:?}"),
            Ok(_) => panic!("FAIL: accepted {line:?}"),
        }
    }

    report("protocol sample, 10^4 round trips, malformed corpus", started, Duration::from_secs(1));
}

#[test]
fn ahrs_convergence_and_stability() {
    let started = Instant::now();

    // Gyro only, constant 1.2 rad/s for 10 s at 50 Hz: error stays under
    // 1e-3 rad per second of rotation.
    let axis = Vec3::new(1.0, 2.0, -0.5).normalized().unwrap();
    let rate = 1.2;
    let mut ahrs = Ahrs::new(AhrsGains::default()).unwrap();
    let steps = 500;
    for k in 0..=steps {
        ahrs.update(&ImuSample {
            t: k as f64 * 0.02,
            gyro: axis * rate,
            accel: Vec3::ZERO,
            mag: Vec3::ZERO,
        })
        .unwrap();
    }
    let want = Quaternion::from_rotation_vector(axis * (rate * steps as f64 * 0.02));
    let err = quat_angle(ahrs.attitude_quaternion(), want);
    assert!(err <= 1e-3 * 10.0, "FAIL: gyro-only error {err} rad over 10 s");

    // Static convergence: the true attitude is 30 degrees from the identity
    // start; within 0.5 degrees after 10 s of 50 Hz accel+mag updates.
    let tilt = Quaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), 30f64.to_radians()).unwrap();
    let inv = tilt.conjugate();
    let accel = rotate(&inv, Vec3::new(0.0, 0.0, 9.80665));
    let mag = rotate(&inv, Vec3::new(1.0, 0.0, 0.0));
    let mut ahrs = Ahrs::new(AhrsGains::default()).unwrap();
    for k in 0..=500 {
        ahrs.update(&ImuSample { t: k as f64 * 0.02, gyro: Vec3::ZERO, accel, mag }).unwrap();
    }
    let truth = dcm_to_quat(&attitude_from_accel_mag(accel, mag).unwrap());
    let err = quat_angle(ahrs.attitude_quaternion(), truth).to_degrees();
    assert!(err <= 0.5, "FAIL: static convergence {err} deg");

    // Orthonormality drift over 1e5 random-rate updates.
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let mut ahrs = Ahrs::new(AhrsGains::default()).unwrap();
    for k in 0..100_000u32 {
        let gyro = Vec3::new(
            rng.gen_range(-4.0..4.0),
            rng.gen_range(-4.0..4.0),
            rng.gen_range(-4.0..4.0),
        );
        ahrs.update(&ImuSample { t: k as f64 * 0.02, gyro, accel: Vec3::ZERO, mag: Vec3::ZERO })
            .unwrap();
    }
    let drift = ahrs.attitude_dcm().orthonormality_error();
    assert!(drift <= 1e-5, "FAIL: orthonormality drift {drift}");

    report("AHRS integration, convergence, orthonormality", started, Duration::from_secs(5));
}

/// All sphere intersections via the full quadratic, nearest nonnegative
/// parameter, ties to the lexicographically smaller id. Written against the
/// math, not the library code.
fn brute_force_select(ray: &Ray, objects: &[SceneObject]) -> Option<String> {
    let mut best: Option<(f64, &str)> = None;
    for o in objects {
        let oc = ray.origin - o.center;
        let b = 2.0 * oc.dot(ray.direction);
        let c = oc.dot(oc) - o.radius * o.radius;
        let disc = b * b - 4.0 * c;
        if disc < 0.0 {
            continue;
        }
        let ts = [(-b - disc.sqrt()) / 2.0, (-b + disc.sqrt()) / 2.0];
        let Some(t) = ts.into_iter().find(|t| *t >= 0.0) else { continue };
        best = match best {
            None => Some((t, &o.id)),
            Some((bt, bid)) => {
                if t < bt - 1e-9 || ((t - bt).abs() <= 1e-9 && o.id.as_str() < bid) {
                    Some((t, &o.id))
                } else {
                    Some((bt, bid))
                }
            }
        };
    }
    best.map(|(_, id)| id.to_string())
}

#[test]
fn selection_and_rotation_geometry() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(23);

    for _ in 0..1000 {
        let n = rng.gen_range(0..10usize);
        let objects: Vec<SceneObject> = (0..n)
            .map(|i| {
                SceneObject::new(
                    format!("s{i:02}"),
                    Vec3::new(
                        rng.gen_range(-30.0..30.0),
                        rng.gen_range(-30.0..30.0),
                        rng.gen_range(-30.0..30.0),
                    ),
                    rng.gen_range(0.5..6.0),
                )
                .unwrap()
            })
            .collect();
        let ray = Ray::new(
            Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ),
        );
        let Ok(ray) = ray else { continue };
        let got = select(&ray, &objects).map(str::to_owned);
        assert_eq!(got, brute_force_select(&ray, &objects), "FAIL: selection oracle mismatch");
    }

    // Rotation commands: axis perpendicular to the world-frame stroke,
    // doubling the stroke doubles the angle exactly.
    for _ in 0..1000 {
        let q = loop {
            let q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if q.norm() > 0.1 {
                break q.normalized();
            }
        };
        let stroke = [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)];
        if stroke[0] == 0.0 && stroke[1] == 0.0 {
            continue;
        }
        let cmd = rotation_from_stroke(stroke, &q, RotationGain::default()).unwrap();
        let world = rotate(&q, Vec3::new(stroke[0], stroke[1], 0.0)).normalized().unwrap();
        assert!(cmd.axis.dot(world).abs() <= 1e-9, "FAIL: axis not perpendicular to stroke");
        assert!((cmd.axis.norm() - 1.0).abs() <= 1e-9, "FAIL: axis not unit");
        let twice =
            rotation_from_stroke([2.0 * stroke[0], 2.0 * stroke[1]], &q, RotationGain::default())
                .unwrap();
        assert_eq!(twice.angle, 2.0 * cmd.angle, "FAIL: angle not exactly linear");
    }

    report("selection oracle and rotation geometry", started, Duration::from_secs(2));
}
