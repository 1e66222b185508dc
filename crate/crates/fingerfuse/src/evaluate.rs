//! Batch trace evaluation: fuse each trace, score it against its ground
//! truth, and aggregate. Traces fan out across a worker budget; results
//! are merged in trace-id order so the output is identical for any
//! `--jobs` value.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fingerfuse_core::evalstats::{
    aggregate, anova_across_textures, error_series, AnovaResult, EvalReport, TraceErrors,
};
use fingerfuse_core::fusion::{plane_orientation, run_pipeline, FormFactor, PosePoint};
use fingerfuse_core::geom::{rotate, Vec3};
use fingerfuse_core::optical::AccelerationModel;
use fingerfuse_core::simtrace::Trace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("trace {id}: {msg}")]
    Trace { id: String, msg: String },
    #[error("aggregation: {0}")]
    Aggregate(String),
    #[error("no correction model for {cpi} cpi (have 400 and 800)")]
    NoModel { cpi: f64 },
}

/// Per-trace fusion outcome and geometry checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub errors: TraceErrors,
    /// Largest |position . plane normal| over the fused path, mm.
    pub planarity_residual_mm: f64,
    /// Fused path length, mm.
    pub path_length_mm: f64,
    /// Ground-truth path length, mm.
    pub truth_path_length_mm: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    /// Position-error ANOVA across textures; None with fewer than two.
    pub anova_texture: Option<AnovaResult>,
    /// Sorted by trace id.
    pub traces: Vec<TraceResult>,
}

fn path_length(points: &[PosePoint]) -> f64 {
    points.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum()
}

/// The built-in model matching the trace's resolution, when correcting.
fn model_for(trace: &Trace, correct: bool) -> Result<Option<AccelerationModel>, EvaluateError> {
    if !correct {
        return Ok(None);
    }
    let cpi = trace.meta.cfg.cpi;
    if cpi == 400.0 {
        Ok(Some(AccelerationModel::calibrated_400cpi()))
    } else if cpi == 800.0 {
        Ok(Some(AccelerationModel::calibrated_800cpi()))
    } else {
        Err(EvaluateError::NoModel { cpi })
    }
}

fn evaluate_one(trace: &Trace, ff: FormFactor, correct: bool) -> Result<TraceResult, EvaluateError> {
    let err = |msg: String| EvaluateError::Trace { id: trace.meta.id.clone(), msg };
    let model = model_for(trace, correct)?;
    let fused = run_pipeline(&trace.imu, &trace.optical, trace.meta.cfg, ff, model)
        .map_err(|e| err(e.to_string()))?;
    let series = error_series(&fused, &trace.ground_truth).map_err(|e| err(e.to_string()))?;

    // The fused path starts at the origin, so planarity is the residual
    // against the plane through the origin with the touch-plane normal.
    let planarity = match fused.first() {
        Some(first) => {
            let plane = plane_orientation(&first.orientation, ff);
            let normal = rotate(&plane, Vec3::new(0.0, 0.0, 1.0));
            fused.iter().map(|p| p.position.dot(normal).abs()).fold(0.0, f64::max)
        }
        None => 0.0,
    };

    Ok(TraceResult {
        errors: TraceErrors {
            id: trace.meta.id.clone(),
            texture: trace.meta.texture.name.clone(),
            size_mm: trace.meta.shape.size_mm,
            shape: trace.meta.shape.kind.slug().to_string(),
            series,
        },
        planarity_residual_mm: planarity,
        path_length_mm: path_length(&fused),
        truth_path_length_mm: path_length(&trace.ground_truth),
    })
}

/// Evaluates every trace on up to `jobs` worker threads.
pub fn evaluate_traces(
    traces: &[Trace],
    ff: FormFactor,
    correct: bool,
    jobs: usize,
) -> Result<Evaluation, EvaluateError> {
    let jobs = jobs.max(1).min(traces.len().max(1));
    let mut results: Vec<Option<Result<TraceResult, EvaluateError>>> = Vec::new();
    results.resize_with(traces.len(), || None);

    if jobs <= 1 {
        for (slot, trace) in results.iter_mut().zip(traces) {
            *slot = Some(evaluate_one(trace, ff, correct));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= traces.len() {
                        break;
                    }
                    let out = evaluate_one(&traces[i], ff, correct);
                    slots.lock().unwrap()[i] = Some(out);
                });
            }
        });
    }

    let mut out = Vec::with_capacity(traces.len());
    for slot in results {
        out.push(slot.expect("every index visited")?);
    }
    out.sort_by(|a, b| a.errors.id.cmp(&b.errors.id));

    let errors: Vec<TraceErrors> = out.iter().map(|r| r.errors.clone()).collect();
    let report = aggregate(&errors).map_err(|e| EvaluateError::Aggregate(e.to_string()))?;
    let anova_texture = anova_across_textures(&errors).ok();
    Ok(Evaluation { report, anova_texture, traces: out })
}
