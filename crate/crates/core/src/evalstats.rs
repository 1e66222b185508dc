//! Trajectory evaluation: start alignment, per-timestep error series,
//! grouped aggregation, and one-way ANOVA on the results.
//!
//! Errors follow the reference methodology: position error is the Euclidean
//! distance between aligned trajectories; orientation error is the angle
//! between the two frames' body +y directional vectors, in degrees. Spreads
//! are population standard deviations throughout.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::fusion::PosePoint;
use crate::geom::{angle_between, rotate, GeomError, Vec3};
use crate::stats::f_sf;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("input sequence is empty")]
    EmptyInput,
    #[error("sample {index}: test t={test_t} is {gap}s from the nearest truth sample, beyond half a period")]
    TimestampMismatch { index: usize, test_t: f64, gap: f64 },
    #[error("ANOVA needs at least two groups")]
    TooFewGroups,
    #[error("ANOVA group {group} has fewer than two samples")]
    TooFewSamples { group: usize },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Per-timestep error pair between a trajectory and its ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub t: Vec<f64>,
    /// Euclidean position error, millimeters; nonnegative.
    pub position_mm: Vec<f64>,
    /// Directional-vector angle error, degrees; nonnegative.
    pub orientation_deg: Vec<f64>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Translates `test` so its first position coincides with the truth's
/// first position; orientations and timestamps are untouched.
pub fn align_start(test: &[PosePoint], truth: &[PosePoint]) -> Result<Vec<PosePoint>, EvalError> {
    let (t0, g0) = match (test.first(), truth.first()) {
        (Some(a), Some(b)) => (a.position, b.position),
        _ => return Err(EvalError::EmptyInput),
    };
    let shift = g0 - t0;
    Ok(test
        .iter()
        .map(|p| PosePoint { t: p.t, position: p.position + shift, orientation: p.orientation })
        .collect())
}

/// Pairs every test sample with the nearest-in-time truth sample and
/// measures both errors. A gap beyond half the truth's sample period is a
/// mismatch error rather than a silent bad pairing; when both streams share
/// one 50 Hz clock the pairing is exact.
pub fn error_series(test: &[PosePoint], truth: &[PosePoint]) -> Result<ErrorSeries, EvalError> {
    if test.is_empty() || truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let half_period = if truth.len() >= 2 { (truth[1].t - truth[0].t).abs() / 2.0 } else { f64::INFINITY };
    let forward_body = Vec3::new(0.0, 1.0, 0.0);

    let mut series = ErrorSeries::default();
    let mut j = 0usize;
    for (index, sample) in test.iter().enumerate() {
        while j + 1 < truth.len() && (truth[j + 1].t - sample.t).abs() <= (truth[j].t - sample.t).abs() {
            j += 1;
        }
        let gap = (truth[j].t - sample.t).abs();
        if gap > half_period + 1e-12 {
            return Err(EvalError::TimestampMismatch { index, test_t: sample.t, gap });
        }
        let position = (sample.position - truth[j].position).norm();
        let a = rotate(&sample.orientation, forward_body);
        let b = rotate(&truth[j].orientation, forward_body);
        let orientation = angle_between(a, b)?.to_degrees();
        series.t.push(sample.t);
        series.position_mm.push(position);
        series.orientation_deg.push(orientation);
    }
    Ok(series)
}

/// Classical one-way ANOVA summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ms_between: f64,
    pub ms_within: f64,
    pub f: f64,
    /// Upper tail of F(df_between, df_within); in [0, 1].
    pub p: f64,
}

impl AnovaResult {
    /// Builds the summary from already-decomposed sums of squares, the form
    /// published in ANOVA tables. Zero within-group variance yields an
    /// infinite F and p = 0 (or F = 0, p = 1 when between is zero too).
    pub fn from_components(ss_between: f64, df_between: usize, ss_within: f64, df_within: usize) -> AnovaResult {
        let ms_between = if df_between > 0 { ss_between / df_between as f64 } else { 0.0 };
        let ms_within = if df_within > 0 { ss_within / df_within as f64 } else { 0.0 };
        let f = if ms_within > 0.0 {
            ms_between / ms_within
        } else if ms_between > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let p = f_sf(f, df_between as f64, df_within as f64);
        AnovaResult { df_between, df_within, ss_between, ss_within, ms_between, ms_within, f, p }
    }
}

/// One-way ANOVA over raw groups: at least two groups of at least two
/// samples each.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult, EvalError> {
    if groups.len() < 2 {
        return Err(EvalError::TooFewGroups);
    }
    for (group, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(EvalError::TooFewSamples { group });
        }
    }
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let grand: f64 = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let mean: f64 = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (mean - grand) * (mean - grand);
        ss_within += g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    }
    Ok(AnovaResult::from_components(ss_between, groups.len() - 1, ss_within, n_total - groups.len()))
}

/// Mean and population standard deviation of one pooled error stream.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesSummary {
    pub mean: f64,
    pub sigma: f64,
    pub n: usize,
}

impl SeriesSummary {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> SeriesSummary {
        let n = values.clone().count();
        if n == 0 {
            return SeriesSummary::default();
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        SeriesSummary { mean, sigma: var.sqrt(), n }
    }
}

/// Position/orientation summary pair for one grouping key.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupSummary {
    pub position: SeriesSummary,
    pub orientation: SeriesSummary,
}

/// One evaluated trace with the labels the report groups by.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceErrors {
    pub id: String,
    pub texture: String,
    pub size_mm: f64,
    pub shape: String,
    pub series: ErrorSeries,
}

/// Pooled and per-key error statistics over a set of evaluated traces.
/// Map keys iterate in sorted order, so emission is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub pooled: GroupSummary,
    pub by_texture: BTreeMap<String, GroupSummary>,
    /// Keyed by whole millimeters.
    pub by_size: BTreeMap<u32, GroupSummary>,
    pub by_shape: BTreeMap<String, GroupSummary>,
    pub traces: usize,
    pub samples: usize,
}

fn summarize<'a>(series: impl Iterator<Item = &'a ErrorSeries> + Clone) -> GroupSummary {
    GroupSummary {
        position: SeriesSummary::of(series.clone().flat_map(|s| s.position_mm.iter().copied())),
        orientation: SeriesSummary::of(series.flat_map(|s| s.orientation_deg.iter().copied())),
    }
}

/// Builds the report: pooled statistics plus texture/size/shape breakdowns.
pub fn aggregate(traces: &[TraceErrors]) -> Result<EvalReport, EvalError> {
    if traces.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let pooled = summarize(traces.iter().map(|t| &t.series));
    let mut by_texture: BTreeMap<String, Vec<&TraceErrors>> = BTreeMap::new();
    let mut by_size: BTreeMap<u32, Vec<&TraceErrors>> = BTreeMap::new();
    let mut by_shape: BTreeMap<String, Vec<&TraceErrors>> = BTreeMap::new();
    for t in traces {
        by_texture.entry(t.texture.clone()).or_default().push(t);
        by_size.entry(t.size_mm.round() as u32).or_default().push(t);
        by_shape.entry(t.shape.clone()).or_default().push(t);
    }
    let fold = |v: &Vec<&TraceErrors>| summarize(v.iter().map(|t| &t.series));
    Ok(EvalReport {
        pooled,
        by_texture: by_texture.iter().map(|(k, v)| (k.clone(), fold(v))).collect(),
        by_size: by_size.iter().map(|(k, v)| (*k, fold(v))).collect(),
        by_shape: by_shape.iter().map(|(k, v)| (k.clone(), fold(v))).collect(),
        traces: traces.len(),
        samples: traces.iter().map(|t| t.series.len()).sum(),
    })
}

/// One-way ANOVA of mean position error across textures, computed over
/// texture x size x shape cells (each cell's repetitions pooled into one
/// mean). The reference design's 72 cells give degrees of freedom (2, 69).
pub fn anova_across_textures(traces: &[TraceErrors]) -> Result<AnovaResult, EvalError> {
    let mut cells: BTreeMap<(String, u32, String), Vec<f64>> = BTreeMap::new();
    for t in traces {
        cells
            .entry((t.texture.clone(), t.size_mm.round() as u32, t.shape.clone()))
            .or_default()
            .extend(t.series.position_mm.iter().copied());
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((texture, _, _), values) in &cells {
        if values.is_empty() {
            continue;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        groups.entry(texture.clone()).or_default().push(mean);
    }
    let groups: Vec<Vec<f64>> = groups.into_values().collect();
    one_way_anova(&groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{euler_to_quat, EulerAngles, Quaternion};
    use alloc::string::ToString;
    use alloc::vec;

    fn pose(t: f64, x: f64, y: f64, z: f64) -> PosePoint {
        PosePoint { t, position: Vec3::new(x, y, z), orientation: Quaternion::IDENTITY }
    }

    #[test]
    fn alignment_shifts_to_the_truth_origin() {
        let test = vec![pose(0.0, 5.0, 5.0, 5.0), pose(0.02, 6.0, 5.0, 5.0)];
        let truth = vec![pose(0.0, 0.0, 0.0, 0.0), pose(0.02, 1.0, 0.0, 0.0)];
        let aligned = align_start(&test, &truth).unwrap();
        assert_eq!(aligned[0].position, Vec3::ZERO);
        assert_eq!(aligned[1].position, Vec3::new(1.0, 0.0, 0.0));

        let same = align_start(&truth, &truth).unwrap();
        assert_eq!(same, truth);

        let single = align_start(&[pose(0.0, 2.0, 0.0, 0.0)], &[pose(0.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(single[0].position, Vec3::ZERO);

        assert_eq!(align_start(&[], &truth), Err(EvalError::EmptyInput));
    }

    #[test]
    fn identical_sequences_have_zero_error() {
        let truth: Vec<PosePoint> = (0..10).map(|i| pose(i as f64 * 0.02, i as f64, 0.0, 0.0)).collect();
        let s = error_series(&truth, &truth).unwrap();
        assert!(s.position_mm.iter().all(|e| *e == 0.0));
        assert!(s.orientation_deg.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn nonzero_error_detects_differing_sequences() {
        let truth: Vec<PosePoint> = (0..10).map(|i| pose(i as f64 * 0.02, i as f64, 0.0, 0.0)).collect();
        let mut test = truth.clone();
        test[4].position.y += 0.5;
        let s = error_series(&test, &truth).unwrap();
        assert!(s.position_mm.iter().any(|e| *e > 0.0));
    }

    #[test]
    fn constant_offset_after_the_first_point() {
        let truth: Vec<PosePoint> = (0..5).map(|i| pose(i as f64 * 0.02, 0.0, 0.0, 0.0)).collect();
        let test: Vec<PosePoint> = (0..5)
            .map(|i| pose(i as f64 * 0.02, if i == 0 { 0.0 } else { 1.0 }, 0.0, 0.0))
            .collect();
        let s = error_series(&test, &truth).unwrap();
        assert_eq!(s.position_mm, vec![0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn yaw_difference_reads_in_degrees() {
        let q = euler_to_quat(&EulerAngles { roll: 0.0, pitch: 0.0, yaw: 90f64.to_radians() });
        let truth: Vec<PosePoint> = (0..4).map(|i| pose(i as f64 * 0.02, 0.0, 0.0, 0.0)).collect();
        let test: Vec<PosePoint> = truth
            .iter()
            .map(|p| PosePoint { t: p.t, position: p.position, orientation: q })
            .collect();
        let s = error_series(&test, &truth).unwrap();
        for e in &s.orientation_deg {
            assert!((e - 90.0).abs() < 1e-9);
        }
    }

    #[test]
    fn resampling_picks_the_nearest_truth_sample() {
        // Truth at 100 Hz, test at 50 Hz: every other truth sample pairs.
        let truth: Vec<PosePoint> = (0..20).map(|i| pose(i as f64 * 0.01, i as f64, 0.0, 0.0)).collect();
        let test: Vec<PosePoint> = (0..10).map(|i| pose(i as f64 * 0.02, 2.0 * i as f64, 0.0, 0.0)).collect();
        let s = error_series(&test, &truth).unwrap();
        assert!(s.position_mm.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn far_timestamps_are_a_mismatch() {
        let truth: Vec<PosePoint> = (0..5).map(|i| pose(i as f64 * 0.02, 0.0, 0.0, 0.0)).collect();
        let test = vec![pose(0.5, 0.0, 0.0, 0.0)];
        assert!(matches!(
            error_series(&test, &truth),
            Err(EvalError::TimestampMismatch { .. })
        ));
    }

    #[test]
    fn published_table_components_reproduce_f_and_p() {
        let r = AnovaResult::from_components(3.331, 2, 51.602, 69);
        assert!((r.f - 2.227035773807217).abs() < 1e-12);
        assert!((r.p - 0.11554362504132332).abs() < 1e-12);
        assert!((r.f - 2.227).abs() <= 1e-3);
        assert!((r.p - 0.1156).abs() <= 5e-4);
        assert!((r.ms_between - 1.6655).abs() < 1e-4);
        assert!((r.ms_within - 0.74785507).abs() < 1e-7);
    }

    #[test]
    fn identical_groups_give_f_zero_p_one() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let r = one_way_anova(&g).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn three_group_decomposition_matches_the_precomputed_check() {
        // Seeded-normal dataset worked through independently by hand.
        let groups = vec![
            vec![0.304717, -1.039984, 0.750451, 0.940565],
            vec![-1.451035, -0.80218, 0.62784, 0.183757],
            vec![0.983199, 0.146956, 1.879398, 1.777792],
        ];
        let r = one_way_anova(&groups).unwrap();
        assert!((r.ss_between - 4.935706374606166).abs() < 1e-9);
        assert!((r.ss_within - 7.0025633049625).abs() < 1e-9);
        assert!((r.f - 3.171792630562544).abs() < 1e-9);
        assert!((r.p - 0.09066099125660122).abs() < 1e-9);
        assert_eq!((r.df_between, r.df_within), (2, 9));
    }

    #[test]
    fn degenerate_within_variance_reports_p_zero() {
        let g = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let r = one_way_anova(&g).unwrap();
        assert!(r.f.is_infinite());
        assert_eq!(r.p, 0.0);
    }

    #[test]
    fn anova_is_scale_equivariant() {
        let base = vec![vec![1.0, 2.0, 4.0], vec![2.5, 3.5, 5.0], vec![0.5, 1.5, 2.0]];
        let scaled: Vec<Vec<f64>> = base.iter().map(|g| g.iter().map(|x| x * 3.7).collect()).collect();
        let a = one_way_anova(&base).unwrap();
        let b = one_way_anova(&scaled).unwrap();
        assert!((a.f - b.f).abs() < 1e-12);
        assert!((a.p - b.p).abs() < 1e-12);
    }

    #[test]
    fn p_decreases_as_f_grows() {
        let mut last = 1.0;
        for f in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let r = AnovaResult::from_components(f * 2.0 * 0.75, 2, 51.602, 69);
            assert!(r.p < last);
            last = r.p;
        }
    }

    #[test]
    fn anova_input_validation() {
        assert_eq!(one_way_anova(&[vec![1.0, 2.0]]), Err(EvalError::TooFewGroups));
        assert_eq!(
            one_way_anova(&[vec![1.0, 2.0], vec![1.0]]),
            Err(EvalError::TooFewSamples { group: 1 })
        );
    }

    fn trace(id: &str, texture: &str, size: f64, shape: &str, errs: &[f64]) -> TraceErrors {
        TraceErrors {
            id: id.to_string(),
            texture: texture.to_string(),
            size_mm: size,
            shape: shape.to_string(),
            series: ErrorSeries {
                t: (0..errs.len()).map(|i| i as f64 * 0.02).collect(),
                position_mm: errs.to_vec(),
                orientation_deg: vec![0.0; errs.len()],
            },
        }
    }

    #[test]
    fn aggregate_reports_means_and_population_sigma() {
        let single = vec![trace("a", "mousepad", 12.0, "square", &[1.0, 2.0, 3.0])];
        let r = aggregate(&single).unwrap();
        assert!((r.pooled.position.mean - 2.0).abs() < 1e-12);
        assert!((r.pooled.position.sigma - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let two = vec![
            trace("a", "mousepad", 12.0, "square", &[1.0, 1.0]),
            trace("b", "wood", 21.0, "circle", &[3.0, 3.0]),
        ];
        let r = aggregate(&two).unwrap();
        assert!((r.pooled.position.mean - 2.0).abs() < 1e-12);
        assert_eq!(r.by_texture["wood"].position.mean, 3.0);
        assert_eq!(r.by_size[&12].position.mean, 1.0);
        assert_eq!(r.by_shape["circle"].position.sigma, 0.0);
        assert_eq!(r.traces, 2);
        assert_eq!(r.samples, 4);
    }

    #[test]
    fn orientation_error_survives_a_common_pre_rotation() {
        let qa = euler_to_quat(&EulerAngles { roll: 0.2, pitch: 0.1, yaw: -0.4 });
        let qb = euler_to_quat(&EulerAngles { roll: -0.3, pitch: 0.5, yaw: 0.9 });
        let pre = euler_to_quat(&EulerAngles { roll: 1.0, pitch: -0.7, yaw: 0.3 });
        let mk = |q: Quaternion| vec![PosePoint { t: 0.0, position: Vec3::ZERO, orientation: q }, PosePoint { t: 0.02, position: Vec3::ZERO, orientation: q }];
        let base = error_series(&mk(qa), &mk(qb)).unwrap();
        let rotated = error_series(&mk(pre * qa), &mk(pre * qb)).unwrap();
        for (x, y) in base.orientation_deg.iter().zip(&rotated.orientation_deg) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn texture_anova_uses_cell_means() {
        // 3 textures x 2 sizes x 2 shapes x 2 reps; within-cell reps pool.
        let mut traces = Vec::new();
        let mut v = 0.0;
        for texture in ["mousepad", "jeans", "wood"] {
            for size in [12.0, 21.0] {
                for shape in ["square", "circle"] {
                    for rep in 0..2 {
                        v += 0.1;
                        traces.push(trace(
                            &alloc::format!("{texture}-{size}-{shape}-{rep}"),
                            texture,
                            size,
                            shape,
                            &[v, v + 0.2],
                        ));
                    }
                }
            }
        }
        let r = anova_across_textures(&traces).unwrap();
        // 12 cells over 3 textures: df = (2, 9).
        assert_eq!((r.df_between, r.df_within), (2, 9));
        assert!(r.p > 0.0 && r.p < 1.0);
    }
}
