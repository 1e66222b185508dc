//! Evaluation report emission: a full JSON document and a flat CSV of
//! `group,key,metric,mean,sigma,n` rows for external plotting.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use fingerfuse_core::evalstats::{AnovaResult, GroupSummary, SeriesSummary};
use serde::Serialize;
use thiserror::Error;

use crate::evaluate::Evaluation;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Serialize)]
struct SummaryDto {
    mean: f64,
    sigma: f64,
    n: usize,
}

impl From<SeriesSummary> for SummaryDto {
    fn from(s: SeriesSummary) -> SummaryDto {
        SummaryDto { mean: s.mean, sigma: s.sigma, n: s.n }
    }
}

#[derive(Serialize)]
struct GroupDto {
    position_mm: SummaryDto,
    orientation_deg: SummaryDto,
}

impl From<GroupSummary> for GroupDto {
    fn from(g: GroupSummary) -> GroupDto {
        GroupDto { position_mm: g.position.into(), orientation_deg: g.orientation.into() }
    }
}

#[derive(Serialize)]
struct AnovaDto {
    df_between: usize,
    df_within: usize,
    ss_between: f64,
    ss_within: f64,
    ms_between: f64,
    ms_within: f64,
    f: f64,
    p: f64,
}

impl From<&AnovaResult> for AnovaDto {
    fn from(a: &AnovaResult) -> AnovaDto {
        AnovaDto {
            df_between: a.df_between,
            df_within: a.df_within,
            ss_between: a.ss_between,
            ss_within: a.ss_within,
            ms_between: a.ms_between,
            ms_within: a.ms_within,
            f: a.f,
            p: a.p,
        }
    }
}

#[derive(Serialize)]
struct TraceDto {
    id: String,
    texture: String,
    size_mm: f64,
    shape: String,
    position_mm: SummaryDto,
    orientation_deg: SummaryDto,
    max_position_mm: f64,
    max_orientation_deg: f64,
    planarity_residual_mm: f64,
    path_length_mm: f64,
    truth_path_length_mm: f64,
}

#[derive(Serialize)]
struct ReportDto {
    traces: usize,
    samples: usize,
    pooled: GroupDto,
    by_texture: BTreeMap<String, GroupDto>,
    by_size: BTreeMap<u32, GroupDto>,
    by_shape: BTreeMap<String, GroupDto>,
    anova_texture_position: Option<AnovaDto>,
    per_trace: Vec<TraceDto>,
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn report_dto(eval: &Evaluation) -> ReportDto {
    let r = &eval.report;
    ReportDto {
        traces: r.traces,
        samples: r.samples,
        pooled: r.pooled.into(),
        by_texture: r.by_texture.iter().map(|(k, v)| (k.clone(), (*v).into())).collect(),
        by_size: r.by_size.iter().map(|(k, v)| (*k, (*v).into())).collect(),
        by_shape: r.by_shape.iter().map(|(k, v)| (k.clone(), (*v).into())).collect(),
        anova_texture_position: eval.anova_texture.as_ref().map(AnovaDto::from),
        per_trace: eval
            .traces
            .iter()
            .map(|t| TraceDto {
                id: t.errors.id.clone(),
                texture: t.errors.texture.clone(),
                size_mm: t.errors.size_mm,
                shape: t.errors.shape.clone(),
                position_mm: SeriesSummary::of(t.errors.series.position_mm.iter().copied()).into(),
                orientation_deg: SeriesSummary::of(t.errors.series.orientation_deg.iter().copied())
                    .into(),
                max_position_mm: max_of(&t.errors.series.position_mm),
                max_orientation_deg: max_of(&t.errors.series.orientation_deg),
                planarity_residual_mm: t.planarity_residual_mm,
                path_length_mm: t.path_length_mm,
                truth_path_length_mm: t.truth_path_length_mm,
            })
            .collect(),
    }
}

pub fn render_json(eval: &Evaluation) -> String {
    let mut s = serde_json::to_string_pretty(&report_dto(eval)).expect("report serializes");
    s.push('\n');
    s
}

/// Flat rows for plotting: pooled, per-texture, per-size, per-shape, and
/// per-trace groups, one row per metric.
pub fn render_csv(eval: &Evaluation) -> String {
    let mut out = String::from("group,key,metric,mean,sigma,n\n");
    let mut push = |group: &str, key: &str, g: &GroupSummary| {
        let p = g.position;
        let o = g.orientation;
        out.push_str(&format!("{group},{key},position_mm,{},{},{}\n", p.mean, p.sigma, p.n));
        out.push_str(&format!("{group},{key},orientation_deg,{},{},{}\n", o.mean, o.sigma, o.n));
    };

    let r = &eval.report;
    push("pooled", "all", &r.pooled);
    for (k, g) in &r.by_texture {
        push("texture", k, g);
    }
    for (k, g) in &r.by_size {
        push("size", &k.to_string(), g);
    }
    for (k, g) in &r.by_shape {
        push("shape", k, g);
    }
    for t in &eval.traces {
        let g = GroupSummary {
            position: SeriesSummary::of(t.errors.series.position_mm.iter().copied()),
            orientation: SeriesSummary::of(t.errors.series.orientation_deg.iter().copied()),
        };
        push("trace", &t.errors.id, &g);
    }
    out
}

pub fn write_json(path: &Path, eval: &Evaluation) -> Result<(), ReportError> {
    fs::write(path, render_json(eval))
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })
}

pub fn write_csv(path: &Path, eval: &Evaluation) -> Result<(), ReportError> {
    fs::write(path, render_csv(eval))
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })
}
