//! Serializable report model (`schema_version` 1) and the CSV / markdown
//! renderers. The CSV written by `run` is rendered from this model, so
//! `report <json> --format csv` reproduces it byte for byte.
//!
//! CSV columns (fixed):
//! `scenario,task,kind,alpha,beta,gamma,rho,value,verdict,rate,extrapolated,zeta_re,zeta_im,argmax_re,argmax_im`
//!
//! Criterion tasks emit one row per truncation radius (with that shell's
//! heaviest ζ node and its inner argmax as diagnostics) plus a summary row
//! carrying the verdict and the extrapolated value or divergence rate. For
//! the `normality` task the `beta`/`gamma` columns hold the estimated
//! condition exponents.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonReport {
    pub schema_version: u32,
    pub scenario: String,
    pub results: Vec<TaskRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskRecord {
    Normality {
        weight: String,
        spec: String,
        verdict: String,
        condition_i_inf: f64,
        beta_estimate: Option<f64>,
        gamma_estimate: Option<f64>,
        condition_ii_k: Option<usize>,
        sampled: bool,
    },
    Sup {
        name: String,
        kind: String,
        value: f64,
        argmax: [f64; 2],
        flag: String,
    },
    Criterion(CriterionRecord),
    BlochM {
        printed: CriterionRecord,
        derived: CriterionRecord,
    },
    Truncation {
        kind: String,
        degree_bound: usize,
        normalized: bool,
        /// Column `n` holds the image coefficients of `z^n` as `[re, im]`.
        columns: Vec<Vec<[f64; 2]>>,
    },
    NormLower {
        kind: String,
        bound: f64,
        witness: String,
    },
    Nuclear {
        kind: String,
        alpha: f64,
        /// Verdict label when the decomposition was refused.
        refused: Option<String>,
        total: Option<f64>,
        inner_total: Option<f64>,
        outer_total: Option<f64>,
        terms: Vec<TermRecord>,
    },
    AsProbe {
        kind: String,
        family: Vec<String>,
        ratio: f64,
    },
    Compactness {
        kind: String,
        verdict: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CriterionRecord {
    pub name: String,
    pub kind: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub schedule: Vec<f64>,
    /// Truncated values; `None` marks a linear-scale overflow (the verdict
    /// is still computed, from log-space accumulation).
    pub values: Vec<Option<f64>>,
    pub verdict: String,
    pub rate: Option<f64>,
    pub extrapolated: Option<f64>,
    pub diagnostics: Vec<DiagnosticRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub rho: f64,
    pub zeta: [f64; 2],
    pub inner_argmax: [f64; 2],
    pub inner_value: f64,
    pub angular_refined: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub node: [f64; 2],
    pub weight: f64,
    pub functional_norm: f64,
    pub image_norm: f64,
    pub bound: f64,
}

pub const CSV_HEADER: &str = "scenario,task,kind,alpha,beta,gamma,rho,value,verdict,rate,extrapolated,zeta_re,zeta_im,argmax_re,argmax_im";

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// RFC-4180-style escaping: quote fields containing commas, quotes, or
/// newlines.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Row<'a> {
    scenario: &'a str,
    task: String,
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    rho: Option<f64>,
    value: String,
    verdict: String,
    rate: Option<f64>,
    extrapolated: Option<f64>,
    zeta: Option<[f64; 2]>,
    argmax: Option<[f64; 2]>,
}

impl Row<'_> {
    fn render(&self) -> String {
        let cells = [
            csv_field(self.scenario),
            csv_field(&self.task),
            csv_field(&self.kind),
            fmt_opt(self.alpha),
            fmt_opt(self.beta),
            fmt_opt(self.gamma),
            fmt_opt(self.rho),
            self.value.clone(),
            csv_field(&self.verdict),
            fmt_opt(self.rate),
            fmt_opt(self.extrapolated),
            fmt_opt(self.zeta.map(|z| z[0])),
            fmt_opt(self.zeta.map(|z| z[1])),
            fmt_opt(self.argmax.map(|z| z[0])),
            fmt_opt(self.argmax.map(|z| z[1])),
        ];
        cells.join(",")
    }
}

fn empty_row<'a>(scenario: &'a str, task: &str, kind: &str) -> Row<'a> {
    Row {
        scenario,
        task: task.to_string(),
        kind: kind.to_string(),
        alpha: None,
        beta: None,
        gamma: None,
        rho: None,
        value: String::new(),
        verdict: String::new(),
        rate: None,
        extrapolated: None,
        zeta: None,
        argmax: None,
    }
}

fn criterion_rows<'a>(scenario: &'a str, rec: &CriterionRecord, out: &mut Vec<Row<'a>>) {
    for (i, (&rho, value)) in rec.schedule.iter().zip(&rec.values).enumerate() {
        let diag = rec
            .diagnostics
            .iter()
            .find(|d| (d.rho - rho).abs() < 1e-15);
        let mut row = empty_row(scenario, &rec.name, &rec.kind);
        row.alpha = rec.alpha;
        row.beta = rec.beta;
        row.gamma = rec.gamma;
        row.rho = Some(rho);
        row.value = match value {
            Some(v) => fmt_f64(*v),
            None => "inf".to_string(),
        };
        if let Some(d) = diag {
            row.zeta = Some(d.zeta);
            row.argmax = Some(d.inner_argmax);
        }
        let _ = i;
        out.push(row);
    }
    let mut summary = empty_row(scenario, &rec.name, &rec.kind);
    summary.alpha = rec.alpha;
    summary.beta = rec.beta;
    summary.gamma = rec.gamma;
    summary.verdict = rec.verdict.clone();
    summary.rate = rec.rate;
    summary.extrapolated = rec.extrapolated;
    out.push(summary);
}

/// Render the fixed-column CSV (UTF-8, `\n` line endings).
pub fn render_csv(report: &JsonReport) -> String {
    let mut rows: Vec<Row> = Vec::new();
    let scenario = report.scenario.as_str();
    for record in &report.results {
        match record {
            TaskRecord::Normality {
                weight,
                verdict,
                condition_i_inf,
                beta_estimate,
                gamma_estimate,
                ..
            } => {
                let mut row = empty_row(scenario, "normality", weight);
                row.beta = *beta_estimate;
                row.gamma = *gamma_estimate;
                row.value = fmt_f64(*condition_i_inf);
                row.verdict = verdict.clone();
                rows.push(row);
            }
            TaskRecord::Sup {
                name,
                kind,
                value,
                argmax,
                flag,
            } => {
                let mut row = empty_row(scenario, name, kind);
                row.value = fmt_f64(*value);
                row.verdict = flag.clone();
                row.argmax = Some(*argmax);
                rows.push(row);
            }
            TaskRecord::Criterion(rec) => criterion_rows(scenario, rec, &mut rows),
            TaskRecord::BlochM { printed, derived } => {
                criterion_rows(scenario, printed, &mut rows);
                criterion_rows(scenario, derived, &mut rows);
            }
            TaskRecord::Truncation {
                kind,
                degree_bound,
                normalized,
                columns,
            } => {
                let mut row = empty_row(scenario, "truncate", kind);
                row.value = degree_bound.to_string();
                row.verdict = if *normalized {
                    "normalized".to_string()
                } else {
                    "raw".to_string()
                };
                row.extrapolated = Some(columns.iter().map(Vec::len).max().unwrap_or(0) as f64);
                rows.push(row);
            }
            TaskRecord::NormLower {
                kind,
                bound,
                witness,
            } => {
                let mut row = empty_row(scenario, "norm_lower", kind);
                row.value = fmt_f64(*bound);
                row.verdict = witness.clone();
                rows.push(row);
            }
            TaskRecord::Nuclear {
                kind,
                alpha,
                refused,
                total,
                inner_total,
                outer_total,
                ..
            } => {
                let mut row = empty_row(scenario, "nuclear", kind);
                row.alpha = Some(*alpha);
                row.value = fmt_opt(*total);
                row.verdict = match refused {
                    Some(label) => format!("refused:{label}"),
                    None => "ok".to_string(),
                };
                row.rate = *inner_total;
                row.extrapolated = *outer_total;
                rows.push(row);
            }
            TaskRecord::AsProbe { kind, ratio, .. } => {
                let mut row = empty_row(scenario, "as_probe", kind);
                row.value = fmt_f64(*ratio);
                rows.push(row);
            }
            TaskRecord::Compactness { kind, verdict } => {
                let mut row = empty_row(scenario, "compactness", kind);
                row.verdict = verdict.clone();
                rows.push(row);
            }
        }
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.render());
        out.push('\n');
    }
    out
}

/// One-table markdown summary.
pub fn render_markdown(report: &JsonReport) -> String {
    let mut out = format!(
        "# Scenario `{}`\n\n| task | kind | result | detail |\n|---|---|---|---|\n",
        report.scenario
    );
    let mut push = |task: &str, kind: &str, result: String, detail: String| {
        out.push_str(&format!("| {task} | {kind} | {result} | {detail} |\n"));
    };
    for record in &report.results {
        match record {
            TaskRecord::Normality {
                weight,
                verdict,
                condition_i_inf,
                beta_estimate,
                gamma_estimate,
                ..
            } => push(
                "normality",
                weight,
                verdict.clone(),
                format!(
                    "inf ratio {} (β≈{}, γ≈{})",
                    fmt_f64(*condition_i_inf),
                    fmt_opt(*beta_estimate),
                    fmt_opt(*gamma_estimate)
                ),
            ),
            TaskRecord::Sup {
                name,
                kind,
                value,
                argmax,
                flag,
            } => push(
                name,
                kind,
                fmt_f64(*value),
                format!("{flag} at {} + {}i", fmt_f64(argmax[0]), fmt_f64(argmax[1])),
            ),
            TaskRecord::Criterion(rec) => push(
                &rec.name,
                &rec.kind,
                rec.verdict.clone(),
                format!(
                    "I(ρ_max) = {}, extrapolated {}",
                    rec.values.last().map(|v| fmt_opt(*v)).unwrap_or_default(),
                    fmt_opt(rec.extrapolated)
                ),
            ),
            TaskRecord::BlochM { printed, derived } => {
                push(
                    &printed.name,
                    &printed.kind,
                    printed.verdict.clone(),
                    format!(
                        "I(ρ_max) = {}",
                        printed.values.last().map(|v| fmt_opt(*v)).unwrap_or_default()
                    ),
                );
                push(
                    &derived.name,
                    &derived.kind,
                    derived.verdict.clone(),
                    format!(
                        "I(ρ_max) = {}",
                        derived.values.last().map(|v| fmt_opt(*v)).unwrap_or_default()
                    ),
                );
            }
            TaskRecord::Truncation {
                kind,
                degree_bound,
                normalized,
                columns,
            } => push(
                "truncate",
                kind,
                format!("N = {degree_bound}"),
                format!(
                    "{} columns, {} rows, {}",
                    columns.len(),
                    columns.iter().map(Vec::len).max().unwrap_or(0),
                    if *normalized { "normalized" } else { "raw" }
                ),
            ),
            TaskRecord::NormLower {
                kind,
                bound,
                witness,
            } => push("norm_lower", kind, fmt_f64(*bound), format!("witness {witness}")),
            TaskRecord::Nuclear {
                kind,
                refused,
                total,
                terms,
                ..
            } => push(
                "nuclear",
                kind,
                match refused {
                    Some(label) => format!("refused ({label})"),
                    None => fmt_opt(*total),
                },
                format!("{} rank-one terms", terms.len()),
            ),
            TaskRecord::AsProbe { kind, family, ratio } => push(
                "as_probe",
                kind,
                fmt_f64(*ratio),
                format!("family of {}", family.len()),
            ),
            TaskRecord::Compactness { kind, verdict } => {
                push("compactness", kind, verdict.clone(), String::new())
            }
        }
    }
    out
}
