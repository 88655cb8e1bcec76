//! Rendering of experiment reports and deviation summaries.
//!
//! Tables and CSV use four decimals; JSON keeps full precision.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{JmError, Result};
use crate::evaluation::{ExperimentId, ExperimentReport, ExperimentRow};
use crate::golden;

pub const DEFAULT_TOLERANCE: f64 = 0.01;

fn fixed(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => String::new(),
    }
}

fn cell(row: &ExperimentRow, v: Option<f64>, decimals: usize) -> String {
    if row.error.is_some() {
        "FAILED".into()
    } else {
        fixed(v, decimals)
    }
}

/// Decimals for `Phi`, which is small enough that four decimals lose it.
const PHI_DECIMALS: usize = 6;

fn render_grid(header: &[String], body: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| {
                if c == 0 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header, &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&rule, &mut out);
    for r in body {
        line(r, &mut out);
    }
    out
}

/// Aligned plain-text table, one grid per reported quantity.
pub fn format_table(report: &ExperimentReport) -> String {
    let mut out = format!("{} ({} solutions)\n\n", report.experiment_id, report.mode);
    match report.experiment_id {
        ExperimentId::Exp1 => {
            let header: Vec<String> = [
                "method",
                "dataset",
                "N0",
                "Phi",
                "RE_I",
                "RE_training",
                "RE_testing",
                "root",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let body: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.method.label(),
                        r.dataset.clone(),
                        cell(r, r.n0, 4),
                        cell(r, r.phi, PHI_DECIMALS),
                        cell(r, r.re, 4),
                        cell(r, r.re_training, 4),
                        cell(r, r.re_testing, 4),
                        r.root_kind.map(|k| k.to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            out.push_str(&render_grid(&header, &body));
        }
        ExperimentId::Exp2 | ExperimentId::Exp3 => {
            let datasets = &report.plan.datasets;
            let grid = |title: &str, value: &dyn Fn(&ExperimentRow) -> String| {
                let mut header = vec![title.to_string()];
                header.extend(datasets.iter().cloned());
                let body: Vec<Vec<String>> = report
                    .plan
                    .methods
                    .iter()
                    .map(|m| {
                        let mut line = vec![m.label()];
                        line.extend(
                            datasets
                                .iter()
                                .map(|d| report.row(m, d).map(value).unwrap_or_default()),
                        );
                        line
                    })
                    .collect();
                render_grid(&header, &body)
            };
            out.push_str(&grid("RE_II", &|r| cell(r, r.re, 4)));
            if report.experiment_id == ExperimentId::Exp2 {
                out.push('\n');
                out.push_str(&grid("reasonable", &|r| {
                    if r.error.is_some() {
                        "FAILED".into()
                    } else {
                        r.optimal_solutions
                            .map(|c| c.to_string())
                            .unwrap_or_default()
                    }
                }));
            }
            let skipped: usize = report.rows.iter().map(|r| r.skipped).sum();
            if skipped > 0 {
                let _ = writeln!(
                    out,
                    "\n{skipped} prediction terms skipped (fit failure or undefined MTBF)"
                );
            }
        }
    }
    for r in report.failures() {
        let _ = writeln!(
            out,
            "{} on {}: {}",
            r.method.label(),
            r.dataset,
            r.error.as_deref().unwrap_or_default()
        );
    }
    out
}

const CSV_HEADER: [&str; 14] = [
    "experiment",
    "dataset",
    "method",
    "mode",
    "n0",
    "phi",
    "root_kind",
    "re",
    "re_training",
    "re_testing",
    "optimal_solutions",
    "segments",
    "skipped",
    "error",
];

/// One CSV row per method and dataset.
pub fn to_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| JmError::Config(format!("csv encoding failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        let count = |v: Option<usize>| v.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([
            report.experiment_id.to_string(),
            r.dataset.clone(),
            r.method.label(),
            report.mode.to_string(),
            fixed(r.n0, 4),
            fixed(r.phi, PHI_DECIMALS),
            r.root_kind.map(|k| k.to_string()).unwrap_or_default(),
            fixed(r.re, 4),
            fixed(r.re_training, 4),
            fixed(r.re_testing, 4),
            count(r.optimal_solutions),
            count(r.segments),
            r.skipped.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| JmError::Config(format!("csv encoding failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| JmError::Config(e.to_string()))
}

pub fn to_json(report: &ExperimentReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| JmError::Config(format!("json encoding failed: {e}")))
}

/// One computed cell set against its reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub method: String,
    pub dataset: String,
    pub field: String,
    pub computed: Option<f64>,
    pub reference: f64,
    /// `|computed - reference| / |reference|`; `None` when not computed.
    pub relative: Option<f64>,
    pub within: bool,
}

fn deviation(
    row: &ExperimentRow,
    field: &str,
    computed: Option<f64>,
    reference: f64,
    tol: f64,
) -> Deviation {
    let computed = if row.error.is_some() { None } else { computed };
    let relative = computed.map(|c| (c - reference).abs() / reference.abs());
    Deviation {
        method: row.method.label(),
        dataset: row.dataset.clone(),
        field: field.to_string(),
        computed,
        reference,
        relative,
        within: relative.is_some_and(|r| r <= tol),
    }
}

/// Compares every cell that has a reference value. Failed rows count as
/// mismatches.
pub fn compare_with_reference(report: &ExperimentReport, tolerance: f64) -> Vec<Deviation> {
    let mut out = Vec::new();
    for row in &report.rows {
        let label = row.method.label();
        match report.experiment_id {
            ExperimentId::Exp1 => {
                if row.dataset != "ntds" || report.plan.split != crate::evaluation::DEFAULT_SPLIT {
                    continue;
                }
                if let Some(&(_, n0, phi, re, tr, te)) = golden::split_row(&label) {
                    for (field, c, g) in [
                        ("N0", row.n0, n0),
                        ("Phi", row.phi, phi),
                        ("RE_I", row.re, re),
                        ("RE_training", row.re_training, tr),
                        ("RE_testing", row.re_testing, te),
                    ] {
                        out.push(deviation(row, field, c, g, tolerance));
                    }
                }
            }
            id => {
                if let Some(g) = golden::one_step_re(id, &label, &row.dataset) {
                    out.push(deviation(row, "RE_II", row.re, g, tolerance));
                }
                if id == ExperimentId::Exp2 {
                    if let Some(g) = golden::reasonable_count(&label, &row.dataset) {
                        let c = row.optimal_solutions.map(|c| c as f64);
                        let mut d = deviation(row, "reasonable", c, g as f64, tolerance);
                        d.within = d.computed == Some(g as f64);
                        out.push(d);
                    }
                }
            }
        }
    }
    out
}

pub fn format_deviations(devs: &[Deviation], tolerance: f64) -> String {
    let header: Vec<String> = [
        "method",
        "dataset",
        "field",
        "computed",
        "reference",
        "rel.dev",
        "",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body: Vec<Vec<String>> = devs
        .iter()
        .map(|d| {
            let decimals = if d.field == "Phi" { PHI_DECIMALS } else { 4 };
            vec![
                d.method.clone(),
                d.dataset.clone(),
                d.field.clone(),
                d.computed
                    .map_or_else(|| "FAILED".into(), |c| format!("{c:.decimals$}")),
                format!("{:.decimals$}", d.reference),
                d.relative
                    .map_or_else(String::new, |r| format!("{:.2}%", 100.0 * r)),
                if d.within {
                    "ok".into()
                } else {
                    "DEVIATES".into()
                },
            ]
        })
        .collect();
    let within = devs.iter().filter(|d| d.within).count();
    format!(
        "reference comparison (tolerance {:.2}%): {within}/{} cells within\n\n{}",
        100.0 * tolerance,
        devs.len(),
        render_grid(&header, &body)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorConfig, Method};
    use crate::evaluation::{run_plan, ExperimentPlan};

    fn small_exp1() -> ExperimentReport {
        let plan = ExperimentPlan {
            methods: vec![Method::Mle, Method::Lse],
            ..ExperimentPlan::standard(ExperimentId::Exp1)
        };
        run_plan(&plan, &EstimatorConfig::default()).unwrap()
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let csv = to_csv(&small_exp1()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("experiment,dataset,method"));
        assert!(lines[1].starts_with("exp1,ntds,MLE,reasonable,31.2159,0.006849,"));
    }

    #[test]
    fn json_round_trips() {
        let report = small_exp1();
        let back: ExperimentReport = serde_json::from_str(&to_json(&report).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn table_and_deviations() {
        let report = small_exp1();
        let table = format_table(&report);
        assert!(table.contains("31.2159"));
        let devs = compare_with_reference(&report, DEFAULT_TOLERANCE);
        assert_eq!(devs.len(), 10);
        assert!(devs.iter().all(|d| d.within), "{devs:?}");
        assert!(format_deviations(&devs, DEFAULT_TOLERANCE).contains("10/10"));
    }
}
