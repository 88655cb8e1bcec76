//! Relative-error criteria, sequential one-step prediction and the three
//! comparison experiments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{builtin_dataset, FailureDataset, BUILTIN_NAMES};
use crate::error::{JmError, Result};
use crate::estimators::{estimate, EstimatorConfig, Method};
use crate::model::{mtbf, JmParams};
use crate::solver::{RootKind, SolutionMode};

/// Training prefix length of the single-fit experiment.
pub const DEFAULT_SPLIT: usize = 26;

/// First predicted index of the one-step criterion.
const FIRST_PREDICTED: usize = 3;

/// Smallest segment counted when tallying reasonable solutions. Two-point
/// segments are interpolated exactly and always have a root.
const FIRST_COUNTED_SEGMENT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermError {
    /// 1-based failure index.
    pub index: usize,
    pub x: f64,
    /// `None` when the term was skipped.
    pub mtbf: Option<f64>,
    pub relative_error: Option<f64>,
    /// Why the term was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl TermError {
    fn evaluated(index: usize, x: f64, m: f64) -> Self {
        Self {
            index,
            x,
            mtbf: Some(m),
            relative_error: Some((x - m).abs() / x),
            skipped: None,
        }
    }

    fn skipped(index: usize, x: f64, why: String) -> Self {
        Self {
            index,
            x,
            mtbf: None,
            relative_error: None,
            skipped: Some(why),
        }
    }
}

/// Relative-error summary. All `re*` values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReReport {
    pub re: f64,
    pub re_training: Option<f64>,
    pub re_testing: Option<f64>,
    pub terms_used: usize,
    pub terms_skipped: usize,
    pub per_term: Vec<TermError>,
}

fn mean_percent<'a>(terms: impl Iterator<Item = &'a TermError>) -> Option<f64> {
    let (sum, count) = terms
        .filter_map(|t| t.relative_error)
        .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
    (count > 0).then(|| 100.0 * sum / count as f64)
}

fn score(p: &JmParams, index: usize, x: f64) -> TermError {
    match mtbf(p, index) {
        Ok(m) => TermError::evaluated(index, x, m),
        Err(e) => TermError::skipped(index, x, e.to_string()),
    }
}

/// Scores a fit on prefix `m` against the whole of `data`.
///
/// `re` averages over every evaluated term, `re_training` over `i <= m`
/// and `re_testing` over `i > m`. Terms whose MTBF is undefined
/// (`N0 - i + 1 <= 0`) are skipped and counted.
pub fn re_split(data: &FailureDataset, p: &JmParams, m: usize) -> Result<ReReport> {
    let n = data.len();
    if m < FIRST_PREDICTED || m >= n {
        return Err(JmError::Config(format!(
            "split index {m} must satisfy 3 <= m < {n}"
        )));
    }
    let per_term: Vec<TermError> = data
        .intervals()
        .iter()
        .enumerate()
        .map(|(idx, &x)| score(p, idx + 1, x))
        .collect();
    let Some(re) = mean_percent(per_term.iter()) else {
        return Err(JmError::Domain("no term could be evaluated".into()));
    };
    let terms_used = per_term
        .iter()
        .filter(|t| t.relative_error.is_some())
        .count();
    Ok(ReReport {
        re,
        re_training: mean_percent(per_term[..m].iter()),
        re_testing: mean_percent(per_term[m..].iter()),
        terms_used,
        terms_skipped: n - terms_used,
        per_term,
    })
}

/// Outcome of a sequential one-step prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepReport {
    pub re: ReReport,
    /// Segments of length >= 3 whose root was a reasonable solution.
    pub reasonable: usize,
    /// Segments considered for `reasonable`.
    pub segments: usize,
}

/// Predicts each `x_i`, `i = 3..=n`, from a fit on `x_1..x_{i-1}`.
///
/// The reported RE sums the relative errors of the predictions and
/// divides by `n`, the full series length. Failed fits and undefined
/// MTBFs are skipped and counted; it is an error only when every term is
/// skipped.
pub fn one_step(
    data: &FailureDataset,
    method: &Method,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<OneStepReport> {
    cfg.validate()?;
    let n = data.len();
    if n < FIRST_PREDICTED + 1 {
        return Err(JmError::InvalidDataset(format!(
            "one-step prediction needs at least 4 intervals, got {n}"
        )));
    }
    let x = data.intervals();
    let outcomes: Vec<(TermError, Option<RootKind>)> = (FIRST_PREDICTED..=n)
        .into_par_iter()
        .map(|i| {
            let segment = match data.prefix(i - 1) {
                Ok(s) => s,
                Err(e) => return (TermError::skipped(i, x[i - 1], e.to_string()), None),
            };
            match estimate(&segment, method, mode, cfg) {
                Ok(fit) => (score(&fit.params, i, x[i - 1]), Some(fit.root.kind)),
                Err(e) => (TermError::skipped(i, x[i - 1], e.to_string()), None),
            }
        })
        .collect();

    let reasonable = outcomes
        .iter()
        .zip(FIRST_PREDICTED..)
        .filter(|((_, kind), i)| *i > FIRST_COUNTED_SEGMENT && *kind == Some(RootKind::Reasonable))
        .count();
    let segments = (FIRST_PREDICTED..=n)
        .filter(|i| *i > FIRST_COUNTED_SEGMENT)
        .count();
    let per_term: Vec<TermError> = outcomes.into_iter().map(|(t, _)| t).collect();

    let used: Vec<f64> = per_term.iter().filter_map(|t| t.relative_error).collect();
    if used.is_empty() {
        return Err(JmError::Solver {
            method: method.label(),
            segment_length: n,
            reason: "every one-step prediction failed".into(),
        });
    }
    let re = 100.0 * used.iter().sum::<f64>() / n as f64;
    Ok(OneStepReport {
        re: ReReport {
            re,
            re_training: None,
            re_testing: None,
            terms_used: used.len(),
            terms_skipped: per_term.len() - used.len(),
            per_term,
        },
        reasonable,
        segments,
    })
}

pub fn re_one_step(
    data: &FailureDataset,
    method: &Method,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<ReReport> {
    one_step(data, method, mode, cfg).map(|r| r.re)
}

/// Number of segments `x_1..x_k`, `3 <= k < n`, with a reasonable root.
pub fn count_optimal_solutions(
    data: &FailureDataset,
    method: &Method,
    cfg: &EstimatorConfig,
) -> Result<usize> {
    one_step(data, method, SolutionMode::Reasonable, cfg).map(|r| r.reasonable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// Single fit on the NTDS training prefix, scored with the split RE.
    Exp1,
    /// One-step prediction with reasonable solutions, plus root counts.
    Exp2,
    /// One-step prediction with asymptotic solutions.
    Exp3,
}

impl ExperimentId {
    pub fn mode(&self) -> SolutionMode {
        match self {
            ExperimentId::Exp1 | ExperimentId::Exp2 => SolutionMode::Reasonable,
            ExperimentId::Exp3 => SolutionMode::Asymptotic,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
        })
    }
}

impl FromStr for ExperimentId {
    type Err = JmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "1" => Ok(ExperimentId::Exp1),
            "exp2" | "2" => Ok(ExperimentId::Exp2),
            "exp3" | "3" => Ok(ExperimentId::Exp3),
            other => Err(JmError::Config(format!(
                "unknown experiment '{other}' (expected exp1, exp2 or exp3)"
            ))),
        }
    }
}

/// What an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub id: ExperimentId,
    pub datasets: Vec<String>,
    pub methods: Vec<Method>,
    pub split: usize,
}

impl ExperimentPlan {
    /// The standard plan: NTDS only for `exp1`, all bundled sets otherwise,
    /// and the thirteen-method catalog.
    pub fn standard(id: ExperimentId) -> Self {
        let datasets = match id {
            ExperimentId::Exp1 => vec!["ntds".to_string()],
            _ => BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        };
        Self {
            id,
            datasets,
            methods: Method::catalog(),
            split: DEFAULT_SPLIT,
        }
    }

    /// Appends the squared empirical schemes.
    pub fn with_squared(mut self) -> Self {
        self.methods.extend(Method::squared_catalog());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub method: Method,
    pub dataset: String,
    /// Single-fit parameters (`exp1` only).
    pub n0: Option<f64>,
    pub phi: Option<f64>,
    pub root_kind: Option<RootKind>,
    /// RE_I for `exp1`, RE_II otherwise.
    pub re: Option<f64>,
    pub re_training: Option<f64>,
    pub re_testing: Option<f64>,
    /// Reasonable solutions among the counted segments (`exp2` only).
    pub optimal_solutions: Option<usize>,
    pub segments: Option<usize>,
    pub skipped: usize,
    pub error: Option<String>,
}

impl ExperimentRow {
    fn empty(method: Method, dataset: &str) -> Self {
        Self {
            method,
            dataset: dataset.to_string(),
            n0: None,
            phi: None,
            root_kind: None,
            re: None,
            re_training: None,
            re_testing: None,
            optimal_solutions: None,
            segments: None,
            skipped: 0,
            error: None,
        }
    }

    fn failed(method: Method, dataset: &str, err: JmError) -> Self {
        Self {
            error: Some(err.to_string()),
            ..Self::empty(method, dataset)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: ExperimentId,
    pub mode: SolutionMode,
    pub plan: ExperimentPlan,
    pub config: EstimatorConfig,
    /// Method-major, datasets in plan order.
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn row(&self, method: &Method, dataset: &str) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.method == *method && r.dataset == dataset)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

fn single_fit_row(
    data: &FailureDataset,
    method: Method,
    split: usize,
    cfg: &EstimatorConfig,
) -> Result<ExperimentRow> {
    let fit = estimate(&data.prefix(split)?, &method, SolutionMode::Reasonable, cfg)?;
    let re = re_split(data, &fit.params, split)?;
    Ok(ExperimentRow {
        n0: Some(fit.params.n0()),
        phi: Some(fit.params.phi()),
        root_kind: Some(fit.root.kind),
        re: Some(re.re),
        re_training: re.re_training,
        re_testing: re.re_testing,
        skipped: re.terms_skipped,
        ..ExperimentRow::empty(method, data.name())
    })
}

fn one_step_row(
    data: &FailureDataset,
    method: Method,
    id: ExperimentId,
    cfg: &EstimatorConfig,
) -> Result<ExperimentRow> {
    let r = one_step(data, &method, id.mode(), cfg)?;
    let counts = id == ExperimentId::Exp2;
    Ok(ExperimentRow {
        re: Some(r.re.re),
        optimal_solutions: counts.then_some(r.reasonable),
        segments: counts.then_some(r.segments),
        skipped: r.re.terms_skipped,
        ..ExperimentRow::empty(method, data.name())
    })
}

/// Runs `plan`. Method failures are recorded in their row; only an
/// invalid configuration or unknown dataset aborts the run.
pub fn run_plan(plan: &ExperimentPlan, cfg: &EstimatorConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let datasets = plan
        .datasets
        .iter()
        .map(|name| builtin_dataset(name))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(Method, &FailureDataset)> = plan
        .methods
        .iter()
        .flat_map(|m| datasets.iter().map(move |d| (*m, d)))
        .collect();
    let rows = cells
        .into_par_iter()
        .map(|(method, data)| {
            let row = match plan.id {
                ExperimentId::Exp1 => single_fit_row(data, method, plan.split, cfg),
                _ => one_step_row(data, method, plan.id, cfg),
            };
            row.unwrap_or_else(|e| ExperimentRow::failed(method, data.name(), e))
        })
        .collect();
    Ok(ExperimentReport {
        experiment_id: plan.id,
        mode: plan.id.mode(),
        plan: plan.clone(),
        config: cfg.clone(),
        rows,
    })
}

pub fn run_experiment(id: ExperimentId, cfg: &EstimatorConfig) -> Result<ExperimentReport> {
    run_plan(&ExperimentPlan::standard(id), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ntds() -> FailureDataset {
        builtin_dataset("ntds").unwrap()
    }

    #[test]
    fn perfect_params_score_zero() {
        let p = JmParams::new(10.0, 0.1).unwrap();
        let x: Vec<f64> = (1..=6).map(|i| mtbf(&p, i).unwrap()).collect();
        let d = FailureDataset::new("t", x, "s").unwrap();
        let r = re_split(&d, &p, 4).unwrap();
        assert!(r.re < 1e-12);
        assert_eq!(r.terms_used, 6);
    }

    #[test]
    fn split_mle_row() {
        let p = JmParams::new(31.2159, 0.006849).unwrap();
        let r = re_split(&ntds(), &p, 26).unwrap();
        // The rounded parameters shift the last digits slightly.
        assert!((r.re - 282.4772).abs() / 282.4772 < 5e-4);
        assert!((r.re_training.unwrap() - 297.7377).abs() / 297.7377 < 5e-4);
        assert!((r.re_testing.unwrap() - 203.1224).abs() / 203.1224 < 5e-4);
    }

    #[test]
    fn split_decomposes() {
        let p = JmParams::new(40.1833, 0.0038).unwrap();
        let r = re_split(&ntds(), &p, 26).unwrap();
        let weighted = (26.0 * r.re_training.unwrap() + 5.0 * r.re_testing.unwrap()) / 31.0;
        assert!((weighted - r.re).abs() < 1e-9);
        assert!((r.re - 265.0097).abs() / 265.0097 < 5e-4);
    }

    #[test]
    fn skipped_terms_are_counted() {
        let p = JmParams::new(28.5, 0.006849).unwrap();
        let r = re_split(&ntds(), &p, 26).unwrap();
        assert_eq!(r.terms_skipped, 2);
        assert_eq!(r.terms_used, 29);
        assert!(r.per_term[30].skipped.is_some());
        assert!(re_split(&ntds(), &p, 31).is_err());
        assert!(re_split(&ntds(), &p, 2).is_err());
    }

    #[test]
    fn one_step_mle_ntds() {
        let cfg = EstimatorConfig::default();
        let r = one_step(&ntds(), &Method::Mle, SolutionMode::Reasonable, &cfg).unwrap();
        assert!((r.re.re - 391.5204).abs() / 391.5204 < 1e-4);
        assert_eq!(r.reasonable, 10);
        assert_eq!(r.segments, 28);
        assert_eq!(r.re.per_term.len(), 29);
    }

    #[test]
    fn musa_counts() {
        let cfg = EstimatorConfig::default();
        let musa1 = builtin_dataset("musa1").unwrap();
        let musa2 = builtin_dataset("musa2").unwrap();
        assert_eq!(
            count_optimal_solutions(&musa1, &Method::Mle, &cfg).unwrap(),
            0
        );
        assert_eq!(
            count_optimal_solutions(&musa2, &Method::Mle, &cfg).unwrap(),
            12
        );
    }

    #[test]
    fn experiment_ids() {
        assert_eq!("EXP3".parse::<ExperimentId>().unwrap(), ExperimentId::Exp3);
        assert!("exp4".parse::<ExperimentId>().is_err());
        assert_eq!(ExperimentId::Exp3.mode(), SolutionMode::Asymptotic);
    }

    #[test]
    fn failing_method_is_recorded_not_fatal() {
        let plan = ExperimentPlan {
            id: ExperimentId::Exp1,
            datasets: vec!["ntds".into()],
            methods: vec![Method::Mle],
            split: 31,
        };
        let report = run_plan(&plan, &EstimatorConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].error.is_some());
    }
}
