//! Estimating functions for `N0`, recovery of `Phi`, and the full
//! estimation pipelines.
//!
//! Every method reduces the two-parameter problem to a scalar equation
//! `f(N0) = 0` by eliminating `Phi`, solves it with [`find_root`], and
//! then recovers `Phi` in closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FailureDataset;
use crate::error::{domain, JmError, Result};
use crate::heteroscedasticity::{
    goldfeld_quandt, residuals, GqTestResult, DEFAULT_ALPHA, DEFAULT_OMIT_FRACTION,
};
use crate::model::JmParams;
use crate::solver::{find_root, RootConfig, RootKind, RootResult, SolutionMode};
use crate::weights::{
    default_residual_floor, empirical_weights, inverse_residual_weights, optimal_weights,
    WeightKind, WeightScheme, WeightVector, DEFAULT_BETA,
};

/// Estimation method, in the order the result tables list them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Mle,
    Lse,
    /// WNLS with empirical weight scheme 1..=8.
    Empirical(u8),
    /// WNLS with the elementwise square of an empirical scheme.
    SquaredEmpirical(u8),
    /// LSE pilot, then refits with `w_i = Phi^2 (N0 - i + 1)^2` until `N0`
    /// settles.
    Optimal,
    /// LSE pilot; on a heteroscedastic verdict one refit with optimal
    /// weights.
    HeteroOptimal,
    /// LSE pilot; on a heteroscedastic verdict one refit with
    /// `w_i = 1 / eps_i^2`.
    HeteroResidual,
}

impl Method {
    /// The thirteen methods of the comparison tables.
    pub fn catalog() -> Vec<Method> {
        let mut v = vec![Method::Mle, Method::Lse];
        v.extend((1..=8).map(Method::Empirical));
        v.extend([
            Method::Optimal,
            Method::HeteroOptimal,
            Method::HeteroResidual,
        ]);
        v
    }

    pub fn squared_catalog() -> Vec<Method> {
        (1..=8).map(Method::SquaredEmpirical).collect()
    }

    /// Table label, e.g. `WNLS-3` or `WNLS_H1`.
    pub fn label(&self) -> String {
        match self {
            Method::Mle => "MLE".into(),
            Method::Lse => "LSE".into(),
            Method::Empirical(k) => format!("WNLS-{k}"),
            Method::SquaredEmpirical(k) => format!("WNLS2-{k}"),
            Method::Optimal => "WNLS_opt".into(),
            Method::HeteroOptimal => "WNLS_H1".into(),
            Method::HeteroResidual => "WNLS_H2".into(),
        }
    }

    /// Command-line spelling, e.g. `wnls-3` or `wnls-h1`.
    pub fn cli_name(&self) -> String {
        match self {
            Method::Mle => "mle".into(),
            Method::Lse => "lse".into(),
            Method::Empirical(k) => format!("wnls-{k}"),
            Method::SquaredEmpirical(k) => format!("wnls2-{k}"),
            Method::Optimal => "wnls-opt".into(),
            Method::HeteroOptimal => "wnls-h1".into(),
            Method::HeteroResidual => "wnls-h2".into(),
        }
    }

    pub fn is_least_squares(&self) -> bool {
        !matches!(self, Method::Mle)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = JmError;

    /// Accepts both the command-line names and the table labels.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s
            .trim()
            .to_ascii_lowercase()
            .replace('_', "-")
            .replace('²', "2");
        let scheme = |digits: &str| match digits.parse::<u8>() {
            Ok(k @ 1..=8) => Ok(k),
            _ => Err(JmError::UnknownMethod(s.to_string())),
        };
        match norm.as_str() {
            "mle" => Ok(Method::Mle),
            "lse" => Ok(Method::Lse),
            "wnls-opt" => Ok(Method::Optimal),
            "wnls-h1" => Ok(Method::HeteroOptimal),
            "wnls-h2" => Ok(Method::HeteroResidual),
            other => {
                if let Some(d) = other.strip_prefix("wnls2-") {
                    scheme(d).map(Method::SquaredEmpirical)
                } else if let Some(d) = other.strip_prefix("wnls-") {
                    scheme(d).map(Method::Empirical)
                } else {
                    Err(JmError::UnknownMethod(s.to_string()))
                }
            }
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.label()
    }
}

impl TryFrom<String> for Method {
    type Error = JmError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// How `Phi` is recovered from `N0` for the least-squares methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhiRecovery {
    /// `Phi = sum r^2 / sum x r` with `r = 1 / (N0 - i + 1)`, whatever the
    /// weights. The reference values in `golden` were computed this way.
    #[default]
    LeastSquares,
    /// `Phi = sum w r^2 / sum w x r`, the exact stationary point of the
    /// weighted objective.
    Weighted,
}

impl FromStr for PhiRecovery {
    type Err = JmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lse" | "least-squares" | "least_squares" => Ok(PhiRecovery::LeastSquares),
            "weighted" => Ok(PhiRecovery::Weighted),
            other => Err(JmError::Config(format!(
                "unknown Phi recovery '{other}' (expected lse or weighted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub root: RootConfig,
    pub beta: f64,
    pub alpha: f64,
    pub omit_fraction: f64,
    pub phi_recovery: PhiRecovery,
    /// Upper bound on optimal-weight refits.
    pub reweight_max: usize,
    /// Refitting stops once `|dN0| <= reweight_tolerance * N0`.
    pub reweight_tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            root: RootConfig::default(),
            beta: DEFAULT_BETA,
            alpha: DEFAULT_ALPHA,
            omit_fraction: DEFAULT_OMIT_FRACTION,
            phi_recovery: PhiRecovery::LeastSquares,
            reweight_max: 100,
            reweight_tolerance: 1e-12,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        self.root.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(JmError::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(JmError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.omit_fraction) {
            return Err(JmError::Config(format!(
                "omit fraction must lie in [0, 1), got {}",
                self.omit_fraction
            )));
        }
        if self.reweight_max == 0 || !(self.reweight_tolerance >= 0.0) {
            return Err(JmError::Config(
                "reweighting needs at least one pass and a nonnegative tolerance".into(),
            ));
        }
        Ok(())
    }
}

/// A scalar estimating function `f(N0)` with its analytic derivative.
///
/// Evaluation is unchecked: callers keep `N0 > n - 1`.
#[derive(Debug, Clone)]
pub enum EstimatingFunction {
    /// `sum 1/(N0-i+1) - n / (N0 - sum (i-1) x_i / sum x_i)`.
    Mle { n: usize, shift: f64 },
    /// `(sum w x r^2)(sum w r^2) - (sum w x r)(sum w r^3)`,
    /// `r = 1 / (N0 - i + 1)`.
    /// `w` is normalised to unit sum; `scale` restores the original
    /// magnitude so values match the unnormalised formula.
    Wls {
        x: Vec<f64>,
        w: Vec<f64>,
        scale: f64,
    },
}

impl EstimatingFunction {
    pub fn mle(data: &FailureDataset) -> Self {
        let x = data.intervals();
        let total: f64 = x.iter().sum();
        let weighted: f64 = x.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
        EstimatingFunction::Mle {
            n: x.len(),
            shift: weighted / total,
        }
    }

    pub fn wls(data: &FailureDataset, w: &WeightVector) -> Result<Self> {
        check_weights(data, w)?;
        let total: f64 = w.values().iter().sum();
        Ok(EstimatingFunction::Wls {
            x: data.intervals().to_vec(),
            w: w.values().iter().map(|v| v / total).collect(),
            scale: total * total,
        })
    }

    pub fn value(&self, n0: f64) -> f64 {
        match self {
            EstimatingFunction::Mle { n, shift } => {
                let s: f64 = (0..*n).map(|i| 1.0 / (n0 - i as f64)).sum();
                s - *n as f64 / (n0 - shift)
            }
            EstimatingFunction::Wls { x, w, scale } => wls_centred(x, w, n0, false).0 * scale,
        }
    }

    pub fn derivative(&self, n0: f64) -> f64 {
        match self {
            EstimatingFunction::Mle { n, shift } => {
                let s: f64 = (0..*n).map(|i| (n0 - i as f64).powi(-2)).sum();
                let q = n0 - shift;
                -s + *n as f64 / (q * q)
            }
            EstimatingFunction::Wls { x, w, scale } => wls_centred(x, w, n0, true).1 * scale,
        }
    }
}

/// WLS estimating function and its derivative for weights summing to one,
/// expanded around the weighted mean `m` of `r_i = 1 / (N0 - i)`. For large
/// N0 all `r_i` are nearly equal and the plain product form cancels; here
/// the deviations `d_i = r_i - m` enter through moments of
/// `u_i = i / (N0 - i)`, which carry full relative precision. Since
/// `u_0 = 0` the spread of `u` is comparable to its mean and the raw to
/// central moment conversion stays well conditioned. The derivative is NaN
/// unless requested.
fn wls_centred(x: &[f64], w: &[f64], n0: f64, derivative: bool) -> (f64, f64) {
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut a, mut x1, mut x2, mut x3) = (0.0, 0.0, 0.0, 0.0);
    for (i, (&xi, &wi)) in x.iter().zip(w).enumerate() {
        let u = i as f64 / (n0 - i as f64);
        let (wu, wxu) = (wi * u, wi * xi * u);
        s1 += wu;
        s2 += wu * u;
        s3 += wu * u * u;
        s4 += wu * u * u * u;
        a += wi * xi;
        x1 += wxu;
        x2 += wxu * u;
        x3 += wxu * u * u;
    }
    let r0 = 1.0 / n0;
    let (r2, r3) = (r0 * r0, r0 * r0 * r0);
    let m = r0 * (1.0 + s1);
    let q = s1 * s1;
    // Central moments: v = sum w d^2, t = sum w d^3, b = sum w x d, c = sum w x d^2.
    let v = r2 * (s2 - q);
    let t = r3 * (s3 - 3.0 * s1 * s2 + 2.0 * q * s1);
    let b = r0 * (x1 - s1 * a);
    let c = r2 * (x2 - 2.0 * s1 * x1 + q * a);
    let f = m * m * m * b + m * m * (c - 2.0 * a * v) - m * (b * v + a * t) + c * v - b * t;
    if !derivative {
        return (f, f64::NAN);
    }

    // dr_i/dN0 = -r_i^2, so m' = -(m^2 + v) and d_i' = -(2 m d_i + d_i^2 - v).
    let k4 = r2 * r2 * (s4 - 4.0 * s1 * s3 + 6.0 * q * s2 - 3.0 * q * q);
    let e3 = r3 * (x3 - 3.0 * s1 * x2 + 3.0 * q * x1 - q * s1 * a);
    let dm = -(m * m + v);
    let db = -(2.0 * m * b + c - v * a);
    let dc = -2.0 * (2.0 * m * c + e3 - v * b);
    let dv = -2.0 * (2.0 * m * v + t);
    let dt = -3.0 * (2.0 * m * t + k4 - v * v);
    let df = 3.0 * m * m * dm * b
        + m * m * m * db
        + 2.0 * m * dm * (c - 2.0 * a * v)
        + m * m * (dc - 2.0 * a * dv)
        - dm * (b * v + a * t)
        - m * (db * v + b * dv + a * dt)
        + dc * v
        + c * dv
        - db * t
        - b * dt;
    (f, df)
}

fn check_weights(data: &FailureDataset, w: &WeightVector) -> Result<()> {
    if w.len() != data.len() {
        return Err(domain(format!(
            "{} weights for {} intervals",
            w.len(),
            data.len()
        )));
    }
    Ok(())
}

fn check_n0(data: &FailureDataset, n0: f64) -> Result<()> {
    if data.is_empty() {
        return Err(domain("dataset is empty"));
    }
    if !(n0 > data.len() as f64) || !n0.is_finite() {
        return Err(domain(format!(
            "N0 = {n0} must exceed the segment length {}",
            data.len()
        )));
    }
    Ok(())
}

pub fn f_mle(data: &FailureDataset, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    Ok(EstimatingFunction::mle(data).value(n0))
}

pub fn df_mle(data: &FailureDataset, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    Ok(EstimatingFunction::mle(data).derivative(n0))
}

/// `Phi = n / (N0 sum x_i - sum (i-1) x_i)`.
pub fn phi_mle(data: &FailureDataset, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    let x = data.intervals();
    let total: f64 = x.iter().sum();
    let weighted: f64 = x.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
    let denom = n0 * total - weighted;
    if !(denom > 0.0) {
        return Err(domain(format!("MLE Phi denominator is {denom}")));
    }
    Ok(x.len() as f64 / denom)
}

pub fn f_wls(data: &FailureDataset, w: &WeightVector, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    Ok(EstimatingFunction::wls(data, w)?.value(n0))
}

pub fn df_wls(data: &FailureDataset, w: &WeightVector, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    Ok(EstimatingFunction::wls(data, w)?.derivative(n0))
}

pub fn f_lse(data: &FailureDataset, n0: f64) -> Result<f64> {
    f_wls(data, &WeightVector::unit(data.len()), n0)
}

/// `Phi = sum w r^2 / sum w x r` with `r = 1 / (N0 - i + 1)`.
pub fn phi_wls(data: &FailureDataset, w: &WeightVector, n0: f64) -> Result<f64> {
    check_n0(data, n0)?;
    check_weights(data, w)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (&x, &wi)) in data.intervals().iter().zip(w.values()).enumerate() {
        let r = 1.0 / (n0 - i as f64);
        num += wi * r * r;
        den += wi * x * r;
    }
    let phi = num / den;
    if !(phi.is_finite() && phi > 0.0) {
        return Err(domain(format!("weighted Phi is {phi} at N0 = {n0}")));
    }
    Ok(phi)
}

/// `S_w(N0, Phi) = sum w_i (x_i - 1/(Phi (N0 - i + 1)))^2`.
pub fn objective_swls(data: &FailureDataset, w: &WeightVector, p: &JmParams) -> Result<f64> {
    check_weights(data, w)?;
    let res = residuals(data, p)?;
    Ok(res
        .values()
        .iter()
        .zip(w.values())
        .map(|(e, wi)| wi * e * e)
        .sum())
}

/// `(dS_w/dN0, dS_w/dPhi)`.
pub fn gradient_swls(data: &FailureDataset, w: &WeightVector, p: &JmParams) -> Result<(f64, f64)> {
    check_weights(data, w)?;
    let res = residuals(data, p)?;
    let phi = p.phi();
    let (mut gn, mut gp) = (0.0, 0.0);
    for (i, (e, wi)) in res.values().iter().zip(w.values()).enumerate() {
        let r = p.n0() - i as f64;
        gn += 2.0 * wi * e / (phi * r * r);
        gp += 2.0 * wi * e / (phi * phi * r);
    }
    Ok((gn, gp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub params: JmParams,
    pub method: Method,
    pub mode: SolutionMode,
    pub root: RootResult,
    pub segment_length: usize,
    /// Weights of the final fit; `None` for MLE and unweighted LSE.
    pub weights: Option<WeightVector>,
    /// Goldfeld-Quandt outcome for the heteroscedasticity-driven methods.
    pub gq: Option<GqTestResult>,
    /// Refits performed after the pilot fit.
    pub reweights: usize,
}

impl EstimationResult {
    /// The estimating function whose root this result is.
    pub fn estimating_function(&self, data: &FailureDataset) -> Result<EstimatingFunction> {
        match (&self.method, &self.weights) {
            (Method::Mle, _) => Ok(EstimatingFunction::mle(data)),
            (_, Some(w)) => EstimatingFunction::wls(data, w),
            (_, None) => EstimatingFunction::wls(data, &WeightVector::unit(data.len())),
        }
    }
}

struct Fit {
    params: JmParams,
    root: RootResult,
}

fn solve(
    func: &EstimatingFunction,
    k: usize,
    method: &Method,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<RootResult> {
    let root = find_root(
        |n| func.value(n),
        |n| func.derivative(n),
        k,
        &cfg.root,
        mode,
    );
    if root.kind == RootKind::Failed {
        return Err(JmError::Solver {
            method: method.label(),
            segment_length: k,
            reason: format!("{:?} near N0 = {}", root.trace.stop, root.n0),
        });
    }
    Ok(root)
}

fn fit_weighted(
    data: &FailureDataset,
    w: &WeightVector,
    method: &Method,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<Fit> {
    let func = EstimatingFunction::wls(data, w)?;
    let root = solve(&func, data.len(), method, mode, cfg)?;
    let phi = match cfg.phi_recovery {
        PhiRecovery::LeastSquares => phi_wls(data, &WeightVector::unit(data.len()), root.n0)?,
        PhiRecovery::Weighted => phi_wls(data, w, root.n0)?,
    };
    Ok(Fit {
        params: JmParams::new(root.n0, phi)?,
        root,
    })
}

/// Fits `(N0, Phi)` by weighted least squares with caller-supplied weights.
pub fn estimate_weighted(
    data: &FailureDataset,
    w: &WeightVector,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<(JmParams, RootResult)> {
    cfg.validate()?;
    check_length(data)?;
    let fit = fit_weighted(data, w, &Method::Lse, mode, cfg)?;
    Ok((fit.params, fit.root))
}

fn check_length(data: &FailureDataset) -> Result<()> {
    if data.len() < 2 {
        return Err(JmError::InvalidDataset(format!(
            "estimation needs at least 2 intervals, got {}",
            data.len()
        )));
    }
    Ok(())
}

/// Fits `(N0, Phi)` to `data` with `method`.
///
/// Segments need at least two intervals. The heteroscedasticity methods
/// keep the LSE pilot fit when the Goldfeld-Quandt test is inapplicable or
/// finds no heteroscedasticity.
pub fn estimate(
    data: &FailureDataset,
    method: &Method,
    mode: SolutionMode,
    cfg: &EstimatorConfig,
) -> Result<EstimationResult> {
    cfg.validate()?;
    check_length(data)?;
    let k = data.len();
    let result = |fit: Fit, weights, gq, reweights| EstimationResult {
        params: fit.params,
        method: *method,
        mode,
        root: fit.root,
        segment_length: k,
        weights,
        gq,
        reweights,
    };

    match *method {
        Method::Mle => {
            let root = solve(&EstimatingFunction::mle(data), k, method, mode, cfg)?;
            let params = JmParams::new(root.n0, phi_mle(data, root.n0)?)?;
            Ok(result(Fit { params, root }, None, None, 0))
        }
        Method::Lse => {
            let fit = fit_weighted(data, &WeightVector::unit(k), method, mode, cfg)?;
            Ok(result(fit, None, None, 0))
        }
        Method::Empirical(s) | Method::SquaredEmpirical(s) => {
            let kind = if matches!(method, Method::Empirical(_)) {
                WeightKind::Empirical(s)
            } else {
                WeightKind::SquaredEmpirical(s)
            };
            let w = empirical_weights(&WeightScheme::new(kind, cfg.beta)?, data)?;
            let fit = fit_weighted(data, &w, method, mode, cfg)?;
            Ok(result(fit, Some(w), None, 0))
        }
        Method::Optimal => {
            let mut fit = fit_weighted(data, &WeightVector::unit(k), method, mode, cfg)?;
            let mut weights = None;
            let mut passes = 0;
            while passes < cfg.reweight_max {
                passes += 1;
                let w = optimal_weights(&fit.params, k)?;
                let next = fit_weighted(data, &w, method, mode, cfg)?;
                let settled = (next.params.n0() - fit.params.n0()).abs()
                    <= cfg.reweight_tolerance * fit.params.n0().abs();
                fit = next;
                weights = Some(w);
                if settled {
                    break;
                }
            }
            Ok(result(fit, weights, None, passes))
        }
        Method::HeteroOptimal | Method::HeteroResidual => {
            let pilot = fit_weighted(data, &WeightVector::unit(k), method, mode, cfg)?;
            let res = residuals(data, &pilot.params)?;
            let gq = goldfeld_quandt(&res, cfg.alpha, cfg.omit_fraction)?;
            if !gq.heteroscedastic {
                return Ok(result(pilot, None, Some(gq), 0));
            }
            let w = if *method == Method::HeteroOptimal {
                optimal_weights(&pilot.params, k)?
            } else {
                inverse_residual_weights(&res, default_residual_floor(&res))?
            };
            let fit = fit_weighted(data, &w, method, mode, cfg)?;
            Ok(result(fit, Some(w), Some(gq), 1))
        }
    }
}
