//! Scalar root finding for the `N0` estimating equations.
//!
//! Every estimating function `f(N0)` is defined for `N0 > k` (the segment
//! length) and tends to zero as `N0 -> inf`. A *reasonable* solution is a
//! genuine root, evidenced by a sign change of `f`. An *asymptotic*
//! solution is the point a damped Newton iteration reaches while running
//! out along the asymptote; it exists whether or not `f` has a root.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{JmError, Result};

/// Controls for [`find_root`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    /// Newton stops once `|dN0| <= step_tolerance * max(1, |N0|)`.
    pub step_tolerance: f64,
    /// Accepts a stalled Newton iterate when `|f| <= residual_tolerance`.
    pub residual_tolerance: f64,
    /// The search domain starts at `k + lower_margin`.
    pub lower_margin: f64,
    /// Largest `N0` considered; reaching it ends an asymptotic run.
    pub n0_cap: f64,
    /// Points on the geometric sign-change scan grid.
    pub scan_points: usize,
    pub max_iterations: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            step_tolerance: 1e-16,
            residual_tolerance: 1e-12,
            lower_margin: 1e-6,
            n0_cap: 1e12,
            scan_points: 4096,
            max_iterations: 200,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.step_tolerance)
            || !positive(self.residual_tolerance)
            || !positive(self.lower_margin)
        {
            return Err(JmError::Config(
                "tolerances and margin must be positive".into(),
            ));
        }
        if self.scan_points < 2 {
            return Err(JmError::Config("scan_points must be at least 2".into()));
        }
        if self.max_iterations == 0 {
            return Err(JmError::Config("max_iterations must be at least 1".into()));
        }
        if !(self.n0_cap > self.lower_margin + 1.0) || self.n0_cap.is_infinite() {
            return Err(JmError::Config(format!(
                "n0_cap {} is too small",
                self.n0_cap
            )));
        }
        Ok(())
    }
}

/// Which kind of solution the caller wants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionMode {
    /// Prefer a genuine root; fall back to the asymptotic iterate.
    Reasonable,
    /// Always follow the asymptote.
    Asymptotic,
}

impl fmt::Display for SolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionMode::Reasonable => "reasonable",
            SolutionMode::Asymptotic => "asymptotic",
        })
    }
}

impl FromStr for SolutionMode {
    type Err = JmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reasonable" => Ok(SolutionMode::Reasonable),
            "asymptotic" => Ok(SolutionMode::Asymptotic),
            other => Err(JmError::Config(format!(
                "unknown mode '{other}' (expected reasonable or asymptotic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootKind {
    Reasonable,
    Asymptotic,
    Failed,
}

impl fmt::Display for RootKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootKind::Reasonable => "reasonable",
            RootKind::Asymptotic => "asymptotic",
            RootKind::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `f` evaluated to exactly zero.
    ExactZero,
    /// The sign-change bracket shrank to adjacent floats.
    BracketCollapsed,
    /// Newton step below `step_tolerance` (relative).
    StepTolerance,
    /// Newton settled into a two-point cycle at rounding level.
    RoundingCycle,
    /// Newton stalled with `|f| <= residual_tolerance`.
    ResidualTolerance,
    /// Newton ran out to `n0_cap`.
    Cap,
    NonFinite,
    ZeroDerivative,
    MaxIterations,
}

/// Diagnostics recorded alongside a [`RootResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTrace {
    pub stop: StopReason,
    /// Sign changes seen on the scan grid (0 when no scan ran).
    pub sign_changes: usize,
    /// Starting point of the Newton phase, if one ran.
    pub newton_start: Option<f64>,
    pub hit_cap: bool,
    /// Signs of `f'` and `f''` at the solution; informational only.
    pub derivative_sign: Option<i8>,
    pub curvature_sign: Option<i8>,
    /// Convergence criterion in force.
    pub criterion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub n0: f64,
    pub kind: RootKind,
    /// `f(n0)`.
    pub residual: f64,
    pub iterations: usize,
    /// Sign-change bracket around a reasonable root.
    pub bracket: Option<(f64, f64)>,
    pub trace: RootTrace,
}

/// Central difference with `h = max(1e-6, 1e-6 |x|)`.
pub fn numeric_derivative<F: Fn(f64) -> f64>(f: F, x: f64) -> Result<f64> {
    let h = (1e-6 * x.abs()).max(1e-6);
    let (hi, lo) = (f(x + h), f(x - h));
    if !(hi.is_finite() && lo.is_finite()) {
        return Err(JmError::Domain(format!(
            "non-finite function value near {x}"
        )));
    }
    Ok((hi - lo) / (2.0 * h))
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Geometric grid on `[lo, hi]`, endpoints exact.
fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let last = points - 1;
    (0..points)
        .map(|j| match j {
            0 => lo,
            j if j == last => hi,
            j => lo * (ratio * j as f64 / last as f64).exp(),
        })
        .collect()
}

struct Scan {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Scan {
    fn run<F: Fn(f64) -> f64>(f: &F, lo: f64, cfg: &RootConfig) -> Option<Scan> {
        let grid = geometric_grid(lo, cfg.n0_cap, cfg.scan_points);
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        values
            .iter()
            .all(|v| v.is_finite())
            .then_some(Scan { grid, values })
    }

    /// Grid intervals `[j, j+1]` over which `f` changes sign or touches zero.
    fn brackets(&self) -> Vec<usize> {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] == 0.0 || sign(w[0]) * sign(w[1]) < 0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Solves `f(N0) = 0` on `(k + lower_margin, n0_cap]`.
///
/// In reasonable mode the smallest sign change on the scan grid is refined
/// by bisection and safeguarded Newton; without one the asymptotic branch
/// runs from `N0 = k + 1`. In asymptotic mode Newton starts beyond the
/// last sign change (past the `|f|` extremum that follows it) so that it
/// walks out along the asymptote instead of falling into a root.
pub fn find_root<F, D>(f: F, df: D, k: usize, cfg: &RootConfig, mode: SolutionMode) -> RootResult
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let floor = k as f64 + cfg.lower_margin;
    let Some(scan) = Scan::run(&f, floor, cfg) else {
        return failed(floor, StopReason::NonFinite, 0);
    };
    let brackets = scan.brackets();

    let start = match mode {
        SolutionMode::Reasonable => {
            if let Some(&j) = brackets.first() {
                let mut res = refine_bracket(&f, &df, &scan, j, cfg);
                res.trace.sign_changes = brackets.len();
                annotate_signs(&mut res, &df);
                return res;
            }
            k as f64 + 1.0
        }
        SolutionMode::Asymptotic => match brackets.last() {
            None => k as f64 + 1.0,
            Some(&j) => {
                let tail = &scan.values[j + 1..];
                let peak = tail
                    .iter()
                    .enumerate()
                    .fold((0, 0.0f64), |best, (idx, v)| {
                        if v.abs() > best.1 {
                            (idx, v.abs())
                        } else {
                            best
                        }
                    })
                    .0;
                let idx = (j + 1 + peak + 1).min(scan.grid.len() - 1);
                scan.grid[idx].max(k as f64 + 1.0)
            }
        },
    };

    let mut res = damped_newton(&f, &df, floor, start, cfg);
    res.trace.sign_changes = brackets.len();
    if res.kind != RootKind::Failed {
        annotate_signs(&mut res, &df);
    }
    res
}

fn failed(n0: f64, stop: StopReason, iterations: usize) -> RootResult {
    RootResult {
        n0,
        kind: RootKind::Failed,
        residual: f64::NAN,
        iterations,
        bracket: None,
        trace: RootTrace {
            stop,
            sign_changes: 0,
            newton_start: None,
            hit_cap: false,
            derivative_sign: None,
            curvature_sign: None,
            criterion: String::new(),
        },
    }
}

fn annotate_signs<D: Fn(f64) -> f64>(res: &mut RootResult, df: &D) {
    let d = df(res.n0);
    res.trace.derivative_sign = d.is_finite().then(|| sign(d));
    res.trace.curvature_sign = numeric_derivative(df, res.n0).ok().map(sign);
}

fn refine_bracket<F, D>(f: &F, df: &D, scan: &Scan, j: usize, cfg: &RootConfig) -> RootResult
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let criterion = "sign-change bracket collapsed to adjacent floats".to_string();
    let done =
        |n0: f64, residual: f64, bracket: (f64, f64), iterations: usize, stop: StopReason| {
            RootResult {
                n0,
                kind: RootKind::Reasonable,
                residual,
                iterations,
                bracket: Some(bracket),
                trace: RootTrace {
                    stop,
                    sign_changes: 0,
                    newton_start: None,
                    hit_cap: false,
                    derivative_sign: None,
                    curvature_sign: None,
                    criterion: criterion.clone(),
                },
            }
        };

    let (mut a, mut b) = (scan.grid[j], scan.grid[j + 1]);
    let (mut fa, fb) = (scan.values[j], scan.values[j + 1]);
    if fa == 0.0 {
        return done(a, 0.0, (a, a), 0, StopReason::ExactZero);
    }
    if fb == 0.0 {
        return done(b, 0.0, (b, b), 0, StopReason::ExactZero);
    }
    let mut fb = fb;

    let narrow = |a: f64, b: f64| (b - a) <= 1e-6 * b.abs().max(1.0);
    let mut iterations = 0;
    let mut x = 0.5 * (a + b);
    let mut bisect_next = true;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let fx = f(x);
        if !fx.is_finite() {
            return failed(x, StopReason::NonFinite, iterations);
        }
        if fx == 0.0 {
            return done(x, 0.0, (x, x), iterations, StopReason::ExactZero);
        }
        let width_before = b - a;
        if sign(fx) == sign(fa) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }

        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || (b - a) <= cfg.step_tolerance * b.abs().max(1.0) {
            break;
        }

        // Bisect until the bracket is narrow, then let Newton take over
        // unless it fails to halve the bracket.
        let newton = if !bisect_next && narrow(a, b) {
            let d = df(x);
            let cand = x - fx / d;
            (d.is_finite() && d != 0.0 && cand > a && cand < b && cand != x).then_some(cand)
        } else {
            None
        };
        bisect_next = (b - a) > 0.5 * width_before;
        x = newton.unwrap_or(mid);
    }

    let (n0, residual) = if fa.abs() <= fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    let stop = if iterations >= cfg.max_iterations {
        StopReason::MaxIterations
    } else {
        StopReason::BracketCollapsed
    };
    done(n0, residual, (a, b), iterations, stop)
}

fn damped_newton<F, D>(f: &F, df: &D, floor: f64, start: f64, cfg: &RootConfig) -> RootResult
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = start.max(floor).min(cfg.n0_cap);
    let mut prev = f64::NAN;
    let finish = |n0: f64, residual: f64, iterations: usize, stop: StopReason| {
        let hit_cap = stop == StopReason::Cap;
        RootResult {
            n0,
            kind: RootKind::Asymptotic,
            residual,
            iterations,
            bracket: None,
            trace: RootTrace {
                stop,
                sign_changes: 0,
                newton_start: Some(start),
                hit_cap,
                derivative_sign: None,
                curvature_sign: None,
                criterion: format!(
                    "relative Newton step <= {:e} or N0 reaches cap {:e}",
                    cfg.step_tolerance, cfg.n0_cap
                ),
            },
        }
    };
    let fail = |n0: f64, iterations: usize, stop: StopReason| {
        let mut r = failed(n0, stop, iterations);
        r.trace.newton_start = Some(start);
        r
    };

    for it in 1..=cfg.max_iterations {
        let fx = f(x);
        if !fx.is_finite() {
            return fail(x, it, StopReason::NonFinite);
        }
        if fx == 0.0 {
            return finish(x, fx, it, StopReason::ExactZero);
        }
        let d = df(x);
        if !d.is_finite() || d == 0.0 {
            return fail(x, it, StopReason::ZeroDerivative);
        }
        let mut step = -fx / d;
        let mut next = x + step;
        let mut halvings = 0;
        while next <= floor && halvings < 1100 {
            step *= 0.5;
            next = x + step;
            halvings += 1;
        }
        if next <= floor {
            return fail(x, it, StopReason::ZeroDerivative);
        }
        if next >= cfg.n0_cap {
            let cap = cfg.n0_cap;
            return finish(cap, f(cap), it, StopReason::Cap);
        }
        if (next - x).abs() <= cfg.step_tolerance * x.abs().max(1.0) {
            return finish(next, f(next), it, StopReason::StepTolerance);
        }
        if next == prev {
            // x and next alternate; keep the one with the smaller residual.
            let fn_ = f(next);
            let (n0, r) = if fn_.abs() < fx.abs() {
                (next, fn_)
            } else {
                (x, fx)
            };
            return finish(n0, r, it, StopReason::RoundingCycle);
        }
        prev = x;
        x = next;
    }

    let fx = f(x);
    if fx.abs() <= cfg.residual_tolerance && (x - prev).abs() <= 1e-8 * x.abs().max(1.0) {
        return finish(x, fx, cfg.max_iterations, StopReason::ResidualTolerance);
    }
    fail(x, cfg.max_iterations, StopReason::MaxIterations)
}
