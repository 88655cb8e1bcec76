//! Goldfeld-Quandt test on the residuals of a fitted JM regression.
//!
//! The regressor of `x_i = 1 / (Phi (N0 - i + 1))` is the failure index,
//! so the residuals are taken in their natural order. The residuals come
//! from one global fit and are split afterwards; the subgroups are not
//! refitted.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::dataset::FailureDataset;
use crate::error::{domain, JmError, Result};
use crate::model::{mtbf, JmParams};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_OMIT_FRACTION: f64 = 0.25;

/// Number of regression parameters, `(N0, Phi)`.
const PARAMS: usize = 2;

/// Regression residuals `eps_i = x_i - 1 / (Phi (N0 - i + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResidualVector(Vec<f64>);

impl ResidualVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("residual vector is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("residuals must be finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn residuals(data: &FailureDataset, p: &JmParams) -> Result<ResidualVector> {
    let values = data
        .intervals()
        .iter()
        .enumerate()
        .map(|(idx, &x)| Ok(x - mtbf(p, idx + 1)?))
        .collect::<Result<Vec<_>>>()?;
    ResidualVector::new(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GqTestResult {
    /// `lambda = EER_2 / EER_1`; NaN when the test is inapplicable.
    pub statistic: f64,
    pub dof: (usize, usize),
    /// Upper `alpha` quantile of `F(d1, d2)`; NaN when inapplicable.
    pub critical_value: f64,
    pub alpha: f64,
    pub heteroscedastic: bool,
    /// Observations removed from the middle.
    pub omitted: usize,
    pub applicable: bool,
}

/// Middle band size: `round(N * omit_fraction)`, shrunk (or grown when
/// already zero) by one so that the remaining count is even.
fn omitted_count(n: usize, omit_fraction: f64) -> usize {
    let d = (n as f64 * omit_fraction).round() as usize;
    let d = d.min(n);
    if (n - d).is_multiple_of(2) {
        d
    } else if d > 0 {
        d - 1
    } else {
        d + 1
    }
}

pub fn goldfeld_quandt(
    res: &ResidualVector,
    alpha: f64,
    omit_fraction: f64,
) -> Result<GqTestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(JmError::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(0.0..1.0).contains(&omit_fraction) {
        return Err(JmError::Config(format!(
            "omit fraction must lie in [0, 1), got {omit_fraction}"
        )));
    }
    let n = res.len();
    let d = omitted_count(n, omit_fraction);
    let m = (n - d) / 2;
    let dof = m.saturating_sub(PARAMS);
    if dof < 1 {
        return Ok(GqTestResult {
            statistic: f64::NAN,
            dof: (dof, dof),
            critical_value: f64::NAN,
            alpha,
            heteroscedastic: false,
            omitted: d,
            applicable: false,
        });
    }

    let v = res.values();
    let eer1: f64 = v[..m].iter().map(|e| e * e).sum();
    let eer2: f64 = v[n - m..].iter().map(|e| e * e).sum();
    // Both subgroups being exact fits carries no evidence either way.
    let statistic = if eer1 == 0.0 && eer2 == 0.0 {
        1.0
    } else {
        eer2 / eer1
    };
    let critical_value = f_quantile(1.0 - alpha, dof, dof)?;
    Ok(GqTestResult {
        statistic,
        dof: (dof, dof),
        critical_value,
        alpha,
        heteroscedastic: statistic > critical_value,
        omitted: d,
        applicable: true,
    })
}

fn check_dof(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(domain(format!(
            "F degrees of freedom must be >= 1, got ({d1}, {d2})"
        )));
    }
    Ok(())
}

/// Distribution function of `F(d1, d2)`.
pub fn f_cdf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_dof(d1, d2)?;
    if x.is_nan() {
        return Err(domain("F cdf evaluated at NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (a, b) = (d1 as f64, d2 as f64);
    let z = a * x / (a * x + b);
    Ok(beta_reg(a / 2.0, b / 2.0, z))
}

/// Density of `F(d1, d2)`.
pub fn f_pdf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_dof(d1, d2)?;
    if !(x > 0.0) || x.is_infinite() {
        return Ok(0.0);
    }
    let (a, b) = (d1 as f64, d2 as f64);
    let ln = 0.5 * a * (a * x).ln() + 0.5 * b * b.ln()
        - 0.5 * (a + b) * (a * x + b).ln()
        - x.ln()
        - ln_beta(a / 2.0, b / 2.0);
    Ok(ln.exp())
}

/// Inverse of [`f_cdf`] to `1e-10` relative, by bisection on a bracket
/// with Newton steps whenever they stay inside it.
pub fn f_quantile(p: f64, d1: usize, d2: usize) -> Result<f64> {
    check_dof(d1, d2)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("probability must lie in (0, 1), got {p}")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f_cdf(hi, d1, d2)? < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(domain(format!(
                "F quantile {p} for ({d1}, {d2}) out of range"
            )));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let g = f_cdf(x, d1, d2)? - p;
        if g == 0.0 {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let dens = f_pdf(x, d1, d2)?;
        let step = if dens > 0.0 { g / dens } else { f64::INFINITY };
        let newton = x - step;
        if newton > lo && newton < hi {
            if step.abs() <= 1e-13 * newton {
                return Ok(newton);
            }
            x = newton;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(v: &[f64]) -> ResidualVector {
        ResidualVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn residual_examples() {
        let p = JmParams::new(4.0, 0.25).unwrap();
        let d = FailureDataset::new("t", vec![2.0], "s").unwrap();
        assert_eq!(residuals(&d, &p).unwrap().values(), &[1.0]);

        let p = JmParams::new(3.0, 1.0).unwrap();
        let d = FailureDataset::new("t", vec![1.0 / 3.0, 0.5, 1.0], "s").unwrap();
        assert!(residuals(&d, &p)
            .unwrap()
            .values()
            .iter()
            .all(|e| e.abs() < 1e-15));

        let ntds = crate::dataset::builtin_dataset("ntds")
            .unwrap()
            .prefix(26)
            .unwrap();
        let p = JmParams::new(32.0564, 0.006209).unwrap();
        let e1 = residuals(&ntds, &p).unwrap().values()[0];
        assert!((e1 - (9.0 - 1.0 / (0.006209 * 32.0564))).abs() < 1e-12);
        assert!((e1 - 3.976).abs() < 1e-3);

        let short = JmParams::new(1.5, 1.0).unwrap();
        assert!(residuals(&ntds, &short).is_err());
    }

    #[test]
    fn omitted_band_parity() {
        assert_eq!(omitted_count(14, 0.25), 4); // round(3.5) = 4, even remainder
        assert_eq!(omitted_count(15, 0.25), 3); // round(3.75) = 4, shrunk to 3
        assert_eq!(omitted_count(5, 0.25), 1);
        assert_eq!(omitted_count(40, 0.25), 10);
        assert_eq!(omitted_count(3, 0.0), 1);
    }

    #[test]
    fn equal_magnitudes_not_heteroscedastic() {
        let r = rv(&[
            1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0,
        ]);
        let t = goldfeld_quandt(&r, 0.05, 0.25).unwrap();
        assert!(t.applicable);
        assert_eq!(t.statistic, 1.0);
        assert!(!t.heteroscedastic);
    }

    #[test]
    fn too_short_is_inapplicable() {
        let t = goldfeld_quandt(&rv(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0.05, 0.25).unwrap();
        assert!(!t.applicable && !t.heteroscedastic);
        assert_eq!(t.omitted, 1);
        assert_eq!(t.dof, (0, 0));
    }

    #[test]
    fn fourteen_point_example() {
        let mut v = vec![1.0; 6];
        v.extend([0.5, 0.5]);
        v.extend([3.0; 6]);
        // round(14 * 1/7) = 2 omitted, six observations per side, dof 4.
        let t = goldfeld_quandt(&rv(&v), 0.05, 1.0 / 7.0).unwrap();
        assert_eq!(t.omitted, 2);
        assert_eq!(t.dof, (4, 4));
        assert!((t.statistic - 9.0).abs() < 1e-12);
        assert!((t.critical_value - 6.3882).abs() < 1e-4);
        assert!(t.heteroscedastic);
    }

    #[test]
    fn quantile_examples() {
        for d in [1, 2, 5, 30] {
            assert!((f_quantile(0.5, d, d).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!((f_quantile(0.95, 10, 10).unwrap() - 2.9782).abs() < 1e-4);
        assert!((f_quantile(0.95, 4, 4).unwrap() - 6.3882).abs() < 1e-4);
        assert!(f_quantile(0.0, 4, 4).is_err());
        assert!(f_quantile(0.5, 0, 4).is_err());
    }

    #[test]
    fn config_validation() {
        let r = rv(&[1.0; 20]);
        assert!(goldfeld_quandt(&r, 0.0, 0.25).is_err());
        assert!(goldfeld_quandt(&r, 0.05, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn statistic_scale_invariant(v in prop::collection::vec(0.01f64..10.0, 8..40), c in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
            let a = goldfeld_quandt(&rv(&v), 0.05, 0.25).unwrap();
            let scaled: Vec<f64> = v.iter().map(|e| e * c).collect();
            let b = goldfeld_quandt(&rv(&scaled), 0.05, 0.25).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-12 * a.statistic);
        }

        #[test]
        fn quantile_monotone(p in 0.01f64..0.98, dp in 0.001f64..0.01, d1 in 1usize..40, d2 in 1usize..40) {
            prop_assert!(f_quantile(p, d1, d2).unwrap() < f_quantile(p + dp, d1, d2).unwrap());
        }

        #[test]
        fn quantile_inverts_cdf(p in 0.001f64..0.999, d1 in 1usize..60, d2 in 1usize..60) {
            let x = f_quantile(p, d1, d2).unwrap();
            prop_assert!((f_cdf(x, d1, d2).unwrap() - p).abs() < 1e-9);
        }
    }
}
