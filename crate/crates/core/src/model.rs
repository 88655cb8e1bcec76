//! Jelinski-Moranda model quantities.
//!
//! Failure interval `x_i` is exponential with rate `Phi * (N0 - i + 1)`:
//! every remaining error contributes the same hazard `Phi`, and each
//! failure removes one error.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Model parameters `(N0, Phi)`. `N0` may be non-integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JmParams {
    n0: f64,
    phi: f64,
}

impl JmParams {
    pub fn new(n0: f64, phi: f64) -> Result<Self> {
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(domain(format!("N0 must be positive and finite, got {n0}")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(domain(format!(
                "Phi must be positive and finite, got {phi}"
            )));
        }
        Ok(Self { n0, phi })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Hazard during interval `i`: `Phi * (N0 - i + 1)`.
///
/// Not checked: the result is `<= 0` once `i > N0 + 1`.
pub fn failure_rate(p: &JmParams, i: usize) -> f64 {
    p.phi * (p.n0 - i as f64 + 1.0)
}

fn valid_rate(p: &JmParams, i: usize) -> Result<f64> {
    if i == 0 {
        return Err(domain("failure index starts at 1"));
    }
    let rate = failure_rate(p, i);
    if rate > 0.0 && rate.is_finite() {
        Ok(rate)
    } else {
        Err(domain(format!(
            "failure index {i} exceeds the fitted error count N0 = {}",
            p.n0
        )))
    }
}

/// Probability that interval `i` lasts longer than `x`.
pub fn reliability(p: &JmParams, i: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("time must be nonnegative, got {x}")));
    }
    Ok((-valid_rate(p, i)? * x).exp())
}

/// Mean time to the `i`-th failure after failure `i-1`.
pub fn mtbf(p: &JmParams, i: usize) -> Result<f64> {
    Ok(1.0 / valid_rate(p, i)?)
}

/// Expected number of failures by cumulative time `t`: `N0 (1 - e^{-Phi t})`.
pub fn mean_failures(p: &JmParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!(
            "cumulative time must be nonnegative, got {t}"
        )));
    }
    Ok(p.n0 * -(-p.phi * t).exp_m1())
}

/// Mean and variance of interval `i`. The interval is exponential so the
/// variance is the squared mean.
pub fn interval_moments(p: &JmParams, i: usize) -> Result<(f64, f64)> {
    let mean = mtbf(p, i)?;
    Ok((mean, mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n0: f64, phi: f64) -> JmParams {
        JmParams::new(n0, phi).unwrap()
    }

    #[test]
    fn rate_examples() {
        assert_eq!(failure_rate(&p(3.0, 0.5), 1), 1.5);
        assert_eq!(failure_rate(&p(3.0, 0.5), 3), 0.5);
        assert_eq!(failure_rate(&p(3.0, 0.5), 5), -0.5);
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(reliability(&p(3.0, 0.5), 2, 0.0).unwrap(), 1.0);
        assert!((reliability(&p(1.0, 1.0), 1, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((reliability(&p(2.0, 0.5), 1, 2.0).unwrap() - 0.135335283).abs() < 1e-9);
        assert!(reliability(&p(2.0, 0.5), 4, 1.0).is_err());
        assert!(reliability(&p(2.0, 0.5), 1, -1.0).is_err());
    }

    #[test]
    fn mtbf_examples() {
        assert_eq!(mtbf(&p(1.0, 1.0), 1).unwrap(), 1.0);
        assert!((mtbf(&p(3.0, 0.5), 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let m = mtbf(&p(31.2159, 0.006849), 1).unwrap();
        assert!((m - 1.0 / (0.006849 * 31.2159)).abs() < 1e-12);
        assert!((m - 4.678).abs() < 1e-3);
        assert!(mtbf(&p(3.0, 0.5), 5).is_err());
        assert!(mtbf(&p(3.0, 0.5), 0).is_err());
    }

    #[test]
    fn mean_failures_examples() {
        let q = p(10.0, std::f64::consts::LN_2);
        assert_eq!(mean_failures(&q, 0.0).unwrap(), 0.0);
        assert!((mean_failures(&q, 1.0).unwrap() - 5.0).abs() < 1e-12);
        let far = mean_failures(&q, 1e6 / q.phi()).unwrap();
        assert!((far - 10.0).abs() <= 1e-9 * 10.0);
        assert!(mean_failures(&q, -1.0).is_err());
    }

    #[test]
    fn moments_examples() {
        assert_eq!(interval_moments(&p(1.0, 1.0), 1).unwrap(), (1.0, 1.0));
        assert_eq!(interval_moments(&p(4.0, 0.25), 1).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn constructor_rejects_bad_params() {
        assert!(JmParams::new(0.0, 1.0).is_err());
        assert!(JmParams::new(1.0, 0.0).is_err());
        assert!(JmParams::new(f64::INFINITY, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn moment_identities(n0 in 1.0f64..500.0, phi in 1e-5f64..10.0, frac in 0.0f64..1.0) {
            let q = p(n0, phi);
            let last = n0.ceil() as usize; // largest i with N0 - i + 1 > 0
            let i = 1 + ((last - 1) as f64 * frac) as usize;
            let (mean, var) = interval_moments(&q, i).unwrap();
            prop_assert_eq!(mtbf(&q, i).unwrap(), mean);
            prop_assert_eq!(var, mean * mean);
            let x = mean * 0.7;
            let r = reliability(&q, i, x).unwrap();
            let back = r * (failure_rate(&q, i) * x).exp();
            prop_assert!((back - 1.0).abs() < 1e-12);
        }

        #[test]
        fn variance_increases_with_index(n0 in 3.0f64..200.0, phi in 1e-4f64..5.0) {
            let q = p(n0, phi);
            let last = n0.ceil() as usize;
            let vars: Vec<f64> = (1..=last).map(|i| interval_moments(&q, i).unwrap().1).collect();
            prop_assert!(vars.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn mean_failures_monotone(n0 in 1.0f64..100.0, phi in 1e-4f64..1.0, t1 in 0.0f64..1e4, dt in 0.0f64..1e4) {
            let q = p(n0, phi);
            prop_assert!(mean_failures(&q, t1).unwrap() <= mean_failures(&q, t1 + dt).unwrap());
        }
    }
}
