//! Weight policies for weighted nonlinear least squares.
//!
//! The empirical catalog is built from the failure index `i` and the
//! cumulative failure time `t_i = x_1 + .. + x_i`:
//!
//! | scheme | weight        |
//! |--------|---------------|
//! | 1      | `t_i / i`     |
//! | 2      | `i / t_i`     |
//! | 3      | `i^-beta`     |
//! | 4      | `i^beta`      |
//! | 5      | `i`           |
//! | 6      | `1 / i`       |
//! | 7      | `t_i`         |
//! | 8      | `1 / t_i`     |
//!
//! Schemes 3 and 4 follow the reference values in `golden`, which were
//! computed with `i^-beta` under the label WNLS-3 and `i^beta` under
//! WNLS-4.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::FailureDataset;
use crate::error::{domain, JmError, Result};
use crate::heteroscedasticity::ResidualVector;
use crate::model::JmParams;

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Unit,
    Empirical(u8),
    SquaredEmpirical(u8),
    /// `Phi^2 (N0 - i + 1)^2`, the reciprocal interval variance.
    Optimal,
    /// `1 / eps_i^2` from a pilot fit.
    InverseResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub kind: WeightKind,
    pub beta: f64,
}

impl WeightScheme {
    pub fn new(kind: WeightKind, beta: f64) -> Result<Self> {
        if let WeightKind::Empirical(k) | WeightKind::SquaredEmpirical(k) = kind {
            if !(1..=8).contains(&k) {
                return Err(JmError::Config(format!(
                    "empirical weight index {k} outside 1..=8"
                )));
            }
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(JmError::Config(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self { kind, beta })
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WeightKind::Unit => f.write_str("unit"),
            WeightKind::Empirical(k) => write!(f, "wnls-{k}"),
            WeightKind::SquaredEmpirical(k) => write!(f, "wnls2-{k}"),
            WeightKind::Optimal => f.write_str("optimal"),
            WeightKind::InverseResidual => f.write_str("inverse-residual"),
        }
    }
}

/// Strictly positive, finite per-interval weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("weight vector is empty"));
        }
        if let Some((i, w)) = values
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(domain(format!(
                "weight {} is {w}; weights must be positive and finite",
                i + 1
            )));
        }
        Ok(Self(values))
    }

    pub fn unit(n: usize) -> Self {
        Self(vec![1.0; n])
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

    /// Every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|w| w * c).collect())
    }
}

/// Realizes an empirical (or squared empirical, or unit) scheme on `data`.
///
/// `Optimal` and `InverseResidual` need a pilot fit; use
/// [`optimal_weights`] and [`inverse_residual_weights`] for those.
pub fn empirical_weights(scheme: &WeightScheme, data: &FailureDataset) -> Result<WeightVector> {
    match scheme.kind {
        WeightKind::Unit => Ok(WeightVector::unit(data.len())),
        WeightKind::Empirical(k) => catalog(k, scheme.beta, data),
        WeightKind::SquaredEmpirical(k) => Ok(squared(&catalog(k, scheme.beta, data)?)),
        WeightKind::Optimal | WeightKind::InverseResidual => Err(JmError::Config(format!(
            "{scheme} weights depend on a pilot fit"
        ))),
    }
}

fn catalog(k: u8, beta: f64, data: &FailureDataset) -> Result<WeightVector> {
    let cumulative = data.cumulative_times();
    let values = cumulative
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let i = (idx + 1) as f64;
            match k {
                1 => Ok(t / i),
                2 => Ok(i / t),
                3 => Ok(i.powf(-beta)),
                4 => Ok(i.powf(beta)),
                5 => Ok(i),
                6 => Ok(1.0 / i),
                7 => Ok(t),
                8 => Ok(1.0 / t),
                _ => Err(JmError::Config(format!(
                    "empirical weight index {k} outside 1..=8"
                ))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(values)
}

/// `w_i = Phi^2 (N0 - i + 1)^2` for `i = 1..k`.
pub fn optimal_weights(p: &JmParams, k: usize) -> Result<WeightVector> {
    if p.n0() <= k as f64 - 1.0 {
        return Err(domain(format!(
            "optimal weights need N0 > k - 1 (N0 = {}, k = {k})",
            p.n0()
        )));
    }
    WeightVector::new(
        (1..=k)
            .map(|i| {
                let r = p.phi() * (p.n0() - i as f64 + 1.0);
                r * r
            })
            .collect(),
    )
}

/// Default clamp for squared residuals: `1e-12 * mean(|eps|)^2`, or
/// `1e-300` when every residual is zero.
pub fn default_residual_floor(residuals: &ResidualVector) -> f64 {
    let values = residuals.values();
    let mean_abs = values.iter().map(|e| e.abs()).sum::<f64>() / values.len() as f64;
    let floor = 1e-12 * mean_abs * mean_abs;
    if floor > 0.0 && floor.is_finite() {
        floor
    } else {
        1e-300
    }
}

/// `w_i = 1 / max(eps_i^2, floor)`.
pub fn inverse_residual_weights(residuals: &ResidualVector, floor: f64) -> Result<WeightVector> {
    WeightVector::new(
        residuals
            .values()
            .iter()
            .map(|e| 1.0 / (e * e).max(floor))
            .collect(),
    )
}

pub fn squared(w: &WeightVector) -> WeightVector {
    WeightVector(w.0.iter().map(|v| v * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::builtin_dataset;

    fn scheme(k: u8) -> WeightScheme {
        WeightScheme::new(WeightKind::Empirical(k), DEFAULT_BETA).unwrap()
    }

    fn data(xs: &[f64]) -> FailureDataset {
        FailureDataset::new("t", xs.to_vec(), "s").unwrap()
    }

    #[test]
    fn catalog_examples() {
        let d3 = data(&[4.0, 1.0, 7.0]);
        assert_eq!(
            empirical_weights(&scheme(5), &d3).unwrap().values(),
            &[1.0, 2.0, 3.0]
        );

        let ntds3 = builtin_dataset("ntds").unwrap().prefix(3).unwrap();
        assert_eq!(
            empirical_weights(&scheme(7), &ntds3).unwrap().values(),
            &[9.0, 21.0, 32.0]
        );

        let d4 = data(&[1.0; 4]);
        let w = empirical_weights(&scheme(4), &d4).unwrap();
        let expect = [1.0, 2f64.sqrt(), 3f64.sqrt(), 2.0];
        for (a, b) in w.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_pairs() {
        let d = builtin_dataset("musa2").unwrap();
        for (a, b) in [(1, 2), (3, 4), (5, 6), (7, 8)] {
            let wa = empirical_weights(&scheme(a), &d).unwrap();
            let wb = empirical_weights(&scheme(b), &d).unwrap();
            for (x, y) in wa.values().iter().zip(wb.values()) {
                assert!((x * y - 1.0).abs() < 1e-12, "schemes {a},{b}");
            }
        }
    }

    #[test]
    fn squaring() {
        let w = WeightVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(squared(&w).values(), &[1.0, 4.0, 9.0]);
        assert_eq!(squared(&WeightVector::unit(4)), WeightVector::unit(4));

        let d = builtin_dataset("ntds").unwrap();
        let sq4 = squared(&empirical_weights(&scheme(4), &d).unwrap());
        let beta_one = empirical_weights(
            &WeightScheme::new(WeightKind::Empirical(4), 1.0).unwrap(),
            &d,
        )
        .unwrap();
        let w5 = empirical_weights(&scheme(5), &d).unwrap();
        for ((a, b), c) in sq4.values().iter().zip(beta_one.values()).zip(w5.values()) {
            assert!((a - b).abs() < 1e-9 * b && (a - c).abs() < 1e-9 * c);
        }
        let sq_scheme = WeightScheme::new(WeightKind::SquaredEmpirical(4), DEFAULT_BETA).unwrap();
        assert_eq!(empirical_weights(&sq_scheme, &d).unwrap(), sq4);
    }

    #[test]
    fn optimal_examples() {
        let p = JmParams::new(3.0, 1.0).unwrap();
        assert_eq!(optimal_weights(&p, 2).unwrap().values(), &[9.0, 4.0]);

        let k = 7;
        let p = JmParams::new(k as f64 + 0.5, 1.0 / 1.5).unwrap();
        assert!((optimal_weights(&p, k).unwrap().values()[k - 1] - 1.0).abs() < 1e-12);

        let p = JmParams::new(20.3, 0.03).unwrap();
        let w = optimal_weights(&p, 15).unwrap();
        assert!(w.values().windows(2).all(|v| v[1] < v[0]));
        for (i, wi) in w.values().iter().enumerate() {
            let var = crate::model::interval_moments(&p, i + 1).unwrap().1;
            assert!((wi * var - 1.0).abs() < 1e-12);
        }
        assert!(optimal_weights(&JmParams::new(2.0, 1.0).unwrap(), 4).is_err());
    }

    #[test]
    fn inverse_residual_examples() {
        let r = ResidualVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            inverse_residual_weights(&r, 1e-12).unwrap().values(),
            &[1.0, 0.25]
        );

        let r = ResidualVector::new(vec![-3.0, 3.0]).unwrap();
        let w = inverse_residual_weights(&r, default_residual_floor(&r)).unwrap();
        assert_eq!(w.values(), &[1.0 / 9.0, 1.0 / 9.0]);

        let r = ResidualVector::new(vec![0.0, 2.0]).unwrap();
        let floor = default_residual_floor(&r);
        assert_eq!(floor, 1e-12);
        let w = inverse_residual_weights(&r, floor).unwrap();
        assert_eq!(w.values()[0], 1.0 / floor);

        let zeros = ResidualVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(default_residual_floor(&zeros), 1e-300);
        assert!(inverse_residual_weights(&zeros, 1e-300).unwrap().values()[0].is_finite());
    }

    #[test]
    fn scheme_validation() {
        assert!(WeightScheme::new(WeightKind::Empirical(0), 0.5).is_err());
        assert!(WeightScheme::new(WeightKind::SquaredEmpirical(9), 0.5).is_err());
        assert!(WeightScheme::new(WeightKind::Empirical(3), 0.0).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
    }
}
