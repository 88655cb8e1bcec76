//! Independent oracles and synthetic data shared by the integration suites.
#![allow(dead_code)]

use jm_core::dataset::FailureDataset;
use jm_core::estimators::objective_swls;
use jm_core::model::JmParams;
use jm_core::weights::WeightVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::gamma::ln_gamma;

/// Draws `n` JM intervals from a random true model.
pub fn synthetic(rng: &mut ChaCha8Rng, n: usize) -> FailureDataset {
    let n0 = n as f64 + rng.random_range(2.0..(2.0 * n as f64 + 5.0));
    let phi = 10f64.powf(rng.random_range(-3.0..-0.5));
    let x = (1..=n)
        .map(|i| {
            let rate = phi * (n0 - i as f64 + 1.0);
            Exp::new(rate).unwrap().sample(rng).max(1e-6)
        })
        .collect();
    FailureDataset::new("synthetic", x, "s").unwrap()
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    WeightVector::new(
        (0..n)
            .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Fourth-order central difference.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Numerical gradient of `S_w` at `p`.
pub fn fd_gradient(data: &FailureDataset, w: &WeightVector, p: &JmParams) -> (f64, f64) {
    let s = |n0: f64, phi: f64| objective_swls(data, w, &JmParams::new(n0, phi).unwrap()).unwrap();
    let hn = 1e-4 * (p.n0() - data.len() as f64 + 1.0).min(p.n0());
    let hp = 1e-4 * p.phi();
    (
        central_difference(|n| s(n, p.phi()), p.n0(), hn),
        central_difference(|f| s(p.n0(), f), p.phi(), hp),
    )
}

/// Lowest `S_w` over `N0 in (n, n + span]` (step `dn`) and a log-spaced
/// `Phi` grid with `per_decade` points on `[1e-6, 1e2]`, each best grid
/// cell refined by golden-section search in `log Phi`.
pub fn brute_force_min(
    data: &FailureDataset,
    w: &WeightVector,
    span: f64,
    dn: f64,
    per_decade: usize,
) -> (f64, f64, f64) {
    let n = data.len() as f64;
    let x = data.intervals();
    let wv = w.values();
    let s = |n0: f64, phi: f64| -> f64 {
        x.iter()
            .zip(wv)
            .enumerate()
            .map(|(i, (xi, wi))| {
                let e = xi - 1.0 / (phi * (n0 - i as f64));
                wi * e * e
            })
            .sum()
    };
    let decades = 8;
    let phis: Vec<f64> = (0..=decades * per_decade)
        .map(|j| 1e-6 * 10f64.powf(j as f64 / per_decade as f64))
        .collect();
    let steps = (span / dn).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for j in 1..=steps {
        let n0 = n + j as f64 * dn;
        let (mut bv, mut bi) = (f64::INFINITY, 0);
        for (i, &phi) in phis.iter().enumerate() {
            let v = s(n0, phi);
            if v < bv {
                bv = v;
                bi = i;
            }
        }
        // Golden-section refinement between the neighbouring grid points.
        let lo = phis[bi.saturating_sub(1)].ln();
        let hi = phis[(bi + 1).min(phis.len() - 1)].ln();
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if s(n0, c.exp()) < s(n0, d.exp()) {
                b = d;
            } else {
                a = c;
            }
        }
        let phi = (0.5 * (a + b)).exp();
        let v = s(n0, phi).min(bv);
        if v < best.0 {
            best = (v, n0, phi);
        }
    }
    best
}

fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
    (0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
        - ln_b)
        .exp()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// F distribution function by quadrature of the density. The substitution
/// `x = u^2` removes the singularity at zero when `d1 = 1`.
pub fn oracle_f_cdf(x: f64, d1: usize, d2: usize) -> f64 {
    let (a, b) = (d1 as f64, d2 as f64);
    let g = |u: f64| 2.0 * u * f_density(u * u, a, b);
    adaptive_simpson(&g, 0.0, x.sqrt(), 1e-14)
}

/// Bisection on [`oracle_f_cdf`].
pub fn oracle_f_quantile(p: f64, d1: usize, d2: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while oracle_f_cdf(hi, d1, d2) < p {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let m = 0.5 * (lo + hi);
        if oracle_f_cdf(m, d1, d2) < p {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}
