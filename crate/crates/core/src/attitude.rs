//! Order of the attitude towards probability.
//!
//! The premium `mu(eps1)` of a first-order decision maker shrinks linearly
//! with the shifted mass `eps1`, that of a second-order one quadratically.
//! [`classify`] estimates both limits from exact premia on a geometric grid
//! with Richardson extrapolation.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lottery::SpreadSpec;
use crate::preferences::{UtilityModel, WeightingModel};
use crate::premium::{premium_residual, probability_premium_exact_with};
use crate::solve::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    FirstOrderAverse,
    FirstOrderSeeking,
    SecondOrderAverse,
    SecondOrderSeeking,
    NeutralOrHigher,
}

impl Order {
    pub fn is_first(self) -> bool {
        matches!(self, Order::FirstOrderAverse | Order::FirstOrderSeeking)
    }

    pub fn is_second(self) -> bool {
        matches!(self, Order::SecondOrderAverse | Order::SecondOrderSeeking)
    }

    /// +1 averse, -1 seeking, 0 neutral.
    pub fn sign(self) -> i8 {
        match self {
            Order::FirstOrderAverse | Order::SecondOrderAverse => 1,
            Order::FirstOrderSeeking | Order::SecondOrderSeeking => -1,
            Order::NeutralOrHigher => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub first_threshold: f64,
    pub second_threshold: f64,
    /// Grid size; the grid is `eps0 * 2^-k` for `k < levels`.
    pub levels: usize,
    pub solver: SolverConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            first_threshold: 1e-6,
            second_threshold: 1e-6,
            levels: 11,
            // The finest grid point is ~1e-4; extracting mu/eps1^2 there
            // needs the root to machine precision, not just to 1e-13.
            solver: SolverConfig::with_tol(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub eps1: Vec<f64>,
    pub mu: Vec<f64>,
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeClassification {
    pub order: Order,
    /// Extrapolated limit of `mu / eps1`.
    pub first_coeff: f64,
    /// Extrapolated limit of `(mu - first_coeff eps1) / eps1^2`.
    pub second_coeff: f64,
    pub diagnostics: Diagnostics,
}

/// Two-level Richardson limit of a sequence sampled at `4e, 2e, e` with an
/// expansion in powers of `e`.
fn richardson(coarse: f64, mid: f64, fine: f64) -> f64 {
    (8.0 * fine - 6.0 * mid + coarse) / 3.0
}

fn extrapolate(eps: &[f64], vals: impl Fn(usize) -> f64) -> f64 {
    let n = eps.len();
    richardson(vals(n - 3), vals(n - 2), vals(n - 1))
}

pub fn classify(w0: f64, p0: f64, eps2: f64, u: &UtilityModel, h: &WeightingModel) -> Result<AttitudeClassification> {
    classify_with(w0, p0, eps2, u, h, &ClassifyConfig::default())
}

pub fn classify_with(
    w0: f64,
    p0: f64,
    eps2: f64,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &ClassifyConfig,
) -> Result<AttitudeClassification> {
    if cfg.levels < 3 {
        return Err(Error::param("levels", cfg.levels as f64, "need at least three grid levels"));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::param("p0", p0, "must lie in (0, 1)"));
    }
    let eps0 = p0.min(1.0 - p0) / 4.0;
    let mut diag = Diagnostics {
        eps1: Vec::with_capacity(cfg.levels),
        mu: Vec::with_capacity(cfg.levels),
        iterations: Vec::with_capacity(cfg.levels),
    };
    for k in 0..cfg.levels {
        let eps1 = eps0 * 0.5f64.powi(k as i32);
        let spec = SpreadSpec::new(w0, p0, eps1, eps2)?;
        let r = probability_premium_exact_with(&spec, u, h, &cfg.solver).map_err(|e| Error::SolverAt {
            eps1,
            source: Box::new(e),
        })?;
        diag.eps1.push(eps1);
        diag.mu.push(r.mu_exact);
        diag.iterations.push(r.iterations);
    }

    let (eps, mu) = (&diag.eps1, &diag.mu);
    let first_coeff = extrapolate(eps, |k| mu[k] / eps[k]);
    let is_first = first_coeff.abs() > cfg.first_threshold;
    let slope = if is_first { first_coeff } else { 0.0 };
    let second_coeff = extrapolate(eps, |k| (mu[k] - slope * eps[k]) / (eps[k] * eps[k]));

    let order = if is_first {
        if first_coeff > 0.0 {
            Order::FirstOrderAverse
        } else {
            Order::FirstOrderSeeking
        }
    } else if second_coeff.abs() > cfg.second_threshold {
        if second_coeff > 0.0 {
            Order::SecondOrderAverse
        } else {
            Order::SecondOrderSeeking
        }
    } else {
        Order::NeutralOrHigher
    };
    Ok(AttitudeClassification {
        order,
        first_coeff,
        second_coeff,
        diagnostics: diag,
    })
}

/// Limit of `mu / eps1` at a kink of `h`: `(1 - h'_+ / h'_-) / 2`.
pub fn kink_slope(h: &WeightingModel, p0: f64) -> Result<f64> {
    let (left, right) = h.one_sided(p0)?;
    if left <= 0.0 {
        return Err(Error::param("h'_-", left, "left derivative must be positive"));
    }
    Ok(0.5 * (1.0 - right / left))
}

/// Unfairness rate `mu / eps1` at which `C(m eps1)` and `D` are
/// indifferent. Below it the contraction `D` is preferred.
pub fn critical_m(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    critical_m_with(spec, u, h, &SolverConfig::default())
}

pub fn critical_m_with(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel, cfg: &SolverConfig) -> Result<f64> {
    Ok(probability_premium_exact_with(spec, u, h, cfg)?.mu_exact / spec.eps1)
}

/// Preference between the contraction `D` and the unfair binary risk
/// `C(m eps1)`: `Greater` means `D` is strictly preferred.
pub fn compare_contraction(spec: &SpreadSpec, m: f64, u: &UtilityModel, h: &WeightingModel) -> Result<Ordering> {
    let gap = -premium_residual(spec, u, h, m * spec.eps1)?;
    Ok(gap.partial_cmp(&0.0).unwrap_or(Ordering::Equal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crra2() -> UtilityModel {
        UtilityModel::crra(2.0).unwrap()
    }

    #[test]
    fn dual_theory_quadratic_is_second_order() {
        for p0 in [0.2, 0.5, 0.8] {
            let c = classify(10.0, p0, 1.0, &UtilityModel::Linear, &WeightingModel::Quadratic).unwrap();
            assert_eq!(c.order, Order::SecondOrderAverse);
            assert!(c.first_coeff.abs() < 1e-6);
            assert!((c.second_coeff - 1.0 / (2.0 * (1.0 - p0))).abs() < 1e-4, "{}", c.second_coeff);
        }
    }

    #[test]
    fn eu_with_curvature_is_first_order() {
        let c = classify(10.0, 0.5, 1.0, &crra2(), &WeightingModel::Identity).unwrap();
        assert_eq!(c.order, Order::FirstOrderAverse);
        let approx = 0.5 * 1.0 * 0.2;
        assert!((c.first_coeff - approx).abs() < 0.01 * approx);
        // EU premia are exactly linear in eps1
        let (lo, mid, hi) = (-1.0 / 9.0, -0.1, -1.0 / 11.0);
        assert!((c.first_coeff - (2.0 * mid - lo - hi) / (hi - lo)).abs() < 1e-10);
    }

    #[test]
    fn risk_neutral_is_neutral() {
        let c = classify(1.0, 0.4, 0.5, &UtilityModel::Linear, &WeightingModel::Identity).unwrap();
        assert_eq!(c.order, Order::NeutralOrHigher);
        assert!(c.first_coeff.abs() < 1e-9 && c.second_coeff.abs() < 1e-6);
        assert_eq!(c.diagnostics.mu.len(), 11);
    }

    #[test]
    fn convex_weighting_is_second_order_seeking() {
        let h = WeightingModel::power(2.0).unwrap();
        let c = classify(0.0, 0.5, 1.0, &UtilityModel::Linear, &h).unwrap();
        assert_eq!(c.order, Order::SecondOrderSeeking);
    }

    #[test]
    fn smooth_dual_theory_has_zero_first_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p0 = rng.gen_range(0.05..0.95);
            let alpha = rng.gen_range(0.5..1.0);
            let h = WeightingModel::prelec(alpha, 1.0).unwrap();
            let c = classify(0.0, p0, 1.0, &UtilityModel::Linear, &h).unwrap();
            assert!(c.first_coeff.abs() < 1e-6, "{c:?}");
            let expect = 0.5 * h.dara(p0).unwrap();
            assert!((c.second_coeff - expect).abs() < 1e-4, "p0={p0} {} vs {expect}", c.second_coeff);
        }
    }

    #[test]
    fn kink_slope_examples() {
        for p0 in [0.2, 0.5, 0.7] {
            let h = WeightingModel::avar(p0).unwrap();
            assert!((kink_slope(&h, 1.0 - p0).unwrap() - 0.5).abs() < 1e-15);
        }
        let h = WeightingModel::prelec(0.65, 1.0).unwrap();
        assert_eq!(kink_slope(&h, 0.4).unwrap(), 0.0);
        let pwl = WeightingModel::piecewise(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        assert!((kink_slope(&pwl, 0.5).unwrap() - 0.375).abs() < 1e-15);
        let flat = WeightingModel::piecewise(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]).unwrap();
        assert!(kink_slope(&flat, 0.5).is_err());
    }

    #[test]
    fn classify_matches_kink_slope() {
        for p0 in [0.3, 0.5, 0.75] {
            let h = WeightingModel::avar(p0).unwrap();
            let c = classify(0.0, 1.0 - p0, 1.0, &UtilityModel::Linear, &h).unwrap();
            assert_eq!(c.order, Order::FirstOrderAverse);
            assert!((c.first_coeff - 0.5).abs() < 1e-5);
        }
        let pwl = WeightingModel::piecewise(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        let c = classify(0.0, 0.5, 1.0, &UtilityModel::Linear, &pwl).unwrap();
        assert!((c.first_coeff - 0.375).abs() < 1e-5);
    }

    #[test]
    fn critical_m_examples() {
        let spec = SpreadSpec::new(5.0, 0.4, 0.1, 1.0).unwrap();
        assert!(critical_m(&spec, &UtilityModel::Linear, &WeightingModel::Identity).unwrap().abs() < 1e-12);

        let limit = classify(10.0, 0.5, 1.0, &crra2(), &WeightingModel::Identity).unwrap().first_coeff;
        let spec = SpreadSpec::new(10.0, 0.5, 1e-4, 1.0).unwrap();
        let m = critical_m(&spec, &crra2(), &WeightingModel::Identity).unwrap();
        assert!(m > 0.0 && (m - limit).abs() < 1e-6);

        let cfg = SolverConfig::with_tol(0.0);
        for eps1 in [1e-2, 1e-3, 1e-4] {
            let spec = SpreadSpec::new(0.0, 0.5, eps1, 1.0).unwrap();
            let m = critical_m_with(&spec, &UtilityModel::Linear, &WeightingModel::Quadratic, &cfg).unwrap();
            assert!((m / eps1 - 1.0).abs() < 0.02, "{}", m / eps1);
        }
    }

    #[test]
    fn critical_m_sign_matches_classification() {
        let cases = [
            (crra2(), WeightingModel::Identity),
            (UtilityModel::Linear, WeightingModel::Quadratic),
            (UtilityModel::Linear, WeightingModel::power(2.0).unwrap()),
            (UtilityModel::cara(-0.3).unwrap(), WeightingModel::Identity),
        ];
        for (u, h) in cases {
            let c = classify(10.0, 0.5, 1.0, &u, &h).unwrap();
            let spec = SpreadSpec::new(10.0, 0.5, 1e-3, 1.0).unwrap();
            let m = critical_m(&spec, &u, &h).unwrap();
            assert_eq!(m.signum() as i8, c.order.sign(), "{u} {h}");
        }
    }

    #[test]
    fn first_order_prefers_contraction_at_half_critical_m() {
        let u = crra2();
        let h = WeightingModel::Identity;
        for eps1 in [1e-1, 1e-2, 1e-3, 1e-4] {
            let spec = SpreadSpec::new(10.0, 0.5, eps1, 1.0).unwrap();
            let m = 0.5 * critical_m(&spec, &u, &h).unwrap();
            assert_eq!(compare_contraction(&spec, m, &u, &h).unwrap(), Ordering::Greater);
        }
    }

    #[test]
    fn second_order_prefers_unfair_risk_for_small_eps1() {
        let (u, h) = (UtilityModel::Linear, WeightingModel::Quadratic);
        for m in [0.2, 0.05, 0.01] {
            // once below the threshold, C(m eps1) stays preferred on a
            // descending grid
            let mut seen_threshold = false;
            for k in 0..30 {
                let eps1 = 0.25 * 0.5f64.powi(k);
                let spec = SpreadSpec::new(0.0, 0.5, eps1, 1.0).unwrap();
                let prefers_c = compare_contraction(&spec, m, &u, &h).unwrap() == Ordering::Less;
                if seen_threshold {
                    assert!(prefers_c, "m={m}, eps1={eps1}");
                }
                seen_threshold |= prefers_c;
            }
            assert!(seen_threshold);
        }
    }
}
