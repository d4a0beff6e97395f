//! Probability and risk premia: exact solvers and small-risk approximations.
//!
//! The probability premium `mu` is the probability mass that has to be moved
//! from the bad to the good branch of the binary risk `C` before the
//! decision maker is indifferent between it and its contraction `D`. The
//! risk premium `lambda` is the payoff-plane counterpart: the sure reduction
//! of `D`'s middle outcome that restores indifference with `C`.
//!
//! Exact solvers bisect a monotone indifference residual; approximations
//! combine the primal and dual local risk-aversion indexes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lottery::{NStateSpread, SpreadMoments, SpreadSpec};
use crate::preferences::{UtilityModel, WeightingModel};
use crate::rdu::evaluate;
use crate::solve::{solve, Root, SolverConfig};

/// Result of a probability-premium solve.
///
/// The approximation fields are `None` when `h` or `U` is not twice
/// differentiable at the expansion point (kinks, endpoint guards).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PremiumReport {
    pub mu_exact: f64,
    pub mu_approx_eu_term: Option<f64>,
    pub mu_approx_dt_term: Option<f64>,
    pub mu_approx_total: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPremiumReport {
    pub lambda_exact: f64,
    pub lambda_approx_total: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub sign_changes: usize,
}

/// Local approximation split into its utility and weighting parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approximation {
    pub eu_term: f64,
    pub dt_term: f64,
    pub total: f64,
}

/// Common view of the binary and n-state spread families for the moment
/// form of the approximation.
pub trait Spread {
    fn moments(&self) -> SpreadMoments;
    fn w0(&self) -> f64;
    fn p0(&self) -> f64;
}

impl Spread for SpreadSpec {
    fn moments(&self) -> SpreadMoments {
        SpreadSpec::moments(self)
    }
    fn w0(&self) -> f64 {
        self.w0
    }
    fn p0(&self) -> f64 {
        self.p0
    }
}

impl Spread for NStateSpread {
    fn moments(&self) -> SpreadMoments {
        NStateSpread::moments(self)
    }
    fn w0(&self) -> f64 {
        self.w0
    }
    fn p0(&self) -> f64 {
        self.p0
    }
}

fn report(root: Root, approx: Option<Approximation>) -> PremiumReport {
    PremiumReport {
        mu_exact: root.root,
        mu_approx_eu_term: approx.map(|a| a.eu_term),
        mu_approx_dt_term: approx.map(|a| a.dt_term),
        mu_approx_total: approx.map(|a| a.total),
        residual: root.residual,
        iterations: root.iterations,
        bracket: root.bracket,
        sign_changes: root.sign_changes,
    }
}

/// `RDU(C(mu)) - RDU(D)`, increasing in `mu`. Written relative to `U(w0)`
/// so that the common part cancels exactly.
pub fn premium_residual(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel, mu: f64) -> Result<f64> {
    let u0 = u.value(spec.w0)?;
    let down = u.value(spec.low())? - u0;
    let up = u.value(spec.high())? - u0;
    let h_lo = h.value(spec.p0 - spec.eps1)?;
    let h_hi = h.value(spec.p0 + spec.eps1)?;
    let h_mu = h.value(spec.p0 - mu)?;
    Ok((h_mu - h_lo) * down + (h_hi - h_mu) * up)
}

pub fn probability_premium_exact(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<PremiumReport> {
    probability_premium_exact_with(spec, u, h, &SolverConfig::default())
}

/// Solves for `mu` on `[-(1 - p0), p0]`.
pub fn probability_premium_exact_with(
    spec: &SpreadSpec,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<PremiumReport> {
    spec.validate()?;
    let root = solve(|mu| premium_residual(spec, u, h, mu), -(1.0 - spec.p0), spec.p0, cfg)?;
    Ok(report(root, probability_premium_approx(spec, u, h).ok()))
}

/// Dual-theory special case: linear utility, unit payoff spread.
pub fn probability_premium_dt_exact(p0: f64, eps1: f64, h: &WeightingModel) -> Result<PremiumReport> {
    probability_premium_dt_exact_with(p0, eps1, h, &SolverConfig::default())
}

pub fn probability_premium_dt_exact_with(
    p0: f64,
    eps1: f64,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<PremiumReport> {
    let spec = SpreadSpec::new(0.0, p0, eps1, 1.0)?;
    probability_premium_exact_with(&spec, &UtilityModel::Linear, h, cfg)
}

/// `eu_term = eps1 eps2 ara / 2`, `dt_term = eps1^2 dara / 2`.
pub fn probability_premium_approx(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<Approximation> {
    let ara = u.ara(spec.w0)?;
    let dara = h.dara(spec.p0)?;
    let eu_term = 0.5 * spec.eps1 * spec.eps2 * ara;
    let dt_term = 0.5 * spec.eps1 * spec.eps1 * dara;
    Ok(Approximation {
        eu_term,
        dt_term,
        total: eu_term + dt_term,
    })
}

/// The approximation written with variance, maxiance and the weighted
/// payoff norm: `(m2 ara + mbar2 dara) / (2 Py*)`.
pub fn probability_premium_moment_form<S: Spread>(s: &S, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let m = s.moments();
    let ara = u.ara(s.w0())?;
    let dara = h.dara(s.p0())?;
    Ok(m.m2 / (2.0 * m.py_star) * ara + m.mbar2 / (2.0 * m.py_star) * dara)
}

/// Residual of the n-state indifference equation at `mu`.
///
/// Each unfavorable state gives up `mu` of its mass, and the favorable
/// states share the total `n1 mu` equally.
pub fn nstate_residual(ns: &NStateSpread, u: &UtilityModel, h: &WeightingModel, mu: f64) -> Result<f64> {
    let n = ns.n() as f64;
    let n1 = ns.n1() as f64;
    let n2 = ns.n2() as f64;
    let base = ns.p0 - ns.eps1;
    let step = 2.0 * ns.eps1 / n;
    let u0 = u.value(ns.w0)?;
    let mut prev = h.value(base)?;
    let mut total = 0.0;
    for (k, &x) in ns.payoffs().iter().enumerate() {
        let i = (k + 1) as f64;
        let bound = if k < ns.n1() {
            base + step * i - mu * i
        } else {
            base - mu * n1 + step * i + mu * (n1 / n2) * (i - n1)
        };
        let hb = h.value(bound)?;
        total += (hb - prev) * (u.value(ns.w0 + x)? - u0);
        prev = hb;
    }
    Ok(total)
}

/// Feasible `mu`: every state probability stays non-negative.
pub fn nstate_bracket(ns: &NStateSpread) -> (f64, f64) {
    let step = 2.0 * ns.eps1 / ns.n() as f64;
    (-step * ns.n2() as f64 / ns.n1() as f64, step)
}

pub fn nstate_premium_exact(ns: &NStateSpread, u: &UtilityModel, h: &WeightingModel) -> Result<PremiumReport> {
    nstate_premium_exact_with(ns, u, h, &SolverConfig::default())
}

/// The approximation fields hold the moment form: its utility part, its
/// weighting part and their sum.
pub fn nstate_premium_exact_with(
    ns: &NStateSpread,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<PremiumReport> {
    let (lo, hi) = nstate_bracket(ns);
    let root = solve(|mu| nstate_residual(ns, u, h, mu), lo, hi, cfg)?;
    let approx = (|| {
        let m = ns.moments();
        let eu_term = m.m2 / (2.0 * m.py_star) * u.ara(ns.w0)?;
        let dt_term = m.mbar2 / (2.0 * m.py_star) * h.dara(ns.p0)?;
        Ok::<_, Error>(Approximation {
            eu_term,
            dt_term,
            total: eu_term + dt_term,
        })
    })();
    Ok(report(root, approx.ok()))
}

/// `RDU(C) - RDU(D(lambda))`, increasing in `lambda`.
pub fn risk_premium_residual(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel, lambda: f64) -> Result<f64> {
    Ok(evaluate(&spec.make_c(), u, h)? - evaluate(&spec.make_d_lambda(lambda), u, h)?)
}

pub fn risk_premium_exact(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<RiskPremiumReport> {
    risk_premium_exact_with(spec, u, h, &SolverConfig::default())
}

/// Solves for `lambda` on `[-eps2, eps2]`, which admits risk seekers.
pub fn risk_premium_exact_with(
    spec: &SpreadSpec,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<RiskPremiumReport> {
    spec.validate()?;
    let root = solve(|l| risk_premium_residual(spec, u, h, l), -spec.eps2, spec.eps2, cfg)?;
    Ok(RiskPremiumReport {
        lambda_exact: root.root,
        lambda_approx_total: risk_premium_approx(spec, u, h).ok(),
        residual: root.residual,
        iterations: root.iterations,
        bracket: root.bracket,
        sign_changes: root.sign_changes,
    })
}

/// `eps2^2 ara / 2 + eps1 eps2 dara / 2`.
pub fn risk_premium_approx(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let ara = u.ara(spec.w0)?;
    let dara = h.dara(spec.p0)?;
    Ok(0.5 * spec.eps2 * spec.eps2 * ara + 0.5 * spec.eps1 * spec.eps2 * dara)
}

/// `(m2 ara + mbar2 dara) / (2 Pr)`.
pub fn risk_premium_moment_form(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let m = spec.moments();
    let ara = u.ara(spec.w0)?;
    let dara = h.dara(spec.p0)?;
    Ok(m.m2 / (2.0 * m.pr) * ara + m.mbar2 / (2.0 * m.pr) * dara)
}

/// `mu Py - lambda Pr` for the exact premia. Vanishes only in the
/// small-risk limit; for the approximations it is identically zero.
pub fn premium_link_residual(spec: &SpreadSpec, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    premium_link_residual_with(spec, u, h, &SolverConfig::default())
}

pub fn premium_link_residual_with(
    spec: &SpreadSpec,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<f64> {
    let m = spec.moments();
    let mu = probability_premium_exact_with(spec, u, h, cfg)?.mu_exact;
    let lambda = risk_premium_exact_with(spec, u, h, cfg)?.lambda_exact;
    Ok(mu * m.py - lambda * m.pr)
}
