//! Comparative risk aversion for rank-dependent preferences.
//!
//! Decision maker 2 is more averse than decision maker 1 when both the
//! primal index `-U''/U'` and the dual index `-h''/h'` of 2 dominate those
//! of 1. The checks here test that on grids, compare exact premia on
//! sampled spreads, and search for premium-ordering counterexamples near a
//! point where index dominance fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lottery::SpreadSpec;
use crate::preferences::{invert_increasing, Domain, Increasing, UtilityModel, WeightingModel};
use crate::premium::probability_premium_exact_with;
use crate::solve::SolverConfig;

/// Slack allowed in both dominance checks.
pub const DOMINANCE_TOL: f64 = 1e-10;
pub const DEFAULT_GRID_POINTS: usize = 257;
pub const DEFAULT_SEARCH_SAMPLES: usize = 64;
/// Wealth grids on unbounded domains are clipped to `[-limit, limit]`.
pub const DEFAULT_WEALTH_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Utility,
    Weighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexViolation {
    pub kind: IndexKind,
    pub at: f64,
    pub index1: f64,
    pub index2: f64,
}

impl IndexViolation {
    fn margin(&self) -> f64 {
        self.index2 - self.index1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexDominance {
    pub holds: bool,
    /// Most negative `index2 - index1` over both grids, if any point fails.
    pub worst: Option<IndexViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PremiumWitness {
    pub w0: f64,
    pub p0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl PremiumWitness {
    fn margin(&self) -> f64 {
        self.mu2 - self.mu1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PremiumDominance {
    pub holds: bool,
    pub worst: Option<PremiumWitness>,
    pub checked: usize,
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn intersect(a: Domain, b: Domain) -> Domain {
    let (lo, lo_open) = if a.lo > b.lo || (a.lo == b.lo && a.lo_open) {
        (a.lo, a.lo_open)
    } else {
        (b.lo, b.lo_open)
    };
    let (hi, hi_open) = if a.hi < b.hi || (a.hi == b.hi && a.hi_open) {
        (a.hi, a.hi_open)
    } else {
        (b.hi, b.hi_open)
    };
    Domain {
        lo,
        hi,
        lo_open,
        hi_open,
    }
}

/// Common wealth window of two utilities, clipped to `[-limit, limit]`.
pub fn wealth_window(u1: &UtilityModel, u2: &UtilityModel, limit: f64) -> (f64, f64) {
    intersect(u1.domain(), u2.domain()).window(limit)
}

/// 257 points on the common wealth window.
pub fn default_x_grid(u1: &UtilityModel, u2: &UtilityModel) -> Vec<f64> {
    let (lo, hi) = wealth_window(u1, u2, DEFAULT_WEALTH_LIMIT);
    linspace(lo, hi, DEFAULT_GRID_POINTS)
}

/// 257 points on `[0.01, 0.99]`.
pub fn default_p_grid() -> Vec<f64> {
    linspace(0.01, 0.99, DEFAULT_GRID_POINTS)
}

fn worst_of<T: Copy>(a: Option<T>, b: T, margin: impl Fn(&T) -> f64) -> Option<T> {
    match a {
        Some(a) if margin(&a) <= margin(&b) => Some(a),
        _ => Some(b),
    }
}

pub fn check_index_dominance(
    u1: &UtilityModel,
    u2: &UtilityModel,
    h1: &WeightingModel,
    h2: &WeightingModel,
    x_grid: &[f64],
    p_grid: &[f64],
) -> Result<IndexDominance> {
    let mut worst: Option<IndexViolation> = None;
    for &x in x_grid {
        let v = IndexViolation {
            kind: IndexKind::Utility,
            at: x,
            index1: u1.ara(x)?,
            index2: u2.ara(x)?,
        };
        if v.margin() < -DOMINANCE_TOL {
            worst = worst_of(worst, v, IndexViolation::margin);
        }
    }
    for &p in p_grid {
        let v = IndexViolation {
            kind: IndexKind::Weighting,
            at: p,
            index1: h1.dara(p)?,
            index2: h2.dara(p)?,
        };
        if v.margin() < -DOMINANCE_TOL {
            worst = worst_of(worst, v, IndexViolation::margin);
        }
    }
    Ok(IndexDominance {
        holds: worst.is_none(),
        worst,
    })
}

fn witness(
    spec: &SpreadSpec,
    u1: &UtilityModel,
    u2: &UtilityModel,
    h1: &WeightingModel,
    h2: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<PremiumWitness> {
    Ok(PremiumWitness {
        w0: spec.w0,
        p0: spec.p0,
        eps1: spec.eps1,
        eps2: spec.eps2,
        mu1: probability_premium_exact_with(spec, u1, h1, cfg)?.mu_exact,
        mu2: probability_premium_exact_with(spec, u2, h2, cfg)?.mu_exact,
    })
}

pub fn check_premium_dominance(
    u1: &UtilityModel,
    u2: &UtilityModel,
    h1: &WeightingModel,
    h2: &WeightingModel,
    sample: &[SpreadSpec],
) -> Result<PremiumDominance> {
    check_premium_dominance_with(u1, u2, h1, h2, sample, &SolverConfig::default())
}

pub fn check_premium_dominance_with(
    u1: &UtilityModel,
    u2: &UtilityModel,
    h1: &WeightingModel,
    h2: &WeightingModel,
    sample: &[SpreadSpec],
    cfg: &SolverConfig,
) -> Result<PremiumDominance> {
    let mut worst = None;
    for spec in sample {
        let w = witness(spec, u1, u2, h1, h2, cfg)?;
        if w.margin() < -DOMINANCE_TOL {
            worst = worst_of(worst, w, PremiumWitness::margin);
        }
    }
    Ok(PremiumDominance {
        holds: worst.is_none(),
        worst,
        checked: sample.len(),
    })
}

/// Random spreads whose support stays inside the common wealth window.
pub fn sample_specs(u1: &UtilityModel, u2: &UtilityModel, n: usize, seed: u64) -> Vec<SpreadSpec> {
    let (lo, hi) = wealth_window(u1, u2, DEFAULT_WEALTH_LIMIT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w0 = rng.gen_range(lo..hi);
        let room = (w0 - lo).min(hi - w0).min(10.0);
        let eps2 = room * rng.gen_range(0.01..0.99);
        let p0 = rng.gen_range(0.01..0.99);
        let eps1 = f64::min(p0, 1.0 - p0) * rng.gen_range(0.01..1.0);
        if let Ok(spec) = SpreadSpec::new(w0, p0, eps1, eps2) {
            out.push(spec);
        }
    }
    out
}

/// Searches spreads concentrated around an index violation for one where
/// the premium ordering flips (`mu2 < mu1 - tol`). Returns the most
/// violating witness found among `samples` tries.
///
/// Near a utility violation at `x` the spread sits at `w0 ~ x` with a
/// probability shift small relative to the payoff spread, so the utility
/// term of the premium dominates; near a weighting violation at `p` the
/// roles are swapped.
pub fn find_counterexample(
    u1: &UtilityModel,
    u2: &UtilityModel,
    h1: &WeightingModel,
    h2: &WeightingModel,
    at: &IndexViolation,
    samples: usize,
    seed: u64,
) -> Result<Option<PremiumWitness>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = intersect(u1.domain(), u2.domain());
    let (lo, hi) = (dom.lo, dom.hi);
    let cfg = SolverConfig::with_tol(0.0);
    let mut worst = None;
    for _ in 0..samples {
        let spec = match at.kind {
            IndexKind::Utility => {
                let scale = at.at.abs().max(1.0);
                let w0 = at.at + scale * rng.gen_range(-0.01..0.01);
                let room = (w0 - lo).min(hi - w0);
                let eps2 = (scale * 10f64.powf(rng.gen_range(-3.0..-1.0))).min(0.5 * room);
                let p0 = rng.gen_range(0.2..0.8);
                let eps1 = eps2.min(f64::min(p0, 1.0 - p0)) * 10f64.powf(rng.gen_range(-4.0..-2.0));
                SpreadSpec::new(w0, p0, eps1, eps2)
            }
            IndexKind::Weighting => {
                let p0 = (at.at + rng.gen_range(-0.005..0.005)).clamp(1e-3, 1.0 - 1e-3);
                let eps1 = f64::min(p0, 1.0 - p0) * 10f64.powf(rng.gen_range(-3.0..-1.0));
                let (wlo, whi) = wealth_window(u1, u2, DEFAULT_WEALTH_LIMIT);
                let w0 = 0.5 * (wlo + whi);
                let room = (w0 - lo).min(hi - w0).min(1.0);
                let eps2 = room * eps1 * 10f64.powf(rng.gen_range(-3.0..-1.0));
                SpreadSpec::new(w0, p0, eps1, eps2)
            }
        };
        let Ok(spec) = spec else { continue };
        let w = witness(&spec, u1, u2, h1, h2, &cfg)?;
        if w.margin() < -DOMINANCE_TOL {
            worst = worst_of(worst, w, PremiumWitness::margin);
        }
    }
    Ok(worst)
}

/// Midpoint test of concavity of `f2 o f1^-1` over the image of `grid`
/// under `f1`. Pairs of grid points at power-of-two index distances are
/// checked.
pub fn concavification_check<F1: Increasing, F2: Increasing>(f1: &F1, f2: &F2, grid: &[f64]) -> Result<bool> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("grid", f64::NAN, "must increase strictly"));
    }
    let t: Vec<f64> = grid.iter().map(|&x| f1.eval(x)).collect::<Result<_>>()?;
    let v: Vec<f64> = grid.iter().map(|&x| f2.eval(x)).collect::<Result<_>>()?;
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut gap = 1;
    while gap < grid.len() {
        for i in 0..grid.len() - gap {
            let j = i + gap;
            let mid = 0.5 * (t[i] + t[j]);
            let Some(x) = invert_increasing(|x| f1.eval(x), mid, grid[i], grid[j]) else {
                return Err(Error::NoBracket {
                    lo: grid[i],
                    hi: grid[j],
                    scanned: Vec::new(),
                });
            };
            if f2.eval(x)? < 0.5 * (v[i] + v[j]) - 1e-12 * scale {
                return Ok(false);
            }
        }
        gap *= 2;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crra(g: f64) -> UtilityModel {
        UtilityModel::crra(g).unwrap()
    }

    fn id() -> WeightingModel {
        WeightingModel::Identity
    }

    fn positive_grid() -> Vec<f64> {
        linspace(0.1, 50.0, 257)
    }

    #[test]
    fn index_dominance_examples() {
        let p = default_p_grid();
        let r = check_index_dominance(&crra(1.0), &crra(2.0), &id(), &id(), &positive_grid(), &p).unwrap();
        assert!(r.holds);
        let r = check_index_dominance(&crra(2.0), &crra(1.0), &id(), &id(), &positive_grid(), &p).unwrap();
        assert!(!r.holds);
        let w = r.worst.unwrap();
        assert_eq!(w.kind, IndexKind::Utility);
        assert_eq!(w.at, 0.1);
        let lin = UtilityModel::Linear;
        let r = check_index_dominance(&lin, &lin, &WeightingModel::Quadratic, &id(), &positive_grid(), &p).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst.unwrap().kind, IndexKind::Weighting);
    }

    #[test]
    fn kinks_on_grid_are_errors() {
        let h = WeightingModel::avar(0.5).unwrap();
        let r = check_index_dominance(&crra(1.0), &crra(1.0), &h, &h, &[1.0], &[0.5]);
        assert!(matches!(r, Err(Error::Kink { .. })));
    }

    #[test]
    fn default_grids() {
        let x = default_x_grid(&crra(1.0), &UtilityModel::cara(0.2).unwrap());
        assert_eq!(x.len(), 257);
        assert!(x[0] > 0.0 && x[256] <= 100.0);
        let p = default_p_grid();
        assert_eq!((p[0], p[256]), (0.01, 0.99));
    }

    #[test]
    fn premium_dominance_for_crra_pair() {
        let (u1, u2) = (crra(1.0), crra(2.0));
        let specs = sample_specs(&u1, &u2, 200, 1);
        let r = check_premium_dominance(&u1, &u2, &id(), &id(), &specs).unwrap();
        assert!(r.holds, "{:?}", r.worst);
        assert_eq!(r.checked, 200);
        let r = check_premium_dominance(&u2, &u1, &id(), &id(), &specs).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn premium_dominance_for_composed_pair() {
        let u1 = crra(1.0);
        let u2 = UtilityModel::composed(UtilityModel::cara(1.0).unwrap(), crra(1.0)).unwrap();
        let h1 = WeightingModel::prelec(0.9, 1.0).unwrap();
        let h2 = WeightingModel::composed(WeightingModel::Quadratic, h1.clone()).unwrap();
        let specs = sample_specs(&u1, &u2, 100, 2);
        assert!(check_premium_dominance(&u1, &u2, &h1, &h2, &specs).unwrap().holds);
        assert!(!check_premium_dominance(&u2, &u1, &h2, &h1, &specs).unwrap().holds);
    }

    #[test]
    fn concavification_examples() {
        let g = positive_grid();
        let ident = |x: f64| x;
        assert!(concavification_check(&ident, &|x: f64| x.ln(), &g).unwrap());
        assert!(!concavification_check(&ident, &|x: f64| x * x, &g).unwrap());
        assert!(concavification_check(&crra(1.0), &crra(2.0), &g).unwrap());
        assert!(!concavification_check(&crra(2.0), &crra(1.0), &g).unwrap());
    }

    #[test]
    fn concavification_agrees_with_index_dominance() {
        let g = positive_grid();
        let p = default_p_grid();
        let us = [crra(0.5), crra(1.0), crra(2.0), UtilityModel::cara(0.2).unwrap(), UtilityModel::Linear];
        for u1 in &us {
            for u2 in &us {
                let idx = check_index_dominance(u1, u2, &id(), &id(), &g, &p).unwrap().holds;
                assert_eq!(idx, concavification_check(u1, u2, &g).unwrap(), "{u1} vs {u2}");
            }
        }
        let hs = [
            id(),
            WeightingModel::Quadratic,
            WeightingModel::power(0.5).unwrap(),
            WeightingModel::power(2.0).unwrap(),
        ];
        for h1 in &hs {
            for h2 in &hs {
                let lin = UtilityModel::Linear;
                let idx = check_index_dominance(&lin, &lin, h1, h2, &[0.0], &p).unwrap().holds;
                assert_eq!(idx, concavification_check(h1, h2, &p).unwrap(), "{h1} vs {h2}");
            }
        }
    }

    #[test]
    fn counterexample_near_utility_violation() {
        let u1 = UtilityModel::cara(0.2).unwrap();
        let u2 = crra(2.0);
        let h = WeightingModel::prelec(0.9, 1.0).unwrap();
        let idx = check_index_dominance(&u1, &u2, &h, &h, &default_x_grid(&u1, &u2), &default_p_grid()).unwrap();
        let v = idx.worst.unwrap();
        assert!(v.at > 10.0);
        let w = find_counterexample(&u1, &u2, &h, &h, &v, DEFAULT_SEARCH_SAMPLES, 42).unwrap().unwrap();
        assert!(w.mu2 < w.mu1 - DOMINANCE_TOL);
    }

    #[test]
    fn counterexample_near_weighting_violation() {
        let u = crra(1.0);
        let h1 = WeightingModel::Quadratic;
        let h2 = WeightingModel::Identity;
        let v = check_index_dominance(&u, &u, &h1, &h2, &[1.0], &default_p_grid()).unwrap().worst.unwrap();
        assert_eq!(v.kind, IndexKind::Weighting);
        let w = find_counterexample(&u, &u, &h1, &h2, &v, DEFAULT_SEARCH_SAMPLES, 42).unwrap().unwrap();
        assert!(w.mu2 < w.mu1 - DOMINANCE_TOL);
    }

    #[test]
    fn search_is_deterministic() {
        let u1 = UtilityModel::cara(0.2).unwrap();
        let u2 = crra(2.0);
        let v = IndexViolation {
            kind: IndexKind::Utility,
            at: 50.0,
            index1: 0.2,
            index2: 0.04,
        };
        let a = find_counterexample(&u1, &u2, &id(), &id(), &v, 16, 3).unwrap();
        let b = find_counterexample(&u1, &u2, &id(), &id(), &v, 16, 3).unwrap();
        assert_eq!(a, b);
    }
}
