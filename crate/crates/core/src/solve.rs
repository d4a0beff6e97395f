//! Scan-then-bisect scalar root finder shared by every premium solver.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute tolerance on the root.
pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bisection stops once the bracket is narrower than this. Zero means
    /// "bisect until the midpoint no longer moves".
    pub tol: f64,
    pub max_iter: usize,
    pub scan_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            scan_points: DEFAULT_SCAN_POINTS,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub root: f64,
    /// Function value at the root.
    pub residual: f64,
    pub iterations: usize,
    /// Scan sub-interval the bisection started from.
    pub bracket: (f64, f64),
    /// Number of sign changes seen during the scan; more than one means the
    /// root is not unique and the one closest to zero was chosen.
    pub sign_changes: usize,
}

/// Finds a root of `f` on `[lo, hi]`.
///
/// `f` is sampled at `scan_points` equally spaced points; among the
/// sub-intervals showing a sign change the one closest to zero is bisected.
pub fn solve(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<Root> {
    debug_assert!(lo <= hi);
    let n = cfg.scan_points.max(2);
    let mut scanned = Vec::with_capacity(n);
    for k in 0..n {
        let x = if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        };
        scanned.push((x, f(x)?));
    }

    // Candidate brackets: exact zeros as degenerate intervals, sign flips
    // between neighbours otherwise.
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for (k, &(x, fx)) in scanned.iter().enumerate() {
        if fx == 0.0 {
            candidates.push((x, x));
        } else if let Some(&(xn, fxn)) = scanned.get(k + 1) {
            if fxn != 0.0 && (fx < 0.0) != (fxn < 0.0) {
                candidates.push((x, xn));
            }
        }
    }
    let dist = |b: &(f64, f64)| {
        if b.0 <= 0.0 && 0.0 <= b.1 {
            0.0
        } else {
            b.0.abs().min(b.1.abs())
        }
    };
    let Some(&bracket) = candidates
        .iter()
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
    else {
        return Err(Error::NoBracket { lo, hi, scanned });
    };
    let sign_changes = candidates.len();

    let (mut a, mut b) = bracket;
    if a == b {
        return Ok(Root {
            root: a,
            residual: 0.0,
            iterations: 0,
            bracket,
            sign_changes,
        });
    }
    let fa_neg = f(a)? < 0.0;
    let mut iterations = 0;
    while iterations < cfg.max_iter && b - a > cfg.tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        iterations += 1;
        let fm = f(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if (fm < 0.0) == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    let root = 0.5 * (a + b);
    Ok(Root {
        root,
        residual: f(root)?,
        iterations,
        bracket,
        sign_changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_root() {
        let r = solve(|x| Ok(x * x - 2.0), 0.0, 2.0, &SolverConfig::default()).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-13);
        assert_eq!(r.sign_changes, 1);
        assert!(r.iterations <= 200);
    }

    #[test]
    fn picks_root_closest_to_zero() {
        // roots at -0.7, 0.2, 0.9
        let f = |x: f64| Ok((x + 0.7) * (x - 0.2) * (x - 0.9));
        let r = solve(f, -1.0, 1.0, &SolverConfig::default()).unwrap();
        assert!((r.root - 0.2).abs() < 1e-13);
        assert_eq!(r.sign_changes, 3);
    }

    #[test]
    fn reports_missing_bracket() {
        match solve(|x| Ok(x * x + 1.0), -1.0, 1.0, &SolverConfig::default()) {
            Err(Error::NoBracket { scanned, .. }) => assert_eq!(scanned.len(), 64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_tolerance_reaches_machine_precision() {
        let r = solve(|x| Ok(x - 0.1), -1.0, 1.0, &SolverConfig::with_tol(0.0)).unwrap();
        assert!((r.root - 0.1).abs() <= f64::EPSILON);
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| Ok(x.exp() - 1.5);
        let a = solve(f, -1.0, 1.0, &SolverConfig::default()).unwrap();
        let b = solve(f, -1.0, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(a.root.to_bits(), b.root.to_bits());
    }
}
