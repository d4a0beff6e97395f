//! Risk sharing seen in probability space.
//!
//! A decision maker facing a loss `loss` with probability `eps1` can bear it
//! alone (risk `A`, or the cheaper `A*` when the insurer charges an
//! unfairness rate `m`) or share it in a pool of `n` (risk `B(n)`). With
//! losses of `loss` and `loss / 2`, every risk is a point `(q, p)` of the
//! probability triangle; indifference curves through the no-sharing point
//! show whether small amounts of sharing are worth a fair price.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lottery::{make_a_star, make_b_n, Lottery};
use crate::preferences::{UtilityModel, WeightingModel};
use crate::rdu::evaluate;
use crate::solve::{solve, SolverConfig};

pub const DEFAULT_TRACE_POINTS: usize = 101;

/// Probabilities of losing `loss / 2` (`q`) and `loss` (`p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrianglePoint {
    pub q: f64,
    pub p: f64,
}

impl TrianglePoint {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        let tol = 1e-12;
        if !(q >= -tol) {
            return Err(Error::param("q", q, "must be non-negative"));
        }
        if !(p >= -tol) {
            return Err(Error::param("p", p, "must be non-negative"));
        }
        if p + q > 1.0 + tol {
            return Err(Error::param("p + q", p + q, "must not exceed 1"));
        }
        Ok(TrianglePoint {
            q: q.max(0.0),
            p: p.max(0.0),
        })
    }

    pub fn lottery(&self, loss: f64, w0: f64) -> Result<Lottery> {
        let rest = (1.0 - self.p - self.q).max(0.0);
        Lottery::new([(w0 - loss, self.p), (w0 - loss / 2.0, self.q), (w0, rest)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub q: f64,
    pub p: f64,
    /// Offset above the budget line, `p - (p0 - q / 2)`.
    pub delta: f64,
    /// Value at the point minus value at the base point.
    pub value_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTrace {
    pub base: TrianglePoint,
    pub points: Vec<TracePoint>,
    /// `dp/dq` at `q = 0`, from the two smallest positive grid points.
    pub slope_at_origin: Option<f64>,
    /// Grid points where no indifferent `p` was bracketed.
    pub skipped: Vec<f64>,
}

pub fn triangle_value(pt: &TrianglePoint, loss: f64, w0: f64, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    evaluate(&pt.lottery(loss, w0)?, u, h)
}

/// Ordering of `B(n)` against `A*`: `Greater` means the pool is preferred.
pub fn prefers_pool(
    n: u32,
    m: f64,
    eps1: f64,
    loss: f64,
    w0: f64,
    u: &UtilityModel,
    h: &WeightingModel,
) -> Result<Ordering> {
    let gap = evaluate(&make_b_n(n, eps1, loss, w0)?, u, h)? - evaluate(&make_a_star(eps1, m, loss, w0)?, u, h)?;
    Ok(gap.partial_cmp(&0.0).unwrap_or(Ordering::Equal))
}

/// `V(pool) - V(A*)` with `m` allowed up to 1 (no loss left to bear).
fn pool_gap(pool_value: f64, m: f64, eps1: f64, loss: f64, w0: f64, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let p = (1.0 - m) * eps1;
    let a_star = Lottery::new([(w0 - loss, p), (w0, 1.0 - p)])?;
    Ok(pool_value - evaluate(&a_star, u, h)?)
}

/// Unfairness rate at which the pool `B(n)` and `A*` are indifferent.
pub fn critical_m_pool(n: u32, eps1: f64, loss: f64, w0: f64, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    critical_m_for_pool(&make_b_n(n, eps1, loss, w0)?, eps1, loss, w0, u, h, &SolverConfig::default())
}

/// As [`critical_m_pool`] for an arbitrary pooled risk, e.g. the
/// independent two-person pool.
pub fn critical_m_for_pool(
    pool: &Lottery,
    eps1: f64,
    loss: f64,
    w0: f64,
    u: &UtilityModel,
    h: &WeightingModel,
    cfg: &SolverConfig,
) -> Result<f64> {
    make_a_star(eps1, 0.0, loss, w0)?;
    let v = evaluate(pool, u, h)?;
    // the gap decreases in m; negate so the solver sees an increasing function
    let root = solve(|m| Ok(-pool_gap(v, m, eps1, loss, w0, u, h)?), 0.0, 1.0, cfg)?;
    Ok(root.root)
}

/// 101 points on `[0, min(0.5, 1 - p0)]`.
pub fn default_q_grid(p0: f64) -> Vec<f64> {
    crate::comparative::linspace(0.0, f64::min(0.5, 1.0 - p0), DEFAULT_TRACE_POINTS)
}

/// Indifference curve through `(0, p0)` over `q_grid`.
pub fn trace_indifference(
    p0: f64,
    loss: f64,
    w0: f64,
    u: &UtilityModel,
    h: &WeightingModel,
    q_grid: &[f64],
) -> Result<CurveTrace> {
    trace_indifference_with(p0, loss, w0, u, h, q_grid, &SolverConfig::default())
}

pub fn trace_indifference_with(
    p0: f64,
    loss: f64,
    w0: f64,
    u: &UtilityModel,
    h: &WeightingModel,
    q_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<CurveTrace> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::param("p0", p0, "must lie in (0, 1)"));
    }
    if !(loss > 0.0) {
        return Err(Error::param("loss", loss, "must be positive"));
    }
    let base = TrianglePoint::new(0.0, p0)?;
    let v0 = triangle_value(&base, loss, w0, u, h)?;
    let mut points = Vec::with_capacity(q_grid.len());
    let mut skipped = Vec::new();
    for &q in q_grid {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::param("q", q, "grid must lie in [0, 1]"));
        }
        let on_line = p0 - q / 2.0;
        // p = on_line + delta must stay in [0, 1 - q]
        let (lo, hi) = (-on_line, 1.0 - q - on_line);
        let value_at = |delta: f64| {
            let pt = TrianglePoint::new(q, (on_line + delta).clamp(0.0, 1.0 - q))?;
            triangle_value(&pt, loss, w0, u, h)
        };
        let delta = if q == 0.0 {
            0.0
        } else {
            match solve(|d| Ok(v0 - value_at(d)?), lo, hi, cfg) {
                Ok(r) => r.root,
                Err(e) if e.is_solver_failure() => {
                    skipped.push(q);
                    continue;
                }
                Err(e) => return Err(e),
            }
        };
        points.push(TracePoint {
            q,
            p: (on_line + delta).clamp(0.0, 1.0 - q),
            delta,
            value_residual: value_at(delta)? - v0,
        });
    }
    let slope_at_origin = slope_from(&points);
    Ok(CurveTrace {
        base,
        points,
        slope_at_origin,
        skipped,
    })
}

/// One-sided three-point derivative through `(0, 0)` and the two smallest
/// positive grid points, minus the budget line's 1/2.
fn slope_from(points: &[TracePoint]) -> Option<f64> {
    let mut pos = points.iter().filter(|t| t.q > 0.0);
    let a = pos.next()?;
    let b = pos.next()?;
    let (q1, d1, q2, d2) = (a.q, a.delta, b.q, b.delta);
    let d_prime = (d1 * q2 * q2 - d2 * q1 * q1) / (q1 * q2 * (q2 - q1));
    Some(-0.5 + d_prime)
}

/// Best point on the budget line `p = p0 - q / 2` among `q_grid`.
pub fn best_on_budget_line(
    p0: f64,
    loss: f64,
    w0: f64,
    u: &UtilityModel,
    h: &WeightingModel,
    q_grid: &[f64],
) -> Result<(TrianglePoint, f64)> {
    let mut best: Option<(TrianglePoint, f64)> = None;
    for &q in q_grid {
        let Ok(pt) = TrianglePoint::new(q, p0 - q / 2.0) else {
            continue;
        };
        let v = triangle_value(&pt, loss, w0, u, h)?;
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((pt, v));
        }
    }
    best.ok_or(Error::param("q_grid", f64::NAN, "no grid point on the budget line"))
}

/// 800x800 SVG of the triangle, the budget line through `(0, p0)` and the
/// traced curves.
pub fn render_svg(p0: f64, traces: &[CurveTrace]) -> String {
    const PAD: f64 = 50.0;
    const SIDE: f64 = 700.0;
    let x = |q: f64| PAD + SIDE * q;
    let y = |p: f64| PAD + SIDE * (1.0 - p);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 800" width="800" height="800">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="800" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="none" stroke="black" stroke-width="2"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0),
        x(0.0),
        y(1.0)
    );
    let q_end = f64::min(2.0 * p0, 2.0 * (1.0 - p0));
    let _ = writeln!(
        s,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="gray" stroke-dasharray="8,6" stroke-width="2"/>"#,
        x(0.0),
        y(p0),
        x(q_end),
        y(p0 - q_end / 2.0)
    );
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, t) in traces.iter().enumerate() {
        let pts: Vec<String> = t.points.iter().map(|pt| format!("{:.3},{:.3}", x(pt.q), y(pt.p))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            colors[i % colors.len()]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="16">q</text>"#,
        x(1.0) - 10.0,
        y(0.0) + 30.0
    );
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="16">p</text>"#, x(0.0) - 30.0, y(1.0) + 10.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::{is_mps, make_a, make_independent_pool, SpreadSpec};
    use crate::premium::probability_premium_exact_with;

    fn log_u() -> UtilityModel {
        UtilityModel::crra(1.0).unwrap()
    }

    #[test]
    fn triangle_value_examples() {
        let u = log_u();
        let h = WeightingModel::prelec(0.65, 1.0).unwrap();
        let v = triangle_value(&TrianglePoint::new(0.0, 0.0).unwrap(), 2.0, 10.0, &u, &h).unwrap();
        assert_eq!(v, 10f64.ln());
        for (q, p) in [(0.1, 0.2), (0.4, 0.05), (0.0, 0.3)] {
            let pt = TrianglePoint::new(q, p).unwrap();
            let v = triangle_value(&pt, 2.0, 10.0, &UtilityModel::Linear, &WeightingModel::Identity).unwrap();
            assert!((v - (10.0 - 2.0 * (p + q / 2.0))).abs() < 1e-14);
        }
        // iso-expected value along the budget line
        for q in [0.0, 0.1, 0.3] {
            let pt = TrianglePoint::new(q, 0.3 - q / 2.0).unwrap();
            let l = pt.lottery(2.0, 10.0).unwrap();
            assert!((l.mean() - (10.0 - 0.6)).abs() < 1e-14);
        }
        assert!(TrianglePoint::new(0.6, 0.5).is_err());
    }

    #[test]
    fn fair_pool_preferred_by_risk_averse() {
        let cases = [
            (log_u(), WeightingModel::Identity),
            (UtilityModel::Linear, WeightingModel::Quadratic),
        ];
        for (u, h) in cases {
            for n in [2, 3, 5] {
                assert_eq!(prefers_pool(n, 0.0, 0.05, 2.0, 10.0, &u, &h).unwrap(), Ordering::Greater);
                assert!(is_mps(&make_a(0.05, 2.0, 10.0).unwrap(), &make_b_n(n, 0.05, 2.0, 10.0).unwrap()));
            }
        }
    }

    #[test]
    fn second_order_prefers_unfair_insurance_when_small() {
        let (u, h) = (UtilityModel::Linear, WeightingModel::Quadratic);
        assert_eq!(prefers_pool(2, 0.05, 0.2, 1.0, 0.0, &u, &h).unwrap(), Ordering::Greater);
        for eps1 in [1e-2, 1e-3, 1e-4] {
            assert_eq!(prefers_pool(2, 0.05, eps1, 1.0, 0.0, &u, &h).unwrap(), Ordering::Less);
        }
    }

    #[test]
    fn first_order_prefers_pool_below_critical_m() {
        let u = UtilityModel::crra(2.0).unwrap();
        let h = WeightingModel::Identity;
        for eps1 in [1e-2, 1e-3, 1e-4] {
            let m = critical_m_pool(2, eps1, 2.0, 10.0, &u, &h).unwrap();
            assert!(m > 0.0);
            assert_eq!(prefers_pool(2, 0.5 * m, eps1, 2.0, 10.0, &u, &h).unwrap(), Ordering::Greater);
            assert_eq!(prefers_pool(2, 0.5 * (1.0 + m), eps1, 2.0, 10.0, &u, &h).unwrap(), Ordering::Less);
        }
    }

    #[test]
    fn eu_critical_m_closed_form() {
        let u = log_u();
        let (w0, loss) = (10.0, 4.0);
        let (u0, uh, ul) = (10f64.ln(), 8f64.ln(), 6f64.ln());
        let oracle = 1.0 - 2.0 * (u0 - uh) / (u0 - ul);
        for eps1 in [0.1, 0.01, 0.001] {
            let m = critical_m_pool(2, eps1, loss, w0, &u, &WeightingModel::Identity).unwrap();
            assert!((m - oracle).abs() < 1e-11, "{m} vs {oracle}");
        }
    }

    #[test]
    fn critical_m_scaling() {
        let cfg = SolverConfig::with_tol(0.0);
        let m = critical_m_pool(2, 0.1, 1.0, 0.0, &UtilityModel::Linear, &WeightingModel::Identity).unwrap();
        assert!(m.abs() < 1e-12);
        let (u, h) = (UtilityModel::Linear, WeightingModel::Quadratic);
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| critical_m_for_pool(&make_b_n(2, e, 1.0, 0.0).unwrap(), e, 1.0, 0.0, &u, &h, &cfg).unwrap() / e)
            .collect();
        assert!((ratios[2] - 0.5).abs() < 1e-3, "{ratios:?}");
        assert!((ratios[1] - ratios[2]).abs() < (ratios[0] - ratios[1]).abs());
        let u = UtilityModel::crra(2.0).unwrap();
        let ms: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| critical_m_pool(2, e, 2.0, 10.0, &u, &WeightingModel::Identity).unwrap())
            .collect();
        assert!(ms.iter().all(|&m| m > 0.0));
    }

    fn pool_gap_trend(h: &WeightingModel) -> Vec<f64> {
        let u = UtilityModel::crra(2.0).unwrap();
        let cfg = SolverConfig::with_tol(0.0);
        [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&eps1| {
                let a = critical_m_for_pool(&make_b_n(2, eps1, 2.0, 10.0).unwrap(), eps1, 2.0, 10.0, &u, h, &cfg).unwrap();
                let pool = make_independent_pool(eps1, 2.0, 10.0).unwrap();
                let b = critical_m_for_pool(&pool, eps1, 2.0, 10.0, &u, h, &cfg).unwrap();
                (a - b).abs() / a.abs()
            })
            .collect()
    }

    #[test]
    fn independent_pool_agrees_to_leading_order() {
        let rel = pool_gap_trend(&WeightingModel::Quadratic);
        assert!(rel.windows(2).all(|w| w[1] < w[0]) && rel[2] < 0.05, "{rel:?}");
        // Prelec overweights the eps1^2 chance of a full loss, so agreement
        // still improves but much more slowly
        let rel = pool_gap_trend(&WeightingModel::prelec(0.65, 1.0).unwrap());
        assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
    }

    #[test]
    fn risk_neutral_trace_is_budget_line() {
        let t = trace_indifference(0.3, 2.0, 10.0, &UtilityModel::Linear, &WeightingModel::Identity, &default_q_grid(0.3))
            .unwrap();
        assert_eq!(t.points.len(), 101);
        for pt in &t.points {
            assert!((pt.p - (0.3 - pt.q / 2.0)).abs() < 1e-12);
        }
        assert!((t.slope_at_origin.unwrap() + 0.5).abs() < 1e-9);
    }

    #[test]
    fn second_order_curve_is_tangent_to_budget_line() {
        let t = trace_indifference(0.3, 1.0, 0.0, &UtilityModel::Linear, &WeightingModel::Quadratic, &default_q_grid(0.3))
            .unwrap();
        assert!((t.slope_at_origin.unwrap() + 0.5).abs() < 1e-4);
    }

    #[test]
    fn eu_trace_is_linear() {
        let u = log_u();
        let (w0, loss, p0) = (10.0, 4.0, 0.3);
        let rate = (8f64.ln() - 0.5 * 6f64.ln() - 0.5 * 10f64.ln()) / (10f64.ln() - 6f64.ln());
        let t = trace_indifference(p0, loss, w0, &u, &WeightingModel::Identity, &default_q_grid(p0)).unwrap();
        assert!(t.skipped.is_empty());
        for pt in &t.points {
            assert!((pt.delta - rate * pt.q).abs() < 1e-9);
        }
        assert!((t.slope_at_origin.unwrap() - (-0.5 + rate)).abs() < 1e-9);
    }

    #[test]
    fn traced_points_reproduce_base_value() {
        let u = UtilityModel::crra(2.0).unwrap();
        let h = WeightingModel::prelec(0.65, 1.0).unwrap();
        let t = trace_indifference(0.4, 3.0, 10.0, &u, &h, &default_q_grid(0.4)).unwrap();
        let scale = 0.1;
        for pt in &t.points {
            assert!(pt.value_residual.abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn concave_models_lie_above_budget_line() {
        let cases = [
            (log_u(), WeightingModel::Identity),
            (UtilityModel::Linear, WeightingModel::Quadratic),
            (UtilityModel::crra(2.0).unwrap(), WeightingModel::power(0.7).unwrap()),
        ];
        for (u, h) in cases {
            let t = trace_indifference(0.25, 2.0, 10.0, &u, &h, &default_q_grid(0.25)).unwrap();
            assert_eq!(t.points[0].delta, 0.0);
            assert!(t.points.iter().all(|pt| pt.delta >= -1e-13), "{u} {h}");
        }
    }

    #[test]
    fn self_similarity_with_binary_premium() {
        let u = log_u();
        let h = WeightingModel::prelec(0.65, 1.0).unwrap();
        let (p0, loss, w0, eps1) = (0.3, 4.0, 10.0, 0.05);
        let cfg = SolverConfig::with_tol(0.0);
        let t = trace_indifference_with(p0, loss, w0, &u, &h, &[2.0 * eps1], &cfg).unwrap();
        let mu_star = t.points[0].delta;
        let spec = SpreadSpec::new(w0 - loss / 2.0, p0 + mu_star, eps1, loss / 2.0).unwrap();
        let mu = probability_premium_exact_with(&spec, &u, &h, &cfg).unwrap().mu_exact;
        assert!((mu - mu_star).abs() < 1e-12, "{mu} vs {mu_star}");
    }

    #[test]
    fn best_point_on_budget_line() {
        let (pt, _) =
            best_on_budget_line(0.3, 2.0, 10.0, &log_u(), &WeightingModel::Identity, &default_q_grid(0.3)).unwrap();
        // for EU, spreading the loss is always better: the largest q wins
        assert!((pt.q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn svg_shape() {
        let t = trace_indifference(0.3, 2.0, 10.0, &log_u(), &WeightingModel::Identity, &default_q_grid(0.3)).unwrap();
        let svg = render_svg(0.3, &[t]);
        assert!(svg.contains(r#"viewBox="0 0 800 800""#));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("<polygon"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
