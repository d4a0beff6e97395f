//! Parametric utility and probability-weighting families.
//!
//! Every family exposes its value and first and second derivatives
//! analytically. Weighting functions with kinks (AV@R, piecewise linear)
//! reject derivative queries at the kink; use [`WeightingModel::one_sided`]
//! there instead.
//!
//! Both model types parse from short textual specifiers such as
//! `crra:gamma=2` or `prelec:alpha=0.65,beta=1`; `outer@inner` composes two
//! models.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Distance from a knot inside which a point counts as the knot itself.
pub const KINK_TOL: f64 = 1e-12;
/// Smooth weighting families whose derivatives blow up at the endpoints
/// refuse derivative queries this close to 0 or 1.
pub const ENDPOINT_GUARD: f64 = 1e-9;

/// An interval of the real line, possibly unbounded or open at either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_open: true,
        hi_open: true,
    };

    pub fn closed(lo: f64, hi: f64) -> Self {
        Domain {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below && x.is_finite()
    }

    /// A finite window of the domain, clipped to `[-limit, limit]` and moved
    /// slightly inside open ends. Used for grid checks.
    pub fn window(&self, limit: f64) -> (f64, f64) {
        let mut lo = self.lo.max(-limit);
        let mut hi = self.hi.min(limit);
        let pad = if (hi - lo).is_finite() { 1e-3 * (hi - lo) } else { 1e-3 };
        if self.lo_open && lo == self.lo {
            lo += pad;
        }
        if self.hi_open && hi == self.hi {
            hi -= pad;
        }
        (lo, hi)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { '(' } else { '[' };
        let r = if self.hi_open { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// A monotone piecewise-linear interpolant through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// Requires at least two knots with strictly increasing abscissae and
    /// non-decreasing ordinates.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::param("knots", knots.len() as f64, "need at least two knots"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::param("knots", w[1].0, "abscissae must increase strictly"));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::param("knots", w[1].1, "values must not decrease"));
            }
        }
        if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(Error::param("knots", f64::NAN, "must be finite"));
        }
        Ok(PiecewiseLinear { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn slope(&self, seg: usize) -> f64 {
        let (a, b) = (self.knots[seg], self.knots[seg + 1]);
        (b.1 - a.1) / (b.0 - a.0)
    }

    fn n_segments(&self) -> usize {
        self.knots.len() - 1
    }

    /// Segment containing `x` (the left one at a knot).
    fn segment(&self, x: f64) -> usize {
        let i = self.knots.partition_point(|k| k.0 < x);
        i.saturating_sub(1).min(self.n_segments() - 1)
    }

    fn interior_knot_at(&self, x: f64) -> Option<usize> {
        (1..self.knots.len() - 1).find(|&j| (self.knots[j].0 - x).abs() <= KINK_TOL)
    }

    fn value(&self, x: f64) -> f64 {
        let s = self.segment(x);
        let a = self.knots[s];
        a.1 + self.slope(s) * (x - a.0)
    }

    fn d1(&self, x: f64) -> Result<f64> {
        if self.interior_knot_at(x).is_some() {
            return Err(Error::Kink { at: x });
        }
        Ok(self.slope(self.segment(x)))
    }

    fn one_sided(&self, x: f64) -> (f64, f64) {
        match self.interior_knot_at(x) {
            Some(j) => (self.slope(j - 1), self.slope(j)),
            None => {
                let s = self.slope(self.segment(x));
                (s, s)
            }
        }
    }

    fn interior_knots(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1]
            .iter()
            .map(|k| k.0)
            .collect()
    }
}

/// A utility function over wealth.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityModel {
    Linear,
    /// `x - b x^2 / 2` on `x < 1/b`.
    Quadratic { b: f64 },
    /// `(1 - exp(-a x)) / a`.
    Cara { a: f64 },
    /// `x^(1-gamma) / (1-gamma)`, or `ln x` for `gamma = 1`, on `x > 0`.
    Crra { gamma: f64 },
    PiecewiseLinear(PiecewiseLinear),
    /// `scale * base(x) + shift`, `scale > 0`.
    Affine {
        scale: f64,
        shift: f64,
        base: Box<UtilityModel>,
    },
    /// `outer(inner(x))`.
    Composed {
        outer: Box<UtilityModel>,
        inner: Box<UtilityModel>,
    },
}

impl UtilityModel {
    pub fn quadratic(b: f64) -> Result<Self> {
        UtilityModel::Quadratic { b }.validated()
    }

    pub fn cara(a: f64) -> Result<Self> {
        UtilityModel::Cara { a }.validated()
    }

    pub fn crra(gamma: f64) -> Result<Self> {
        UtilityModel::Crra { gamma }.validated()
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        UtilityModel::PiecewiseLinear(PiecewiseLinear::new(knots)?).validated()
    }

    pub fn affine(scale: f64, shift: f64, base: UtilityModel) -> Result<Self> {
        UtilityModel::Affine {
            scale,
            shift,
            base: Box::new(base),
        }
        .validated()
    }

    pub fn composed(outer: UtilityModel, inner: UtilityModel) -> Result<Self> {
        UtilityModel::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameter ranges and that `U' > 0` on a 1000-point grid of
    /// the (windowed) domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            UtilityModel::Linear => {}
            UtilityModel::Quadratic { b } => {
                if !(*b > 0.0 && b.is_finite()) {
                    return Err(Error::param("b", *b, "must be positive"));
                }
            }
            UtilityModel::Cara { a } => {
                if !(a.is_finite() && *a != 0.0) {
                    return Err(Error::param("a", *a, "must be finite and non-zero"));
                }
            }
            UtilityModel::Crra { gamma } => {
                if !gamma.is_finite() {
                    return Err(Error::param("gamma", *gamma, "must be finite"));
                }
            }
            UtilityModel::PiecewiseLinear(pl) => {
                for s in 0..pl.n_segments() {
                    if !(pl.slope(s) > 0.0) {
                        return Err(Error::param(
                            "knots",
                            pl.knots[s + 1].1,
                            "utility must increase strictly",
                        ));
                    }
                }
            }
            UtilityModel::Affine { scale, shift, base } => {
                if !(*scale > 0.0 && scale.is_finite() && shift.is_finite()) {
                    return Err(Error::param("scale", *scale, "must be positive"));
                }
                base.validate()?;
            }
            UtilityModel::Composed { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
                let (lo, hi) = self.domain().window(100.0);
                for k in 0..1000 {
                    let x = lo + (hi - lo) * k as f64 / 999.0;
                    let d = match self.d1(x) {
                        Ok(d) => d,
                        Err(Error::Kink { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    if !(d > 0.0) {
                        return Err(Error::param("composition", x, "utility must increase strictly"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        match self {
            UtilityModel::Linear | UtilityModel::Cara { .. } => Domain::REAL_LINE,
            UtilityModel::Quadratic { b } => Domain {
                hi: 1.0 / b,
                ..Domain::REAL_LINE
            },
            UtilityModel::Crra { .. } => Domain {
                lo: 0.0,
                ..Domain::REAL_LINE
            },
            UtilityModel::PiecewiseLinear(pl) => {
                Domain::closed(pl.knots[0].0, pl.knots[pl.knots.len() - 1].0)
            }
            UtilityModel::Affine { base, .. } => base.domain(),
            UtilityModel::Composed { inner, .. } => inner.domain(),
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        let d = self.domain();
        if d.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "utility argument",
                value: x,
                domain: d.to_string(),
            })
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            UtilityModel::Linear => x,
            UtilityModel::Quadratic { b } => x - b * x * x / 2.0,
            UtilityModel::Cara { a } => -(-a * x).exp_m1() / a,
            UtilityModel::Crra { gamma } => {
                if *gamma == 1.0 {
                    x.ln()
                } else {
                    x.powf(1.0 - gamma) / (1.0 - gamma)
                }
            }
            UtilityModel::PiecewiseLinear(pl) => pl.value(x),
            UtilityModel::Affine { scale, shift, base } => scale * base.value(x)? + shift,
            UtilityModel::Composed { outer, inner } => outer.value(inner.value(x)?)?,
        })
    }

    pub fn d1(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            UtilityModel::Linear => 1.0,
            UtilityModel::Quadratic { b } => 1.0 - b * x,
            UtilityModel::Cara { a } => (-a * x).exp(),
            UtilityModel::Crra { gamma } => x.powf(-gamma),
            UtilityModel::PiecewiseLinear(pl) => pl.d1(x)?,
            UtilityModel::Affine { scale, base, .. } => scale * base.d1(x)?,
            UtilityModel::Composed { outer, inner } => outer.d1(inner.value(x)?)? * inner.d1(x)?,
        })
    }

    pub fn d2(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            UtilityModel::Linear => 0.0,
            UtilityModel::Quadratic { b } => -b,
            UtilityModel::Cara { a } => -a * (-a * x).exp(),
            UtilityModel::Crra { gamma } => -gamma * x.powf(-gamma - 1.0),
            UtilityModel::PiecewiseLinear(pl) => {
                pl.d1(x)?;
                0.0
            }
            UtilityModel::Affine { scale, base, .. } => scale * base.d2(x)?,
            UtilityModel::Composed { outer, inner } => {
                let t = inner.value(x)?;
                let i1 = inner.d1(x)?;
                outer.d2(t)? * i1 * i1 + outer.d1(t)? * inner.d2(x)?
            }
        })
    }

    /// Local index of absolute risk aversion, `-U''(x) / U'(x)`.
    pub fn ara(&self, x: f64) -> Result<f64> {
        Ok(-self.d2(x)? / self.d1(x)?)
    }
}

/// A probability weighting (distortion) function applied to cumulative
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightingModel {
    Identity,
    /// `p^theta`.
    Power { theta: f64 },
    /// `2p - p^2`.
    Quadratic,
    /// `exp(-beta (-ln p)^alpha)`.
    Prelec { alpha: f64, beta: f64 },
    /// `p^g / (p^g + (1-p)^g)^(1/g)`.
    TverskyKahneman { gamma: f64 },
    /// `p / (1 - p0)` up to `1 - p0`, then 1. Kinked at `1 - p0`.
    AvarKink { p0: f64 },
    PiecewiseLinear(PiecewiseLinear),
    /// `outer(inner(p))`.
    Composed {
        outer: Box<WeightingModel>,
        inner: Box<WeightingModel>,
    },
}

impl WeightingModel {
    pub fn power(theta: f64) -> Result<Self> {
        WeightingModel::Power { theta }.validated()
    }

    pub fn prelec(alpha: f64, beta: f64) -> Result<Self> {
        WeightingModel::Prelec { alpha, beta }.validated()
    }

    pub fn tversky_kahneman(gamma: f64) -> Result<Self> {
        WeightingModel::TverskyKahneman { gamma }.validated()
    }

    pub fn avar(p0: f64) -> Result<Self> {
        WeightingModel::AvarKink { p0 }.validated()
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        WeightingModel::PiecewiseLinear(PiecewiseLinear::new(knots)?).validated()
    }

    pub fn composed(outer: WeightingModel, inner: WeightingModel) -> Result<Self> {
        WeightingModel::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameters, `h(0) = 0`, `h(1) = 1` and monotonicity on a
    /// 1001-point grid.
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightingModel::Power { theta } if !(*theta > 0.0 && theta.is_finite()) => {
                return Err(Error::param("theta", *theta, "must be positive"));
            }
            WeightingModel::Prelec { alpha, .. } if !(*alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::param("alpha", *alpha, "must be positive"));
            }
            WeightingModel::Prelec { beta, .. } if !(*beta > 0.0 && beta.is_finite()) => {
                return Err(Error::param("beta", *beta, "must be positive"));
            }
            WeightingModel::TverskyKahneman { gamma } if !(*gamma > 0.0 && *gamma <= 1.0) => {
                return Err(Error::param("gamma", *gamma, "must lie in (0, 1]"));
            }
            WeightingModel::AvarKink { p0 } if !(*p0 > 0.0 && *p0 < 1.0) => {
                return Err(Error::param("p0", *p0, "must lie in (0, 1)"));
            }
            WeightingModel::PiecewiseLinear(pl) => {
                let k = pl.knots();
                let (first, last) = (k[0], k[k.len() - 1]);
                if first != (0.0, 0.0) || last != (1.0, 1.0) {
                    return Err(Error::param("knots", first.0, "must run from (0,0) to (1,1)"));
                }
            }
            WeightingModel::Composed { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
            }
            _ => {}
        }
        let h0 = self.value(0.0)?;
        let h1 = self.value(1.0)?;
        if h0.abs() > 1e-12 || (h1 - 1.0).abs() > 1e-12 {
            return Err(Error::param("h", h0, "must map 0 to 0 and 1 to 1"));
        }
        let mut prev = h0;
        for k in 1..=1000 {
            let v = self.value(k as f64 / 1000.0)?;
            if v < prev - 1e-14 {
                return Err(Error::param("h", k as f64 / 1000.0, "must be non-decreasing"));
            }
            prev = v;
        }
        Ok(())
    }

    fn check(&self, p: f64) -> Result<f64> {
        if (-1e-12..=1.0 + 1e-12).contains(&p) {
            Ok(p.clamp(0.0, 1.0))
        } else {
            Err(Error::Domain {
                what: "probability",
                value: p,
                domain: "[0, 1]".into(),
            })
        }
    }

    fn check_interior(&self, p: f64) -> Result<()> {
        let guarded = match self {
            WeightingModel::Prelec { .. } | WeightingModel::TverskyKahneman { .. } => true,
            WeightingModel::Power { theta } => *theta < 2.0,
            _ => false,
        };
        if guarded && !(ENDPOINT_GUARD..=1.0 - ENDPOINT_GUARD).contains(&p) {
            return Err(Error::Domain {
                what: "derivative query",
                value: p,
                domain: format!("[{ENDPOINT_GUARD}, {}]", 1.0 - ENDPOINT_GUARD),
            });
        }
        Ok(())
    }

    pub fn value(&self, p: f64) -> Result<f64> {
        let p = self.check(p)?;
        Ok(match self {
            WeightingModel::Identity => p,
            WeightingModel::Power { theta } => p.powf(*theta),
            WeightingModel::Quadratic => p * (2.0 - p),
            WeightingModel::Prelec { alpha, beta } => {
                if p == 0.0 {
                    0.0
                } else {
                    (-beta * (-p.ln()).powf(*alpha)).exp()
                }
            }
            WeightingModel::TverskyKahneman { gamma } => {
                if p == 0.0 || p == 1.0 {
                    p
                } else {
                    let a = p.powf(*gamma);
                    a / (a + (1.0 - p).powf(*gamma)).powf(1.0 / gamma)
                }
            }
            WeightingModel::AvarKink { p0 } => (p / (1.0 - p0)).min(1.0),
            WeightingModel::PiecewiseLinear(pl) => pl.value(p),
            WeightingModel::Composed { outer, inner } => outer.value(inner.value(p)?)?,
        })
    }

    pub fn d1(&self, p: f64) -> Result<f64> {
        let p = self.check(p)?;
        self.check_interior(p)?;
        Ok(match self {
            WeightingModel::Identity => 1.0,
            WeightingModel::Power { theta } => theta * p.powf(theta - 1.0),
            WeightingModel::Quadratic => 2.0 - 2.0 * p,
            WeightingModel::Prelec { alpha, beta } => {
                let l = -p.ln();
                self.value(p)? * alpha * beta * l.powf(alpha - 1.0) / p
            }
            WeightingModel::TverskyKahneman { gamma } => self.value(p)? * tk_log_slope(p, *gamma).0,
            WeightingModel::AvarKink { p0 } => {
                let kink = 1.0 - p0;
                if (p - kink).abs() <= KINK_TOL {
                    return Err(Error::Kink { at: p });
                }
                if p < kink {
                    1.0 / kink
                } else {
                    0.0
                }
            }
            WeightingModel::PiecewiseLinear(pl) => pl.d1(p)?,
            WeightingModel::Composed { outer, inner } => outer.d1(inner.value(p)?)? * inner.d1(p)?,
        })
    }

    pub fn d2(&self, p: f64) -> Result<f64> {
        let p = self.check(p)?;
        self.check_interior(p)?;
        Ok(match self {
            WeightingModel::Identity | WeightingModel::AvarKink { .. } => {
                self.d1(p)?;
                0.0
            }
            WeightingModel::PiecewiseLinear(pl) => {
                pl.d1(p)?;
                0.0
            }
            WeightingModel::Power { theta } => theta * (theta - 1.0) * p.powf(theta - 2.0),
            WeightingModel::Quadratic => -2.0,
            WeightingModel::Prelec { alpha, beta } => {
                let l = -p.ln();
                let ab = alpha * beta;
                let g = ab * l.powf(alpha - 1.0) / p;
                let dg = -ab / (p * p) * ((alpha - 1.0) * l.powf(alpha - 2.0) + l.powf(alpha - 1.0));
                self.value(p)? * (g * g + dg)
            }
            WeightingModel::TverskyKahneman { gamma } => {
                let (k, dk) = tk_log_slope(p, *gamma);
                self.value(p)? * (k * k + dk)
            }
            WeightingModel::Composed { outer, inner } => {
                let t = inner.value(p)?;
                let i1 = inner.d1(p)?;
                outer.d2(t)? * i1 * i1 + outer.d1(t)? * inner.d2(p)?
            }
        })
    }

    /// Left and right derivatives at an interior point.
    pub fn one_sided(&self, p: f64) -> Result<(f64, f64)> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                what: "one-sided derivative",
                value: p,
                domain: "(0, 1)".into(),
            });
        }
        match self {
            WeightingModel::AvarKink { p0 } => {
                let kink = 1.0 - p0;
                let s = 1.0 / kink;
                Ok(if (p - kink).abs() <= KINK_TOL {
                    (s, 0.0)
                } else if p < kink {
                    (s, s)
                } else {
                    (0.0, 0.0)
                })
            }
            WeightingModel::PiecewiseLinear(pl) => Ok(pl.one_sided(p)),
            WeightingModel::Composed { outer, inner } => {
                let (il, ir) = inner.one_sided(p)?;
                let t = inner.value(p)?;
                let (ol, or) = if t > 0.0 && t < 1.0 {
                    outer.one_sided(t)?
                } else {
                    let d = outer.d1(t)?;
                    (d, d)
                };
                Ok((ol * il, or * ir))
            }
            _ => {
                let d = self.d1(p)?;
                Ok((d, d))
            }
        }
    }

    /// Interior points where `h` is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            WeightingModel::AvarKink { p0 } => vec![1.0 - p0],
            WeightingModel::PiecewiseLinear(pl) => pl.interior_knots(),
            WeightingModel::Composed { outer, inner } => {
                let mut out = inner.kinks();
                for t in outer.kinks() {
                    if let Some(p) = invert_increasing(|p| inner.value(p), t, 0.0, 1.0) {
                        out.push(p);
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup_by(|a, b| (*a - *b).abs() <= KINK_TOL);
                out
            }
            _ => Vec::new(),
        }
    }

    /// Dual local index of absolute risk aversion, `-h''(p) / h'(p)`.
    pub fn dara(&self, p: f64) -> Result<f64> {
        Ok(-self.d2(p)? / self.d1(p)?)
    }

    /// The dual distortion `1 - h(1 - p)`, used on decumulative
    /// probabilities.
    pub fn dual_value(&self, p: f64) -> Result<f64> {
        Ok(1.0 - self.value(1.0 - p)?)
    }
}

/// `(k, k')` with `k = (ln h)'` for the Tversky-Kahneman family.
fn tk_log_slope(p: f64, g: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let s = p.powf(g) + q.powf(g);
    let d1 = p.powf(g - 1.0) - q.powf(g - 1.0);
    let d2 = (g - 1.0) * (p.powf(g - 2.0) + q.powf(g - 2.0));
    let k = g / p - d1 / s;
    let dk = -g / (p * p) - (s * d2 - g * d1 * d1) / (s * s);
    (k, dk)
}

/// Solves `f(x) = target` for non-decreasing `f` on `[lo, hi]` by bisection.
pub(crate) fn invert_increasing(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> Option<f64> {
    let flo = f(lo).ok()?;
    let fhi = f(hi).ok()?;
    if target < flo || target > fhi {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).ok()? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Primal and dual local indexes `(-U''/U' at w0, -h''/h' at p0)`.
pub fn local_indexes(u: &UtilityModel, h: &WeightingModel, w0: f64, p0: f64) -> Result<(f64, f64)> {
    Ok((u.ara(w0)?, h.dara(p0)?))
}

/// A strictly increasing scalar function, the common view of utilities and
/// weighting functions used by the concavification test.
pub trait Increasing {
    fn eval(&self, x: f64) -> Result<f64>;
}

impl Increasing for UtilityModel {
    fn eval(&self, x: f64) -> Result<f64> {
        self.value(x)
    }
}

impl Increasing for WeightingModel {
    fn eval(&self, p: f64) -> Result<f64> {
        self.value(p)
    }
}

impl<F: Fn(f64) -> f64> Increasing for F {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

// ---------------------------------------------------------------------------
// Textual specifiers
// ---------------------------------------------------------------------------

struct SpecParts<'a> {
    src: &'a str,
    family: &'a str,
    params: Vec<(&'a str, &'a str)>,
}

impl<'a> SpecParts<'a> {
    fn parse(src: &'a str) -> Result<Self> {
        let (family, rest) = match src.split_once(':') {
            Some((f, r)) => (f.trim(), Some(r)),
            None => (src.trim(), None),
        };
        let mut params = Vec::new();
        if let Some(rest) = rest {
            for kv in rest.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse {
                    spec: src.into(),
                    reason: format!("expected key=value, got `{kv}`"),
                })?;
                params.push((k.trim(), v.trim()));
            }
        }
        Ok(SpecParts {
            src,
            family,
            params,
        })
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            spec: self.src.into(),
            reason: reason.into(),
        }
    }

    fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.params {
            if !allowed.contains(k) {
                return Err(self.err(format!("unknown key `{k}` for `{}`", self.family)));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn num(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| self.err(format!("`{key}` is not a number: `{v}`"))),
            None => default.ok_or_else(|| self.err(format!("missing `{key}`"))),
        }
    }

    /// `knots=x/y;x/y;...`
    fn knots(&self) -> Result<Vec<(f64, f64)>> {
        let raw = self.raw("knots").ok_or_else(|| self.err("missing `knots`"))?;
        raw.split(';')
            .map(|pair| {
                let (x, y) = pair
                    .split_once('/')
                    .ok_or_else(|| self.err(format!("knot `{pair}` is not x/y")))?;
                let x = x.trim().parse().map_err(|_| self.err(format!("bad knot `{pair}`")))?;
                let y = y.trim().parse().map_err(|_| self.err(format!("bad knot `{pair}`")))?;
                Ok((x, y))
            })
            .collect()
    }
}

impl FromStr for UtilityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((outer, inner)) = s.split_once('@') {
            return UtilityModel::composed(outer.parse()?, inner.parse()?);
        }
        let sp = SpecParts::parse(s)?;
        match sp.family {
            "linear" => {
                sp.expect_keys(&[])?;
                Ok(UtilityModel::Linear)
            }
            "quadratic" => {
                sp.expect_keys(&["b"])?;
                UtilityModel::quadratic(sp.num("b", None)?)
            }
            "cara" => {
                sp.expect_keys(&["a"])?;
                UtilityModel::cara(sp.num("a", None)?)
            }
            "crra" => {
                sp.expect_keys(&["gamma"])?;
                UtilityModel::crra(sp.num("gamma", None)?)
            }
            "pwl" => {
                sp.expect_keys(&["knots"])?;
                UtilityModel::piecewise(sp.knots()?)
            }
            other => Err(sp.err(format!("unknown utility family `{other}`"))),
        }
    }
}

impl FromStr for WeightingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((outer, inner)) = s.split_once('@') {
            return WeightingModel::composed(outer.parse()?, inner.parse()?);
        }
        let sp = SpecParts::parse(s)?;
        match sp.family {
            "identity" => {
                sp.expect_keys(&[])?;
                Ok(WeightingModel::Identity)
            }
            "quadw" => {
                sp.expect_keys(&[])?;
                Ok(WeightingModel::Quadratic)
            }
            "power" => {
                sp.expect_keys(&["theta"])?;
                WeightingModel::power(sp.num("theta", None)?)
            }
            "prelec" => {
                sp.expect_keys(&["alpha", "beta"])?;
                WeightingModel::prelec(sp.num("alpha", None)?, sp.num("beta", Some(1.0))?)
            }
            "tk" => {
                sp.expect_keys(&["gamma"])?;
                WeightingModel::tversky_kahneman(sp.num("gamma", None)?)
            }
            "avar" => {
                sp.expect_keys(&["p0"])?;
                WeightingModel::avar(sp.num("p0", None)?)
            }
            "pwl" => {
                sp.expect_keys(&["knots"])?;
                WeightingModel::piecewise(sp.knots()?)
            }
            other => Err(sp.err(format!("unknown weighting family `{other}`"))),
        }
    }
}

fn fmt_knots(f: &mut fmt::Formatter<'_>, pl: &PiecewiseLinear) -> fmt::Result {
    write!(f, "pwl:knots=")?;
    for (i, (x, y)) in pl.knots().iter().enumerate() {
        if i > 0 {
            write!(f, ";")?;
        }
        write!(f, "{x}/{y}")?;
    }
    Ok(())
}

impl fmt::Display for UtilityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityModel::Linear => write!(f, "linear"),
            UtilityModel::Quadratic { b } => write!(f, "quadratic:b={b}"),
            UtilityModel::Cara { a } => write!(f, "cara:a={a}"),
            UtilityModel::Crra { gamma } => write!(f, "crra:gamma={gamma}"),
            UtilityModel::PiecewiseLinear(pl) => fmt_knots(f, pl),
            UtilityModel::Affine { scale, shift, base } => write!(f, "{scale}*({base})+{shift}"),
            UtilityModel::Composed { outer, inner } => write!(f, "{outer}@{inner}"),
        }
    }
}

impl fmt::Display for WeightingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightingModel::Identity => write!(f, "identity"),
            WeightingModel::Quadratic => write!(f, "quadw"),
            WeightingModel::Power { theta } => write!(f, "power:theta={theta}"),
            WeightingModel::Prelec { alpha, beta } => write!(f, "prelec:alpha={alpha},beta={beta}"),
            WeightingModel::TverskyKahneman { gamma } => write!(f, "tk:gamma={gamma}"),
            WeightingModel::AvarKink { p0 } => write!(f, "avar:p0={p0}"),
            WeightingModel::PiecewiseLinear(pl) => fmt_knots(f, pl),
            WeightingModel::Composed { outer, inner } => write!(f, "{outer}@{inner}"),
        }
    }
}

impl Serialize for UtilityModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for WeightingModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let (fp, f0, fm) = (f(x + h), f(x), f(x - h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn log_utility_ratio() {
        let u = UtilityModel::crra(1.0).unwrap();
        let r = u.d2(10.0).unwrap() / u.d1(10.0).unwrap();
        assert!((r + 0.1).abs() < 1e-15);
    }

    #[test]
    fn quadratic_weighting_ratio() {
        let h = WeightingModel::Quadratic;
        for p in [0.1, 0.3, 0.5, 0.9] {
            let r = h.d2(p).unwrap() / h.d1(p).unwrap();
            assert!((r + 2.0 / (2.0 - 2.0 * p)).abs() < 1e-14);
        }
        assert_eq!(WeightingModel::Identity.d2(0.4).unwrap(), 0.0);
    }

    #[test]
    fn one_sided_examples() {
        let avar = WeightingModel::avar(0.5).unwrap();
        assert_eq!(avar.one_sided(0.5).unwrap(), (2.0, 0.0));
        assert!(matches!(avar.d1(0.5), Err(Error::Kink { .. })));

        let prelec = WeightingModel::prelec(0.65, 1.0).unwrap();
        let (l, r) = prelec.one_sided(0.3).unwrap();
        assert_eq!(l, r);

        let pwl = WeightingModel::piecewise(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        let (l, r) = pwl.one_sided(0.5).unwrap();
        assert!((l - 1.6).abs() < 1e-15 && (r - 0.4).abs() < 1e-15);
        assert_eq!(pwl.kinks(), vec![0.5]);
        assert!(pwl.d2(0.5).is_err());
        assert_eq!(pwl.d2(0.2).unwrap(), 0.0);
    }

    #[test]
    fn local_index_examples() {
        let (ara, _) = local_indexes(&UtilityModel::cara(0.7).unwrap(), &WeightingModel::Identity, 3.0, 0.5).unwrap();
        assert!((ara - 0.7).abs() < 1e-15);
        let (_, dara) = local_indexes(&UtilityModel::Linear, &WeightingModel::Quadratic, 0.0, 0.5).unwrap();
        assert_eq!(dara, 2.0);
        let (_, dara) = local_indexes(&UtilityModel::Linear, &WeightingModel::Identity, 0.0, 0.5).unwrap();
        assert_eq!(dara, 0.0);
        assert!(local_indexes(&UtilityModel::Linear, &WeightingModel::avar(0.3).unwrap(), 0.0, 0.7).is_err());
    }

    #[test]
    fn domains_enforced() {
        let crra = UtilityModel::crra(2.0).unwrap();
        assert!(matches!(crra.value(0.0), Err(Error::Domain { .. })));
        let q = UtilityModel::quadratic(0.01).unwrap();
        assert!(q.value(99.0).is_ok());
        assert!(q.value(100.0).is_err());
        assert!(WeightingModel::Identity.value(1.5).is_err());
        let prelec = WeightingModel::prelec(0.65, 1.0).unwrap();
        assert!(prelec.d1(1e-10).is_err());
        assert!(prelec.d2(1.0 - 1e-10).is_err());
        assert_eq!(prelec.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(UtilityModel::quadratic(-1.0).is_err());
        assert!(UtilityModel::cara(0.0).is_err());
        assert!(UtilityModel::piecewise(vec![(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(WeightingModel::piecewise(vec![(0.0, 0.0), (0.5, 0.6)]).is_err());
        assert!(WeightingModel::prelec(0.0, 1.0).is_err());
        assert!(WeightingModel::avar(1.0).is_err());
        // TK loses monotonicity for small gamma
        assert!(WeightingModel::tversky_kahneman(0.2).is_err());
        assert!(WeightingModel::tversky_kahneman(0.61).is_ok());
    }

    #[test]
    fn parse_specifiers() {
        let cases = [
            ("crra:gamma=2", "crra:gamma=2"),
            ("cara:a=0.5", "cara:a=0.5"),
            ("quadratic:b=0.01", "quadratic:b=0.01"),
            ("linear", "linear"),
        ];
        for (src, canon) in cases {
            let u: UtilityModel = src.parse().unwrap();
            assert_eq!(u.to_string(), canon);
        }
        let weights = [
            ("prelec:alpha=0.65,beta=1", "prelec:alpha=0.65,beta=1"),
            ("tk:gamma=0.61", "tk:gamma=0.61"),
            ("quadw", "quadw"),
            ("identity", "identity"),
            ("avar:p0=0.5", "avar:p0=0.5"),
            ("prelec:alpha=0.9", "prelec:alpha=0.9,beta=1"),
            ("pwl:knots=0/0;0.5/0.8;1/1", "pwl:knots=0/0;0.5/0.8;1/1"),
            ("quadw@prelec:alpha=0.9,beta=1", "quadw@prelec:alpha=0.9,beta=1"),
        ];
        for (src, canon) in weights {
            let h: WeightingModel = src.parse().unwrap();
            assert_eq!(h.to_string(), canon);
            assert_eq!(canon.parse::<WeightingModel>().unwrap(), h);
        }
        assert!("crra".parse::<UtilityModel>().is_err());
        assert!("crra:g=2".parse::<UtilityModel>().is_err());
        assert!("crra:gamma=x".parse::<UtilityModel>().is_err());
        assert!("foo".parse::<WeightingModel>().is_err());
        assert!("identity:x=1".parse::<WeightingModel>().is_err());
    }

    #[test]
    fn composed_weighting_kinks() {
        let inner = WeightingModel::Identity;
        let h = WeightingModel::composed(WeightingModel::avar(0.25).unwrap(), inner).unwrap();
        let k = h.kinks();
        assert_eq!(k.len(), 1);
        assert!((k[0] - 0.75).abs() < 1e-12);
    }

    fn smooth_utilities() -> impl Strategy<Value = (UtilityModel, f64)> {
        prop_oneof![
            (0.01f64..0.5, -5.0f64..5.0).prop_map(|(b, x)| (UtilityModel::quadratic(b).unwrap(), x.min(0.5 / b))),
            (-2.0f64..3.0, -5.0f64..5.0).prop_map(|(a, x)| (UtilityModel::cara(if a.abs() < 1e-3 { 1.0 } else { a }).unwrap(), x)),
            (0.0f64..5.0, 0.5f64..20.0).prop_map(|(g, x)| (UtilityModel::crra(g).unwrap(), x)),
            (0.5f64..3.0, 0.5f64..20.0).prop_map(|(g, x)| {
                let u = UtilityModel::composed(UtilityModel::cara(0.3).unwrap(), UtilityModel::crra(g).unwrap()).unwrap();
                (u, x)
            }),
        ]
    }

    fn smooth_weightings() -> impl Strategy<Value = (WeightingModel, f64)> {
        prop_oneof![
            (0.3f64..3.0, 0.05f64..0.95).prop_map(|(t, p)| (WeightingModel::power(t).unwrap(), p)),
            (0.05f64..0.95).prop_map(|p| (WeightingModel::Quadratic, p)),
            (0.3f64..1.5, 0.3f64..2.0, 0.05f64..0.95).prop_map(|(a, b, p)| (WeightingModel::prelec(a, b).unwrap(), p)),
            (0.4f64..1.0, 0.05f64..0.95).prop_map(|(g, p)| (WeightingModel::tversky_kahneman(g).unwrap(), p)),
            (0.5f64..1.2, 0.05f64..0.95).prop_map(|(a, p)| {
                let h = WeightingModel::composed(WeightingModel::Quadratic, WeightingModel::prelec(a, 1.0).unwrap()).unwrap();
                (h, p)
            }),
        ]
    }

    proptest! {
        #[test]
        fn utility_derivatives_match_finite_differences((u, x) in smooth_utilities()) {
            let h = 1e-5 * (1.0 + x.abs());
            let (d1, d2) = central(|t| u.value(t).unwrap(), x, h);
            prop_assert!(rel_close(u.d1(x).unwrap(), d1, 1e-6), "{u}: d1 {} vs {d1}", u.d1(x).unwrap());
            // second differences lose half the digits; a coarser step keeps them usable
            let h2 = 1e-3 * (1.0 + x.abs());
            let (_, d2c) = central(|t| u.value(t).unwrap(), x, h2);
            let _ = d2;
            prop_assert!(rel_close(u.d2(x).unwrap(), d2c, 1e-4), "{u}: d2 {} vs {d2c}", u.d2(x).unwrap());
        }

        #[test]
        fn weighting_derivatives_match_finite_differences((w, p) in smooth_weightings()) {
            let (d1, _) = central(|t| w.value(t).unwrap(), p, 1e-5);
            prop_assert!(rel_close(w.d1(p).unwrap(), d1, 1e-6), "{w}: d1 {} vs {d1}", w.d1(p).unwrap());
            let (d1a, _) = central(|t| w.d1(t).unwrap(), p, 1e-5);
            prop_assert!(rel_close(w.d2(p).unwrap(), d1a, 1e-6), "{w}: d2 {} vs {d1a}", w.d2(p).unwrap());
            prop_assert!(w.value(0.0).unwrap().abs() <= 1e-12);
            prop_assert!((w.value(1.0).unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn utility_first_derivative_from_slope_of_d1((u, x) in smooth_utilities()) {
            let (dd, _) = central(|t| u.d1(t).unwrap(), x, 1e-5 * (1.0 + x.abs()));
            prop_assert!(rel_close(u.d2(x).unwrap(), dd, 1e-6));
        }

        #[test]
        fn ara_is_affine_invariant((u, x) in smooth_utilities(), a in 0.1f64..10.0, b in -10.0f64..10.0) {
            let v = UtilityModel::affine(a, b, u.clone()).unwrap();
            prop_assert!(rel_close(v.ara(x).unwrap(), u.ara(x).unwrap(), 1e-12));
        }
    }
}
