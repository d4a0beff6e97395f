//! Finite discrete risks, the named risks used throughout the crate, and
//! their primal and dual moments.
//!
//! Payoffs are kept sorted ascending with (near-)equal payoffs merged, so the
//! rank of every atom is unambiguous for rank-dependent evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total probability mass of a lottery.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Payoffs closer than this are merged into a single atom.
pub const MERGE_TOL: f64 = 1e-12;

/// A finite discrete payoff distribution.
///
/// Serialized as `{"atoms": [[payoff, prob], ...]}` with atoms sorted by
/// payoff. Deserialization re-validates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLottery")]
pub struct Lottery {
    atoms: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct RawLottery {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawLottery> for Lottery {
    type Error = Error;

    fn try_from(raw: RawLottery) -> Result<Self> {
        Lottery::new(raw.atoms)
    }
}

impl Lottery {
    /// Builds a lottery from `(payoff, probability)` pairs.
    ///
    /// Zero-probability atoms are dropped. Negative or non-finite
    /// probabilities are rejected, as is a total mass that misses 1 by more
    /// than [`PROB_SUM_TOL`]; the mass is never renormalized.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw = Vec::new();
        for (payoff, prob) in atoms {
            if !payoff.is_finite() || !prob.is_finite() || !(0.0..=1.0 + PROB_SUM_TOL).contains(&prob)
            {
                return Err(Error::InvalidAtom { payoff, prob });
            }
            if prob > 0.0 {
                raw.push((payoff, prob));
            }
        }
        if raw.is_empty() {
            return Err(Error::EmptyLottery);
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (x, p) in raw {
            match merged.last_mut() {
                Some(last) if x - last.0 <= MERGE_TOL => last.1 += p,
                _ => merged.push((x, p)),
            }
        }

        let sum: f64 = merged.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::ProbabilitySum { sum });
        }
        Ok(Lottery { atoms: merged })
    }

    /// The sure payoff `c`.
    pub fn degenerate(c: f64) -> Self {
        Lottery {
            atoms: vec![(c, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn min_payoff(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max_payoff(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// Cumulative probabilities `F(x_i)`, accumulated ascending, with the
    /// last entry pinned to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .atoms
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }

    /// Adds `delta` to every payoff.
    pub fn shifted(&self, delta: f64) -> Lottery {
        Lottery {
            atoms: self.atoms.iter().map(|&(x, p)| (x + delta, p)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * x).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(x, p)| p * (x - m) * (x - m)).sum()
    }

    /// Second dual moment about the mean: `E[max(X1, X2)] - E[X]` for two
    /// independent copies, computed as the Stieltjes sum
    /// `sum_i (x_i - m) (F(x_i)^2 - F(x_{i-1})^2)`.
    ///
    /// This is the moment of the full lottery. The spread moment reported by
    /// [`SpreadSpec::moments`] uses the sub-distribution convention instead
    /// and differs for embedded spreads.
    pub fn maxiance(&self) -> f64 {
        let m = self.mean();
        let mut prev = 0.0;
        self.atoms
            .iter()
            .zip(self.cumulative())
            .map(|(&(x, _), f)| {
                let w = f * f - prev * prev;
                prev = f;
                (x - m) * w
            })
            .sum()
    }

    /// `E[min(X1, X2)] - E[X]`, computed from decumulative probabilities.
    /// Since `max + min = X1 + X2`, this always equals `-maxiance`.
    pub fn miniance(&self) -> f64 {
        let m = self.mean();
        let mut prev_s = 1.0;
        self.atoms
            .iter()
            .zip(self.cumulative())
            .map(|(&(x, _), f)| {
                let s = 1.0 - f;
                let w = prev_s * prev_s - s * s;
                prev_s = s;
                (x - m) * w
            })
            .sum()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.0 <= x)
            .map(|a| a.1)
            .sum::<f64>()
            .min(1.0)
    }
}

/// True iff `fine` is a mean-preserving contraction of `coarse`: equal means
/// (within 1e-10) and the integrated CDF of `fine` lies below that of
/// `coarse` everywhere.
pub fn is_mps(coarse: &Lottery, fine: &Lottery) -> bool {
    if (coarse.mean() - fine.mean()).abs() > 1e-10 {
        return false;
    }
    let mut grid: Vec<f64> = coarse
        .atoms()
        .iter()
        .chain(fine.atoms())
        .map(|a| a.0)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let scale = (grid[grid.len() - 1] - grid[0]).max(1.0);
    let tol = 1e-12 * scale;
    let (mut ic, mut if_) = (0.0, 0.0);
    for w in grid.windows(2) {
        let dx = w[1] - w[0];
        ic += coarse.cdf(w[0]) * dx;
        if_ += fine.cdf(w[0]) * dx;
        if if_ > ic + tol {
            return false;
        }
    }
    true
}

/// Parameters of the binary spread family: initial wealth `w0`, probability
/// `p0` of the low outcome, moved mass `eps1` and payoff half-width `eps2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub w0: f64,
    pub p0: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl SpreadSpec {
    pub fn new(w0: f64, p0: f64, eps1: f64, eps2: f64) -> Result<Self> {
        let spec = SpreadSpec { w0, p0, eps1, eps2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.w0.is_finite() {
            return Err(Error::param("w0", self.w0, "must be finite"));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::param("p0", self.p0, "must lie in (0, 1)"));
        }
        if !(self.eps1 > 0.0 && self.eps1 <= self.p0.min(1.0 - self.p0)) {
            return Err(Error::param("eps1", self.eps1, "must lie in (0, min(p0, 1 - p0)]"));
        }
        if !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return Err(Error::param("eps2", self.eps2, "must be positive"));
        }
        Ok(())
    }

    pub fn low(&self) -> f64 {
        self.w0 - self.eps2
    }

    pub fn high(&self) -> f64 {
        self.w0 + self.eps2
    }

    /// `C`: low outcome with probability `p0`, high outcome otherwise.
    pub fn make_c(&self) -> Lottery {
        Lottery::new([(self.low(), self.p0), (self.high(), 1.0 - self.p0)])
            .expect("valid spec yields a valid lottery")
    }

    /// `D`: `eps1` moved from each branch of `C` onto `w0`.
    pub fn make_d(&self) -> Lottery {
        self.make_d_lambda(0.0)
    }

    /// `D(lambda)`: `D` with the middle outcome lowered to `w0 - lambda`.
    /// Atoms are re-sorted (and merged) if the middle branch crosses another.
    pub fn make_d_lambda(&self, lambda: f64) -> Lottery {
        Lottery::new([
            (self.low(), self.p0 - self.eps1),
            (self.w0 - lambda, 2.0 * self.eps1),
            (self.high(), 1.0 - self.p0 - self.eps1),
        ])
        .expect("valid spec yields a valid lottery")
    }

    /// `C(mu)`: `mu` moved from the low onto the high outcome.
    pub fn make_c_mu(&self, mu: f64) -> Result<Lottery> {
        let lo = self.p0 - mu;
        let hi = 1.0 - self.p0 + mu;
        if !(0.0..=1.0).contains(&lo) {
            return Err(Error::InvalidAtom {
                payoff: self.low(),
                prob: lo,
            });
        }
        if !(0.0..=1.0).contains(&hi) {
            return Err(Error::InvalidAtom {
                payoff: self.high(),
                prob: hi,
            });
        }
        Lottery::new([(self.low(), lo), (self.high(), hi)])
    }

    pub fn moments(&self) -> SpreadMoments {
        let (e1, e2) = (self.eps1, self.eps2);
        SpreadMoments {
            m2: 2.0 * e1 * e2 * e2,
            mbar2: 2.0 * e1 * e1 * e2,
            py: 2.0 * e2,
            pr: 2.0 * e1,
            py_star: 2.0 * e2,
        }
    }
}

/// Moments of the zero-mean spread carried by a spread spec, all computed
/// with unconditional (sub-distribution) probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadMoments {
    /// Variance.
    pub m2: f64,
    /// Maxiance, `int x dG(x)^2` with `G` the sub-distribution function.
    pub mbar2: f64,
    /// 1-norm of the payoffs.
    pub py: f64,
    /// Total probability mass.
    pub pr: f64,
    /// Weighted 1-norm: favorable payoffs scaled by `n1 / n2`.
    pub py_star: f64,
}

/// An `n`-state zero-mean spread, each state carrying mass `2 eps1 / n`,
/// attached around cumulative probability `p0` at wealth `w0`.
///
/// File format: `{"payoffs": [...], "eps1": r, "p0": r, "w0": r}`. States
/// are kept unmerged since premium shifts act per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNState")]
pub struct NStateSpread {
    payoffs: Vec<f64>,
    pub eps1: f64,
    pub p0: f64,
    pub w0: f64,
}

#[derive(Deserialize)]
struct RawNState {
    payoffs: Vec<f64>,
    eps1: f64,
    p0: f64,
    w0: f64,
}

impl TryFrom<RawNState> for NStateSpread {
    type Error = Error;

    fn try_from(r: RawNState) -> Result<Self> {
        NStateSpread::new(r.payoffs, r.eps1, r.p0, r.w0)
    }
}

impl NStateSpread {
    pub fn new(mut payoffs: Vec<f64>, eps1: f64, p0: f64, w0: f64) -> Result<Self> {
        if payoffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("payoffs", f64::NAN, "must be finite"));
        }
        payoffs.sort_by(f64::total_cmp);
        let sum: f64 = payoffs.iter().sum();
        let norm: f64 = payoffs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * norm {
            return Err(Error::param("payoffs", sum, "must sum to zero"));
        }
        if !(eps1 > 0.0 && eps1 <= 0.5) {
            return Err(Error::param("eps1", eps1, "must lie in (0, 1/2]"));
        }
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::param("p0", p0, "must lie in (0, 1)"));
        }
        if eps1 > p0.min(1.0 - p0) {
            return Err(Error::param("eps1", eps1, "must not exceed min(p0, 1 - p0)"));
        }
        if !w0.is_finite() {
            return Err(Error::param("w0", w0, "must be finite"));
        }
        let spread = NStateSpread {
            payoffs,
            eps1,
            p0,
            w0,
        };
        if spread.n1() == 0 || spread.n2() == 0 {
            return Err(Error::param(
                "payoffs",
                spread.n1() as f64,
                "need at least one negative and one non-negative state",
            ));
        }
        Ok(spread)
    }

    /// The two-state spread equivalent to a binary spec.
    pub fn from_binary(spec: &SpreadSpec) -> Self {
        NStateSpread {
            payoffs: vec![-spec.eps2, spec.eps2],
            eps1: spec.eps1,
            p0: spec.p0,
            w0: spec.w0,
        }
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn n(&self) -> usize {
        self.payoffs.len()
    }

    /// Number of strictly negative (unfavorable) states.
    pub fn n1(&self) -> usize {
        self.payoffs.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn n2(&self) -> usize {
        self.n() - self.n1()
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.payoffs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Returns a copy with payoffs scaled by `payoff_factor` and `eps1` by
    /// `mass_factor`.
    pub fn scaled(&self, payoff_factor: f64, mass_factor: f64) -> Result<Self> {
        NStateSpread::new(
            self.payoffs.iter().map(|x| x * payoff_factor).collect(),
            self.eps1 * mass_factor,
            self.p0,
            self.w0,
        )
    }

    pub fn moments(&self) -> SpreadMoments {
        let n = self.n() as f64;
        let e1 = self.eps1;
        let n1 = self.n1();
        let ratio = n1 as f64 / self.n2() as f64;
        let m2 = 2.0 * e1 / n * self.payoffs.iter().map(|x| x * x).sum::<f64>();
        let mbar2 = 4.0 * e1 * e1 / (n * n)
            * self
                .payoffs
                .iter()
                .enumerate()
                .map(|(i, x)| (2 * i + 1) as f64 * x)
                .sum::<f64>();
        let py = self.payoffs.iter().map(|x| x.abs()).sum();
        let py_star = self.payoffs[..n1].iter().map(|x| x.abs()).sum::<f64>()
            + ratio * self.payoffs[n1..].iter().map(|x| x.abs()).sum::<f64>();
        SpreadMoments {
            m2,
            mbar2,
            py,
            pr: 2.0 * e1,
            py_star,
        }
    }
}

/// `A`: lose `loss` with probability `eps1`.
pub fn make_a(eps1: f64, loss: f64, w0: f64) -> Result<Lottery> {
    make_a_star(eps1, 0.0, loss, w0)
}

/// `A*`: lose `loss` with probability `(1 - m) eps1`.
pub fn make_a_star(eps1: f64, m: f64, loss: f64, w0: f64) -> Result<Lottery> {
    check_loss_params(eps1, loss)?;
    if !(0.0..1.0).contains(&m) {
        return Err(Error::param("m", m, "must lie in [0, 1)"));
    }
    let p = (1.0 - m) * eps1;
    Lottery::new([(w0 - loss, p), (w0, 1.0 - p)])
}

/// `B(n)`: the loss shared equally in a pool of `n`, i.e. lose `loss / n`
/// with probability `n eps1`.
pub fn make_b_n(n: u32, eps1: f64, loss: f64, w0: f64) -> Result<Lottery> {
    check_loss_params(eps1, loss)?;
    if n < 2 {
        return Err(Error::param("n", n as f64, "pool size must be at least 2"));
    }
    let p = n as f64 * eps1;
    if p >= 1.0 {
        return Err(Error::param("n * eps1", p, "must be below 1"));
    }
    Lottery::new([(w0 - loss / n as f64, p), (w0, 1.0 - p)])
}

/// Equal sharing between two individuals with independent losses.
pub fn make_independent_pool(eps1: f64, loss: f64, w0: f64) -> Result<Lottery> {
    check_loss_params(eps1, loss)?;
    Lottery::new([
        (w0 - loss, eps1 * eps1),
        (w0 - loss / 2.0, 2.0 * eps1 * (1.0 - eps1)),
        (w0, (1.0 - eps1) * (1.0 - eps1)),
    ])
}

fn check_loss_params(eps1: f64, loss: f64) -> Result<()> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::param("eps1", eps1, "must lie in (0, 1)"));
    }
    if !(loss > 0.0 && loss.is_finite()) {
        return Err(Error::param("loss", loss, "must be positive"));
    }
    Ok(())
}
