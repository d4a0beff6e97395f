//! The rank-dependent preference functional on finite lotteries.
//!
//! With the identity weighting this is expected utility; with linear utility
//! it is the dual theory.

use crate::error::{Error, Result};
use crate::lottery::Lottery;
use crate::preferences::{invert_increasing, UtilityModel, WeightingModel};

/// `sum_i (h(F_i) - h(F_{i-1})) U(x_i)` over ascending payoffs.
pub fn evaluate(l: &Lottery, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&(x, _), f) in l.atoms().iter().zip(l.cumulative()) {
        let hf = h.value(f)?;
        total += (hf - prev) * u.value(x)?;
        prev = hf;
    }
    Ok(total)
}

/// Same functional computed from decumulative probabilities with the dual
/// distortion `1 - h(1 - p)`. Kept as an independent cross-check.
pub fn evaluate_dual(l: &Lottery, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let atoms = l.atoms();
    let mut total = 0.0;
    let mut upper = 0.0; // S_{i+1}
    let mut h_upper = 0.0;
    for (i, &(x, p)) in atoms.iter().enumerate().rev() {
        let s = if i == 0 { 1.0 } else { upper + p };
        let hs = h.dual_value(s)?;
        total += (hs - h_upper) * u.value(x)?;
        upper = s;
        h_upper = hs;
    }
    Ok(total)
}

/// Sure amount with the same value as `l`, by bisection on the support hull.
pub fn certainty_equivalent(l: &Lottery, u: &UtilityModel, h: &WeightingModel) -> Result<f64> {
    let (lo, hi) = (l.min_payoff(), l.max_payoff());
    if lo == hi {
        return Ok(lo);
    }
    let target = evaluate(l, u, h)?;
    invert_increasing(|x| u.value(x), target, lo, hi).ok_or(Error::NoBracket {
        lo,
        hi,
        scanned: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::SpreadSpec;
    use proptest::prelude::*;

    fn lot(atoms: &[(f64, f64)]) -> Lottery {
        Lottery::new(atoms.iter().copied()).unwrap()
    }

    /// Tail average of the worst `alpha` mass, the dual value under AV@R.
    fn tail_average(l: &Lottery, alpha: f64) -> f64 {
        let mut left = alpha;
        let mut acc = 0.0;
        for &(x, p) in l.atoms() {
            let take = p.min(left);
            acc += take * x;
            left -= take;
            if left <= 0.0 {
                break;
            }
        }
        acc / alpha
    }

    #[test]
    fn identity_weighting_is_expected_utility() {
        let l = lot(&[(1.0, 0.2), (3.0, 0.5), (7.0, 0.3)]);
        let u = UtilityModel::crra(1.0).unwrap();
        let eu: f64 = l.atoms().iter().map(|&(x, p)| p * x.ln()).sum();
        assert!((evaluate(&l, &u, &WeightingModel::Identity).unwrap() - eu).abs() < 1e-15);
    }

    #[test]
    fn dual_theory_hand_example() {
        let l = lot(&[(-1.0, 0.5), (1.0, 0.5)]);
        let v = evaluate(&l, &UtilityModel::Linear, &WeightingModel::Quadratic).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_gives_utility_of_payoff() {
        let l = Lottery::degenerate(4.0);
        for h in [WeightingModel::Quadratic, WeightingModel::prelec(0.65, 1.0).unwrap()] {
            let v = evaluate(&l, &UtilityModel::crra(1.0).unwrap(), &h).unwrap();
            assert_eq!(v, 4f64.ln());
        }
    }

    #[test]
    fn avar_is_tail_average() {
        let cases = [
            (vec![(0.0, 0.2), (5.0, 0.3), (9.0, 0.5)], 0.5),
            (vec![(-3.0, 0.1), (1.0, 0.6), (2.0, 0.3)], 0.25),
            (vec![(1.0, 0.4), (2.0, 0.4), (3.0, 0.2)], 0.7),
        ];
        for (atoms, p0) in cases {
            let l = lot(&atoms);
            let h = WeightingModel::avar(p0).unwrap();
            let v = evaluate(&l, &UtilityModel::Linear, &h).unwrap();
            assert!((v - tail_average(&l, 1.0 - p0)).abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn certainty_equivalent_examples() {
        let u = UtilityModel::crra(1.0).unwrap();
        let ce = certainty_equivalent(&lot(&[(1.0, 0.5), (4.0, 0.5)]), &u, &WeightingModel::Identity).unwrap();
        assert!((ce - 2.0).abs() < 1e-13);
        let l = lot(&[(1.0, 0.3), (4.0, 0.7)]);
        let ce = certainty_equivalent(&l, &UtilityModel::Linear, &WeightingModel::Identity).unwrap();
        assert!((ce - l.mean()).abs() < 1e-13);
        assert_eq!(certainty_equivalent(&Lottery::degenerate(3.0), &u, &WeightingModel::Quadratic).unwrap(), 3.0);
    }

    #[test]
    fn domain_violation_propagates() {
        let l = lot(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(evaluate(&l, &UtilityModel::crra(2.0).unwrap(), &WeightingModel::Identity).is_err());
    }

    fn arb_lottery() -> impl Strategy<Value = Lottery> {
        prop::collection::vec((0.5f64..20.0, 0.01f64..1.0), 1..12).prop_map(|raw| {
            let total: f64 = raw.iter().map(|a| a.1).sum();
            let n = raw.len();
            let mut acc = 0.0;
            let atoms: Vec<_> = raw
                .iter()
                .enumerate()
                .map(|(i, &(x, w))| {
                    let p = if i + 1 == n { 1.0 - acc } else { w / total };
                    acc += p;
                    (x, p)
                })
                .collect();
            Lottery::new(atoms).unwrap()
        })
    }

    fn arb_models() -> impl Strategy<Value = (UtilityModel, WeightingModel)> {
        let u = prop_oneof![
            Just(UtilityModel::Linear),
            (0.0f64..4.0).prop_map(|g| UtilityModel::crra(g).unwrap()),
            (0.05f64..1.0).prop_map(|a| UtilityModel::cara(a).unwrap()),
        ];
        let h = prop_oneof![
            Just(WeightingModel::Identity),
            Just(WeightingModel::Quadratic),
            (0.3f64..1.5, 0.5f64..1.5).prop_map(|(a, b)| WeightingModel::prelec(a, b).unwrap()),
            (0.4f64..1.0).prop_map(|g| WeightingModel::tversky_kahneman(g).unwrap()),
            (0.05f64..0.95).prop_map(|p| WeightingModel::avar(p).unwrap()),
            (0.3f64..3.0).prop_map(|t| WeightingModel::power(t).unwrap()),
        ];
        (u, h)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dual_form_agrees(l in arb_lottery(), (u, h) in arb_models()) {
            let a = evaluate(&l, &u, &h).unwrap();
            let b = evaluate_dual(&l, &u, &h).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }

        #[test]
        fn shifting_payoffs_up_increases_value(l in arb_lottery(), (u, h) in arb_models(), d in 0.01f64..1.0) {
            let a = evaluate(&l, &u, &h).unwrap();
            let b = evaluate(&l.shifted(d), &u, &h).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn affine_utility_rescales_value(l in arb_lottery(), (u, h) in arb_models(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let v = evaluate(&l, &u, &h).unwrap();
            let w = evaluate(&l, &UtilityModel::affine(a, b, u.clone()).unwrap(), &h).unwrap();
            prop_assert!((w - (a * v + b)).abs() <= 1e-10 * (1.0 + w.abs()));
        }

        #[test]
        fn strong_risk_aversion(
            w0 in 3.0f64..20.0, p0 in 0.02f64..0.98, frac in 0.01f64..1.0, eps2 in 0.01f64..2.5,
            g in 0.0f64..4.0, choose in 0usize..3,
        ) {
            let spec = SpreadSpec::new(w0, p0, frac * p0.min(1.0 - p0), eps2).unwrap();
            let u = UtilityModel::crra(g).unwrap();
            let h = [WeightingModel::Identity, WeightingModel::Quadratic, WeightingModel::power(0.5).unwrap()][choose].clone();
            let c = evaluate(&spec.make_c(), &u, &h).unwrap();
            let d = evaluate(&spec.make_d(), &u, &h).unwrap();
            prop_assert!(d >= c - 1e-13 * (1.0 + c.abs()));
        }
    }
}
