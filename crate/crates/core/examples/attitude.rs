// Order of the attitude towards probability for smooth and kinked
// weightings, with the critical unfairness rate at one spread.

use probability_premium::attitude::{classify, critical_m, kink_slope};
use probability_premium::lottery::SpreadSpec;
use probability_premium::preferences::{UtilityModel, WeightingModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (w0, p0, eps2) = (10.0, 0.5, 1.0);
    let cases = [
        ("linear", "identity"),
        ("linear", "quadw"),
        ("crra:gamma=2", "identity"),
        ("linear", "avar:p0=0.5"),
        ("linear", "pwl:knots=0/0;0.5/0.8;1/1"),
    ];
    for (us, hs) in cases {
        let u: UtilityModel = us.parse()?;
        let h: WeightingModel = hs.parse()?;
        let c = classify(w0, p0, eps2, &u, &h)?;
        let spec = SpreadSpec::new(w0, p0, 0.01, eps2)?;
        println!(
            "{us:>14} {hs:>26}: {:?}  first {:+.6}  second {:+.6}  kink slope {:+.6}  m*(0.01) {:+.6}",
            c.order,
            c.first_coeff,
            c.second_coeff,
            kink_slope(&h, p0)?,
            critical_m(&spec, &u, &h)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
