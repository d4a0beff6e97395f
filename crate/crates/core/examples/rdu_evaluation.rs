// Rank-dependent value of a lottery, its dual form and certainty equivalent.

use probability_premium::lottery::Lottery;
use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::rdu::{certainty_equivalent, evaluate, evaluate_dual};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let lottery = Lottery::new([(5.0, 0.2), (10.0, 0.5), (20.0, 0.3)])?;
    let u: UtilityModel = "crra:gamma=1".parse()?;
    for spec in ["identity", "quadw", "prelec:alpha=0.65", "avar:p0=0.5"] {
        let h: WeightingModel = spec.parse()?;
        let v = evaluate(&lottery, &u, &h)?;
        let dual = evaluate_dual(&lottery, &u, &h)?;
        let ce = certainty_equivalent(&lottery, &u, &h)?;
        assert!((v - dual).abs() < 1e-12);
        assert!(ce >= lottery.min_payoff() && ce <= lottery.max_payoff());
        println!("{spec:>20}: value {v:.6}  certainty equivalent {ce:.6}");
    }
    println!("mean {:.6}", lottery.mean());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
