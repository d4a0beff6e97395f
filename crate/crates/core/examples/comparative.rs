// Comparing two decision makers: local index dominance, premium dominance
// on sampled spreads, and a targeted search for a premium reversal.

use probability_premium::comparative::{
    check_index_dominance, check_premium_dominance, default_p_grid, default_x_grid, find_counterexample,
    sample_specs, DEFAULT_SEARCH_SAMPLES,
};
use probability_premium::preferences::{UtilityModel, WeightingModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("crra:gamma=1", "crra:gamma=2", "identity", "quadw"),
        ("crra:gamma=2", "crra:gamma=1", "identity", "identity"),
    ];
    for (u1s, u2s, h1s, h2s) in pairs {
        let u1: UtilityModel = u1s.parse()?;
        let u2: UtilityModel = u2s.parse()?;
        let h1: WeightingModel = h1s.parse()?;
        let h2: WeightingModel = h2s.parse()?;
        let index = check_index_dominance(&u1, &u2, &h1, &h2, &default_x_grid(&u1, &u2), &default_p_grid())?;
        let premium = check_premium_dominance(&u1, &u2, &h1, &h2, &sample_specs(&u1, &u2, 100, 7))?;
        println!("({u1s}, {h1s}) vs ({u2s}, {h2s}): indexes {}  premia {}", index.holds, premium.holds);
        if let Some(v) = index.worst {
            let w = find_counterexample(&u1, &u2, &h1, &h2, &v, DEFAULT_SEARCH_SAMPLES, 7)?;
            println!("  index violation {v:?}");
            println!("  premium reversal {w:?}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
