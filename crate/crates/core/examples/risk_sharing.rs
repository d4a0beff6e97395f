// Pooling a loss with others against buying unfair insurance on it alone.

use probability_premium::lottery::make_independent_pool;
use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::sharing::{critical_m_for_pool, critical_m_pool, prefers_pool};
use probability_premium::solve::SolverConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (loss, w0) = (1.0, 10.0);
    let models = [("crra:gamma=2", "identity"), ("linear", "quadw"), ("linear", "prelec:alpha=0.65")];
    for (us, hs) in models {
        let u: UtilityModel = us.parse()?;
        let h: WeightingModel = hs.parse()?;
        println!("U = {us}, h = {hs}");
        for eps1 in [0.04, 0.02, 0.01] {
            let m_star = critical_m_pool(2, eps1, loss, w0, &u, &h)?;
            let indep = make_independent_pool(eps1, loss, w0)?;
            let m_indep = critical_m_for_pool(&indep, eps1, loss, w0, &u, &h, &SolverConfig::default())?;
            let at_half = prefers_pool(2, 0.5 * m_star, eps1, loss, w0, &u, &h)?;
            println!("  eps1 {eps1:.2}  m* {m_star:.6}  m*/eps1 {:.4}  independent m* {m_indep:.6}  pool at m*/2: {at_half:?}", m_star / eps1);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
