// Exact probability premium of a binary spread against its small-risk
// approximation, under expected utility, dual theory and both combined.

use probability_premium::lottery::SpreadSpec;
use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::premium::{probability_premium_exact, probability_premium_moment_form};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [("crra:gamma=1", "identity"), ("linear", "quadw"), ("crra:gamma=2", "prelec:alpha=0.65")];
    for (us, hs) in cases {
        let u: UtilityModel = us.parse()?;
        let h: WeightingModel = hs.parse()?;
        println!("U = {u}, h = {h}");
        for k in 0..4 {
            let scale = 0.5f64.powi(k);
            let spec = SpreadSpec::new(10.0, 0.4, 0.2 * scale, 1.0 * scale)?;
            let r = probability_premium_exact(&spec, &u, &h)?;
            let approx = r.mu_approx_total.expect("smooth models have an approximation");
            let moment = probability_premium_moment_form(&spec, &u, &h)?;
            assert!((approx - moment).abs() <= 1e-12 * approx.abs().max(1e-300));
            println!(
                "  eps1 {:.4}  eps2 {:.4}  exact {:.6e}  approx {:.6e}  rel.err {:.2e}",
                spec.eps1,
                spec.eps2,
                r.mu_exact,
                approx,
                ((r.mu_exact - approx) / r.mu_exact).abs()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
