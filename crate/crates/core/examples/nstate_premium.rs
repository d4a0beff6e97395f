// Probability premium of an n-state spread shrinking towards its centre.

use probability_premium::lottery::NStateSpread;
use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::premium::{nstate_premium_exact, probability_premium_moment_form};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let u: UtilityModel = "crra:gamma=1".parse()?;
    let h: WeightingModel = "quadw".parse()?;
    let base = NStateSpread::new(vec![-0.2, -0.1, 0.1, 0.2], 0.1, 0.5, 10.0)?;
    let mut last_err: Option<f64> = None;
    for k in 0..4 {
        let f = 0.5f64.powi(k);
        let ns = base.scaled(f, f)?;
        let exact = nstate_premium_exact(&ns, &u, &h)?.mu_exact;
        let approx = probability_premium_moment_form(&ns, &u, &h)?;
        let err = (exact - approx).abs();
        let ratio = last_err.map(|e| e / err);
        println!("scale {f:.4}  exact {exact:.8e}  moment form {approx:.8e}  error ratio {ratio:?}");
        last_err = Some(err);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
