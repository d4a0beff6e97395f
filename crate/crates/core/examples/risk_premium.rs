// Risk premium (payoff shift) next to the probability premium
// (probability shift) for the same spread, and the identity linking their
// approximations.

use probability_premium::lottery::SpreadSpec;
use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::premium::{
    premium_link_residual, probability_premium_exact, risk_premium_exact, risk_premium_moment_form,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let u: UtilityModel = "cara:a=0.5".parse()?;
    let h: WeightingModel = "tk:gamma=0.61".parse()?;
    let spec = SpreadSpec::new(2.0, 0.5, 0.05, 0.2)?;
    let mu = probability_premium_exact(&spec, &u, &h)?;
    let lambda = risk_premium_exact(&spec, &u, &h)?;
    println!("probability premium {:.10e} (approx {:.10e})", mu.mu_exact, mu.mu_approx_total.unwrap_or(f64::NAN));
    println!(
        "risk premium        {:.10e} (approx {:.10e}, moment form {:.10e})",
        lambda.lambda_exact,
        lambda.lambda_approx_total.unwrap_or(f64::NAN),
        risk_premium_moment_form(&spec, &u, &h)?
    );
    let m = spec.moments();
    println!("link mu*Py - lambda*Pr = {:.3e}", mu.mu_exact * m.py - lambda.lambda_exact * m.pr);
    println!("relative to eps1*eps2:   {:.3e}", premium_link_residual(&spec, &u, &h)? / (spec.eps1 * spec.eps2));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
