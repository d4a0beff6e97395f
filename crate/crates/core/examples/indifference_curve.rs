// Indifference curve through the no-sharing point of the (q, p) triangle
// and its SVG rendering.

use probability_premium::preferences::{UtilityModel, WeightingModel};
use probability_premium::sharing::{default_q_grid, render_svg, trace_indifference};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (p0, loss, w0) = (0.2, 1.0, 10.0);
    let mut traces = Vec::new();
    for (us, hs) in [("crra:gamma=1", "identity"), ("linear", "quadw"), ("linear", "avar:p0=0.5")] {
        let u: UtilityModel = us.parse()?;
        let h: WeightingModel = hs.parse()?;
        let t = trace_indifference(p0, loss, w0, &u, &h, &default_q_grid(p0))?;
        let worst = t.points.iter().map(|pt| pt.value_residual.abs()).fold(0.0, f64::max);
        println!(
            "{us:>14} {hs:>14}: slope at origin {:+.6}  points {}  skipped {}  worst residual {worst:.1e}",
            t.slope_at_origin.unwrap_or(f64::NAN),
            t.points.len(),
            t.skipped.len()
        );
        traces.push(t);
    }
    let svg = render_svg(p0, &traces);
    assert!(svg.contains("viewBox=\"0 0 800 800\""));
    println!("svg: {} bytes, {} polylines", svg.len(), svg.matches("<polyline").count());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
