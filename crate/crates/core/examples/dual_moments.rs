// Mean, variance and the dual dispersion measures of lotteries, plus the
// moments of binary and n-state spreads.

use probability_premium::lottery::{is_mps, Lottery, NStateSpread, SpreadSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let l = Lottery::new([(0.0, 0.25), (1.0, 0.5), (3.0, 0.25)])?;
    println!(
        "mean {:.4}  variance {:.4}  maxiance {:.4}  miniance {:.4}",
        l.mean(),
        l.variance(),
        l.maxiance(),
        l.miniance()
    );

    let spec = SpreadSpec::new(10.0, 0.5, 0.1, 1.0)?;
    let (c, d) = (spec.make_c(), spec.make_d());
    assert!(is_mps(&c, &d));
    assert!(!is_mps(&d, &c));
    println!("C = {:?}", c.atoms());
    println!("D = {:?}", d.atoms());
    println!("binary moments {:?}", spec.moments());

    let ns = NStateSpread::new(vec![-0.2, -0.1, 0.1, 0.2], 0.1, 0.5, 10.0)?;
    let m = ns.moments();
    println!("n-state moments m2 {:.6} mbar2 {:.6} py* {:.6}", m.m2, m.mbar2, m.py_star);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
