//! Escape rates of the full 2-shift through a few cylinder holes, computed
//! three ways: open block matrix, leading zero of the open zeta function and
//! the slope of the exact survival curve.

use suspension_escape::open::{escape_rate_flow, survival_curve_flow, Hole};
use suspension_escape::suspension::build_suspension;
use suspension_escape::zeta::zeta_op_factorized;
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::full(2);
    let sys = build_suspension(&shift, &CylinderFunction::ones(&shift))?;

    println!("{:>6} {:>20} {:>20} {:>20}", "hole", "matrix", "zeta", "slope");
    for text in ["0", "00", "01", "000", "010"] {
        let hole = Hole::parse(&shift, text)?;
        let rho = escape_rate_flow(&sys, &hole)?.upper;
        let zeta = match zeta_op_factorized(&sys, &hole) {
            Ok(b) => b.leading_zero()?.ln(),
            Err(_) => f64::NAN,
        };
        let curve = survival_curve_flow(&sys, &hole, 60)?;
        let slope = (curve[20] / curve[60]).ln() / 40.0;
        println!("{text:>6} {rho:>20.15} {zeta:>20.15} {slope:>20.15}");
    }

    // a biased chain: holes of equal length escape at different rates
    let biased = MarkovShift::new(&[vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let sys = build_suspension(&biased, &CylinderFunction::ones(&biased))?;
    for text in ["00", "11"] {
        let rho = escape_rate_flow(&sys, &Hole::parse(&biased, text)?)?.upper;
        println!("biased chain, hole {text}: rho = {rho:.12}");
    }
    Ok(())
}
