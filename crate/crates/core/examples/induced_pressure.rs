//! Induced pressure of the hole-avoiding words equals minus the escape rate.

use suspension_escape::open::{escape_rate_flow, Hole};
use suspension_escape::pressure::{
    gibbs_potential, induced_pressure_truncated, induced_pressure_via_root, superadditivity_check, WordCollection,
};
use suspension_escape::suspension::build_suspension;
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::new(&[vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let pot = gibbs_potential(&shift)?;
    println!("Gibbs constant K = {}", pot.gibbs_constant);

    let phi = CylinderFunction::from_fn(&shift, 1, |w| 1.0 + w[0] as f64)?.with_lattice(1.0)?;
    let sys = build_suspension(&shift, &phi)?;
    for text in ["0", "00", "01", "101"] {
        let hole = Hole::parse(&shift, text)?;
        let coll = WordCollection::new(hole.clone());
        let rho = escape_rate_flow(&sys, &hole)?.upper;
        let root = induced_pressure_via_root(&pot, &phi, &coll)?;
        let trunc: Vec<String> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&t| format!("{:.5}", induced_pressure_truncated(&pot, &phi, &coll, t, 3.0).unwrap()))
            .collect();
        println!("{text:>4}: -rho {:.12}  root {root:.12}  truncated t=50,100,200: {}", -rho, trunc.join(" "));
    }

    // the reciprocal pressure is superadditive in the ceiling
    let coll = WordCollection::new(Hole::parse(&shift, "00")?);
    let ones = CylinderFunction::ones(&shift);
    let r = superadditivity_check(&pot, &coll, &ones, &phi)?;
    println!("1/P(phi1+phi2) = {:.6} >= 1/P(phi1) + 1/P(phi2) = {:.6}: {}", r.lhs, r.rhs, r.holds);
    Ok(())
}
