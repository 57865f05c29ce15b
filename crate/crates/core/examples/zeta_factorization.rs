//! The open zeta function as closed zeta times correlation polynomial plus a
//! cofactor term, checked against the determinant of the reduced matrix.

use suspension_escape::open::Hole;
use suspension_escape::suspension::build_suspension;
use suspension_escape::zeta::zeta_op_factorized;
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::new(&[
        vec![0.5, 0.3, 0.2],
        vec![0.2, 0.5, 0.3],
        vec![0.4, 0.0, 0.6],
    ])?;
    let phi = CylinderFunction::from_fn(&shift, 2, |w| 1.0 + ((w[0] + w[1]) % 2) as f64)?.with_lattice(1.0)?;
    let sys = build_suspension(&shift, &phi)?;

    for text in ["001", "0102", "1111", "2020"] {
        let hole = Hole::parse(&shift, text)?;
        match zeta_op_factorized(&sys, &hole) {
            Ok(b) => println!(
                "{text:>5}: deg {:>2}  deviation {:.2e}  cofactor gap {:.2e}  correlation {:?}  rho {:.12}",
                b.zeta_op.degree(),
                b.deviation,
                b.cofactor_gap(&sys),
                b.corr_poly.coefficients(),
                b.leading_zero()?.ln(),
            ),
            Err(e) => println!("{text:>5}: {e}"),
        }
    }
    Ok(())
}
