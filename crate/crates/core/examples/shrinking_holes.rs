//! Holes shrinking to a periodic point: the expansion of the leading zero,
//! the local escape rate and the second-order term.

use suspension_escape::asymptotics::{
    build_family, expansion_csv, local_rate_sweep, second_order_check, second_order_limit, verify_expansion,
};
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::full(2);
    let ones = CylinderFunction::ones(&shift);
    let stepped = CylinderFunction::from_fn(&shift, 1, |w| 1.0 + w[0] as f64)?.with_lattice(1.0)?;

    let fam = build_family(&shift, &ones, &[0])?;
    print!("{}", expansion_csv(&verify_expansion(&fam, 2..=10, 2)?));

    for (name, phi, x) in [("1, x = 0", &ones, vec![0]), ("1 + 1[1], x = 1", &stepped, vec![1])] {
        let fam = build_family(&shift, phi, &x)?;
        println!("\nphi = {name}: predicted local rate {:.6}", fam.local_rate());
        for r in local_rate_sweep(&shift, phi, &x, [4, 6, 8, 10])? {
            println!("  nu {:>2}  rho/mu {:.6}  base rho/mu {:.6}", r.nu, r.ratio, r.ratio_unit);
        }
        println!("  second-order limit {:.6}", second_order_limit(&fam));
        for r in second_order_check(&fam, [6, 8, 10])? {
            println!("  nu {:>2}  value {:.6}", r.nu, r.value);
        }
    }
    Ok(())
}
