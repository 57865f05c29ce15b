//! Block chains of suspension flows, and how the ceiling changes the rate.

use suspension_escape::open::{escape_rate_cristadoro, escape_rate_refined, Hole};
use suspension_escape::pressure::{gibbs_potential, induced_pressure_via_root, WordCollection};
use suspension_escape::suspension::{build_suspension, rationalize_ceiling};
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::full(2);
    let stepped = CylinderFunction::from_fn(&shift, 1, |w| 1.0 + w[0] as f64)?.with_lattice(1.0)?;
    let sys = build_suspension(&shift, &stepped)?;
    println!("blocks of phi = 1 + 1[1]:");
    for (b, m) in sys.blocks().iter().zip(sys.block_measure()) {
        println!("  {:<6} mass {m}", b.label());
    }
    println!("mean ceiling {}", sys.mean_ceiling());

    let hole = Hole::parse(&shift, "0")?;
    let refined = escape_rate_refined(&sys, &hole)?.upper;
    let reduced = escape_rate_cristadoro(&sys, &hole)?.upper;
    println!("rho([0]) refined {refined:.15}, reduced {reduced:.15}, log(2)/2 = {:.15}", 2f64.ln() / 2.0);

    // scaling the ceiling by 1/2 doubles the rate
    let half = stepped.scaled(0.5);
    let rho_half = escape_rate_refined(&build_suspension(&shift, &half)?, &hole)?.upper;
    println!("rho with phi/2 = {rho_half:.15}");

    // a non-arithmetic ceiling, rounded onto a lattice
    let irrational = CylinderFunction::from_fn(&shift, 1, |w| if w[0] == 0 { 1.0 } else { 2f64.sqrt() })?;
    for eps in [0.2, 0.1, 0.02] {
        let (psi, err) = rationalize_ceiling(&irrational, eps)?;
        let sys = build_suspension(&shift, &psi)?;
        let rho = escape_rate_refined(&sys, &hole)?.upper;
        println!("eps {eps:<6} lattice {:<8} blocks {:<6} sup error {err:.2e} rho {rho:.10}",
            psi.lattice().unwrap_or(f64::NAN), sys.blocks().len());
    }
    // the pressure root needs no lattice
    let beta = induced_pressure_via_root(&gibbs_potential(&shift)?, &irrational, &WordCollection::new(hole))?;
    println!("unrounded ceiling rho {:.10}", -beta);
    Ok(())
}
