//! Simulated survival against the exact curve, a fitted rate bracket, and
//! the deviation probability of Birkhoff averages of the ceiling.

use suspension_escape::montecarlo::{
    estimate_deviation_prob, estimate_survival, exact_deviation_prob, fit_escape_rate, SimulationConfig,
};
use suspension_escape::open::{escape_rate_flow, survival_curve_flow, Hole};
use suspension_escape::suspension::build_suspension;
use suspension_escape::{CylinderFunction, MarkovShift};

fn main() -> suspension_escape::Result<()> {
    let shift = MarkovShift::full(2);
    let phi = CylinderFunction::from_fn(&shift, 1, |w| 1.0 + w[0] as f64)?.with_lattice(1.0)?;
    let sys = build_suspension(&shift, &phi)?;
    let hole = Hole::parse(&shift, "00")?;

    let cfg = SimulationConfig::new(42, 200_000, 40)?;
    let table = estimate_survival(&sys, &hole, &cfg)?;
    let exact = survival_curve_flow(&sys, &hole, cfg.t_max)?;
    for t in (0..=cfg.t_max).step_by(8) {
        println!("t {t:>3}  simulated {:.5} +- {:.5}  exact {:.5}", table.estimate[t], table.stderr[t], exact[t]);
    }
    let fit = fit_escape_rate(&table, 20..=40)?;
    let rho = escape_rate_flow(&sys, &hole)?.upper;
    println!("fitted [{:.4}, {:.4}], exact {rho:.4}", fit.lower, fit.upper);

    let ks = [5, 10, 15, 20, 25];
    let cfg = SimulationConfig::new(42, 100_000, 0)?;
    let dev = estimate_deviation_prob(&shift, &phi, 0.25, &ks, &cfg)?;
    for r in &dev.rows {
        let p = exact_deviation_prob(&shift, &phi, 0.25, r.k, dev.l_max)?;
        println!("k {:>3}  p_hat {:.5} +- {:.5}  exact {p:.5}", r.k, r.p_hat, r.stderr);
    }
    println!("decay per step {:?}", dev.zeta_hat);
    Ok(())
}
