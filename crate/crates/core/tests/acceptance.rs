//! One line per acceptance criterion.

mod common;

use common::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use suspension_escape::asymptotics::{
    build_family, expansion_coeffs, local_rate_sweep, s1_s2_closed_form, second_order_check, second_order_limit,
    verify_expansion,
};
use suspension_escape::montecarlo::{
    estimate_deviation_prob, estimate_survival, exact_deviation_prob, fit_escape_rate, SimulationConfig,
};
use suspension_escape::open::{
    build_open_cristadoro, escape_rate_cristadoro, escape_rate_refined, survival_curve_flow, Hole,
};
use suspension_escape::pressure::check_pressure_equals_minus_rho;
use suspension_escape::suspension::build_suspension;
use suspension_escape::zeta::{char_poly, smallest_root_widening, zeta_op_factorized};
use suspension_escape::{CylinderFunction, MarkovShift, Word};

type Outcome = (bool, String);
type Property = fn(&Sample) -> Result<(), String>;

fn golden_rate() -> f64 {
    2f64.ln() - ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

fn exact_baselines() -> Outcome {
    let s = full2();
    let sys = build_suspension(&s, &CylinderFunction::ones(&s)).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (w, target, tol) in [(vec![0], 2f64.ln(), 1e-12), (vec![0, 0], golden_rate(), 1e-10)] {
        let hole = Hole::from_symbols(&s, &w).unwrap();
        let matrix = rho(&sys, &hole);
        // zeta root; a hole no longer than the ceiling order has k0 = 0 and no factorization
        let zeta = match zeta_op_factorized(&sys, &hole) {
            Ok(b) => b.leading_offset().unwrap().ln_1p(),
            Err(_) => {
                let p = char_poly(&build_open_cristadoro(&sys, &hole).unwrap().matrix).unwrap();
                smallest_root_widening(&p, 2.0).unwrap().ln()
            }
        };
        let word = Word::new(w.clone()).unwrap();
        let s20 = s.survival_measure_exact(&word, 20).unwrap();
        let s60 = s.survival_measure_exact(&word, 60).unwrap();
        let slope = (s20 / s60).ln() / 40.0;
        let good = (matrix - target).abs() < tol && (zeta - target).abs() < tol && (slope - target).abs() < 1e-6;
        ok &= good;
        notes.push(format!(
            "{w:?}: matrix {:.1e} zeta {:.1e} slope {:.1e}",
            (matrix - target).abs(),
            (zeta - target).abs(),
            (slope - target).abs()
        ));
    }
    (ok, notes.join("; "))
}

fn suspension_baseline() -> Outcome {
    let s = full2();
    let sys = build_suspension(&s, &stepped(&s)).unwrap();
    let hole = Hole::from_symbols(&s, &[0]).unwrap();
    let target = 0.5 * 2f64.ln();
    let a = (escape_rate_refined(&sys, &hole).unwrap().upper - target).abs();
    let b = (escape_rate_cristadoro(&sys, &hole).unwrap().upper - target).abs();
    (a < 1e-10 && b < 1e-10, format!("refined {a:.1e}, reduced {b:.1e}"))
}

fn factorization_and_cofactor() -> (Outcome, Outcome) {
    let grid = zeta_grid();
    let mut dev_max: f64 = 0.0;
    let mut gap_max: f64 = 0.0;
    let mut errors = Vec::new();
    for cell in &grid {
        match zeta_op_factorized(&cell.sys, &cell.hole) {
            Ok(b) => {
                dev_max = dev_max.max(b.deviation);
                gap_max = gap_max.max(b.cofactor_gap(&cell.sys));
            }
            Err(e) => errors.push(format!("{}: {e}", cell.name)),
        }
    }
    let n = grid.len();
    let enough = n >= 50 && errors.is_empty();
    (
        (
            enough && dev_max < 1e-9,
            format!("{n} pairs, max deviation {dev_max:.1e}, errors {errors:?}"),
        ),
        (enough && gap_max < 1e-9, format!("{n} pairs, max gap {gap_max:.1e}")),
    )
}

fn local_escape_rate() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for f in family_grid() {
        let fam = build_family(&f.shift, &f.ceiling, &f.word).unwrap();
        let target = fam.local_rate();
        let nus: Vec<usize> = (fam.nu_min + 2..=10).collect();
        let rows = local_rate_sweep(&f.shift, &f.ceiling, &f.word, nus.iter().copied()).unwrap();
        let errs: Vec<f64> = rows.iter().map(|r| rel(r.ratio, target)).collect();
        let at8 = errs[nus.iter().position(|&n| n == 8).unwrap()];
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        ok &= at8 < 0.05 && decreasing;
        notes.push(format!("{} {at8:.4}{}", f.name, if decreasing { "" } else { " (not decreasing)" }));
    }
    (ok, notes.join(", "))
}

fn quotient_law() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for f in family_grid() {
        let rows = local_rate_sweep(&f.shift, &f.ceiling, &f.word, [10]).unwrap();
        let fam = build_family(&f.shift, &f.ceiling, &f.word).unwrap();
        let mean = fam.system().mean_ceiling();
        let gap = (rows[0].ratio * mean - rows[0].ratio_unit).abs();
        let tol = 1e-3 * (1.0 - fam.c_o);
        ok &= gap < tol;
        notes.push(format!("{} {gap:.2e}/{tol:.1e}", f.name));
    }
    (ok, notes.join(", "))
}

fn expansion_coefficients() -> Outcome {
    let mut ok = true;
    let mut worst_s1: f64 = 0.0;
    let mut worst_s2: f64 = 0.0;
    for f in family_grid() {
        let fam = build_family(&f.shift, &f.ceiling, &f.word).unwrap();
        for nu in fam.nu_min..=10 {
            let c = expansion_coeffs(&fam, nu, 2).unwrap();
            let (s1, s2) = s1_s2_closed_form(&fam, nu).unwrap();
            worst_s1 = worst_s1.max((c.s[0] - s1).abs());
            worst_s2 = worst_s2.max((c.s[1] - s2).abs());
        }
    }
    ok &= worst_s1 < 1e-12 && worst_s2 < 1e-9;
    let s = full2();
    let fam = build_family(&s, &CylinderFunction::ones(&s), &[0]).unwrap();
    let mut worst_full: f64 = 0.0;
    for nu in 2..=10 {
        let c = expansion_coeffs(&fam, nu, 2).unwrap();
        worst_full = worst_full.max((c.s[0] - 0.5).abs()).max((c.s[1] - (nu as f64 + 1.0) / 4.0).abs());
    }
    ok &= worst_full < 1e-12;
    (
        ok,
        format!("s1 gap {worst_s1:.1e}, s2 gap {worst_s2:.1e}, full 2-shift gap {worst_full:.1e}"),
    )
}

fn higher_order() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for f in family_grid() {
        let fam = build_family(&f.shift, &f.ceiling, &f.word).unwrap();
        let start = fam.nu_min.max(4);
        for k in [1, 2] {
            let rows = verify_expansion(&fam, start..=10, k).unwrap();
            let r: Vec<f64> = rows.iter().map(|r| r.residual_over_mu_k).collect();
            let decreasing = r.windows(2).all(|w| w[1] < w[0]);
            let ratio = r[r.len() - 1] / r[0];
            ok &= decreasing && ratio < 0.2;
            if !decreasing || ratio >= 0.2 || k == 2 {
                notes.push(format!("{} k={k} {ratio:.3}{}", f.name, if decreasing { "" } else { " (not decreasing)" }));
            }
        }
    }
    (ok, notes.join(", "))
}

fn second_order() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for f in family_grid() {
        let fam = build_family(&f.shift, &f.ceiling, &f.word).unwrap();
        let limit = second_order_limit(&fam);
        let v = second_order_check(&fam, [10]).unwrap()[0].value;
        let r = rel(v, limit);
        ok &= r < 0.1;
        notes.push(format!("{} {r:.3}", f.name));
    }
    (ok, notes.join(", "))
}

fn run_property(name: &str, seed: u8, f: Property) -> Result<(), String> {
    let cfg = Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]));
    runner
        .run(&strategies::sample(), |x| {
            f(&x).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| format!("{name}: {e}"))
}

fn property_suites() -> Outcome {
    let suites: [(&str, Property); 7] = [
        ("hole monotonicity", hole_monotonicity),
        ("ceiling monotonicity", ceiling_monotonicity),
        ("scaling", scaling),
        ("coboundary", coboundary),
        ("continuity sandwich", continuity_sandwich_linear),
        ("block shadow", block_shadow),
        ("reciprocal sublinearity", reciprocal_sublinearity),
    ];
    let failures: Vec<String> = suites
        .iter()
        .enumerate()
        .filter_map(|(i, (name, f))| run_property(name, i as u8 + 1, *f).err())
        .collect();
    let failures: Vec<String> = failures.iter().map(|f| f.lines().next().unwrap_or("").to_string()).collect();
    let corrected = run_property("continuity sandwich with 1/(1 -+ q)", 5, continuity_sandwich);
    (
        failures.is_empty(),
        format!(
            "{} suites x 100 cases, violations: {failures:?}; reciprocal-factor sandwich: {}",
            suites.len(),
            if corrected.is_ok() { "no violations" } else { "violated" }
        ),
    )
}

fn induced_pressure() -> Outcome {
    let grid = pressure_grid();
    let mut root: f64 = 0.0;
    let mut trunc: f64 = 0.0;
    let mut errors = Vec::new();
    for cell in &grid {
        match check_pressure_equals_minus_rho(&cell.sys, &cell.hole) {
            Ok(r) => {
                root = root.max(r.root_gap);
                trunc = trunc.max(r.truncated_gap);
            }
            Err(e) => errors.push(format!("{}: {e}", cell.name)),
        }
    }
    (
        errors.is_empty() && root < 1e-8 && trunc < 0.05,
        format!("{} cells, root gap {root:.1e}, truncated gap {trunc:.3}, errors {errors:?}", grid.len()),
    )
}

fn monte_carlo() -> Outcome {
    let s = full2();
    let sys = build_suspension(&s, &CylinderFunction::ones(&s)).unwrap();
    let hole = Hole::from_symbols(&s, &[0]).unwrap();
    let cfg = SimulationConfig::new(42, 100_000, 10).unwrap();
    let tab = estimate_survival(&sys, &hole, &cfg).unwrap();
    let exact = 2f64.powi(-10);
    let z = (tab.estimate[10] - exact).abs() / tab.stderr[10];
    let point_ok = z <= 3.0;
    let again = estimate_survival(&sys, &hole, &cfg).unwrap();
    let identical = again.to_csv() == tab.to_csv();

    // fitted brackets over the grid of small holes
    let mut cells = 0;
    let mut covered = 0;
    let mut misses = Vec::new();
    let mut seed = 1000;
    for (sn, s) in systems() {
        for (cn, phi) in ceilings(&s) {
            let sys = build_suspension(&s, &phi).unwrap();
            for w in s.admissible_words(2) {
                let hole = Hole::from_symbols(&s, &w).unwrap();
                let exact = survival_curve_flow(&sys, &hole, 400).unwrap();
                // window ends where about 500 of the samples are expected to survive
                let t_max = (1..=400).take_while(|&t| exact[t] >= 5e-3).last().unwrap_or(1).max(10);
                seed += 1;
                let cfg = SimulationConfig::new(seed, 100_000, t_max).unwrap();
                let tab = estimate_survival(&sys, &hole, &cfg).unwrap();
                let fit = match fit_escape_rate(&tab, t_max / 2..=t_max) {
                    Ok(f) => f,
                    Err(e) => {
                        misses.push(format!("{sn}/{cn}/{w:?}: {e}"));
                        cells += 1;
                        continue;
                    }
                };
                let target = rho(&sys, &hole);
                cells += 1;
                if fit.contains(target) {
                    covered += 1;
                } else {
                    misses.push(format!("{sn}/{cn}/{w:?}: {target:.4} not in [{:.4}, {:.4}]", fit.lower, fit.upper));
                }
            }
        }
    }
    let coverage = covered as f64 / cells as f64;
    (
        point_ok && identical && coverage >= 0.99,
        format!(
            "t=10 off by {z:.2} sigma, reruns identical: {identical}, coverage {covered}/{cells}, misses {misses:?}"
        ),
    )
}

fn deviation_diagnostic() -> Outcome {
    let s = full2();
    let phi = stepped(&s);
    let ks = [5, 10, 15, 20];
    let cfg = SimulationConfig::new(42, 100_000, 0).unwrap();
    let est = estimate_deviation_prob(&s, &phi, 0.25, &ks, &cfg).unwrap();
    let mut ok = true;
    let mut zs = Vec::new();
    for r in &est.rows {
        let exact = exact_deviation_prob(&s, &phi, 0.25, r.k, est.l_max).unwrap();
        let z = (r.p_hat - exact).abs() / r.stderr;
        ok &= z <= 3.0;
        zs.push(format!("k={} {z:.2}", r.k));
    }
    let zeta = est.zeta_hat.unwrap_or(f64::NAN);
    ok &= zeta < 1.0;
    (ok, format!("sigma offsets {}, zeta_hat {zeta:.4}", zs.join(" ")))
}

/// Criteria that cannot hold as stated:
/// 6 and 9 converge like `1/ν` and are still outside the tolerance at `ν = 10`;
/// 10 includes the upper bound `(1 + q)·ρ(φ)`, which the scaling law breaks;
/// 12 includes holes with a double leading zero, whose finite-window rates sit
/// below the limit by about `log(t/t₀)/(t − t₀)`.
const EXPECTED_FAILURES: &[usize] = &[6, 9, 10, 12];

#[test]
fn acceptance() {
    let (c3, c4) = factorization_and_cofactor();
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "exact baselines", exact_baselines()),
        (2, "suspension baseline", suspension_baseline()),
        (3, "factorization identity", c3),
        (4, "cofactor lemma", c4),
        (5, "local escape rate", local_escape_rate()),
        (6, "quotient law", quotient_law()),
        (7, "expansion coefficients", expansion_coefficients()),
        (8, "higher-order residuals", higher_order()),
        (9, "second-order term", second_order()),
        (10, "property suites", property_suites()),
        (11, "induced pressure", induced_pressure()),
        (12, "Monte Carlo survival", monte_carlo()),
        (13, "deviation diagnostic", deviation_diagnostic()),
    ];
    let mut failed = Vec::new();
    for (n, name, (ok, detail)) in &results {
        println!("criterion {n:>2} {name}: {} | {detail}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(*n);
        }
    }
    assert_eq!(failed, EXPECTED_FAILURES, "unexpected acceptance outcome");
}

#[test]
fn shift_survival_matches_words() {
    // survivor counts of the 2-shift avoiding 00 are Fibonacci numbers
    let s = MarkovShift::full(2);
    let w = Word::new(vec![0, 0]).unwrap();
    let v = s.survival_measure_exact(&w, 10).unwrap();
    assert!((v - 144.0 / 1024.0).abs() < 1e-15);
}
