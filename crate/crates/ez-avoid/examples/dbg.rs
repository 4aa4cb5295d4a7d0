// scratch diagnostics (deleted before release)
use ez_avoid::scenario::{
    compute_time_bounds, solve_scenario_a, solve_scenario_b, solve_scenario_c,
    solve_scenario_d, sweep_c, ScenarioSpec, SolverOptions,
};
use ez_avoid::{EngagementZone, VehicleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let x0 = VehicleState::new(1.0, 3.0);
    let xf = VehicleState::new(-0.5, -3.0);
    let ez = EngagementZone::new(2.0).unwrap();
    let opts = SolverOptions::default();

    let t = Instant::now();
    let a = solve_scenario_a(&ScenarioSpec::min_time(x0, xf, 1.0, ez).unwrap(), &opts).unwrap();
    println!("A: tf = {:.12} status = {:?} evals = {} [{:?}]", a.tf, a.status.code, a.status.evals, t.elapsed());

    let t = Instant::now();
    let b = solve_scenario_b(&ScenarioSpec::avoid_zone(x0, xf, 1.0, ez).unwrap(), &opts).unwrap();
    println!("B: tf = {:.15} status = {:?} evals = {} arcs = {:?} [{:?}]", b.tf, b.status.code, b.status.evals, b.arc_pattern, t.elapsed());
    for c in &b.oracle_checks {
        println!("   {} = {:.3e} thr {:.1e} {}", c.name, c.value, c.threshold, if c.passed { "PASS" } else { "FAIL" });
    }

    for k in [0.0, 0.1, 1.0, 1000.0] {
        let t = Instant::now();
        let c = solve_scenario_c(&ScenarioSpec::penalized(x0, xf, 1.0, ez, k).unwrap(), &opts).unwrap();
        let ig = c.oracle_checks.iter().find(|o| o.name == "penalty_integral").unwrap().value;
        println!("C(k={k}): tf = {:.12} int_g = {:.3e} status = {:?} evals = {} [{:?}]", c.tf, ig, c.status.code, c.status.evals, t.elapsed());
    }

    let t = Instant::now();
    let d = solve_scenario_d(&ScenarioSpec::fixed_arrival(x0, xf, 1.0, ez, 6.25).unwrap(), &opts).unwrap();
    println!("D: J = {:.12} status = {:?} evals = {} terminal = {:?} [{:?}]", d.objective, d.status.code, d.status.evals, d.violations.terminal, t.elapsed());

    let t = Instant::now();
    let sweep = sweep_c(&ScenarioSpec::penalized(x0, xf, 1.0, ez, 1.0).unwrap(), &[0.1, 1.0, 10.0, 100.0], &opts).unwrap();
    println!("sweep [{:?}]:", t.elapsed());
    for r in &sweep {
        let ig = r.oracle_checks.iter().find(|o| o.name == "penalty_integral").unwrap().value;
        println!("   k = {:>6}: tf = {:.12} int_g = {:.4e}", r.spec.k_ez.unwrap(), r.tf, ig);
    }

    // random-instance ordering scan
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sampled = 0usize;
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    while sampled < 20 {
        let draw = |rng: &mut ChaCha8Rng| VehicleState::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let x0 = draw(&mut rng);
        let xf = draw(&mut rng);
        if x0.x.hypot(x0.y) <= ez.r_max * 1.05 || xf.x.hypot(xf.y) <= ez.r_max * 1.05
            || (x0.x - xf.x).hypot(x0.y - xf.y) < 1.0 {
            continue;
        }
        sampled += 1;
        let spec_c = ScenarioSpec::penalized(x0, xf, 1.0, ez, 1.0).unwrap();
        let (t_fa, t_fb) = compute_time_bounds(&spec_c, &opts).unwrap();
        let c = solve_scenario_c(&spec_c, &opts).unwrap();
        let excess = (t_fa - c.tf).max(c.tf - t_fb).max(0.0);
        worst = worst.max(excess);
        if excess > 1e-6 || c.status.code == ez_avoid::solver::SolveCode::NumericalFailure {
            println!("  instance {sampled}: ORDER excess {excess:.2e} status {:?}", c.status.code);
        }
    }
    println!("scan done, worst ordering excess = {worst:.2e} [{:?}]", t0.elapsed());
}
