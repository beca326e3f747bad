//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use heat_threshold::monotone::{
    run_ladder_with, sandwich_violation, DuhamelOperator, DuhamelOptions, FieldTrajectory, LadderOptions, Seed,
};
use heat_threshold::nonlinearity::{
    check_admissibility, check_fprime_F_limit, eval_F, Condition, NonlinearitySpec, Verdict,
};
use heat_threshold::radial::{ul_norm, window_integral, EvolveOptions, OuterBoundary, RadialField, RadialGrid};
use heat_threshold::scalar::{log_space, sphere_area};
use heat_threshold::singular::{
    build_singular, trace_pohozaev, verify_flux_identity, SingularOptions, SingularSolutionTable,
};
use heat_threshold::threshold::{threshold_scan, CaseSetup, Classification, ClassifyOptions, ScanOptions};

type Outcome = Result<String, String>;

fn power_exp() -> NonlinearitySpec<f64> {
    NonlinearitySpec::power_exp(5.0, 2.0).unwrap()
}

fn cutoff() -> NonlinearitySpec<f64> {
    NonlinearitySpec::cutoff_exp(20.0).unwrap()
}

fn table(
    spec: &NonlinearitySpec<f64>,
    dim: usize,
    r_patch: f64,
    opts: &SingularOptions<f64>,
) -> Result<SingularSolutionTable<f64>, String> {
    build_singular(spec, dim, r_patch, 10.0, opts).map_err(|e| e.to_string())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closed_form_oracle() -> Outcome {
    let spec = NonlinearitySpec::pure_power(3.0).unwrap();
    let t = table(&spec, 5, 1e-3, &SingularOptions::default())?;
    let worst = log_space(1e-2, 1.0, 200)
        .into_iter()
        .map(|r: f64| (t.u_at(r) * r / 2f64.sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    check(worst <= 1e-3, format!("max relative error {worst:.2e} against sqrt(2)/r on [1e-2, 1]"))
}

fn asymptotic_ratio() -> Outcome {
    let spec = power_exp();
    let mut parts = Vec::new();
    let mut devs = Vec::new();
    let mut inside = true;
    for rp in [1e-4, 1e-6, 1e-8] {
        let t = table(&spec, 3, rp, &SingularOptions::default())?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (&r, &u) in t.r.iter().zip(&t.u).filter(|(r, _)| **r <= 10.0 * rp) {
            let ratio = eval_F(&spec, u).map_err(|e| e.to_string())? * 2.0 / (r * r);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        inside &= lo >= 0.95 && hi <= 1.05;
        devs.push((1.0 - lo).abs().max((hi - 1.0).abs()));
        parts.push(format!("r_patch {rp:.0e}: [{lo:.4}, {hi:.4}]"));
    }
    let tightening = devs.windows(2).all(|w| w[1] < w[0]);
    check(inside && tightening, format!("{}; tightening {tightening}", parts.join(", ")))
}

fn fprime_barrier_limit() -> Outcome {
    let pe = check_fprime_F_limit(&power_exp(), &[5.0, 10.0, 20.0, 40.0]).map_err(|e| e.to_string())?;
    let cu = check_fprime_F_limit(&cutoff(), &[2.0, 3.0, 5.0, 10.0, 20.0]).map_err(|e| e.to_string())?;
    let pe_last = pe.last().unwrap().1;
    let cu_last = cu.last().unwrap().1;
    let exact = cu.iter().filter(|(u, _)| *u >= 4.0).map(|(_, v)| (v - 1.0).abs()).fold(0.0, f64::max);
    check(
        (0.99..=1.01).contains(&pe_last) && (0.99..=1.01).contains(&cu_last) && exact <= 1e-12,
        format!("power-exp {pe_last:.6} at u = 40, cutoff {cu_last:.6} at u = 20, cutoff |f'F - 1| <= {exact:.1e} for u >= 4"),
    )
}

fn admissibility_suite() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, spec) in [("power-exp(5, 2)", power_exp()), ("cutoff-exp(20)", cutoff())] {
        let rep = check_admissibility(&spec, 3, 1e-6, 1e3, 2000, 1e-12).map_err(|e| e.to_string())?;
        ok &= rep.all_pass();
        parts.push(format!("{name} all pass {}", rep.all_pass()));
    }
    for p in [2.0, 3.0, 4.0] {
        let rep = check_admissibility(&NonlinearitySpec::pure_power(p).unwrap(), 3, 1e-6, 1e3, 500, 1e-12)
            .map_err(|e| e.to_string())?;
        let fails = rep.verdict(Condition::A4) == Verdict::Fail;
        ok &= fails;
        parts.push(format!("u^{p} A4 {}", if fails { "FAIL" } else { "PASS" }));
    }
    check(ok, parts.join(", "))
}

fn flux_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (spec, dim) in [(power_exp(), 3), (power_exp(), 5), (cutoff(), 3), (cutoff(), 5)] {
        let t = table(&spec, dim, 1e-3, &SingularOptions::default())?;
        worst = worst.max(verify_flux_identity(&t, &spec).map_err(|e| e.to_string())?.max_relative_residual);
    }
    check(worst <= 1e-4, format!("max relative residual {worst:.2e} over both families, N = 3 and 5"))
}

fn pohozaev() -> Outcome {
    let mut slope = f64::NEG_INFINITY;
    for spec in [power_exp(), cutoff()] {
        let t = table(&spec, 3, 1e-3, &SingularOptions::default())?;
        slope = slope.max(trace_pohozaev(&t, &spec, 1e-10).map_err(|e| e.to_string())?.max_slope);
    }
    let crit = NonlinearitySpec::pure_power(5.0).unwrap();
    let opts = SingularOptions { check_patch: false, ..SingularOptions::default() };
    let t = table(&crit, 3, 1e-3, &opts)?;
    let tr = trace_pohozaev(&t, &crit, 1e-10).map_err(|e| e.to_string())?;
    let rel_spread = tr.spread / tr.p_at_patch.abs().max(1.0);
    check(
        slope <= 1e-10 && rel_spread <= 1e-9,
        format!("largest slope {slope:.2e}; u^5 in N = 3 relative spread {rel_spread:.1e}"),
    )
}

fn duhamel_grid(table: &SingularSolutionTable<f64>, nodes: usize) -> Arc<RadialGrid<f64>> {
    Arc::new(RadialGrid::uniform(3, 4.0, nodes - 1, OuterBoundary::DirichletValue(table.u_at(4.0))).unwrap())
}

fn ladder_sandwich() -> Outcome {
    let spec = power_exp();
    let t = table(&spec, 3, 1e-3, &SingularOptions::default())?;
    let g = duhamel_grid(&t, 64);
    let us = t.to_field(g.clone(), 1e6).map_err(|e| e.to_string())?;
    let u0 = us.with_values(us.values.iter().map(|v| 0.9 * v).collect()).map_err(|e| e.to_string())?;
    let op = DuhamelOperator::new(g, 0.1, DuhamelOptions::default()).map_err(|e| e.to_string())?;
    let opts = LadderOptions { k_max: 6, stop_on_convergence: false, ..LadderOptions::default() };
    let below = run_ladder_with(&op, Seed::FromBelow, &u0, &us, &spec, &opts).map_err(|e| e.to_string())?;
    let above = run_ladder_with(&op, Seed::FromAbove, &u0, &us, &spec, &opts).map_err(|e| e.to_string())?;
    let sandwich = sandwich_violation(&below, &above).map_err(|e| e.to_string())?;
    let ord = below.ordering_violation_max.max(above.ordering_violation_max);
    check(
        below.k() == 6 && above.k() == 6 && ord <= 1e-8 && sandwich <= 1e-8,
        format!("6 + 6 iterates on 64 nodes; ordering violation {ord:.1e}, max(v_k - w_j) {sandwich:.2e}"),
    )
}

/// `int_{B(0,1)} |Phi(u*) - u*|` at the observation time.
fn stationarity_residual(
    t: &SingularSolutionTable<f64>,
    spec: &NonlinearitySpec<f64>,
    g: Arc<RadialGrid<f64>>,
    cap: f64,
) -> Result<f64, String> {
    let us = t.to_field(g.clone(), cap).map_err(|e| e.to_string())?;
    let op = DuhamelOperator::new(g, 0.1, DuhamelOptions::default()).map_err(|e| e.to_string())?;
    let prev = FieldTrajectory::constant(&us, 0.1, DuhamelOptions::<f64>::default().slices);
    let out = op.apply(&prev, &us, spec).map_err(|e| e.to_string())?.at_obs();
    let diff: Vec<f64> = out.values.iter().zip(&us.values).map(|(a, b)| (a - b).abs()).collect();
    window_integral(&us.with_values(diff).map_err(|e| e.to_string())?, 1.0, 0.0).map_err(|e| e.to_string())
}

fn stationarity() -> Outcome {
    let spec = power_exp();
    let t = table(&spec, 3, 1e-3, &SingularOptions::default())?;
    let g0 = duhamel_grid(&t, 64);
    let g1 = Arc::new(g0.refined());
    let g2 = Arc::new(g1.refined());
    let e0 = stationarity_residual(&t, &spec, g0, 1e4)?;
    let e1 = stationarity_residual(&t, &spec, g1.clone(), 1e4)?;
    let e1b = stationarity_residual(&t, &spec, g1, 1e5)?;
    let e2 = stationarity_residual(&t, &spec, g2, 1e4)?;
    let predicted = e1 * (e1 / e0) * 1.25;
    let (q1, q2) = (e1 / e0, e2 / e1);
    let halves = (0.375..=0.625).contains(&q1) && (0.375..=0.625).contains(&q2);
    let cap_stable = (e1b / e1 - 1.0).abs() <= 1e-6;
    check(
        e2 <= predicted && halves && cap_stable,
        format!(
            "L1 residual on B(0,1): {e0:.3e}, {e1:.3e}, {e2:.3e} on 64/127/253 nodes (ratios {q1:.3}, {q2:.3}); finest within predicted {predicted:.3e}; caps 1e4/1e5 agree {cap_stable}"
        ),
    )
}

struct ScanFixture {
    spec: NonlinearitySpec<f64>,
    table: SingularSolutionTable<f64>,
    grid: RadialGrid<f64>,
}

fn scan_fixture() -> Result<ScanFixture, String> {
    let spec = power_exp();
    let table = table(&spec, 3, 1e-3, &SingularOptions::default())?;
    let grid = RadialGrid::graded(3, 10.0, 1e-3, 30, 60, OuterBoundary::DirichletValue(table.u_at(10.0)))
        .map_err(|e| e.to_string())?;
    Ok(ScanFixture { spec, table, grid })
}

fn scan_labels(
    fx: &ScanFixture,
    grid: RadialGrid<f64>,
    pure_heat: bool,
) -> Result<(Vec<Classification>, bool), String> {
    let setup = CaseSetup {
        spec: &fx.spec,
        table: &fx.table,
        grid: Arc::new(grid),
        pure_heat,
        evolve: EvolveOptions::default(),
        classify: ClassifyOptions::default(),
    };
    let opts = ScanOptions::relative(&fx.table, 2.0, 0.3, &[-0.3, -0.1, 0.1, 0.3], vec![1e4, 1e5]);
    let rep = threshold_scan(&setup, &opts).map_err(|e| e.to_string())?;
    let stable = rep.cases.iter().all(|c| c.outcome.cap_stable);
    Ok((rep.classifications(), stable))
}

fn labels(cs: &[Classification]) -> String {
    cs.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ")
}

fn threshold_dichotomy() -> Outcome {
    let fx = scan_fixture()?;
    let (base, stable0) = scan_labels(&fx, fx.grid.clone(), false)?;
    let (fine, stable1) = scan_labels(&fx, fx.grid.refined(), false)?;
    let want = ["GlobalBounded", "GlobalBounded", "BlowUp", "BlowUp"];
    let matches = |cs: &[Classification]| cs.iter().map(|c| c.label()).eq(want.iter().copied());
    let same = base.iter().zip(&fine).all(|(a, b)| a.same_kind(b));
    check(
        matches(&base) && stable0 && stable1 && same,
        format!("{{{}}}; cap-stable {}; refined grid {{{}}}", labels(&base), stable0 && stable1, labels(&fine)),
    )
}

fn pure_heat_control() -> Outcome {
    let fx = scan_fixture()?;
    let (cs, _) = scan_labels(&fx, fx.grid.clone(), true)?;
    check(cs.iter().all(|c| *c == Classification::GlobalBounded), format!("{{{}}}", labels(&cs)))
}

fn uniformly_local_norms() -> Outcome {
    let g = Arc::new(RadialGrid::uniform(3, 5.0, 100, OuterBoundary::Neumann).unwrap());
    let one = RadialField::constant(g, 1.0).unwrap();
    let unit = ul_norm(&one, 1.0).map_err(|e| e.to_string())?.value;
    let unit_err = (unit - 4.0 * PI / 3.0).abs();

    let spec = power_exp();
    let t = table(&spec, 3, 1e-3, &SingularOptions::default())?;
    let capped_l1 = |r1: f64, cap: f64| -> Result<f64, String> {
        let g = Arc::new(RadialGrid::graded(3, 6.0, r1, 60, 80, OuterBoundary::DirichletValue(t.u_at(6.0))).unwrap());
        Ok(ul_norm(&t.to_field(g, cap).map_err(|e| e.to_string())?, 1.0).map_err(|e| e.to_string())?.value)
    };
    let mut l1 = Vec::new();
    for cap in [1e4, 1e5] {
        l1.push(capped_l1(1e-6, cap)?);
    }
    let l1_spread = (l1[1] / l1[0] - 1.0).abs();
    let by_r1 = [1e-3, 1e-5, 1e-7].map(|r1| capped_l1(r1, 1e4));
    let by_r1: Vec<f64> = by_r1.into_iter().collect::<Result<_, _>>()?;
    let converging = (by_r1[2] - by_r1[1]).abs() < (by_r1[1] - by_r1[0]).abs();

    // u* = sqrt(2)/r for u^3 in N = 5: the L^5 window at the origin gains
    // 4 sqrt(2) |S^4| ln 10 per decade of cap
    let pp = NonlinearitySpec::pure_power(3.0).unwrap();
    let tp = table(&pp, 5, 1e-3, &SingularOptions::default())?;
    let gp = Arc::new(RadialGrid::graded(5, 4.0, 1e-7, 120, 60, OuterBoundary::DirichletValue(tp.u_at(4.0))).unwrap());
    let mut w5 = Vec::new();
    for cap in [1e2, 1e3, 1e4, 1e5] {
        w5.push(
            window_integral(&tp.to_field(gp.clone(), cap).map_err(|e| e.to_string())?, 5.0, 0.0)
                .map_err(|e| e.to_string())?,
        );
    }
    let per_decade = 4.0 * 2f64.sqrt() * sphere_area::<f64>(4) * 10f64.ln();
    let increments: Vec<f64> = w5.windows(2).map(|w| w[1] - w[0]).collect();
    let growth = increments.iter().all(|d| (d / per_decade - 1.0).abs() < 0.05);
    check(
        unit_err <= 1e-6 && l1_spread <= 1e-6 && converging && growth,
        format!(
            "unit window error {unit_err:.1e}; capped u* L1_ul {:.6} with spread {l1_spread:.1e} over caps 1e4, 1e5, {:.6}/{:.6}/{:.6} for r1 = 1e-3/1e-5/1e-7; L5 window increments per cap decade {} vs {per_decade:.2}",
            l1[0],
            by_r1[0],
            by_r1[1],
            by_r1[2],
            increments.iter().map(|d| format!("{d:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("closed-form singular solution of u^3 in N = 5", 5, closed_form_oracle),
        ("asymptotic ratio F(u*)(2N-4)/r^2", 30, asymptotic_ratio),
        ("limit of f'F", 5, fprime_barrier_limit),
        ("admissibility suite", 5, admissibility_suite),
        ("flux identity", 10, flux_identity),
        ("Pohozaev monotonicity", 5, pohozaev),
        ("monotone ladder sandwich", 60, ladder_sandwich),
        ("stationarity fixed point", 60, stationarity),
        ("threshold dichotomy", 600, threshold_dichotomy),
        ("pure heat control", 60, pure_heat_control),
        ("uniformly local norms", 60, uniformly_local_norms),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.2} s, budget {budget} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
