use std::f64::consts::PI;
use std::sync::Arc;

use heat_threshold::nonlinearity::NonlinearitySpec;
use heat_threshold::quadrature::{integrate, QuadOptions};
use heat_threshold::radial::{
    apply_semigroup, evolve, semigroup_at, semigroup_at_with_breaks, step_imex, ul_norm, window_integral,
    EvolveOptions, OuterBoundary, RadialField, RadialGrid, RadialLaplacian, Reaction, SemigroupMatrix, StopReason,
};
use heat_threshold::scalar::unit_ball_volume;
use heat_threshold::singular::{build_singular, SingularOptions};
use proptest::prelude::*;

fn gaussian(dim: usize, t: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| (4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// `C^1` bump supported in `[0, b]`.
fn bump(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| if r < b { a * (1.0 - (r / b).powi(2)).powi(2) } else { 0.0 }
}

#[test]
fn gaussian_evolves_to_gaussian() {
    for dim in [3, 4, 5, 7] {
        for (s, t) in [(0.05, 0.1), (0.2, 0.3), (0.01, 1.0)] {
            let want = gaussian(dim, s + t);
            for r in [0.0, 0.1, 0.5, 1.0, 2.0] {
                let got = semigroup_at(dim, t, r, gaussian(dim, s), 1e-12).unwrap();
                assert!((got - want(r)).abs() <= 1e-9 * want(0.0), "N={dim} s={s} t={t} r={r}: {got} vs {}", want(r));
            }
        }
    }
}

#[test]
fn matrix_weights_agree_with_pointwise_quadrature() {
    for dim in [3, 5] {
        let g = Arc::new(RadialGrid::uniform(dim, 6.0, 120, OuterBoundary::Neumann).unwrap());
        let u = RadialField::from_fn(g.clone(), bump(2.0, 1.5)).unwrap();
        for t in [1e-3, 0.05, 0.5] {
            let via_matrix = apply_semigroup(&u, t).unwrap();
            for (i, &r) in g.nodes().iter().enumerate().step_by(7) {
                let direct = semigroup_at(dim, t, r, |x| u.eval(x), 1e-12).unwrap();
                assert!((via_matrix.values[i] - direct).abs() < 1e-9, "N={dim} t={t} r={r}");
            }
        }
    }
}

#[test]
fn kernel_rows_have_unit_mass() {
    let g = RadialGrid::<f64>::graded(3, 10.0, 1e-3, 20, 60, OuterBoundary::Neumann).unwrap();
    for t in [1e-4, 1e-2, 1.0] {
        let m = SemigroupMatrix::new(&g, t).unwrap();
        for i in 0..g.len() {
            assert!((m.row_mass(i) - 1.0).abs() < 1e-10, "t={t} row {i}: {}", m.row_mass(i));
        }
    }
}

#[test]
fn smoothing_constant_is_cap_independent() {
    // sup S(t)u0 <= C (t^{-N/2} + 1) |u0|_{L^1_ul} for the truncated singular profile
    let spec = NonlinearitySpec::pure_power(3.0f64).unwrap();
    let table = build_singular(&spec, 5, 1e-3, 10.0, &SingularOptions::default()).unwrap();
    let g = Arc::new(RadialGrid::graded(5, 8.0, 1e-5, 40, 60, OuterBoundary::DirichletValue(table.u_at(8.0))).unwrap());
    let mut consts = Vec::new();
    for cap in [1e4, 1e5] {
        let u0 = table.to_field(g.clone(), cap).unwrap();
        let l1 = ul_norm(&u0, 1.0).unwrap().value;
        let c = [1e-3f64, 1e-2, 1e-1, 1.0]
            .iter()
            .map(|&t| apply_semigroup(&u0, t).unwrap().sup() / ((t.powf(-2.5) + 1.0) * l1))
            .fold(0.0, f64::max);
        consts.push(c);
    }
    assert!(consts[0].is_finite() && consts[0] > 0.0);
    assert!((consts[0] / consts[1] - 1.0).abs() < 0.05, "{consts:?}");
}

#[test]
fn strong_continuity_in_the_uniformly_local_norm() {
    let spec = NonlinearitySpec::power_exp(5.0f64, 2.0).unwrap();
    let table = build_singular(&spec, 3, 1e-3, 10.0, &SingularOptions::default()).unwrap();
    let g = Arc::new(RadialGrid::graded(3, 6.0, 1e-3, 30, 80, OuterBoundary::DirichletValue(table.u_at(6.0))).unwrap());
    let u0 = table.to_field(g, 1e6).unwrap();
    let dist: Vec<f64> = [1e-2f64, 1e-3, 1e-4]
        .iter()
        .map(|&t| {
            let st = apply_semigroup(&u0, t).unwrap();
            let diff: Vec<f64> = st.values.iter().zip(&u0.values).map(|(a, b)| (a - b).abs()).collect();
            ul_norm(&u0.with_values(diff).unwrap(), 1.0).unwrap().value
        })
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
}

#[test]
fn unit_window_of_constants() {
    for dim in [3, 4, 5, 6] {
        let g = Arc::new(RadialGrid::uniform(dim, 5.0, 50, OuterBoundary::Neumann).unwrap());
        let one = RadialField::constant(g, 1.0).unwrap();
        let want: f64 = unit_ball_volume(dim);
        for p in [1.0, 2.0, 5.0] {
            let est = ul_norm(&one, p).unwrap();
            assert!((est.window_integral - want).abs() < 1e-9, "N={dim}");
        }
        assert!((window_integral(&one, 1.0, 2.5).unwrap() - want).abs() < 1e-9);
    }
    let g = Arc::new(RadialGrid::uniform(3, 5.0, 50, OuterBoundary::Neumann).unwrap());
    assert!((ul_norm(&RadialField::constant(g, 1.0).unwrap(), 1.0).unwrap().value - 4.0 * PI / 3.0).abs() < 1e-9);
}

#[test]
fn window_integral_against_shell_quadrature() {
    // |x|^2 over B(z, 1) with |z| = 2: shells of radius rho meet the ball in a cap
    let g = Arc::new(RadialGrid::uniform(3, 5.0, 500, OuterBoundary::Neumann).unwrap());
    let u = RadialField::from_fn(g, |r| r * r).unwrap();
    // exact: int_B |x|^2 = |z|^2 vol(B) + int_B |y|^2 = 4 (4 pi/3) + 4 pi/5
    let want = 16.0 * PI / 3.0 + 4.0 * PI / 5.0;
    let got = window_integral(&u, 1.0, 2.0).unwrap();
    assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
}

#[test]
fn stationarity_residual_halves_under_refinement() {
    for (spec, dim) in
        [(NonlinearitySpec::power_exp(5.0, 2.0).unwrap(), 3), (NonlinearitySpec::pure_power(3.0f64).unwrap(), 5)]
    {
        let table = build_singular(&spec, dim, 1e-4, 10.0, &SingularOptions::default()).unwrap();
        let mut g = RadialGrid::graded(dim, 4.0, 1e-2, 20, 40, OuterBoundary::DirichletValue(table.u_at(4.0))).unwrap();
        let mut prev: Option<f64> = None;
        for _ in 0..3 {
            let field = table.to_field(Arc::new(g.clone()), 1e6).unwrap();
            let lu = RadialLaplacian::new(&g).apply(&field.values, g.outer);
            let l1: f64 = (0..g.len() - 1).map(|i| (lu[i] + spec.f(field.values[i])).abs() * g.volume(i)).sum();
            if let Some(p) = prev {
                assert!(l1 <= 0.5 * p, "N={dim}: {l1} after {p}");
            }
            prev = Some(l1);
            g = g.refined();
        }
    }
}

#[test]
fn pure_diffusion_conserves_mass_on_a_large_domain() {
    let g = Arc::new(RadialGrid::uniform(3, 12.0, 600, OuterBoundary::Neumann).unwrap());
    let u0 = RadialField::from_fn(g.clone(), bump(1.0, 1.0)).unwrap();
    let m0 = u0.cell_integral(|u| u);
    let opts = EvolveOptions { horizon: 0.5, record_ul_norm: false, keep_snapshots: false, ..EvolveOptions::default() };
    let ev = evolve(&u0, Reaction::Off, &opts).unwrap();
    assert_eq!(ev.stop, StopReason::Horizon);
    assert!((ev.last.cell_integral(|u| u) / m0 - 1.0).abs() < 1e-10);
    // continuous mass of the bump: 4 pi int_0^1 (1 - r^2)^2 r^2 dr = 32 pi / 105
    let exact =
        integrate(|r: f64| 4.0 * PI * bump(1.0, 1.0)(r) * r * r, 0.0, 1.0, QuadOptions::relative(1e-13)).unwrap().value;
    assert!((exact - 32.0 * PI / 105.0).abs() < 1e-12);
    // nodal quadrature of the bump is second order in h = 0.02
    assert!((m0 / exact - 1.0).abs() < 1e-3);
}

fn small_grid() -> Arc<RadialGrid<f64>> {
    Arc::new(RadialGrid::uniform(3, 3.0, 30, OuterBoundary::Neumann).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn imex_step_preserves_order(
        base in prop::collection::vec(0.0f64..1.5, 31),
        extra in prop::collection::vec(0.0f64..0.5, 31),
        frac in 0.05f64..1.0,
    ) {
        let spec = NonlinearitySpec::power_exp(5.0, 2.0).unwrap();
        let g = small_grid();
        let a = RadialField::new(g.clone(), base.clone()).unwrap();
        let b = RadialField::new(g, base.iter().zip(&extra).map(|(x, y)| x + y).collect()).unwrap();
        let dt = frac * 0.5 / spec.df(b.sup());
        let sa = step_imex(&a, Reaction::On(&spec), dt).unwrap();
        let sb = step_imex(&b, Reaction::On(&spec), dt).unwrap();
        for (x, y) in sa.values.iter().zip(&sb.values) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn steps_and_semigroup_keep_sign(values in prop::collection::vec(0.0f64..3.0, 31), t in 1e-4f64..0.5) {
        let spec = NonlinearitySpec::cutoff_exp(20.0).unwrap();
        let u = RadialField::new(small_grid(), values).unwrap();
        let dt = 0.5 / spec.df(u.sup()).max(1.0);
        prop_assert!(step_imex(&u, Reaction::On(&spec), dt).unwrap().values.iter().all(|&v| v >= 0.0));
        prop_assert!(step_imex(&u, Reaction::Off, t).unwrap().values.iter().all(|&v| v >= 0.0));
        prop_assert!(apply_semigroup(&u, t).unwrap().values.iter().all(|&v| v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup_property(a in 0.1f64..5.0, b in 0.3f64..2.0, s in 0.01f64..0.3, t in 0.01f64..0.3, r in 0.0f64..3.0) {
        let u = bump(a, b);
        let inner = |x: f64| semigroup_at_with_breaks(3, s, x, &u, &[b], 1e-11).unwrap();
        let twice = semigroup_at(3, t, r, inner, 1e-10).unwrap();
        let once = semigroup_at_with_breaks(3, s + t, r, &u, &[b], 1e-12).unwrap();
        prop_assert!((twice - once).abs() <= 1e-7 * a, "{twice} vs {once}");
    }

    #[test]
    fn semigroup_conserves_mass(a in 0.1f64..5.0, b in 0.3f64..2.0, t in 0.01f64..0.5) {
        let u = bump(a, b);
        let m0 = integrate(|r: f64| u(r) * r * r, 0.0, b, QuadOptions::relative(1e-12)).unwrap().value;
        let hi = b + 20.0 * t.sqrt();
        let m = integrate(|r: f64| semigroup_at_with_breaks(3, t, r, &u, &[b], 1e-12).unwrap() * r * r, 0.0, hi, QuadOptions::relative(1e-11)).unwrap().value;
        prop_assert!((m / m0 - 1.0).abs() <= 1e-8, "{m} vs {m0}");
    }
}
