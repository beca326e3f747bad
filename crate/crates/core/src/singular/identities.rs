//! Integral identities, the Pohozaev functional and growth envelopes of the
//! singular solution.

use serde::Serialize;

use super::SingularSolutionTable;
use crate::error::Result;
use crate::nonlinearity::{eval_ln_F, NonlinearitySpec};
use crate::quadrature::{integrate_to_infinity, GaussLegendre, QuadOptions};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Serialize)]
pub struct FluxReport {
    pub max_relative_residual: f64,
    pub residual_at_patch: f64,
    /// Flux carried by the asymptotic profile below the seeding radius.
    pub patch_contribution: f64,
    /// `(r, -r^{N-1} u', int_0^r f(u) s^{N-1} ds)`
    pub rows: Vec<(f64, f64, f64)>,
}

/// Compares `-r^{N-1} u*'(r)` with `int_0^r f(u*) s^{N-1} ds` at every
/// table radius.
///
/// Below the seeding radius the integral is taken over the asymptotic
/// profile in closed form: with `c = 2N-4` and `s^2 = c F(u)`,
/// `int_0^{r_seed} f(u) s^{N-1} ds = (c/2) int_{u_seed}^inf (c F(u))^{(N-2)/2} du`.
pub fn verify_flux_identity<T: Real>(
    table: &SingularSolutionTable<T>,
    spec: &NonlinearitySpec<T>,
) -> Result<FluxReport> {
    let dim = table.dim;
    let n: T = lit(dim as f64);
    let nm2: T = lit(dim as f64 - 2.0);
    let c: T = lit(2.0 * dim as f64 - 4.0);
    let half_nm2 = nm2 * lit(0.5);
    let path = &table.path;
    let s_seed = path.s_min();
    let u_seed = path.traj.y[0][0];
    let tight = spec.clone().with_accuracy(lit(1e-13));
    let g_seed = spec.g(u_seed);
    let dg = spec.dg(u_seed);
    let scale = if dg > T::zero() { dg.recip() } else { u_seed };
    let tail = integrate_to_infinity(
        |u: T| {
            let gu = spec.g(u);
            if !gu.is_finite() || gu - g_seed > lit(1500.0) {
                // F(u) <= F(u_seed) f(u_seed)/f(u) has underflowed
                return T::zero();
            }
            match eval_ln_F(&tight, u) {
                Ok(lf) => (half_nm2 * (c.ln() + lf)).exp(),
                Err(_) => T::nan(),
            }
        },
        u_seed,
        scale,
        QuadOptions::relative(lit(1e-12)),
    )?
    .value;
    let patch = c * lit(0.5) * tail;

    let gl = GaussLegendre::new(8);
    let mut rows = Vec::with_capacity(table.len());
    let mut cumulative = patch;
    let mut s_prev = s_seed;
    let mut worst = T::zero();
    let mut at_patch = T::zero();
    for (i, (&r, &du)) in table.r.iter().zip(&table.du).enumerate() {
        let s = r.ln();
        cumulative = cumulative + path.integrate_log(s_prev, s, &gl, |s, y| (n * s + spec.g(y[0])).exp());
        s_prev = s;
        let lhs = -r.powi(dim as i32 - 1) * du;
        let res = ((lhs - cumulative) / lhs).abs();
        if i == 0 {
            at_patch = res;
        }
        worst = worst.max(res);
        rows.push((r.as_f64(), lhs.as_f64(), cumulative.as_f64()));
    }
    Ok(FluxReport {
        max_relative_residual: worst.as_f64(),
        residual_at_patch: at_patch.as_f64(),
        patch_contribution: patch.as_f64(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PohozaevTrace {
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    /// Largest finite-difference slope `(P_{i+1} - P_i)/(r_{i+1} - r_i)`.
    pub max_slope: f64,
    pub nonincreasing: bool,
    pub p_at_patch: f64,
    /// `max P - min P` along the table.
    pub spread: f64,
    /// Largest `|slope - dP/dr|` relative to `max(|dP/dr|, |P|)`, with
    /// `dP/dr = -((N-2)/2) r^{N-1} Q(u*)` at interval midpoints.
    pub identity_residual: f64,
}

/// `P(r) = r^N u'^2/2 + r^N F_0(u) + ((N-2)/2) r^{N-1} u u'` along the table.
pub fn trace_pohozaev<T: Real>(
    table: &SingularSolutionTable<T>,
    spec: &NonlinearitySpec<T>,
    slope_tol: T,
) -> Result<PohozaevTrace> {
    let dim = table.dim;
    let n: T = lit(dim as f64);
    let nm2: T = lit(dim as f64 - 2.0);
    let half: T = lit(0.5);
    let tight = spec.clone().with_accuracy(lit(1e-14));
    let p_of = |r: T, u: T, du: T| -> Result<T> {
        let s = r.ln();
        let ru = r * du;
        let kinetic = (nm2 * s).exp() * (half * ru * ru + half * nm2 * u * ru);
        let potential = (n * s + spec.g(u)).exp() * tight.f0_over_f(u)?;
        Ok(kinetic + potential)
    };
    let mut p = Vec::with_capacity(table.len());
    for i in 0..table.len() {
        p.push(p_of(table.r[i], table.u[i], table.du[i])?);
    }
    let mut max_slope = T::neg_infinity();
    let mut id_res = T::zero();
    for i in 0..p.len().saturating_sub(1) {
        let dr = table.r[i + 1] - table.r[i];
        let slope = (p[i + 1] - p[i]) / dr;
        max_slope = max_slope.max(slope);
        let rm = (table.r[i] * table.r[i + 1]).sqrt();
        let [um, _] = table.eval(rm);
        let q = tight.q_over_f(um, dim)?;
        let exact = -half * nm2 * ((n - T::one()) * rm.ln() + spec.g(um)).exp() * q;
        let scale = exact.abs().max(p[i].abs()).max(T::min_positive_value());
        id_res = id_res.max((slope - exact).abs() / scale);
    }
    let (lo, hi) = p.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(PohozaevTrace {
        r: table.r.iter().map(|x| x.as_f64()).collect(),
        p: p.iter().map(|x| x.as_f64()).collect(),
        max_slope: max_slope.as_f64(),
        nonincreasing: max_slope <= slope_tol,
        p_at_patch: p[0].as_f64(),
        spread: (hi - lo).as_f64(),
        identity_residual: id_res.as_f64(),
    })
}

/// Power-law envelope `y ~ C r^{-k}` fitted on the smallest decade.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    /// Exponent in the inequality under test.
    pub bound_exponent: f64,
    /// Least-squares slope of `log y` against `log(1/r)`.
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    /// Smallest `C` for which the inequality holds on the fitting window.
    pub envelope_constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub delta: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// `u* <= C r^{-2 delta}`
    pub u_upper: EnvelopeFit,
    /// `|u*'| <= C r^{-1-2 delta}`
    pub du_upper: EnvelopeFit,
    /// `f(u*) >= C r^{-2+2 delta}`
    pub reaction_lower: EnvelopeFit,
    /// `max f(u* - delta)/f(u*)` on the window
    pub shift_ratio: f64,
    pub shift_ratio_holds: bool,
    /// `f(gamma u*) <= C r^{-2 gamma}` for each tested `gamma`
    pub scaled_reaction_upper: Vec<(f64, EnvelopeFit)>,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `ln_y` is `log y` at each window point, `x = log(1/r)`; `upper` selects
/// the direction of the inequality `y <= C r^{-k}` or `y >= C r^{-k}`.
fn envelope(x: &[f64], ln_y: &[f64], k: f64, upper: bool) -> EnvelopeFit {
    let (slope, intercept) = least_squares(x, ln_y);
    let scaled = x.iter().zip(ln_y).map(|(a, b)| b - k * a);
    let env = if upper { scaled.fold(f64::NEG_INFINITY, f64::max) } else { scaled.fold(f64::INFINITY, f64::min) };
    EnvelopeFit {
        bound_exponent: k,
        fitted_exponent: slope,
        fitted_constant: intercept.exp(),
        envelope_constant: env.exp(),
        holds: if upper { slope <= k } else { slope >= k },
    }
}

/// Empirical constants for the small-`r` growth envelopes of `u*`, fitted on
/// the smallest decade of the table.
pub fn verify_growth_bounds<T: Real>(
    table: &SingularSolutionTable<T>,
    spec: &NonlinearitySpec<T>,
    delta: T,
) -> Result<BoundReport> {
    let nm2 = table.dim as f64 - 2.0;
    let d = delta.as_f64();
    if !(d > 0.0 && d < nm2 / 2.0) {
        return Err(crate::error::invalid("delta", format!("must lie in (0, (N-2)/2), got {d}")));
    }
    let r0 = table.r_patch();
    let top = r0 * lit(10.0);
    let idx: Vec<usize> = (0..table.len()).filter(|&i| table.r[i] <= top).collect();
    let x: Vec<f64> = idx.iter().map(|&i| -table.r[i].ln().as_f64()).collect();
    let ln_u: Vec<f64> = idx.iter().map(|&i| table.u[i].ln().as_f64()).collect();
    let ln_du: Vec<f64> = idx.iter().map(|&i| table.du[i].abs().ln().as_f64()).collect();
    let ln_f: Vec<f64> = idx.iter().map(|&i| spec.g(table.u[i]).as_f64()).collect();
    let shift = idx.iter().map(|&i| spec.ratio(table.u[i] - delta, table.u[i]).as_f64()).fold(0.0, f64::max);
    let scaled = [0.5, 0.9]
        .iter()
        .map(|&gamma| {
            let ln_fg: Vec<f64> = idx.iter().map(|&i| spec.g(table.u[i] * lit(gamma)).as_f64()).collect();
            (gamma, envelope(&x, &ln_fg, 2.0 * gamma, true))
        })
        .collect();
    Ok(BoundReport {
        delta: d,
        window: (r0.as_f64(), table.r[*idx.last().unwrap()].as_f64()),
        samples: idx.len(),
        u_upper: envelope(&x, &ln_u, 2.0 * d, true),
        du_upper: envelope(&x, &ln_du, 1.0 + 2.0 * d, true),
        reaction_lower: envelope(&x, &ln_f, 2.0 - 2.0 * d, false),
        shift_ratio: shift,
        shift_ratio_holds: shift < 1.0,
        scaled_reaction_upper: scaled,
    })
}
