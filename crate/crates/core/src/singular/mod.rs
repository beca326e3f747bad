//! Radial solutions of `u'' + (N-1)/r u' + f(u) = 0`.
//!
//! Both the singular solution and the regular solutions are integrated in
//! `s = log r` with state `(u, r u')`:
//!
//! ```text
//! u_s = r u',   (r u')_s = -(N-2) r u' - exp(2 s + g(u)).
//! ```
//!
//! The reaction enters only through `g = log f`, so nothing overflows for
//! centre heights where `f` itself is not representable.

mod identities;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::nonlinearity::{eval_F_inverse_ln, NonlinearitySpec, SpecDescriptor};
use crate::ode::{integrate_until, OdeOptions, Termination, Trajectory};
use crate::quadrature::GaussLegendre;
use crate::radial::{RadialField, RadialGrid};
use crate::scalar::{lit, Real};

pub use identities::{
    trace_pohozaev, verify_flux_identity, verify_growth_bounds, BoundReport, EnvelopeFit, FluxReport, PohozaevTrace,
};

fn radial_rhs<'a, T: Real>(spec: &'a NonlinearitySpec<T>, dim: usize) -> impl FnMut(T, &[T; 2]) -> [T; 2] + 'a {
    let nm2: T = lit(dim as f64 - 2.0);
    let two: T = lit(2.0);
    move |s, y| {
        let source = if y[0] > T::zero() { (two * s + spec.g(y[0])).exp() } else { T::zero() };
        [y[1], -nm2 * y[1] - source]
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        Err(invalid("dim", format!("N >= 3 required, got {dim}")))
    } else {
        Ok(())
    }
}

/// Integration in `log r` shared by the singular table and shooting solutions.
#[derive(Debug, Clone)]
pub struct LogRadialPath<T> {
    pub traj: Trajectory<T, 2>,
}

impl<T: Real> LogRadialPath<T> {
    /// `(u, r u')` at `s = log r`, clamped to the covered range.
    pub fn state_at_log(&self, s: T) -> [T; 2] {
        self.traj.eval(s)
    }

    pub fn s_min(&self) -> T {
        self.traj.t_start()
    }

    pub fn s_max(&self) -> T {
        self.traj.t_end()
    }

    /// `int h(s, u, r u') ds` over `[s_lo, s_hi]`, Gauss–Legendre on every
    /// accepted step so the cubic interpolant is smooth on each panel.
    pub fn integrate_log<H: FnMut(T, [T; 2]) -> T>(&self, s_lo: T, s_hi: T, gl: &GaussLegendre<T>, mut h: H) -> T {
        if s_hi <= s_lo {
            return T::zero();
        }
        let t = &self.traj.t;
        let first = t.partition_point(|&x| x <= s_lo).saturating_sub(1);
        let mut total = T::zero();
        for i in first..t.len().saturating_sub(1) {
            let a = t[i].max(s_lo);
            let b = t[i + 1].min(s_hi);
            if b <= a {
                if t[i] >= s_hi {
                    break;
                }
                continue;
            }
            total = total + gl.integrate(|s| h(s, self.traj.eval(s)), a, b);
        }
        total
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingularOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Largest step in `log r`; bounds the spacing of the table.
    pub h_max_log: T,
    /// The ODE is seeded at `r_patch * seed_depth`.
    pub seed_depth: T,
    pub patch_tol: T,
    /// Re-seed at half the seeding radius and compare downstream.
    pub check_patch: bool,
}

impl<T: Real> Default for SingularOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-8),
            atol: lit(1e-10),
            h_max_log: lit(0.02),
            seed_depth: lit(1e-24),
            patch_tol: lit(1e-5),
            check_patch: true,
        }
    }
}

impl<T: Real> SingularOptions<T> {
    fn ode(&self) -> OdeOptions<T> {
        OdeOptions { h_max: Some(self.h_max_log), ..OdeOptions::tolerances(self.rtol, self.atol) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchInfo {
    pub r_patch: f64,
    pub r_seed: f64,
    pub method: &'static str,
    /// Largest relative change of `u*` on `[2 r_patch, R_max]` when re-seeded at `r_seed / 2`.
    pub reseed_change: Option<f64>,
}

/// Tabulated singular solution on `[r_patch, R_max]`, together with the
/// integration path below `r_patch` used for evaluation and quadrature.
#[derive(Debug, Clone)]
pub struct SingularSolutionTable<T> {
    pub dim: usize,
    pub r: Vec<T>,
    pub u: Vec<T>,
    pub du: Vec<T>,
    pub r_max: T,
    pub patch: PatchInfo,
    pub spec: NonlinearitySpec<T>,
    pub options: SingularOptions<T>,
    pub path: LogRadialPath<T>,
    /// Radius where `u*` reached zero before `R_max`, if it did.
    pub vanished_at: Option<T>,
    pub error_estimate: T,
}

/// Sidecar metadata of a serialized table.
#[derive(Debug, Clone, Serialize)]
pub struct TableMetadata {
    #[serde(rename = "N")]
    pub dim: usize,
    pub r_patch: f64,
    pub r_seed: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub spec_descriptor: SpecDescriptor,
    pub tolerances: TableTolerances,
    pub rows: usize,
    pub reseed_change: Option<f64>,
    pub vanished_at: Option<f64>,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max_log: f64,
    pub patch_tol: f64,
    pub tol_f: f64,
}

impl<T: Real> SingularSolutionTable<T> {
    pub fn r_patch(&self) -> T {
        self.r[0]
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `u*(r)`: integration path above the seeding radius, asymptotic
    /// profile `F^{-1}(r^2/(2N-4))` below it. Clamped at the outer end.
    pub fn u_at(&self, r: T) -> T {
        self.eval(r)[0]
    }

    /// `(u*(r), u*'(r))`.
    pub fn eval(&self, r: T) -> [T; 2] {
        let s = r.ln();
        if s < self.path.s_min() {
            let c: T = lit(2.0 * self.dim as f64 - 4.0);
            let ln_y = lit::<T>(2.0) * s - c.ln();
            return match eval_F_inverse_ln(&self.spec, ln_y) {
                Ok(u) => [u, -r * self.spec.f(u) / (c * lit(0.5))],
                Err(_) => [T::infinity(), T::neg_infinity()],
            };
        }
        let y = self.path.state_at_log(s.min(self.path.s_max()));
        [y[0], y[1] / r]
    }

    pub fn metadata(&self) -> TableMetadata {
        TableMetadata {
            dim: self.dim,
            r_patch: self.patch.r_patch,
            r_seed: self.patch.r_seed,
            r_max: self.r_max.as_f64(),
            spec_descriptor: self.spec.descriptor(),
            tolerances: TableTolerances {
                rtol: self.options.rtol.as_f64(),
                atol: self.options.atol.as_f64(),
                h_max_log: self.options.h_max_log.as_f64(),
                patch_tol: self.options.patch_tol.as_f64(),
                tol_f: self.spec.tol.tol_f.as_f64(),
            },
            rows: self.r.len(),
            reseed_change: self.patch.reseed_change,
            vanished_at: self.vanished_at.map(|v| v.as_f64()),
            error_estimate: self.error_estimate.as_f64(),
        }
    }

    /// `min(u*, cap)` at the grid nodes; the origin node holds the mean of
    /// `u*` over its cell, also capped.
    pub fn to_field(&self, grid: Arc<RadialGrid<T>>, cap: T) -> Result<RadialField<T>> {
        if grid.dim != self.dim {
            return Err(Error::GridMismatch(format!("table for N = {}, grid for N = {}", self.dim, grid.dim)));
        }
        let rh = grid.faces()[0];
        let mean = self.ball_moment(rh, |u| u) * lit(self.dim as f64) / rh.powi(self.dim as i32);
        RadialField::capped(grid, |r| self.u_at(r), mean, cap)
    }

    /// `int_0^r h(u*(rho)) rho^{N-1} d rho`; the part below the seeding radius
    /// uses the seed value, which is accurate to `O(r_seed^N)`.
    pub fn ball_moment<H: FnMut(T) -> T>(&self, r: T, mut h: H) -> T {
        let n: T = lit(self.dim as f64);
        let s_hi = r.ln().min(self.path.s_max());
        let s0 = self.path.s_min();
        let gl = GaussLegendre::new(8);
        let seed = self.path.traj.y[0][0];
        let inner = h(seed) * (n * s0).exp() / n;
        inner + self.path.integrate_log(s0, s_hi, &gl, |s, y| h(y[0]) * (n * s).exp())
    }
}

fn seed_state<T: Real>(spec: &NonlinearitySpec<T>, dim: usize, s: T) -> Result<[T; 2]> {
    let c: T = lit(2.0 * dim as f64 - 4.0);
    let u = eval_F_inverse_ln(spec, lit::<T>(2.0) * s - c.ln())?;
    // r u' = -r^2 f(u)/(N-2)
    let du = -(lit::<T>(2.0) * s + spec.g(u)).exp() / lit(dim as f64 - 2.0);
    Ok([u, du])
}

fn integrate_from_seed<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    s_seed: T,
    s_end: T,
    opts: &SingularOptions<T>,
) -> Result<Trajectory<T, 2>> {
    let y0 = seed_state(spec, dim, s_seed)?;
    integrate_until(radial_rhs(spec, dim), s_seed, y0, s_end, &opts.ode(), |_, y| y[0])
}

/// Singular solution on `[r_patch, r_max]`, integrated outward from the
/// asymptotic profile `u = F^{-1}(r^2/(2N-4))`, `u' = -r f(u)/(N-2)` imposed
/// at `r_seed = r_patch * seed_depth`.
pub fn build_singular<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    r_patch: T,
    r_max: T,
    opts: &SingularOptions<T>,
) -> Result<SingularSolutionTable<T>> {
    check_dim(dim)?;
    if !(r_patch > T::zero() && r_max > r_patch) {
        return Err(invalid("r_patch", format!("need 0 < r_patch < R_max, got {r_patch}, {r_max}")));
    }
    if !(opts.seed_depth > T::zero() && opts.seed_depth <= T::one()) {
        return Err(invalid("seed_depth", "must lie in (0, 1]"));
    }
    let s_seed = (r_patch * opts.seed_depth).ln();
    let s_patch = r_patch.ln();
    let s_end = r_max.ln();
    let traj = integrate_from_seed(spec, dim, s_seed, s_end, opts)?;
    let vanished_at = match traj.termination {
        Termination::Event(s) => Some(s.exp()),
        Termination::Reached => None,
    };
    if traj.t_end() <= s_patch {
        return Err(Error::PatchMismatch { r: r_patch.as_f64(), change: f64::INFINITY, tol: opts.patch_tol.as_f64() });
    }

    // table: the patch point followed by every accepted step beyond it
    let mut r = Vec::new();
    let mut u = Vec::new();
    let mut du = Vec::new();
    let yp = traj.eval(s_patch);
    r.push(r_patch);
    u.push(yp[0]);
    du.push(yp[1] / r_patch);
    for (s, y) in traj.t.iter().zip(&traj.y) {
        let rr = s.exp();
        if *s > s_patch && rr > *r.last().unwrap() * (T::one() + T::epsilon() * lit(16.0)) {
            r.push(rr);
            u.push(y[0]);
            du.push(y[1] / rr);
        }
    }

    let reseed_change = if opts.check_patch {
        let alt = integrate_from_seed(spec, dim, s_seed - lit::<T>(2.0).ln(), s_end, opts)?;
        let mut worst = T::zero();
        let lower = r_patch * lit(2.0);
        let alt_end = alt.t_end().exp();
        for (rr, uu) in r.iter().zip(&u) {
            if *rr < lower || *rr > alt_end {
                continue;
            }
            let v = alt.eval(rr.ln())[0];
            worst = worst.max(((v - *uu) / *uu).abs());
        }
        if worst > opts.patch_tol {
            return Err(Error::PatchMismatch {
                r: lower.as_f64(),
                change: worst.as_f64(),
                tol: opts.patch_tol.as_f64(),
            });
        }
        Some(worst.as_f64())
    } else {
        None
    };

    Ok(SingularSolutionTable {
        dim,
        r,
        u,
        du,
        r_max,
        patch: PatchInfo {
            r_patch: r_patch.as_f64(),
            r_seed: (r_patch * opts.seed_depth).as_f64(),
            method: "F-inverse asymptotic",
            reseed_change,
        },
        spec: spec.clone(),
        options: *opts,
        error_estimate: traj.error_estimate,
        path: LogRadialPath { traj },
        vanished_at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ShootingTermination {
    ReachedRmax,
    VanishedAt(f64),
}

/// Regular solution with `u(0) = alpha`, `u'(0) = 0`.
#[derive(Debug, Clone)]
pub struct ShootingSolution<T> {
    pub alpha: T,
    pub dim: usize,
    /// `log r` of each point after the centre.
    pub s: Vec<T>,
    /// Radii; the first entry is the centre `r = 0`.
    pub r: Vec<T>,
    pub u: Vec<T>,
    /// `r u'(r)`, finite even where `u'` is not representable.
    pub r_du: Vec<T>,
    pub termination: ShootingTermination,
    pub path: Option<LogRadialPath<T>>,
}

impl<T: Real> ShootingSolution<T> {
    /// `u'` at point `i`; zero at the centre.
    pub fn du(&self, i: usize) -> T {
        if self.r[i] == T::zero() {
            T::zero()
        } else {
            self.r_du[i] / self.r[i]
        }
    }

    /// `u(r)`; the centre value below the first integration point.
    pub fn u_at(&self, r: T) -> T {
        match &self.path {
            Some(p) if r > T::zero() && r.ln() >= p.s_min() => {
                if r.ln() > p.s_max() {
                    T::nan()
                } else {
                    p.state_at_log(r.ln())[0]
                }
            }
            _ => self.alpha,
        }
    }

    /// Sup-norm residual of the equation in `log r`, `(r u')_s + (N-2) r u' + r^2 f(u)`,
    /// together with the mismatch `u_s - r u'`, both from three-point
    /// differences of the output and relative to the sup of the terms.
    pub fn ode_residual(&self, spec: &NonlinearitySpec<T>) -> T {
        let nm2: T = lit(self.dim as f64 - 2.0);
        let two: T = lit(2.0);
        let (s, u, w) = (&self.s, &self.u[1..], &self.r_du[1..]);
        let d1 = |v: &[T], i: usize| {
            let h1 = s[i] - s[i - 1];
            let h2 = s[i + 1] - s[i];
            (v[i + 1] * h1 * h1 - v[i - 1] * h2 * h2 + v[i] * (h2 * h2 - h1 * h1)) / (h1 * h2 * (h1 + h2))
        };
        let (mut worst_eq, mut scale_eq) = (T::zero(), T::zero());
        let (mut worst_du, mut scale_du) = (T::zero(), T::zero());
        for i in 1..s.len().saturating_sub(1) {
            let ws = d1(w, i);
            let us = d1(u, i);
            let src = if u[i] > T::zero() { (two * s[i] + spec.g(u[i])).exp() } else { T::zero() };
            scale_eq = scale_eq.max(ws.abs() + nm2 * w[i].abs() + src);
            worst_eq = worst_eq.max((ws + nm2 * w[i] + src).abs());
            scale_du = scale_du.max(w[i].abs());
            worst_du = worst_du.max((us - w[i]).abs());
        }
        let rel = |a: T, b: T| if b > T::zero() { a / b } else { a };
        rel(worst_eq, scale_eq).max(rel(worst_du, scale_du))
    }
}

/// Regular solution `u(r, alpha)` up to `r_max` or to its first zero.
///
/// Started at `r_start = min(1e-6, 1e-4 / sqrt(f'(alpha)))` from the series
/// `u = alpha - f(alpha) r^2 / (2N)`.
pub fn integrate_regular<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    alpha: T,
    r_max: T,
    opts: &OdeOptions<T>,
) -> Result<ShootingSolution<T>> {
    check_dim(dim)?;
    if !(alpha >= T::zero()) || !(r_max > T::zero()) {
        return Err(invalid("alpha", format!("need alpha >= 0 and R_max > 0, got {alpha}, {r_max}")));
    }
    let centre = ShootingSolution {
        alpha,
        dim,
        s: vec![],
        r: vec![T::zero()],
        u: vec![alpha],
        r_du: vec![T::zero()],
        termination: ShootingTermination::ReachedRmax,
        path: None,
    };
    if alpha == T::zero() {
        let mut sol = centre;
        sol.r.push(r_max);
        sol.u.push(T::zero());
        sol.r_du.push(T::zero());
        sol.s.push(r_max.ln());
        return Ok(sol);
    }
    let n: T = lit(dim as f64);
    let two: T = lit(2.0);
    let g_a = spec.g(alpha);
    // log f'(alpha) = g + log g'
    let ln_fp = g_a + spec.dg(alpha).max(T::min_positive_value()).ln();
    let s_start = lit::<T>(1e-6).ln().min(lit::<T>(1e-4).ln() - ln_fp * lit(0.5));
    let s_end = r_max.ln();
    if s_start >= s_end {
        return Err(invalid("R_max", "below the series start radius"));
    }
    let w = (two * s_start + g_a).exp(); // r^2 f(alpha)
    let y0 = [alpha - w / (two * n), -w / n];
    let traj = integrate_until(radial_rhs(spec, dim), s_start, y0, s_end, opts, |_, y| y[0])?;
    let termination = match traj.termination {
        Termination::Event(s) => ShootingTermination::VanishedAt(s.exp().as_f64()),
        Termination::Reached => ShootingTermination::ReachedRmax,
    };
    let mut sol = centre;
    sol.termination = termination;
    for (s, y) in traj.t.iter().zip(&traj.y) {
        sol.s.push(*s);
        sol.r.push(s.exp());
        sol.u.push(y[0]);
        sol.r_du.push(y[1]);
    }
    sol.path = Some(LogRadialPath { traj });
    Ok(sol)
}

/// Regular solutions for several centre heights, computed in parallel.
pub fn shoot_many<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    alphas: &[T],
    r_max: T,
    opts: &OdeOptions<T>,
) -> Vec<Result<ShootingSolution<T>>> {
    use rayon::prelude::*;
    alphas.par_iter().map(|&a| integrate_regular(spec, dim, a, r_max, opts)).collect()
}
