//! Backward-Euler diffusion with explicit reaction on the radial
//! finite-volume grid, adaptive time stepping and discrete steady states.

use serde::Serialize;

use super::{ul_norm, OuterBoundary, RadialField, RadialGrid};
use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::scalar::{lit, Real};

/// Reaction term of `u_t = Δu + f(u)`; `Off` is the pure heat equation.
#[derive(Debug, Clone, Copy)]
pub enum Reaction<'a, T> {
    Off,
    On(&'a NonlinearitySpec<T>),
}

impl<'a, T: Real> Reaction<'a, T> {
    pub fn f(&self, u: T) -> T {
        match self {
            Reaction::Off => T::zero(),
            Reaction::On(s) => s.f(u),
        }
    }

    pub fn df(&self, u: T) -> T {
        match self {
            Reaction::Off => T::zero(),
            Reaction::On(s) => s.df(u),
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, Reaction::Off)
    }
}

impl<'a, T> From<&'a NonlinearitySpec<T>> for Reaction<'a, T> {
    fn from(s: &'a NonlinearitySpec<T>) -> Self {
        Reaction::On(s)
    }
}

/// Three-point radial Laplacian `(L u)_i = lower_i u_{i-1} - (lower_i + upper_i) u_i + upper_i u_{i+1}`
/// from fluxes `r^{N-1} u'` through the cell faces; the origin cell has no
/// inner face, which imposes `u'(0) = 0`.
#[derive(Debug, Clone)]
pub struct RadialLaplacian<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> RadialLaplacian<T> {
    pub fn new(grid: &RadialGrid<T>) -> Self {
        let r = grid.nodes();
        let faces = grid.faces();
        let vol = grid.reduced_volumes();
        let m = grid.last();
        let k = grid.dim as i32 - 1;
        let mut lower = vec![T::zero(); m + 1];
        let mut upper = vec![T::zero(); m + 1];
        for i in 0..=m {
            if i > 0 {
                lower[i] = faces[i - 1].powi(k) / ((r[i] - r[i - 1]) * vol[i]);
            }
            if i < m {
                upper[i] = faces[i].powi(k) / ((r[i + 1] - r[i]) * vol[i]);
            }
        }
        Self { lower, upper }
    }

    /// `L u` with the outer node treated per the boundary condition
    /// (zero row for a Dirichlet value).
    pub fn apply(&self, u: &[T], outer: OuterBoundary<T>) -> Vec<T> {
        let m = u.len() - 1;
        (0..=m)
            .map(|i| {
                if i == m && matches!(outer, OuterBoundary::DirichletValue(_)) {
                    return T::zero();
                }
                let mut acc = T::zero();
                if i > 0 {
                    acc = acc + self.lower[i] * (u[i - 1] - u[i]);
                }
                if i < m {
                    acc = acc + self.upper[i] * (u[i + 1] - u[i]);
                }
                acc
            })
            .collect()
    }
}

/// Thomas algorithm for `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
pub fn solve_tridiagonal<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    let tiny = T::min_positive_value();
    for i in 0..n {
        let piv = if i == 0 { b[0] } else { b[i] - a[i] * cp[i - 1] };
        if !(piv.abs() > tiny) || !piv.is_finite() {
            return Err(Error::LinearSolveFailure { row: i, pivot: piv.as_f64() });
        }
        cp[i] = if i + 1 < n { c[i] / piv } else { T::zero() };
        dp[i] = if i == 0 { d[0] / piv } else { (d[i] - a[i] * dp[i - 1]) / piv };
    }
    let mut x = dp;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] = x[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}

/// `f(max u) dt` above this is reported as a reaction overflow.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// One step `(I - dt L) u^{n+1} = u^n + dt f(u^n)`. The implicit matrix is
/// an M-matrix and `u + dt f(u)` is increasing, so nonnegativity and the
/// ordering of data are preserved for every `dt > 0`.
pub fn step_imex<T: Real>(field: &RadialField<T>, reaction: Reaction<'_, T>, dt: T) -> Result<RadialField<T>> {
    let lap = RadialLaplacian::new(&field.grid);
    step_with(&lap, field, reaction, dt)
}

pub(crate) fn step_with<T: Real>(
    lap: &RadialLaplacian<T>,
    field: &RadialField<T>,
    reaction: Reaction<'_, T>,
    dt: T,
) -> Result<RadialField<T>> {
    if !(dt > T::zero()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let u = &field.values;
    let m = u.len() - 1;
    let fmax = reaction.f(field.sup());
    let guard: T = lit(OVERFLOW_GUARD);
    if !(fmax * dt <= guard) {
        return Err(Error::ReactionOverflow { value: (fmax * dt).as_f64(), guard: OVERFLOW_GUARD });
    }
    let mut a = vec![T::zero(); m + 1];
    let mut b = vec![T::one(); m + 1];
    let mut c = vec![T::zero(); m + 1];
    let mut d: Vec<T> = u.iter().map(|&v| v + dt * reaction.f(v)).collect();
    for i in 0..=m {
        a[i] = -dt * lap.lower[i];
        c[i] = -dt * lap.upper[i];
        b[i] = T::one() + dt * (lap.lower[i] + lap.upper[i]);
    }
    if let OuterBoundary::DirichletValue(v) = field.grid.outer {
        a[m] = T::zero();
        b[m] = T::one();
        d[m] = v;
    }
    let x = solve_tridiagonal(&a, &b, &c, &d)?;
    field.with_values(x.into_iter().map(|v| v.max(T::zero())).collect())
}

/// Thresholds for calling a run a numerical blow-up.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowUpGuards {
    pub sup: f64,
    /// Alternative to `sup` for exponential growth, where `f` overflows
    /// long before `u` reaches it.
    pub reaction: f64,
    pub mass_growth: f64,
}

impl Default for BlowUpGuards {
    fn default() -> Self {
        Self { sup: 1e8, reaction: 1e12, mass_growth: 1e6 }
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions<T> {
    pub horizon: T,
    /// Accuracy bound on the step; the reaction bound `1/f'(sup u)` is
    /// applied on top.
    pub dt_max: T,
    pub safety: T,
    /// Norms and snapshots are recorded on this spacing in `t`.
    pub record_every: T,
    /// Also record after this many steps since the last record, so that
    /// fast blow-up leaves a trace.
    pub record_every_steps: usize,
    pub record_ul_norm: bool,
    pub keep_snapshots: bool,
    /// Inner reaction mass is taken over this many innermost cells.
    pub inner_cells: usize,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            horizon: lit(0.5),
            dt_max: lit(1e-3),
            safety: lit(0.5),
            record_every: lit(0.01),
            record_every_steps: 25,
            record_ul_norm: true,
            keep_snapshots: true,
            inner_cells: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSample {
    pub t: f64,
    pub sup_norm: f64,
    pub l1ul_norm: f64,
    pub f_mass_inner: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    /// `t + dt` no longer advances `t`.
    TimeStagnation,
    ReactionOverflow,
}

#[derive(Debug, Clone)]
pub struct Evolution<T> {
    pub initial: RadialField<T>,
    pub last: RadialField<T>,
    pub t_final: T,
    pub steps: usize,
    pub dt_min: T,
    pub stop: StopReason,
    pub series: Vec<NormSample>,
    /// `(t, nodal values)` at the recording times.
    pub snapshots: Vec<(T, Vec<T>)>,
}

impl<T: Real> Evolution<T> {
    pub fn initial_mass(&self) -> f64 {
        self.series.first().map_or(0.0, |s| s.f_mass_inner)
    }

    pub fn final_sample(&self) -> &NormSample {
        self.series.last().expect("series holds the initial sample")
    }
}

/// `int_{B(0, r*)} f(u) dx` over the `k` innermost cells.
pub fn inner_reaction_mass<T: Real>(field: &RadialField<T>, reaction: Reaction<'_, T>, k: usize) -> T {
    (0..k.min(field.values.len())).map(|i| field.grid.volume(i) * reaction.f(field.values[i])).sum()
}

fn sample<T: Real>(
    field: &RadialField<T>,
    reaction: Reaction<'_, T>,
    t: T,
    opts: &EvolveOptions<T>,
) -> Result<NormSample> {
    let l1 = if opts.record_ul_norm { ul_norm(field, T::one())?.value } else { f64::NAN };
    let mass = match reaction {
        // the control run reports the mass the nonlinearity would carry
        Reaction::Off => T::zero(),
        Reaction::On(_) => inner_reaction_mass(field, reaction, opts.inner_cells),
    };
    Ok(NormSample { t: t.as_f64(), sup_norm: field.sup().as_f64(), l1ul_norm: l1, f_mass_inner: mass.as_f64() })
}

/// Steps from `u0` with `dt = safety * min(dt_max, 1/f'(sup u))` until the
/// horizon, until time stagnates, or until the reaction overflows.
pub fn evolve<T: Real>(
    u0: &RadialField<T>,
    reaction: Reaction<'_, T>,
    opts: &EvolveOptions<T>,
) -> Result<Evolution<T>> {
    if !(opts.horizon > T::zero()
        && opts.dt_max > T::zero()
        && opts.safety > T::zero()
        && opts.record_every > T::zero())
    {
        return Err(invalid("evolve", "horizon, dt_max, safety and record_every must be positive"));
    }
    let lap = RadialLaplacian::new(&u0.grid);
    let mut u = u0.clone();
    let mut t = T::zero();
    let mut steps = 0;
    let mut dt_min = opts.dt_max;
    let mut series = vec![sample(&u, reaction, t, opts)?];
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push((t, u.values.clone()));
    }
    let mut next_record = opts.record_every;
    let mut since_record = 0;
    let stop = loop {
        if t >= opts.horizon {
            break StopReason::Horizon;
        }
        let rate = reaction.df(u.sup());
        let mut dt = opts.safety * if rate > T::zero() { opts.dt_max.min(rate.recip()) } else { opts.dt_max };
        if t + dt > opts.horizon {
            dt = opts.horizon - t;
        }
        if !(t + dt > t) {
            break StopReason::TimeStagnation;
        }
        u = match step_with(&lap, &u, reaction, dt) {
            Ok(next) => next,
            Err(Error::ReactionOverflow { .. }) => break StopReason::ReactionOverflow,
            Err(e) => return Err(e),
        };
        t = if t + dt >= opts.horizon { opts.horizon } else { t + dt };
        steps += 1;
        dt_min = dt_min.min(dt);
        since_record += 1;
        if t >= next_record
            || t >= opts.horizon
            || (opts.record_every_steps > 0 && since_record >= opts.record_every_steps)
        {
            since_record = 0;
            series.push(sample(&u, reaction, t, opts)?);
            if opts.keep_snapshots {
                snapshots.push((t, u.values.clone()));
            }
            while next_record <= t {
                next_record = next_record + opts.record_every;
            }
        }
    };
    if stop != StopReason::Horizon && series.last().map(|s| s.t) != Some(t.as_f64()) {
        series.push(sample(&u, reaction, t, opts)?);
        if opts.keep_snapshots {
            snapshots.push((t, u.values.clone()));
        }
    }
    Ok(Evolution { initial: u0.clone(), last: u, t_final: t, steps, dt_min, stop, series, snapshots })
}

#[derive(Debug, Clone)]
pub struct SteadyState<T> {
    pub field: RadialField<T>,
    /// `max |L u + f(u)|` relative to `max f(u)`.
    pub residual: T,
    pub iterations: usize,
}

/// Solves `L u + f(u) = 0` (outer node fixed by the boundary condition) by
/// damped Newton iteration from `guess`.
pub fn discrete_steady_state<T: Real>(
    guess: &RadialField<T>,
    spec: &NonlinearitySpec<T>,
    max_iter: usize,
) -> Result<SteadyState<T>> {
    let grid = &guess.grid;
    let lap = RadialLaplacian::new(grid);
    let m = grid.last();
    let dirichlet = matches!(grid.outer, OuterBoundary::DirichletValue(_));
    let mut u = guess.values.clone();
    if let OuterBoundary::DirichletValue(v) = grid.outer {
        u[m] = v;
    }
    let residual = |u: &[T]| -> Vec<T> {
        let mut g = lap.apply(u, grid.outer);
        for i in 0..=m {
            if !(dirichlet && i == m) {
                g[i] = g[i] + spec.f(u[i]);
            }
        }
        g
    };
    let scale = |u: &[T]| u.iter().fold(T::one(), |s, &v| s.max(spec.f(v)));
    let norm = |g: &[T]| g.iter().fold(T::zero(), |s, &v| s.max(v.abs()));
    let mut g = residual(&u);
    let mut res = norm(&g) / scale(&u);
    let tol = T::epsilon() * lit(1e3);
    let mut it = 0;
    while it < max_iter && res > tol {
        it += 1;
        let mut a = vec![T::zero(); m + 1];
        let mut b = vec![T::zero(); m + 1];
        let mut c = vec![T::zero(); m + 1];
        let mut rhs: Vec<T> = g.iter().map(|&v| -v).collect();
        for i in 0..=m {
            a[i] = lap.lower[i];
            c[i] = lap.upper[i];
            b[i] = -(lap.lower[i] + lap.upper[i]) + spec.df(u[i]);
        }
        if dirichlet {
            a[m] = T::zero();
            b[m] = T::one();
            rhs[m] = T::zero();
        }
        let delta = solve_tridiagonal(&a, &b, &c, &rhs)?;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = u.iter().zip(&delta).map(|(&x, &d)| x + lambda * d).collect();
            if trial.iter().all(|v| v.is_finite() && *v >= T::zero()) {
                let gt = residual(&trial);
                let rt = norm(&gt) / scale(&trial);
                if rt < res {
                    u = trial;
                    g = gt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda * lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Ok(SteadyState { field: guess.with_values(u)?, residual: res, iterations: it })
}
