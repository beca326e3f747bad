//! The Duhamel map `Φ(w)(s) = S(s) u0 + int_0^s S(s - σ) f(w(σ)) dσ` on a
//! uniform time mesh.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::GaussLegendre;
use crate::radial::{RadialField, RadialGrid, SemigroupMatrix};
use crate::scalar::{lit, Real};

/// Fields at `s_j = j t_obs / slices`, `j = 0..=slices`, linear in time
/// between slices.
#[derive(Debug, Clone)]
pub struct FieldTrajectory<T> {
    pub grid: Arc<RadialGrid<T>>,
    pub t_obs: T,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> FieldTrajectory<T> {
    pub fn constant(field: &RadialField<T>, t_obs: T, slices: usize) -> Self {
        Self { grid: field.grid.clone(), t_obs, values: vec![field.values.clone(); slices + 1] }
    }

    pub fn slices(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, j: usize) -> T {
        self.t_obs * T::count(j) / T::count(self.slices())
    }

    pub fn field(&self, j: usize) -> RadialField<T> {
        RadialField { grid: self.grid.clone(), values: self.values[j].clone(), cap_mask: vec![false; self.grid.len()] }
    }

    pub fn at_obs(&self) -> RadialField<T> {
        self.field(self.slices())
    }

    /// Linear interpolation in time.
    pub fn eval(&self, t: T) -> Vec<T> {
        let n = self.slices();
        let x = (t / self.t_obs * T::count(n)).max(T::zero()).min(T::count(n));
        let j = x.floor().to_usize().unwrap_or(0).min(n - 1);
        let w = x - T::count(j);
        self.values[j].iter().zip(&self.values[j + 1]).map(|(&a, &b)| a + (b - a) * w).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DuhamelOptions<T> {
    pub slices: usize,
    /// Gauss–Legendre points per lag panel.
    pub gauss_points: usize,
    /// Below this lag the semigroup is replaced by the identity.
    pub tau_identity: T,
}

impl<T: Real> Default for DuhamelOptions<T> {
    fn default() -> Self {
        Self { slices: 64, gauss_points: 4, tau_identity: lit(1e-6) }
    }
}

/// Lag panels: `[tau_identity, 2 tau_identity, ...]` doubling up to the slice
/// spacing, then one panel per slice interval. Every slice time is a panel
/// boundary, so each slice integrates over a prefix of the panels.
struct LagPanel<T> {
    /// Number of leading slice intervals the panel covers (panels inside the
    /// first slice interval report 1).
    end_slice: usize,
    kernels: Vec<(T, T, SemigroupMatrix<T>)>,
}

/// Precomputed semigroup matrices for one grid, observation time and mesh.
pub struct DuhamelOperator<T> {
    pub grid: Arc<RadialGrid<T>>,
    pub t_obs: T,
    pub options: DuhamelOptions<T>,
    panels: Vec<LagPanel<T>>,
    /// `S(s_j)` for `j >= 1`.
    free: Vec<SemigroupMatrix<T>>,
}

impl<T: Real> DuhamelOperator<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, t_obs: T, options: DuhamelOptions<T>) -> Result<Self> {
        if !(t_obs > T::zero()) || options.slices < 1 || options.gauss_points < 1 {
            return Err(invalid("duhamel", "t_obs > 0, slices >= 1 and gauss_points >= 1 required"));
        }
        let n = options.slices;
        let dt = t_obs / T::count(n);
        if !(options.tau_identity >= T::zero() && options.tau_identity < dt) {
            return Err(invalid("tau_identity", format!("must lie in [0, {dt})")));
        }
        let mut bounds: Vec<(T, T, usize)> = Vec::new();
        let mut a = options.tau_identity;
        if a > T::zero() {
            while a * lit(2.0) < dt {
                bounds.push((a, a * lit(2.0), 1));
                a = a * lit(2.0);
            }
        } else {
            a = T::zero();
        }
        bounds.push((a, dt, 1));
        for j in 1..n {
            bounds.push((dt * T::count(j), dt * T::count(j + 1), j + 1));
        }
        let gl = GaussLegendre::<T>::new(options.gauss_points);
        let lags: Vec<(usize, T, T)> = bounds
            .iter()
            .enumerate()
            .flat_map(|(p, &(lo, hi, _))| gl.mapped(lo, hi).map(move |(x, w)| (p, x, w)).collect::<Vec<_>>())
            .collect();
        let built: Vec<(usize, T, T, SemigroupMatrix<T>)> = lags
            .into_par_iter()
            .map(|(p, tau, w)| SemigroupMatrix::new(&grid, tau).map(|m| (p, tau, w, m)))
            .collect::<Result<_>>()?;
        let mut panels: Vec<LagPanel<T>> =
            bounds.iter().map(|b| LagPanel { end_slice: b.2, kernels: Vec::new() }).collect();
        for (p, tau, w, m) in built {
            panels[p].kernels.push((tau, w, m));
        }
        let free =
            (1..=n).into_par_iter().map(|j| SemigroupMatrix::new(&grid, dt * T::count(j))).collect::<Result<_>>()?;
        Ok(Self { grid, t_obs, options, panels, free })
    }

    fn check(&self, prev: &FieldTrajectory<T>) -> Result<()> {
        let tol = T::epsilon() * lit(16.0) * self.t_obs;
        if (prev.t_obs - self.t_obs).abs() > tol || prev.slices() != self.options.slices {
            return Err(Error::TimeMeshMismatch {
                start: 0.0,
                end: prev.t_obs.as_f64(),
                required: self.t_obs.as_f64(),
            });
        }
        if !prev.grid.same_nodes(&self.grid) {
            return Err(Error::GridMismatch("trajectory and operator grids differ".into()));
        }
        Ok(())
    }

    /// `Φ(prev)` at every slice.
    pub fn apply(
        &self,
        prev: &FieldTrajectory<T>,
        u0: &RadialField<T>,
        spec: &NonlinearitySpec<T>,
    ) -> Result<FieldTrajectory<T>> {
        self.check(prev)?;
        if !u0.grid.same_nodes(&self.grid) {
            return Err(Error::GridMismatch("initial data and operator grids differ".into()));
        }
        let n = self.options.slices;
        let dt = self.t_obs / T::count(n);
        let ext_u0 = u0.exterior();
        let ext_f = spec.f(ext_u0);
        let f_of = |v: &[T]| -> Vec<T> { v.iter().map(|&x| spec.f(x)).collect() };
        let values: Vec<Vec<T>> = (0..=n)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    return u0.values.clone();
                }
                let s = dt * T::count(j);
                let mut acc = self.free[j - 1].apply_values(&u0.values, ext_u0);
                let tau0 = self.options.tau_identity;
                if tau0 > T::zero() {
                    for (a, fv) in acc.iter_mut().zip(f_of(&prev.values[j])) {
                        *a = *a + tau0 * fv;
                    }
                }
                for panel in self.panels.iter().take_while(|p| p.end_slice <= j) {
                    for (tau, w, m) in &panel.kernels {
                        let fv = f_of(&prev.eval(s - *tau));
                        for (a, v) in acc.iter_mut().zip(m.apply_values(&fv, ext_f)) {
                            *a = *a + *w * v;
                        }
                    }
                }
                acc.into_iter().map(|v| v.max(T::zero())).collect()
            })
            .collect();
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite()) {
            return Err(invalid("duhamel", format!("non-finite iterate value {bad}")));
        }
        Ok(FieldTrajectory { grid: self.grid.clone(), t_obs: self.t_obs, values })
    }
}

/// One application of the Duhamel map, returned at `t_obs`.
pub fn duhamel_map<T: Real>(
    prev: &FieldTrajectory<T>,
    u0: &RadialField<T>,
    spec: &NonlinearitySpec<T>,
    t_obs: T,
    gauss_points: usize,
) -> Result<RadialField<T>> {
    let opts = DuhamelOptions { slices: prev.slices(), gauss_points, ..DuhamelOptions::default() };
    let op = DuhamelOperator::new(prev.grid.clone(), t_obs, opts)?;
    Ok(op.apply(prev, u0, spec)?.at_obs())
}
