//! Picard ladders of the Duhamel map: `w_k` from above seeded at `u*`,
//! `v_k` from below seeded at `0`, with ordering certificates.

mod duhamel;

pub use duhamel::{duhamel_map, DuhamelOperator, DuhamelOptions, FieldTrajectory};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::radial::{ul_norm, RadialField};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seed {
    /// `w_0 = u*`
    FromAbove,
    /// `v_0 = 0`
    FromBelow,
}

#[derive(Debug, Clone, Copy)]
pub struct LadderOptions<T> {
    pub k_max: usize,
    pub ladder_tol: T,
    /// Stop once the Cauchy gap falls below `ladder_tol`.
    pub stop_on_convergence: bool,
    pub duhamel: DuhamelOptions<T>,
}

impl<T: Real> Default for LadderOptions<T> {
    fn default() -> Self {
        Self { k_max: 8, ladder_tol: lit(1e-8), stop_on_convergence: true, duhamel: DuhamelOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct IterationLadder<T> {
    pub seed: Seed,
    pub t_obs: T,
    /// Iterates `0..=k` on the whole time mesh.
    pub iterates: Vec<FieldTrajectory<T>>,
    /// Largest step against the required direction over all slices, nodes
    /// and consecutive iterates.
    pub ordering_violation_max: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderSummary {
    pub seed: Seed,
    pub k: usize,
    pub t_obs: f64,
    pub sup_norm_per_iterate: Vec<f64>,
    pub cauchy_gaps: Vec<f64>,
    pub ordering_violation_max: f64,
}

impl<T: Real> IterationLadder<T> {
    pub fn k(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn at_obs(&self, k: usize) -> RadialField<T> {
        self.iterates[k].at_obs()
    }

    /// `max_node |x_k - x_{k+1}|` at `t_obs`.
    pub fn cauchy_gaps(&self) -> Vec<T> {
        self.iterates
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].values.last().unwrap(), w[1].values.last().unwrap());
                a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
            })
            .collect()
    }

    pub fn limit(&self) -> RadialField<T> {
        self.at_obs(self.k())
    }

    pub fn summary(&self) -> LadderSummary {
        LadderSummary {
            seed: self.seed,
            k: self.k(),
            t_obs: self.t_obs.as_f64(),
            sup_norm_per_iterate: (0..=self.k()).map(|k| self.at_obs(k).sup().as_f64()).collect(),
            cauchy_gaps: self.cauchy_gaps().iter().map(|g| g.as_f64()).collect(),
            ordering_violation_max: self.ordering_violation_max.as_f64(),
        }
    }
}

/// Excess of `next` over `prev` in the forbidden direction.
fn step_violation<T: Real>(seed: Seed, prev: &FieldTrajectory<T>, next: &FieldTrajectory<T>) -> (T, usize) {
    let mut worst = (T::neg_infinity(), 0);
    for (a, b) in prev.values.iter().zip(&next.values) {
        for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
            let v = match seed {
                Seed::FromBelow => x - y,
                Seed::FromAbove => y - x,
            };
            if v > worst.0 {
                worst = (v, i);
            }
        }
    }
    worst
}

/// Iterates the Duhamel map from the seed, certifying monotonicity in `k`
/// at every slice and node. `u_star` is the (capped) singular profile, the
/// seed from above.
pub fn run_ladder<T: Real>(
    seed: Seed,
    u0: &RadialField<T>,
    u_star: &RadialField<T>,
    spec: &NonlinearitySpec<T>,
    t_obs: T,
    opts: &LadderOptions<T>,
) -> Result<IterationLadder<T>> {
    let op = DuhamelOperator::new(u0.grid.clone(), t_obs, opts.duhamel)?;
    run_ladder_with(&op, seed, u0, u_star, spec, opts)
}

/// [`run_ladder`] reusing a precomputed operator.
pub fn run_ladder_with<T: Real>(
    op: &DuhamelOperator<T>,
    seed: Seed,
    u0: &RadialField<T>,
    u_star: &RadialField<T>,
    spec: &NonlinearitySpec<T>,
    opts: &LadderOptions<T>,
) -> Result<IterationLadder<T>> {
    if opts.k_max < 1 {
        return Err(invalid("k_max", "at least one iterate required"));
    }
    if let Some(v) = u0.max_excess_over(u_star).ok().filter(|v| *v > opts.ladder_tol) {
        return Err(invalid("u0", format!("exceeds u* by {v}")));
    }
    let slices = opts.duhamel.slices;
    let start = match seed {
        Seed::FromAbove => FieldTrajectory::constant(u_star, op.t_obs, slices),
        Seed::FromBelow => FieldTrajectory::constant(&RadialField::zeros(u0.grid.clone()), op.t_obs, slices),
    };
    let mut iterates = vec![start];
    let mut violation = T::neg_infinity();
    for k in 1..=opts.k_max {
        let next = op.apply(&iterates[k - 1], u0, spec)?;
        let (v, node) = step_violation(seed, &iterates[k - 1], &next);
        violation = violation.max(v);
        if v > opts.ladder_tol {
            return Err(Error::OrderingViolation { iterate: k, node, violation: v.as_f64() });
        }
        iterates.push(next);
        if opts.stop_on_convergence {
            let gap = {
                let (a, b) = (iterates[k - 1].values.last().unwrap(), iterates[k].values.last().unwrap());
                a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
            };
            if gap < opts.ladder_tol {
                break;
            }
        }
    }
    Ok(IterationLadder { seed, t_obs: op.t_obs, iterates, ordering_violation_max: violation.max(T::zero()) })
}

/// `max (v_k - w_j)` over all iterate pairs, slices and nodes; nonpositive
/// when the two ladders are sandwiched.
pub fn sandwich_violation<T: Real>(below: &IterationLadder<T>, above: &IterationLadder<T>) -> Result<T> {
    if below.seed != Seed::FromBelow || above.seed != Seed::FromAbove {
        return Err(invalid("ladders", "expected one ladder from below and one from above"));
    }
    let mut worst = T::neg_infinity();
    for v in &below.iterates {
        for w in &above.iterates {
            if !v.grid.same_nodes(&w.grid) || v.slices() != w.slices() {
                return Err(Error::GridMismatch("ladders on different meshes".into()));
            }
            for (a, b) in v.values.iter().zip(&w.values) {
                for (&x, &y) in a.iter().zip(b) {
                    worst = worst.max(x - y);
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    pub window: (f64, f64),
    /// `sup` of iterate 4 over the slices in the window.
    pub sup_iterate4: f64,
    pub ul_exponent: f64,
    /// Largest `L^{N/2+eps}_ul` norm of `f(iterate 3)` over the window.
    pub ul_norm_reaction3: f64,
    pub finite: bool,
}

/// Norms that become finite immediately for data below `u*`.
pub fn check_immediate_boundedness<T: Real>(
    ladder: &IterationLadder<T>,
    spec: &NonlinearitySpec<T>,
    window: (T, T),
    eps: T,
) -> Result<BoundednessReport> {
    if ladder.seed != Seed::FromAbove || ladder.k() < 4 {
        return Err(invalid("ladder", "needs at least four iterates from above"));
    }
    let p = lit::<T>(ladder.iterates[0].grid.dim as f64) * lit(0.5) + eps;
    let (t0, t1) = window;
    let mut sup4 = T::zero();
    let mut ul3 = T::zero();
    let traj4 = &ladder.iterates[4];
    let traj3 = &ladder.iterates[3];
    for j in 0..=traj4.slices() {
        let t = traj4.time(j);
        if t < t0 || t > t1 {
            continue;
        }
        sup4 = sup4.max(traj4.values[j].iter().fold(T::zero(), |m, &v| m.max(v)));
        let fv: Vec<T> = traj3.values[j].iter().map(|&v| spec.f(v)).collect();
        if fv.iter().any(|v| !v.is_finite()) {
            ul3 = T::infinity();
            continue;
        }
        let field = traj3.field(j).with_values(fv)?;
        ul3 = ul3.max(lit(ul_norm(&field, p)?.value));
    }
    Ok(BoundednessReport {
        window: (t0.as_f64(), t1.as_f64()),
        sup_iterate4: sup4.as_f64(),
        ul_exponent: p.as_f64(),
        ul_norm_reaction3: ul3.as_f64(),
        finite: sup4.is_finite() && ul3.is_finite(),
    })
}

impl BoundednessReport {
    /// Both norms agree with `other` to relative `tol`.
    pub fn agrees_with(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
        self.finite
            && other.finite
            && close(self.sup_iterate4, other.sup_iterate4)
            && close(self.ul_norm_reaction3, other.ul_norm_reaction3)
    }
}
