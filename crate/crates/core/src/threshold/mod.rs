//! Threshold experiments: evolve data on either side of the singular
//! steady state, classify the outcome and scan the perturbation amplitude.

mod scan;

pub use scan::{threshold_bracket, threshold_scan, ScanCase, ScanOptions, ScanReport, ScanRow};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::radial::{
    discrete_steady_state, evolve, BlowUpGuards, Evolution, EvolveOptions, NormSample, RadialField, RadialGrid,
    Reaction, StopReason,
};
use crate::scalar::{lit, Real};
use crate::singular::SingularSolutionTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    /// `A exp(-(r - r_c)^2 / (2 sigma^2))` added to the base profile.
    RadialBump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    Scaling {
        factor: f64,
    },
    Truncation {
        cap: f64,
    },
}

/// Perturbations applied in order to the base profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub steps: Vec<Perturbation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Below,
    Above,
    /// Neither ordering holds, or the data equals the base.
    Unordered,
}

impl PerturbationSpec {
    pub fn bump(center: f64, width: f64, amplitude: f64) -> Self {
        Self { steps: vec![Perturbation::RadialBump { center, width, amplitude }] }
    }

    pub fn scaling(factor: f64) -> Self {
        Self { steps: vec![Perturbation::Scaling { factor }] }
    }

    pub fn truncation(cap: f64) -> Self {
        Self { steps: vec![Perturbation::Truncation { cap }] }
    }

    pub fn apply<T: Real>(&self, base: &RadialField<T>) -> Result<RadialField<T>> {
        let nodes = base.grid.nodes();
        let mut v = base.values.clone();
        for step in &self.steps {
            match *step {
                Perturbation::RadialBump { center, width, amplitude } => {
                    if !(width > 0.0) {
                        return Err(invalid("width", format!("must be positive, got {width}")));
                    }
                    let (c, w, a): (T, T, T) = (lit(center), lit(width), lit(amplitude));
                    for (x, &r) in v.iter_mut().zip(nodes) {
                        let d = (r - c) / w;
                        *x = (*x + a * (-d * d * lit(0.5)).exp()).max(T::zero());
                    }
                }
                Perturbation::Scaling { factor } => {
                    if !(factor >= 0.0) {
                        return Err(invalid("factor", format!("must be nonnegative, got {factor}")));
                    }
                    v.iter_mut().for_each(|x| *x = *x * lit(factor));
                }
                Perturbation::Truncation { cap } => {
                    v.iter_mut().for_each(|x| *x = x.min(lit(cap)));
                }
            }
        }
        let mut out = base.with_values(v)?;
        out.cap_mask = base.cap_mask.clone();
        Ok(out)
    }

    /// Ordering of `u0` against the base, nodewise.
    pub fn side<T: Real>(u0: &RadialField<T>, base: &RadialField<T>) -> Side {
        let below = u0.values.iter().zip(&base.values).all(|(a, b)| a <= b);
        let above = u0.values.iter().zip(&base.values).all(|(a, b)| a >= b);
        match (below, above) {
            (true, false) => Side::Below,
            (false, true) => Side::Above,
            _ => Side::Unordered,
        }
    }
}

/// Capped singular profile on the grid and the discrete steady state it
/// continues to. Perturbations act on the steady state: it is the exact
/// threshold of the discrete dynamics, whereas the interpolated profile
/// carries a discretization residual that swamps small perturbations.
#[derive(Debug, Clone)]
pub struct ThresholdBase<T> {
    pub cap: T,
    pub interpolated: RadialField<T>,
    pub steady: RadialField<T>,
    pub steady_residual: T,
}

pub fn threshold_base<T: Real>(
    spec: &NonlinearitySpec<T>,
    table: &SingularSolutionTable<T>,
    grid: Arc<RadialGrid<T>>,
    cap: T,
) -> Result<ThresholdBase<T>> {
    let interpolated = table.to_field(grid, cap)?;
    let ss = discrete_steady_state(&interpolated, spec, 200)?;
    if !(ss.residual < lit(1e-10)) {
        return Err(invalid("steady state", format!("Newton iteration stalled at relative residual {}", ss.residual)));
    }
    let mut steady = ss.field;
    steady.cap_mask = interpolated.cap_mask.clone();
    Ok(ThresholdBase { cap, interpolated, steady, steady_residual: ss.residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    GlobalBounded,
    BlowUp { t_detect: f64 },
    Undetermined,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::GlobalBounded => "GlobalBounded",
            Classification::BlowUp { .. } => "BlowUp",
            Classification::Undetermined => "Undetermined",
        }
    }

    pub fn t_detect(&self) -> Option<f64> {
        match self {
            Classification::BlowUp { t_detect } => Some(*t_detect),
            _ => None,
        }
    }

    pub fn same_kind(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyOptions {
    pub guards: BlowUpGuards,
    /// Fraction of the horizon ignored before testing for a plateau.
    pub transient: f64,
    /// Allowed relative rise of the sup norm between recorded samples.
    pub rise_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { guards: BlowUpGuards::default(), transient: 0.2, rise_tol: 1e-9 }
    }
}

pub fn classify<T: Real>(
    ev: &Evolution<T>,
    reaction: Reaction<'_, T>,
    horizon: T,
    opts: &ClassifyOptions,
) -> Classification {
    let last = ev.final_sample();
    match ev.stop {
        StopReason::TimeStagnation | StopReason::ReactionOverflow => {
            let sup = last.sup_norm;
            let big = sup > opts.guards.sup || reaction.f(lit(sup)).as_f64() > opts.guards.reaction;
            let m0 = ev.initial_mass();
            let grew = m0 > 0.0 && last.f_mass_inner > opts.guards.mass_growth * m0;
            let grew = grew || (ev.stop == StopReason::ReactionOverflow && m0 > 0.0);
            if big && grew {
                Classification::BlowUp { t_detect: ev.t_final.as_f64() }
            } else {
                Classification::Undetermined
            }
        }
        StopReason::Horizon => {
            let t0 = opts.transient * horizon.as_f64();
            let tail: Vec<&NormSample> = ev.series.iter().filter(|s| s.t >= t0).collect();
            let finite = tail.iter().all(|s| s.sup_norm.is_finite());
            let nonincreasing = tail.windows(2).all(|w| w[1].sup_norm <= w[0].sup_norm * (1.0 + opts.rise_tol));
            if finite && nonincreasing && !tail.is_empty() {
                Classification::GlobalBounded
            } else {
                Classification::Undetermined
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapRun {
    pub cap: f64,
    pub classification: Classification,
    pub stop: StopReason,
    pub steps: usize,
    pub sup_final: f64,
    pub reaction_mass_final: f64,
    pub series: Vec<NormSample>,
    /// Largest `(u - base) / base` seen at recorded times for data that
    /// starts below the base, outside the origin node.
    pub below_violation: Option<f64>,
    /// Smallest `(u - base) / base` seen for data that starts above the
    /// base. Negative values mean the trajectory dipped below it.
    pub above_dip: Option<f64>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, Vec<f64>)>,
    #[serde(skip)]
    pub base: Vec<f64>,
    #[serde(skip)]
    pub grid_nodes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionOutcome {
    pub classification: Classification,
    pub side: Side,
    pub cap_stable: bool,
    pub runs: Vec<CapRun>,
}

/// Everything a case needs besides the perturbation.
pub struct CaseSetup<'a, T> {
    pub spec: &'a NonlinearitySpec<T>,
    pub table: &'a SingularSolutionTable<T>,
    pub grid: Arc<RadialGrid<T>>,
    pub pure_heat: bool,
    pub evolve: EvolveOptions<T>,
    pub classify: ClassifyOptions,
}

impl<'a, T: Real> CaseSetup<'a, T> {
    pub fn reaction(&self) -> Reaction<'a, T> {
        if self.pure_heat {
            Reaction::Off
        } else {
            Reaction::On(self.spec)
        }
    }
}

/// Evolves `pert(base)` for every cap and merges the verdicts: a verdict
/// stands only if every cap agrees, and blow-up times may not grow with
/// the cap.
pub fn run_case<T: Real>(setup: &CaseSetup<'_, T>, pert: &PerturbationSpec, caps: &[T]) -> Result<EvolutionOutcome> {
    if caps.is_empty() {
        return Err(invalid("caps", "at least one cap required"));
    }
    let mut runs = Vec::with_capacity(caps.len());
    let mut side = Side::Unordered;
    for &cap in caps {
        let base = threshold_base(setup.spec, setup.table, setup.grid.clone(), cap)?;
        runs.push(run_single(setup, &base, pert, &mut side)?);
    }
    let first = runs[0].classification;
    let mut cap_stable = runs.iter().all(|r| r.classification.same_kind(&first));
    if cap_stable {
        if let Classification::BlowUp { .. } = first {
            let times: Vec<f64> = runs.iter().filter_map(|r| r.classification.t_detect()).collect();
            cap_stable = times.windows(2).all(|w| w[1] <= w[0] * 1.05);
        }
    }
    let classification = if cap_stable { first } else { Classification::Undetermined };
    let classification = match classification {
        Classification::BlowUp { .. } => {
            let t = runs.iter().filter_map(|r| r.classification.t_detect()).fold(f64::INFINITY, f64::min);
            Classification::BlowUp { t_detect: t }
        }
        c => c,
    };
    Ok(EvolutionOutcome { classification, side, cap_stable, runs })
}

fn run_single<T: Real>(
    setup: &CaseSetup<'_, T>,
    base: &ThresholdBase<T>,
    pert: &PerturbationSpec,
    side: &mut Side,
) -> Result<CapRun> {
    let u0 = pert.apply(&base.steady)?;
    *side = PerturbationSpec::side(&u0, &base.steady);
    let reaction = setup.reaction();
    let ev = evolve(&u0, reaction, &setup.evolve)?;
    let classification = classify(&ev, reaction, setup.evolve.horizon, &setup.classify);
    let excess = || {
        ev.snapshots
            .iter()
            .flat_map(|(_, v)| v.iter().zip(&base.steady.values).skip(1).map(|(&u, &b)| ((u - b) / b).as_f64()))
    };
    let below_violation = (*side == Side::Below).then(|| excess().fold(f64::NEG_INFINITY, f64::max));
    let above_dip = (*side == Side::Above).then(|| excess().fold(f64::INFINITY, f64::min));
    let last = ev.final_sample();
    Ok(CapRun {
        cap: base.cap.as_f64(),
        classification,
        stop: ev.stop,
        steps: ev.steps,
        sup_final: last.sup_norm,
        reaction_mass_final: last.f_mass_inner,
        series: ev.series.clone(),
        below_violation,
        above_dip,
        snapshots: ev.snapshots.iter().map(|(t, v)| (t.as_f64(), v.iter().map(|x| x.as_f64()).collect())).collect(),
        base: base.steady.values.iter().map(|x| x.as_f64()).collect(),
        grid_nodes: base.steady.grid.nodes().iter().map(|x| x.as_f64()).collect(),
    })
}

/// `(t, alpha(t))` with `alpha` the largest factor such that
/// `u(r, t) >= alpha u*(r)` on the innermost decade of grid radii.
pub fn amplification_probe(run: &CapRun) -> Vec<(f64, f64)> {
    let r = &run.grid_nodes;
    let r1 = r[1];
    let idx: Vec<usize> = (1..r.len()).filter(|&i| r[i] <= 10.0 * r1).collect();
    run.snapshots
        .iter()
        .map(|(t, v)| (*t, idx.iter().map(|&i| v[i] / run.base[i]).fold(f64::INFINITY, f64::min)))
        .collect()
}
