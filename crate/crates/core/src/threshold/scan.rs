use rayon::prelude::*;
use serde::Serialize;

use super::{run_case, CaseSetup, Classification, EvolutionOutcome, PerturbationSpec};
use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Serialize)]
pub struct ScanOptions {
    pub center: f64,
    pub width: f64,
    /// Signed bump amplitudes, absolute.
    pub amplitudes: Vec<f64>,
    pub caps: Vec<f64>,
}

impl ScanOptions {
    /// Amplitudes `fraction * u*(center)`.
    pub fn relative<T: Real>(
        table: &crate::singular::SingularSolutionTable<T>,
        center: f64,
        width: f64,
        fractions: &[f64],
        caps: Vec<f64>,
    ) -> Self {
        let scale = table.u_at(lit(center)).as_f64();
        Self { center, width, amplitudes: fractions.iter().map(|a| a * scale).collect(), caps }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanCase {
    pub amplitude: f64,
    pub outcome: EvolutionOutcome,
}

/// One line of the scan CSV: a single amplitude and cap.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub amplitude: f64,
    pub classification: &'static str,
    pub t_detect: Option<f64>,
    pub cap: f64,
    pub sup_final: f64,
    pub reaction_mass_final: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub options: ScanOptions,
    pub cases: Vec<ScanCase>,
    /// `(largest GlobalBounded amplitude, smallest BlowUp amplitude)`.
    pub threshold_bracket: (Option<f64>, Option<f64>),
}

impl ScanReport {
    pub fn classifications(&self) -> Vec<Classification> {
        self.cases.iter().map(|c| c.outcome.classification).collect()
    }

    pub fn rows(&self) -> Vec<ScanRow> {
        self.cases
            .iter()
            .flat_map(|c| {
                c.outcome.runs.iter().map(move |run| ScanRow {
                    amplitude: c.amplitude,
                    classification: run.classification.label(),
                    t_detect: run.classification.t_detect(),
                    cap: run.cap,
                    sup_final: run.sup_final,
                    reaction_mass_final: run.reaction_mass_final,
                })
            })
            .collect()
    }
}

fn rank(c: &Classification) -> u8 {
    match c {
        Classification::GlobalBounded => 0,
        Classification::Undetermined => 1,
        Classification::BlowUp { .. } => 2,
    }
}

/// Runs a bump perturbation of the steady state for every amplitude, in
/// parallel, and checks that the verdicts switch from bounded to blow-up
/// once as the amplitude increases, with at most one band of undetermined
/// cases in between.
pub fn threshold_scan<T: Real>(setup: &CaseSetup<'_, T>, opts: &ScanOptions) -> Result<ScanReport> {
    if opts.amplitudes.is_empty() {
        return Err(invalid("amplitudes", "empty amplitude grid"));
    }
    let caps: Vec<T> = opts.caps.iter().map(|&c| lit(c)).collect();
    let mut amps = opts.amplitudes.clone();
    amps.sort_by(|a, b| a.total_cmp(b));
    let outcomes: Vec<Result<ScanCase>> = amps
        .par_iter()
        .map(|&a| {
            let pert = PerturbationSpec::bump(opts.center, opts.width, a);
            Ok(ScanCase { amplitude: a, outcome: run_case(setup, &pert, &caps)? })
        })
        .collect();
    let cases = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let verdicts: Vec<(f64, Classification)> = cases.iter().map(|c| (c.amplitude, c.outcome.classification)).collect();
    let threshold_bracket = threshold_bracket(&verdicts)?;
    Ok(ScanReport { options: opts.clone(), cases, threshold_bracket })
}

/// `(largest GlobalBounded amplitude, smallest BlowUp amplitude)` of verdicts
/// sorted by amplitude, or [`Error::NonMonotoneScan`] if a verdict ever
/// steps back from blow-up towards bounded.
pub fn threshold_bracket(verdicts: &[(f64, Classification)]) -> Result<(Option<f64>, Option<f64>)> {
    if let Some(i) = verdicts.windows(2).position(|w| rank(&w[1].1) < rank(&w[0].1)) {
        let (a, b) = (verdicts[i], verdicts[i + 1]);
        return Err(Error::NonMonotoneScan {
            detail: format!("amplitude {:e} is {} but {:e} is {}", a.0, a.1.label(), b.0, b.1.label()),
        });
    }
    let lo = verdicts.iter().filter(|v| v.1 == Classification::GlobalBounded).map(|v| v.0).last();
    let hi = verdicts.iter().find(|v| matches!(v.1, Classification::BlowUp { .. })).map(|v| v.0);
    Ok((lo, hi))
}
