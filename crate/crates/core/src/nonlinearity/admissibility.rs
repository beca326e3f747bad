//! Sampling-based checks of the admissibility conditions A1-A4.
//!
//! A `PASS` verdict means that no violation was found on the samples; the
//! conditions quantify over all `u > 0` and cannot be decided numerically.

use serde::Serialize;

use super::{sobolev_exponent, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::scalar::{lit, log_space, Real};

const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    A1,
    A2,
    A3,
    A4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

/// Limit of a sampled sequence, extrapolated from its last three values.
#[derive(Debug, Clone, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub error_bar: f64,
    pub samples: Vec<Witness>,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct LimitEstimates {
    pub g2_over_g1sq: LimitEstimate,
    pub fprime_F: Option<LimitEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub dimension: usize,
    pub sobolev_exponent: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub n_samples: usize,
    pub tol_q: f64,
    pub conditions: Vec<ConditionReport>,
    pub limit_estimates: LimitEstimates,
    pub note: &'static str,
}

impl AdmissibilityReport {
    pub fn verdict(&self, c: Condition) -> Verdict {
        self.conditions.iter().find(|r| r.condition == c).map(|r| r.verdict).unwrap_or(Verdict::Fail)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|r| r.verdict == Verdict::Pass)
    }
}

/// Aitken extrapolation of the last three entries; falls back to the last
/// value when the differences do not contract.
fn extrapolate(seq: &[(f64, f64)]) -> LimitEstimate {
    let samples = seq.iter().map(|&(u, value)| Witness { u, value }).collect();
    let n = seq.len();
    if n < 3 {
        let v = seq.last().map(|x| x.1).unwrap_or(f64::NAN);
        return LimitEstimate { value: v, error_bar: f64::INFINITY, samples };
    }
    let (a, b, c) = (seq[n - 3].1, seq[n - 2].1, seq[n - 1].1);
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    let (value, error_bar) = if d2.abs() < d1.abs() && denom != 0.0 {
        let l = c - d2 * d2 / denom;
        (l, (c - l).abs().max(f64::EPSILON * c.abs()))
    } else {
        (c, d2.abs())
    };
    LimitEstimate { value, error_bar, samples }
}

fn push_witness(ws: &mut Vec<Witness>, u: f64, value: f64) {
    if ws.len() < MAX_WITNESSES {
        ws.push(Witness { u, value });
    }
}

/// Evaluates A1-A4 on `n_samples` log-spaced points of `[u_min, u_max]`.
///
/// (A4) is evaluated through `Q(u)/f(u)`, which does not overflow, and is
/// accepted when `Q/f >= -tol_q * max(1, u)`, the scale of the two cancelling terms.
pub fn check_admissibility<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    u_min: T,
    u_max: T,
    n_samples: usize,
    tol_q: T,
) -> Result<AdmissibilityReport> {
    if dim < 3 {
        return Err(crate::error::invalid("dim", "N >= 3 required"));
    }
    if !(u_max > u_min && u_min > T::zero()) {
        return Err(crate::error::invalid("u_max", "need 0 < u_min < u_max"));
    }
    if n_samples < 100 {
        return Err(crate::error::invalid("n_samples", "at least 100 samples required"));
    }
    let us = log_space(u_min, u_max, n_samples);

    // A1
    let mut w1 = Vec::new();
    let f0 = spec.f(T::zero());
    let df0 = spec.df(T::zero());
    if f0 != T::zero() {
        push_witness(&mut w1, 0.0, f0.as_f64());
    }
    if df0 != T::zero() {
        push_witness(&mut w1, 0.0, df0.as_f64());
    }
    // continuity of f' at the origin along the smallest samples
    let small: Vec<T> = us.iter().take(5).map(|&u| spec.df(u)).collect();
    if !small.iter().all(|v| v.is_finite()) || small[0] > small[4] {
        push_witness(&mut w1, us[0].as_f64(), small[0].as_f64());
    }
    let a1 = ConditionReport {
        condition: Condition::A1,
        verdict: if w1.is_empty() { Verdict::Pass } else { Verdict::Fail },
        witnesses: w1,
        detail: format!("f(0) = {f0}, f'(0) = {df0}"),
    };

    // A2, signs of f' and f'' (f'' sign from g'' + g'^2 where f overflows)
    let mut w2 = Vec::new();
    for &u in &us {
        let d1 = spec.df(u);
        let d2 = spec.d2f(u);
        let d2_sign = if d2.is_finite() { d2 } else { spec.d2g(u) + spec.dg(u).powi(2) };
        if !(d1 > T::zero()) {
            push_witness(&mut w2, u.as_f64(), d1.as_f64());
        }
        if !(d2_sign > T::zero()) {
            push_witness(&mut w2, u.as_f64(), d2_sign.as_f64());
        }
    }
    let a2 = ConditionReport {
        condition: Condition::A2,
        verdict: if w2.is_empty() { Verdict::Pass } else { Verdict::Fail },
        witnesses: w2,
        detail: "f' > 0 and f'' > 0 on all samples".into(),
    };

    // A3: convexity of g over the upper half of the range, ratio limit
    let half = u_max * lit(0.5);
    let mut w3 = Vec::new();
    let mut last_concave: Option<T> = None;
    for &u in &us {
        if spec.d2g(u) < T::zero() {
            last_concave = Some(u);
            if u >= half {
                push_witness(&mut w3, u.as_f64(), spec.d2g(u).as_f64());
            }
        }
    }
    let tail_grid = [u_max * lit(0.125), u_max * lit(0.25), u_max * lit(0.5), u_max];
    let ratio = check_log_convexity_ratio(spec, &tail_grid)?;
    let ratio_seq: Vec<(f64, f64)> = ratio.iter().map(|&(u, r)| (u.as_f64(), r.as_f64())).collect();
    let ratio_est = extrapolate(&ratio_seq);
    let limit_ok = ratio_est.value.abs() <= 1e-3_f64.max(3.0 * ratio_est.error_bar)
        && ratio_seq.last().map(|x| x.1.abs() <= 1e-2).unwrap_or(false);
    if !limit_ok {
        push_witness(&mut w3, u_max.as_f64(), ratio_est.value);
    }
    let a3 = ConditionReport {
        condition: Condition::A3,
        verdict: if w3.is_empty() { Verdict::Pass } else { Verdict::Fail },
        witnesses: w3,
        detail: match last_concave {
            Some(u) => format!("g convex on samples above {u:e}; g''/g'^2 -> {:e}", ratio_est.value),
            None => format!("g convex on all samples; g''/g'^2 -> {:e}", ratio_est.value),
        },
    };

    // A4
    let mut w4 = Vec::new();
    let mut q_min = f64::INFINITY;
    for &u in &us {
        let q = spec.q_over_f(u, dim)?;
        let scale = T::one().max(u);
        q_min = q_min.min((q / scale).as_f64());
        if q < -tol_q * scale {
            push_witness(&mut w4, u.as_f64(), q.as_f64());
        }
    }
    let a4 = ConditionReport {
        condition: Condition::A4,
        verdict: if w4.is_empty() { Verdict::Pass } else { Verdict::Fail },
        witnesses: w4,
        detail: format!("min Q/(f max(1,u)) on samples = {q_min:e}"),
    };

    let fprime_f = match check_fprime_F_limit(spec, &tail_grid) {
        Ok(seq) => Some(extrapolate(&seq.iter().map(|&(u, v)| (u.as_f64(), v.as_f64())).collect::<Vec<_>>())),
        Err(Error::NonIntegrableTail { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(AdmissibilityReport {
        dimension: dim,
        sobolev_exponent: sobolev_exponent::<f64>(dim),
        u_min: u_min.as_f64(),
        u_max: u_max.as_f64(),
        n_samples,
        tol_q: tol_q.as_f64(),
        conditions: vec![a1, a2, a3, a4],
        limit_estimates: LimitEstimates { g2_over_g1sq: ratio_est, fprime_F: fprime_f },
        note: "PASS means no violation was found on the sampled points",
    })
}

/// `(u, f'(u) F(u))` along `u_grid`, evaluated as `g'(u) * (f F)(u)`.
#[allow(non_snake_case)]
pub fn check_fprime_F_limit<T: Real>(spec: &NonlinearitySpec<T>, u_grid: &[T]) -> Result<Vec<(T, T)>> {
    u_grid.iter().map(|&u| Ok((u, spec.dg(u) * spec.f_times_big_f(u)?))).collect()
}

/// `(u, g''(u)/g'(u)^2)` along `u_grid`.
pub fn check_log_convexity_ratio<T: Real>(spec: &NonlinearitySpec<T>, u_grid: &[T]) -> Result<Vec<(T, T)>> {
    u_grid
        .iter()
        .map(|&u| {
            let d1 = spec.dg(u);
            if !(d1.abs() >= spec.tol.div_tol) {
                return Err(Error::DivisionNearZero { u: u.as_f64(), value: d1.as_f64() });
            }
            Ok((u, spec.d2g(u) / (d1 * d1)))
        })
        .collect()
}
