//! Admissible nonlinearities `f` and their derived quantities.
//!
//! Every family exposes `f`, `f'`, `f''` and the log-derivatives of
//! `g = log f`. Quantities that overflow for exponential growth (`f`, `F`,
//! `F_0`) are also available in scaled form, normalized by `f(u)`.

mod admissibility;
mod barrier;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::{lit, Real};

pub use admissibility::{
    check_admissibility, check_fprime_F_limit, check_log_convexity_ratio, AdmissibilityReport, Condition,
    ConditionReport, LimitEstimate, LimitEstimates, Verdict, Witness,
};
pub use barrier::{eval_F, eval_F_inverse, eval_F_inverse_ln, eval_ln_F};

/// Critical Sobolev exponent `(N+2)/(N-2)`.
pub fn sobolev_exponent<T: Real>(dim: usize) -> T {
    assert!(dim >= 3, "dimension must be at least 3");
    lit((dim as f64 + 2.0) / (dim as f64 - 2.0))
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Large-`u` behaviour of `g = log f`, used to close the integral `F`
/// analytically beyond a truncation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailModel<T> {
    /// `g` convex from `convex_from` on: `int_M^inf ds/f <= 1/(f(M) g'(M))`.
    LogConvex { convex_from: T },
    /// `f(s) ~ c s^exponent`; the tail is closed with the power-law antiderivative.
    PowerLaw { exponent: T },
}

/// User-supplied nonlinearity.
#[derive(Clone)]
pub struct CustomNonlinearity<T> {
    pub name: String,
    pub f: ScalarFn<T>,
    pub df: ScalarFn<T>,
    pub d2f: ScalarFn<T>,
    /// `log f`, if a form that does not overflow is available.
    pub log_f: Option<ScalarFn<T>>,
    pub tail: TailModel<T>,
}

impl<T> fmt::Debug for CustomNonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNonlinearity").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Family<T> {
    /// `u^p exp(u^q)`
    PowerExp {
        p: T,
        q: T,
    },
    /// `chi(u) exp(a u)` with the quintic cutoff `chi`
    CutoffExp {
        a: T,
    },
    /// `u^p`
    PurePower {
        p: T,
    },
    Custom(Arc<CustomNonlinearity<T>>),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonlinearityTolerances<T> {
    /// Relative accuracy of `F`.
    pub tol_f: T,
    /// `|g'|` below which ratios with `g'` in the denominator are refused.
    pub div_tol: T,
    /// Relative tolerance of the inner adaptive quadratures.
    pub quad_tol: T,
    /// Lower end of the bracket used to invert `F`.
    pub u_bracket_min: T,
}

impl<T: Real> Default for NonlinearityTolerances<T> {
    fn default() -> Self {
        Self { tol_f: lit(1e-10), div_tol: lit(1e-14), quad_tol: lit(1e-10), u_bracket_min: lit(1e-6) }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearitySpec<T> {
    pub family: Family<T>,
    pub tol: NonlinearityTolerances<T>,
}

/// JSON descriptor of a nonlinearity.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SpecDescriptor {
    PowerExp { p: f64, q: f64 },
    CutoffExp { a: f64 },
    PurePower { p: f64 },
    Custom { name: String },
}

impl<T: Real> NonlinearitySpec<T> {
    pub fn power_exp(p: T, q: T) -> Result<Self> {
        if !(p > T::one()) {
            return Err(invalid("p", format!("power-exp needs p > 1, got {p}")));
        }
        if !(q > T::one()) {
            return Err(invalid("q", format!("power-exp needs q > 1, got {q}")));
        }
        Ok(Self::from_family(Family::PowerExp { p, q }))
    }

    pub fn cutoff_exp(a: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(invalid("a", format!("cutoff-exp needs a > 0, got {a}")));
        }
        Ok(Self::from_family(Family::CutoffExp { a }))
    }

    pub fn pure_power(p: T) -> Result<Self> {
        if !(p > T::one()) {
            return Err(invalid("p", format!("pure-power needs p > 1, got {p}")));
        }
        Ok(Self::from_family(Family::PurePower { p }))
    }

    pub fn custom(c: CustomNonlinearity<T>) -> Self {
        Self::from_family(Family::Custom(Arc::new(c)))
    }

    fn from_family(family: Family<T>) -> Self {
        Self { family, tol: NonlinearityTolerances::default() }
    }

    pub fn with_tolerances(mut self, tol: NonlinearityTolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    /// Same nonlinearity with `tol_f` and `quad_tol` both set to `tol`.
    pub fn with_accuracy(mut self, tol: T) -> Self {
        self.tol.tol_f = tol;
        self.tol.quad_tol = tol;
        self
    }

    pub fn descriptor(&self) -> SpecDescriptor {
        match &self.family {
            Family::PowerExp { p, q } => SpecDescriptor::PowerExp { p: p.as_f64(), q: q.as_f64() },
            Family::CutoffExp { a } => SpecDescriptor::CutoffExp { a: a.as_f64() },
            Family::PurePower { p } => SpecDescriptor::PurePower { p: p.as_f64() },
            Family::Custom(c) => SpecDescriptor::Custom { name: c.name.clone() },
        }
    }

    pub fn tail(&self) -> TailModel<T> {
        match &self.family {
            Family::PowerExp { p, q } => {
                let t = *p / (*q * (*q - T::one()));
                TailModel::LogConvex { convex_from: t.powf(T::one() / *q) }
            }
            Family::CutoffExp { .. } => TailModel::LogConvex { convex_from: lit(4.0) },
            Family::PurePower { p } => TailModel::PowerLaw { exponent: *p },
            Family::Custom(c) => c.tail,
        }
    }

    pub fn f(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        match &self.family {
            Family::PowerExp { p, q } => u.powf(*p) * u.powf(*q).exp(),
            Family::CutoffExp { a } => chi(u) * (*a * u).exp(),
            Family::PurePower { p } => u.powf(*p),
            Family::Custom(c) => (c.f)(u),
        }
    }

    pub fn df(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        match &self.family {
            Family::PowerExp { p, q } => {
                let uq = u.powf(*q);
                uq.exp() * (*p * u.powf(*p - T::one()) + *q * u.powf(*p + *q - T::one()))
            }
            Family::CutoffExp { a } => (chi_d1(u) + *a * chi(u)) * (*a * u).exp(),
            Family::PurePower { p } => *p * u.powf(*p - T::one()),
            Family::Custom(c) => (c.df)(u),
        }
    }

    pub fn d2f(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        match &self.family {
            Family::PowerExp { p, q } => {
                let uq = u.powf(*q);
                let one = T::one();
                let two: T = lit(2.0);
                let bracket = *p * (*p - one) + *q * (two * *p + *q - one) * uq + *q * *q * uq * uq;
                uq.exp() * u.powf(*p - two) * bracket
            }
            Family::CutoffExp { a } => {
                let two: T = lit(2.0);
                (chi_d2(u) + two * *a * chi_d1(u) + *a * *a * chi(u)) * (*a * u).exp()
            }
            Family::PurePower { p } => *p * (*p - T::one()) * u.powf(*p - lit(2.0)),
            Family::Custom(c) => (c.d2f)(u),
        }
    }

    /// `g(u) = log f(u)`, finite wherever `f(u) > 0` even when `f` overflows.
    pub fn g(&self, u: T) -> T {
        if u <= T::zero() {
            return T::neg_infinity();
        }
        match &self.family {
            Family::PowerExp { p, q } => *p * u.ln() + u.powf(*q),
            Family::CutoffExp { a } => chi(u).ln() + *a * u,
            Family::PurePower { p } => *p * u.ln(),
            Family::Custom(c) => match &c.log_f {
                Some(lf) => lf(u),
                None => (c.f)(u).ln(),
            },
        }
    }

    pub fn dg(&self, u: T) -> T {
        match &self.family {
            Family::PowerExp { p, q } => *p / u + *q * u.powf(*q - T::one()),
            Family::CutoffExp { a } => chi_d1(u) / chi(u) + *a,
            Family::PurePower { p } => *p / u,
            Family::Custom(c) => (c.df)(u) / (c.f)(u),
        }
    }

    pub fn d2g(&self, u: T) -> T {
        match &self.family {
            Family::PowerExp { p, q } => -*p / (u * u) + *q * (*q - T::one()) * u.powf(*q - lit(2.0)),
            Family::CutoffExp { .. } => {
                let (c0, c1, c2) = (chi(u), chi_d1(u), chi_d2(u));
                (c2 * c0 - c1 * c1) / (c0 * c0)
            }
            Family::PurePower { p } => -*p / (u * u),
            Family::Custom(c) => {
                let f = (c.f)(u);
                let d1 = (c.df)(u) / f;
                (c.d2f)(u) / f - d1 * d1
            }
        }
    }

    /// `f(s)/f(u)` through `g`, without overflow.
    pub fn ratio(&self, s: T, u: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        (self.g(s) - self.g(u)).exp()
    }

    /// `f(u) exp(shift)` without forming `f(u)`: `exp(g(u) + shift)`.
    pub fn f_shifted(&self, u: T, shift: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        (self.g(u) + shift).exp()
    }

    /// `F_0(u) / f(u)` with `F_0(u) = int_0^u f`.
    pub fn f0_over_f(&self, u: T) -> Result<T> {
        barrier::f0_over_f(self, u)
    }

    /// `F_0(u) = int_0^u f(s) ds`; overflows to infinity with `f`.
    pub fn big_f0(&self, u: T) -> Result<T> {
        if u <= T::zero() {
            return Ok(T::zero());
        }
        Ok(self.f0_over_f(u)? * self.f(u))
    }

    /// `Q(u) / f(u) = u - (p_S + 1) F_0(u) / f(u)`.
    pub fn q_over_f(&self, u: T, dim: usize) -> Result<T> {
        let ps1 = sobolev_exponent::<T>(dim) + T::one();
        Ok(u - ps1 * self.f0_over_f(u)?)
    }

    /// `Q(u) = u f(u) - (p_S + 1) F_0(u)`.
    pub fn q(&self, u: T, dim: usize) -> Result<T> {
        if u <= T::zero() {
            return Ok(T::zero());
        }
        Ok(self.q_over_f(u, dim)? * self.f(u))
    }

    /// `f(u) F(u) = int_u^inf f(u)/f(s) ds`.
    pub fn f_times_big_f(&self, u: T) -> Result<T> {
        barrier::f_times_big_f(self, u)
    }
}

/// Quintic cutoff `chi`: `u^5` near 0, `20` from `u = 4` on, C^2 joins.
pub fn chi<T: Real>(u: T) -> T {
    let one = T::one();
    if u <= T::zero() {
        T::zero()
    } else if u <= one {
        u.powi(5)
    } else if u <= lit(3.0) {
        lit::<T>(10.0) * (u - one) - (u - lit(2.0)).powi(5)
    } else if u <= lit(4.0) {
        lit::<T>(20.0) + (u - lit(4.0)).powi(5)
    } else {
        lit(20.0)
    }
}

pub fn chi_d1<T: Real>(u: T) -> T {
    let five: T = lit(5.0);
    if u <= T::zero() {
        T::zero()
    } else if u <= T::one() {
        five * u.powi(4)
    } else if u <= lit(3.0) {
        lit::<T>(10.0) - five * (u - lit(2.0)).powi(4)
    } else if u <= lit(4.0) {
        five * (u - lit(4.0)).powi(4)
    } else {
        T::zero()
    }
}

pub fn chi_d2<T: Real>(u: T) -> T {
    let twenty: T = lit(20.0);
    if u <= T::zero() {
        T::zero()
    } else if u <= T::one() {
        twenty * u.powi(3)
    } else if u <= lit(3.0) {
        -twenty * (u - lit(2.0)).powi(3)
    } else if u <= lit(4.0) {
        twenty * (u - lit(4.0)).powi(3)
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::log_space;

    fn builtins() -> Vec<NonlinearitySpec<f64>> {
        vec![
            NonlinearitySpec::power_exp(5.0, 2.0).unwrap(),
            NonlinearitySpec::power_exp(3.0, 1.5).unwrap(),
            NonlinearitySpec::cutoff_exp(20.0).unwrap(),
            NonlinearitySpec::pure_power(3.0).unwrap(),
        ]
    }

    #[test]
    fn chi_joins_are_c2() {
        for &x in &[1.0f64, 3.0, 4.0] {
            let h = 1e-7;
            assert!((chi(x - h) - chi(x + h)).abs() < 1e-5);
            assert!((chi_d1(x - h) - chi_d1(x + h)).abs() < 1e-5);
            assert!((chi_d2(x - h) - chi_d2(x + h)).abs() < 1e-5);
        }
        assert_eq!(chi(1.0f64), 1.0);
        assert_eq!(chi(3.0f64), 19.0);
        assert_eq!(chi(4.0f64), 20.0);
    }

    #[test]
    fn chi_derivatives_match_finite_differences() {
        for u in log_space(1e-2f64, 6.0, 300) {
            let h = 1e-6 * u.max(1e-3);
            let fd1 = (chi(u + h) - chi(u - h)) / (2.0 * h);
            let fd2 = (chi_d1(u + h) - chi_d1(u - h)) / (2.0 * h);
            assert!((fd1 - chi_d1(u)).abs() <= 1e-6 * (1.0 + fd1.abs()), "chi' at {u}");
            assert!((fd2 - chi_d2(u)).abs() <= 1e-5 * (1.0 + fd2.abs()), "chi'' at {u}");
        }
    }

    #[test]
    fn derivatives_agree_with_central_differences() {
        for spec in builtins() {
            for u in log_space(1e-2f64, 4.0, 100) {
                let h = u * 1e-5;
                let fd1 = (spec.f(u + h) - spec.f(u - h)) / (2.0 * h);
                let fd2 = (spec.df(u + h) - spec.df(u - h)) / (2.0 * h);
                let d1 = spec.df(u);
                let d2 = spec.d2f(u);
                assert!((fd1 - d1).abs() <= 1e-6 * d1.abs(), "{:?} f' at {u}", spec.descriptor());
                // chi'' has a kink at the joins; skip points whose stencil straddles one
                let straddles = [1.0, 3.0, 4.0].iter().any(|&j| (u - j).abs() < h);
                if !straddles {
                    assert!((fd2 - d2).abs() <= 1e-6 * d2.abs(), "{:?} f'' at {u}", spec.descriptor());
                }
            }
        }
    }

    #[test]
    fn log_derivatives_consistent() {
        for spec in builtins() {
            for u in log_space(0.05f64, 5.0, 50) {
                let f = spec.f(u);
                assert!((spec.g(u) - f.ln()).abs() < 1e-12 * (1.0 + f.ln().abs()));
                assert!((spec.dg(u) - spec.df(u) / f).abs() < 1e-10 * spec.dg(u).abs());
                let d2 = spec.d2f(u) / f - (spec.df(u) / f).powi(2);
                assert!((spec.d2g(u) - d2).abs() < 1e-8 * (1.0 + d2.abs()));
            }
        }
    }

    #[test]
    fn example_one_log_convexity_ratio_formula() {
        let spec = NonlinearitySpec::power_exp(5.0f64, 2.0).unwrap();
        let u = 10.0;
        let r = spec.d2g(u) / spec.dg(u).powi(2);
        assert!((r - 195.0 / 42025.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_is_pure_exponential_past_four() {
        let spec = NonlinearitySpec::cutoff_exp(20.0f64).unwrap();
        assert_eq!(spec.d2g(4.5), 0.0);
        assert_eq!(spec.dg(7.0), 20.0);
        assert_eq!(spec.f(5.0), 20.0 * 100f64.exp());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(NonlinearitySpec::power_exp(5.0f64, 1.0).is_err());
        assert!(NonlinearitySpec::pure_power(1.0f64).is_err());
        assert!(NonlinearitySpec::cutoff_exp(-1.0f64).is_err());
    }

    #[test]
    fn f32_evaluators() {
        let spec = NonlinearitySpec::power_exp(5.0f32, 2.0).unwrap();
        let v = spec.f(1.0f32);
        assert!((v - std::f32::consts::E).abs() < 1e-5);
    }
}
