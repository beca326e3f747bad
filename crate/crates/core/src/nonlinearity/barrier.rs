//! The barrier integral `F(u) = int_u^inf ds/f(s)`, its inverse, and
//! `F_0(u) = int_0^u f(s) ds`, all evaluated relative to `f(u)`.

use super::{NonlinearitySpec, TailModel};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::{lit, Real};

const MAX_PANELS: usize = 400;

fn quad_opts<T: Real>(spec: &NonlinearitySpec<T>) -> QuadOptions<T> {
    QuadOptions { max_intervals: 4000, ..QuadOptions::relative(spec.tol.quad_tol) }
}

fn check_positive<T: Real>(u: T) -> Result<()> {
    if u > T::zero() && u.is_finite() {
        Ok(())
    } else {
        Err(invalid("u", format!("must be positive and finite, got {u}")))
    }
}

/// `f(u) F(u)`; dimensionless for exponential growth and well scaled for all `u`.
pub(crate) fn f_times_big_f<T: Real>(spec: &NonlinearitySpec<T>, u: T) -> Result<T> {
    check_positive(u)?;
    let gu = spec.g(u);
    if !gu.is_finite() {
        return Err(invalid("u", format!("f({u}) is not positive")));
    }
    let integrand = |s: T| (gu - spec.g(s)).exp();
    // g(u) - g(s) loses about eps |g(u)| to cancellation
    let floor = T::epsilon() * gu.abs() * lit(64.0);
    let mut opts = quad_opts(spec);
    opts.rel_tol = opts.rel_tol.max(floor);
    match spec.tail() {
        TailModel::PowerLaw { exponent } => {
            let m = u * lit(2.0);
            let head = integrate(integrand, u, m, opts)?.value;
            Ok(head + integrand(m) * m / (exponent - T::one()))
        }
        TailModel::LogConvex { convex_from } => {
            let d0 = spec.dg(u);
            if d0 > T::zero() && d0.recip() < T::epsilon() * u * lit(64.0) {
                // panels would not resolve in floating point; Laplace expansion
                let d2 = spec.d2g(u);
                let k = d2 / (d0 * d0);
                return Ok(d0.recip() * (T::one() - k + lit::<T>(3.0) * k * k));
            }
            let mut width = if d0 > T::zero() { d0.recip().min(u.max(T::one())) } else { T::one() };
            let mut a = u;
            let mut head = T::zero();
            for _ in 0..MAX_PANELS {
                let m = a + width;
                head = head + integrate(integrand, a, m, opts)?.value;
                a = m;
                width = width * lit(2.0);
                if m < convex_from {
                    continue;
                }
                let dg = spec.dg(m);
                if !(dg > T::zero()) || spec.d2g(m) < T::zero() {
                    continue;
                }
                let bound = integrand(m) / dg;
                if bound <= spec.tol.tol_f * head {
                    return Ok(head + bound);
                }
            }
            Err(Error::NonIntegrableTail { last_m: a.as_f64() })
        }
    }
}

/// `log F(u)`, finite even where `F(u)` underflows.
pub fn eval_ln_F<T: Real>(spec: &NonlinearitySpec<T>, u: T) -> Result<T> {
    Ok(f_times_big_f(spec, u)?.ln() - spec.g(u))
}

/// `F(u) = int_u^inf ds/f(s)`.
#[allow(non_snake_case)]
pub fn eval_F<T: Real>(spec: &NonlinearitySpec<T>, u: T) -> Result<T> {
    Ok(eval_ln_F(spec, u)?.exp())
}

/// `F^{-1}(y)` for `y` in the range of `F` on `[u_bracket_min, inf)`.
#[allow(non_snake_case)]
pub fn eval_F_inverse<T: Real>(spec: &NonlinearitySpec<T>, y: T) -> Result<T> {
    if !(y > T::zero()) {
        return Err(invalid("y", format!("must be positive, got {y}")));
    }
    eval_F_inverse_ln(spec, y.ln())
}

/// Inverse of `F` addressed by `log y`.
#[allow(non_snake_case)]
pub fn eval_F_inverse_ln<T: Real>(spec: &NonlinearitySpec<T>, ln_y: T) -> Result<T> {
    let mut lo = spec.tol.u_bracket_min;
    let phi_lo = eval_ln_F(spec, lo)? - ln_y;
    if !(phi_lo > T::zero()) {
        return Err(Error::OutOfRange { y: ln_y.exp().as_f64(), sup: (phi_lo + ln_y).exp().as_f64() });
    }
    let mut hi = lo.max(T::one());
    let mut phi_hi = eval_ln_F(spec, hi)? - ln_y;
    let mut guard = 0;
    while phi_hi > T::zero() {
        lo = hi;
        hi = hi * lit(2.0);
        phi_hi = eval_ln_F(spec, hi)? - ln_y;
        guard += 1;
        if guard > 200 {
            return Err(Error::OutOfRange { y: ln_y.exp().as_f64(), sup: f64::NAN });
        }
    }
    if phi_hi == T::zero() {
        return Ok(hi);
    }
    // geometric bisection until the bracket is within a factor of two
    while hi > lo * lit(2.0) {
        let mid = (lo * hi).sqrt();
        let phi = eval_ln_F(spec, mid)? - ln_y;
        if phi > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // safeguarded Newton: d/du log F = -1 / (f F)
    let tol = spec.tol.tol_f * lit(0.5);
    let mut u = (lo + hi) * lit(0.5);
    for _ in 0..200 {
        let ff = f_times_big_f(spec, u)?;
        let phi = ff.ln() - spec.g(u) - ln_y;
        if phi.abs() <= tol {
            return Ok(u);
        }
        if phi > T::zero() {
            lo = u;
        } else {
            hi = u;
        }
        if hi - lo <= T::epsilon() * u * lit(4.0) {
            return Ok(u);
        }
        let next = u + phi * ff;
        u = if next > lo && next < hi { next } else { (lo + hi) * lit(0.5) };
    }
    Ok(u)
}

/// `F_0(u)/f(u) = int_0^u f(s)/f(u) ds`, integrated on panels that double
/// in width away from `u`.
pub(crate) fn f0_over_f<T: Real>(spec: &NonlinearitySpec<T>, u: T) -> Result<T> {
    if u <= T::zero() {
        return Ok(T::zero());
    }
    let gu = spec.g(u);
    let integrand = |s: T| if s <= T::zero() { T::zero() } else { (spec.g(s) - gu).exp() };
    let d0 = spec.dg(u);
    let mut width = if d0 > T::zero() { d0.recip().min(u) } else { u };
    let opts = quad_opts(spec);
    let mut b = u;
    let mut total = T::zero();
    while b > T::zero() {
        let a = (b - width).max(T::zero());
        total = total + integrate(integrand, a, b, opts)?.value;
        b = a;
        width = width * lit(2.0);
    }
    Ok(total)
}
