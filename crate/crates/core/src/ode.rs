//! Dormand–Prince 5(4) integrator with step-size control, cubic Hermite
//! dense output and a single scalar stopping event.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    /// Underflow threshold relative to `max(|t|, 1)`.
    pub h_min_rel: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-8),
            atol: lit(1e-10),
            h_init: None,
            h_max: None,
            h_min_rel: lit(1e-14),
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> OdeOptions<T> {
    pub fn tolerances(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination<T> {
    Reached,
    Event(T),
}

/// Accepted steps of an integration, with derivatives for dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const D: usize> {
    pub t: Vec<T>,
    pub y: Vec<[T; D]>,
    pub dy: Vec<[T; D]>,
    /// Sum over accepted steps of the max-norm local error estimate.
    pub error_estimate: T,
    pub rejected: usize,
    pub termination: Termination<T>,
}

impl<T: Real, const D: usize> Trajectory<T, D> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_start(&self) -> T {
        self.t[0]
    }

    pub fn t_end(&self) -> T {
        *self.t.last().unwrap()
    }

    pub fn last(&self) -> [T; D] {
        *self.y.last().unwrap()
    }

    /// Hermite interpolation; clamps outside the covered interval.
    pub fn eval(&self, t: T) -> [T; D] {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = self.t.partition_point(|&x| x <= t) - 1;
        hermite(self.t[i], self.t[i + 1], &self.y[i], &self.y[i + 1], &self.dy[i], &self.dy[i + 1], t)
    }
}

fn hermite<T: Real, const D: usize>(t0: T, t1: T, y0: &[T; D], y1: &[T; D], d0: &[T; D], d1: &[T; D], t: T) -> [T; D] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let one = T::one();
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    let h00 = (one + two * s) * (one - s) * (one - s);
    let h10 = s * (one - s) * (one - s);
    let h01 = s * s * (three - two * s);
    let h11 = s * s * (s - one);
    let mut out = [T::zero(); D];
    for k in 0..D {
        out[k] = h00 * y0[k] + h10 * h * d0[k] + h01 * y1[k] + h11 * h * d1[k];
    }
    out
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

pub fn integrate<T, const D: usize, F>(
    rhs: F,
    t0: T,
    y0: [T; D],
    t_end: T,
    opts: &OdeOptions<T>,
) -> Result<Trajectory<T, D>>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> [T; D],
{
    integrate_until(rhs, t0, y0, t_end, opts, |_, _| T::one())
}

/// Integrates forward until `t_end` or until `event(t, y)` changes sign
/// from positive to non-positive; the crossing is located on the dense output.
pub fn integrate_until<T, const D: usize, F, G>(
    mut rhs: F,
    t0: T,
    y0: [T; D],
    t_end: T,
    opts: &OdeOptions<T>,
    mut event: G,
) -> Result<Trajectory<T, D>>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> [T; D],
    G: FnMut(T, &[T; D]) -> T,
{
    if !(t_end > t0) {
        return Err(crate::error::invalid("t_end", format!("must exceed t0 = {t0}")));
    }
    let scale = |y: &[T; D], z: &[T; D], k: usize| opts.atol + opts.rtol * y[k].abs().max(z[k].abs());

    let mut t = t0;
    let mut y = y0;
    let mut f0 = rhs(t, &y);
    let mut traj = Trajectory {
        t: vec![t],
        y: vec![y],
        dy: vec![f0],
        error_estimate: T::zero(),
        rejected: 0,
        termination: Termination::Reached,
    };
    let h_max = opts.h_max.unwrap_or(t_end - t0);
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let mut d0 = T::zero();
            let mut d1 = T::zero();
            for k in 0..D {
                let sc = scale(&y, &y, k);
                d0 = d0.max((y[k] / sc).abs());
                d1 = d1.max((f0[k] / sc).abs());
            }
            if d0 < lit(1e-5) || d1 < lit(1e-5) {
                lit(1e-6)
            } else {
                d0 / d1 * lit(0.01)
            }
        }
    }
    .min(h_max)
    .min(t_end - t0);
    let mut g_prev = event(t, &y);
    let mut k = [[T::zero(); D]; 7];

    for _ in 0..opts.max_steps {
        let h_min = opts.h_min_rel * t.abs().max(T::one());
        if h < h_min {
            return Err(Error::StepUnderflow {
                r: t.as_f64(),
                h: h.as_f64(),
                u: y[0].as_f64(),
                du: if D > 1 { y[1].as_f64() } else { f0[0].as_f64() },
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        } else if t + h * lit(2.0) > t_end {
            // avoid a sliver of a final step
            h = (t_end - t) * lit(0.5);
        }
        k[0] = f0;
        let mut finite = true;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a: T = lit(A[s][j]);
                if a != T::zero() {
                    for c in 0..D {
                        ys[c] = ys[c] + h * a * kj[c];
                    }
                }
            }
            k[s] = rhs(t + h * lit(C[s]), &ys);
            if k[s].iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
        }
        let (y_new, err) = if finite {
            let mut y_new = y;
            for c in 0..D {
                let mut acc = T::zero();
                for s in 0..6 {
                    acc = acc + lit::<T>(A[6][s]) * k[s][c];
                }
                y_new[c] = y[c] + h * acc;
            }
            let mut err = T::zero();
            let mut abs_err = T::zero();
            for c in 0..D {
                let mut e = T::zero();
                for s in 0..7 {
                    e = e + lit::<T>(E[s]) * k[s][c];
                }
                e = (e * h).abs();
                abs_err = abs_err.max(e);
                let r = e / scale(&y, &y_new, c);
                err = err + r * r;
            }
            ((y_new, abs_err), (err / T::count(D)).sqrt())
        } else {
            ((y, T::zero()), T::infinity())
        };
        let ((y_new, abs_err), err) = (y_new, err);

        if err <= T::one() && y_new.iter().all(|v| v.is_finite()) {
            let t_new = if last { t_end } else { t + h };
            let f_new = k[6];
            let g_new = event(t_new, &y_new);
            traj.error_estimate = traj.error_estimate + abs_err;
            if g_prev > T::zero() && g_new <= T::zero() {
                // locate the crossing on the Hermite interpolant
                let (mut lo, mut hi) = (t, t_new);
                let (mut glo, mut ghi) = (g_prev, g_new);
                for _ in 0..200 {
                    let w = glo / (glo - ghi);
                    let mut tm = lo + (hi - lo) * w.max(lit(0.01)).min(lit(0.99));
                    if (hi - lo) < T::epsilon() * tm.abs().max(T::one()) * lit(4.0) {
                        break;
                    }
                    if tm <= lo || tm >= hi {
                        tm = (lo + hi) * lit(0.5);
                    }
                    let ym = hermite(t, t_new, &y, &y_new, &f0, &f_new, tm);
                    let gm = event(tm, &ym);
                    if gm > T::zero() {
                        lo = tm;
                        glo = gm;
                    } else {
                        hi = tm;
                        ghi = gm;
                    }
                    if gm == T::zero() {
                        break;
                    }
                }
                let te = hi;
                let ye = hermite(t, t_new, &y, &y_new, &f0, &f_new, te);
                if te > t {
                    let fe = rhs(te, &ye);
                    traj.t.push(te);
                    traj.y.push(ye);
                    traj.dy.push(fe);
                }
                traj.termination = Termination::Event(te);
                return Ok(traj);
            }
            t = t_new;
            y = y_new;
            f0 = f_new;
            g_prev = g_new;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(f0);
            if last {
                return Ok(traj);
            }
            let fac = if err == T::zero() {
                lit(5.0)
            } else {
                (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
            };
            h = (h * fac).min(h_max);
        } else {
            traj.rejected += 1;
            let fac = if err.is_finite() { (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.1)) } else { lit(0.25) };
            h = h * fac.min(lit(0.9));
        }
    }
    Err(Error::StepUnderflow {
        r: t.as_f64(),
        h: h.as_f64(),
        u: y[0].as_f64(),
        du: if D > 1 { y[1].as_f64() } else { f0[0].as_f64() },
    })
}
