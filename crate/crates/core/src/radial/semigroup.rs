//! The heat semigroup `S(t)` on radial functions through the reduced
//! one-dimensional kernel
//! `k(r, rho, t) = (4 pi t)^{-N/2} |S^{N-2}| e^{-(r-rho)^2/4t} I_N(r rho / 2t) rho^{N-1}`
//! with `I_N(a) = int_0^pi e^{a (cos th - 1)} sin^{N-2} th d th`.

use rayon::prelude::*;

use super::{RadialField, RadialGrid};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_partitioned, GaussLegendre, QuadOptions};
use crate::scalar::{lit, sphere_area, Real};

/// Kernel support half-width in units of `sqrt(4t)`.
const REACH: f64 = 9.0;

/// `I_N(a)`; closed form for `N = 3`, composite Gauss–Legendre otherwise.
pub fn sphere_exp_mean<T: Real>(dim: usize, a: T) -> T {
    if dim == 3 {
        if a < lit(1e-8) {
            return lit::<T>(2.0) - lit::<T>(2.0) * a;
        }
        return -(-lit::<T>(2.0) * a).exp_m1() / a;
    }
    sphere_exp_mean_quadrature(dim, a)
}

/// `I_N(a)` by quadrature over the polar angle, truncated where
/// `e^{a (cos th - 1)}` drops below `e^{-50}`.
pub fn sphere_exp_mean_quadrature<T: Real>(dim: usize, a: T) -> T {
    thread_local! {
        static RULE: GaussLegendre<f64> = GaussLegendre::new(16);
    }
    let pi = T::PI();
    let top = if a > lit(1.0) { (lit::<T>(10.0) / a.sqrt()).min(pi) } else { pi };
    let k = (dim - 2) as i32;
    let panels = 4;
    let width = top / T::count(panels);
    RULE.with(|rule| {
        let mut acc = T::zero();
        for p in 0..panels {
            let lo = width * T::count(p);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let th = lo + width * lit::<T>(0.5) * (lit::<T>(*x) + T::one());
                let s = (th * lit(0.5)).sin();
                acc = acc + lit::<T>(*w) * (-lit::<T>(2.0) * a * s * s).exp() * th.sin().powi(k);
            }
        }
        acc * width * lit(0.5)
    })
}

/// Reduced heat kernel density in `rho`.
pub fn radial_heat_kernel<T: Real>(dim: usize, t: T, r: T, rho: T) -> T {
    let four_t = lit::<T>(4.0) * t;
    let pref = (T::PI() * four_t).powf(-lit::<T>(dim as f64) * lit(0.5)) * sphere_area::<T>(dim - 2);
    let d = r - rho;
    pref * (-d * d / four_t).exp() * sphere_exp_mean(dim, r * rho / (lit::<T>(2.0) * t)) * rho.powi(dim as i32 - 1)
}

/// `[S(t)u](r)` for a function given pointwise, by adaptive quadrature.
pub fn semigroup_at<T: Real>(dim: usize, t: T, r: T, u: impl FnMut(T) -> T, rel_tol: T) -> Result<T> {
    semigroup_at_with_breaks(dim, t, r, u, &[], rel_tol)
}

/// [`semigroup_at`] with extra break points, for data with kinks or
/// support narrower than the kernel.
pub fn semigroup_at_with_breaks<T: Real>(
    dim: usize,
    t: T,
    r: T,
    mut u: impl FnMut(T) -> T,
    breaks: &[T],
    rel_tol: T,
) -> Result<T> {
    if !(t > T::zero()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let scale = (lit::<T>(4.0) * t).sqrt();
    let w = scale * lit(REACH);
    let lo = (r - w).max(T::zero());
    let hi = r + w;
    // panels on the kernel scale, so no feature of u hides between samples
    let piece = scale * lit(0.5);
    let mut cuts = vec![lo, hi, r.max(lo)];
    let mut x = lo + piece;
    while x < hi {
        cuts.push(x);
        x = x + piece;
    }
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let opts = QuadOptions::relative(rel_tol).with_abs(T::min_positive_value());
    Ok(integrate_partitioned(|rho| radial_heat_kernel(dim, t, r, rho) * u(rho), &cuts, opts)?.value)
}

/// `S(t)` acting on piecewise-linear fields on one grid:
/// `[S(t)u](r_i) = sum_j W_ij u_j + E_i u_ext`.
#[derive(Debug, Clone)]
pub struct SemigroupMatrix<T> {
    pub t: T,
    pub n: usize,
    /// Row-major `W`; each row stores its nonzero band `[start, start + len)`.
    rows: Vec<(usize, Vec<T>)>,
    pub exterior: Vec<T>,
}

impl<T: Real> SemigroupMatrix<T> {
    pub fn new(grid: &RadialGrid<T>, t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        let nodes = grid.nodes();
        let dim = grid.dim;
        let gl = GaussLegendre::<T>::new(8);
        let w = (lit::<T>(4.0) * t).sqrt();
        let piece = w * lit(0.5);
        let r_out = grid.r_outer();
        let rows: Vec<(usize, Vec<T>, T)> = nodes
            .par_iter()
            .map(|&r| {
                let lo = (r - w * lit(REACH)).max(T::zero());
                let hi = r + w * lit(REACH);
                let start = nodes.partition_point(|&x| x <= lo).saturating_sub(1);
                let end = nodes.partition_point(|&x| x < hi).min(nodes.len() - 1);
                let mut band = vec![T::zero(); end - start + 1];
                // Gauss–Legendre nodes and kernel-weighted weights on [a, b],
                // split into pieces no wider than half the kernel width
                let weighted = |a: T, b: T| {
                    let mut out = Vec::new();
                    if b > a {
                        let count = ((b - a) / piece).ceil().to_usize().unwrap_or(1).max(1);
                        let dh = (b - a) / T::count(count);
                        for c in 0..count {
                            let pa = a + dh * T::count(c);
                            let pb = if c + 1 == count { b } else { pa + dh };
                            out.extend(gl.mapped(pa, pb).map(|(x, wq)| (x, wq * radial_heat_kernel(dim, t, r, x))));
                        }
                    }
                    out
                };
                for j in start..end {
                    let (ra, rb) = (nodes[j], nodes[j + 1]);
                    let h = rb - ra;
                    for (x, kw) in weighted(ra.max(lo), rb.min(hi)) {
                        band[j - start] = band[j - start] + kw * (rb - x) / h;
                        band[j + 1 - start] = band[j + 1 - start] + kw * (x - ra) / h;
                    }
                }
                let ext = weighted(r_out.max(lo), hi).into_iter().map(|(_, kw)| kw).sum::<T>();
                (start, band, ext)
            })
            .collect();
        let mut out_rows = Vec::with_capacity(rows.len());
        let mut exterior = Vec::with_capacity(rows.len());
        for (start, band, ext) in rows {
            if band.iter().chain(std::iter::once(&ext)).any(|v| !v.is_finite()) {
                return Err(Error::QuadratureFailure {
                    a: 0.0,
                    b: r_out.as_f64(),
                    estimate: f64::NAN,
                    error: f64::NAN,
                });
            }
            out_rows.push((start, band));
            exterior.push(ext);
        }
        Ok(Self { t, n: nodes.len(), rows: out_rows, exterior })
    }

    /// Total kernel mass seen by node `i`; equals 1 up to quadrature error.
    pub fn row_mass(&self, i: usize) -> T {
        self.rows[i].1.iter().copied().sum::<T>() + self.exterior[i]
    }

    pub fn apply_values(&self, values: &[T], exterior: T) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.exterior)
            .map(|((start, band), &e)| {
                let mut acc = e * exterior;
                for (k, &w) in band.iter().enumerate() {
                    acc = acc + w * values[start + k];
                }
                acc
            })
            .collect()
    }

    pub fn apply(&self, field: &RadialField<T>) -> Result<RadialField<T>> {
        if field.values.len() != self.n {
            return Err(Error::GridMismatch(format!("matrix for {} nodes, field has {}", self.n, field.values.len())));
        }
        let v = self.apply_values(&field.values, field.exterior());
        // kernel weights are nonnegative, so only rounding can push below zero
        field.with_values(v.into_iter().map(|x| x.max(T::zero())).collect())
    }
}

/// `S(t) u` at the grid nodes.
pub fn apply_semigroup<T: Real>(field: &RadialField<T>, t: T) -> Result<RadialField<T>> {
    SemigroupMatrix::new(&field.grid, t)?.apply(field)
}
