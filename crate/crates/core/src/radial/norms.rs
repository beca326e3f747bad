//! Uniformly local `L^p` norms of radial fields. The supremum over window
//! centers is taken along one ray, which is exact for radial data.

use serde::Serialize;

use super::RadialField;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate_partitioned, QuadOptions};
use crate::scalar::{lit, sphere_area, Real};

#[derive(Debug, Clone, Serialize)]
pub struct ULNormEstimate {
    pub p: f64,
    /// `(sup_z int_{B(z,1)} |u|^p)^{1/p}`
    pub value: f64,
    pub window_integral: f64,
    /// Distance of the maximizing window center from the origin.
    pub center: f64,
    pub centers_sampled: Vec<f64>,
    pub method: CenterSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterSearch {
    GoldenSection,
    DenseScan,
}

/// `int_0^th sin^k`.
fn sin_power_integral<T: Real>(k: usize, th: T) -> T {
    let s1 = {
        let h = (th * lit(0.5)).sin();
        lit::<T>(2.0) * h * h
    };
    let (mut a, mut b) = (th, s1);
    if k == 0 {
        return a;
    }
    let (s, c) = (th.sin(), th.cos());
    for j in 2..=k {
        let next = (-s.powi(j as i32 - 1) * c + T::count(j - 1) * a) / T::count(j);
        a = b;
        b = next;
    }
    b
}

/// Area of the part of the sphere `|x| = rho` inside `B(z e_1, 1)`.
pub fn sphere_window_area<T: Real>(dim: usize, rho: T, z: T) -> T {
    let full = sphere_area::<T>(dim - 1) * rho.powi(dim as i32 - 1);
    if rho + z <= T::one() {
        return full;
    }
    if rho >= z + T::one() || rho <= z - T::one() {
        return T::zero();
    }
    let c = ((rho * rho + z * z - T::one()) / (lit::<T>(2.0) * rho * z)).max(-T::one()).min(T::one());
    sphere_area::<T>(dim - 2) * rho.powi(dim as i32 - 1) * sin_power_integral(dim - 2, c.acos())
}

/// `int_{B(z e_1, 1)} |u|^p dx` for the piecewise-linear field.
pub fn window_integral<T: Real>(field: &RadialField<T>, p: T, z: T) -> Result<T> {
    let dim = field.grid.dim;
    let lo = (z - T::one()).max(T::zero());
    let hi = z + T::one();
    let mut cuts: Vec<T> = field.grid.nodes().iter().copied().filter(|&r| r > lo && r < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.push((T::one() - z).abs());
    cuts.retain(|&c| c >= lo && c <= hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let powed = |v: T| if p == T::one() { v.abs() } else { v.abs().powf(p) };
    let opts = QuadOptions::relative(lit(1e-11)).with_abs(T::min_positive_value());
    Ok(integrate_partitioned(|rho| powed(field.eval(rho)) * sphere_window_area(dim, rho, z), &cuts, opts)?.value)
}

fn is_nonincreasing<T: Real>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Sup over window centers on `[0, R_outer]`: golden-section search for
/// radially nonincreasing data, a 512-center scan refined by golden
/// section otherwise.
pub fn ul_norm<T: Real>(field: &RadialField<T>, p: T) -> Result<ULNormEstimate> {
    if !(p >= T::one()) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    let r_out = field.grid.r_outer();
    let mut sampled = Vec::new();
    let eval = |z: T, sampled: &mut Vec<f64>| -> Result<T> {
        sampled.push(z.as_f64());
        window_integral(field, p, z)
    };
    let (mut a, mut b, method) = if is_nonincreasing(&field.values) {
        (T::zero(), r_out, CenterSearch::GoldenSection)
    } else {
        let n = 512;
        let step = r_out / T::count(n - 1);
        let mut best = (T::neg_infinity(), 0);
        for i in 0..n {
            let v = eval(step * T::count(i), &mut sampled)?;
            if v > best.0 {
                best = (v, i);
            }
        }
        let i = best.1;
        (step * T::count(i.saturating_sub(1)), (step * T::count(i + 1)).min(r_out), CenterSearch::DenseScan)
    };
    let (mut best_z, mut best_v) = (a, eval(a, &mut sampled)?);
    let vb = eval(b, &mut sampled)?;
    if vb > best_v {
        best_z = b;
        best_v = vb;
    }
    let inv_phi: T = lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = eval(c, &mut sampled)?;
    let mut fd = eval(d, &mut sampled)?;
    let tol = lit::<T>(1e-6) * r_out.max(T::one());
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = eval(c, &mut sampled)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = eval(d, &mut sampled)?;
        }
    }
    for (z, v) in [(c, fc), (d, fd)] {
        if v > best_v {
            best_z = z;
            best_v = v;
        }
    }
    Ok(ULNormEstimate {
        p: p.as_f64(),
        value: best_v.powf(p.recip()).as_f64(),
        window_integral: best_v.as_f64(),
        center: best_z.as_f64(),
        centers_sampled: sampled,
        method,
    })
}
