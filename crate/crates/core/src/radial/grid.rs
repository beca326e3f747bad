use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, sphere_area, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum OuterBoundary<T> {
    DirichletValue(T),
    Neumann,
}

/// Nodes `0 = r_0 < r_1 < ... < r_M = R_outer` with finite-volume cells
/// `[r_{i-1/2}, r_{i+1/2}]`, faces at midpoints and a half cell at `R_outer`.
#[derive(Debug, Clone)]
pub struct RadialGrid<T> {
    pub dim: usize,
    pub outer: OuterBoundary<T>,
    r: Vec<T>,
    /// `r_{i+1/2}` for `i < M`.
    faces: Vec<T>,
    /// Cell volumes divided by `|S^{N-1}|`.
    volumes: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn from_nodes(dim: usize, r: Vec<T>, outer: OuterBoundary<T>) -> Result<Self> {
        if dim < 3 {
            return Err(invalid("dim", format!("N >= 3 required, got {dim}")));
        }
        if r.len() < 3 || r[0] != T::zero() {
            return Err(invalid("nodes", "need at least three nodes starting at r = 0"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || !r.last().unwrap().is_finite() {
            return Err(invalid("nodes", "radii must be finite and strictly increasing"));
        }
        let n: T = T::count(dim);
        let m = r.len() - 1;
        let faces: Vec<T> = (0..m).map(|i| (r[i] + r[i + 1]) * lit(0.5)).collect();
        let volumes = (0..=m)
            .map(|i| {
                let hi = if i < m { faces[i] } else { r[m] };
                let lo = if i == 0 { T::zero() } else { faces[i - 1] };
                (hi.powi(dim as i32) - lo.powi(dim as i32)) / n
            })
            .collect();
        Ok(Self { dim, outer, r, faces, volumes })
    }

    /// `n_intervals` equal cells on `[0, r_outer]`.
    pub fn uniform(dim: usize, r_outer: T, n_intervals: usize, outer: OuterBoundary<T>) -> Result<Self> {
        if !(r_outer > T::zero()) || n_intervals < 2 {
            return Err(invalid("grid", "r_outer > 0 and at least two intervals required"));
        }
        let h = r_outer / T::count(n_intervals);
        let mut r: Vec<T> = (0..=n_intervals).map(|i| h * T::count(i)).collect();
        r[n_intervals] = r_outer;
        Self::from_nodes(dim, r, outer)
    }

    /// Node at `r_1`, then `n_geometric` log-uniform intervals up to a
    /// junction radius, then `n_uniform` equal intervals to `r_outer`. The
    /// junction is placed where the last geometric spacing equals the
    /// uniform spacing.
    pub fn graded(
        dim: usize,
        r_outer: T,
        r1: T,
        n_geometric: usize,
        n_uniform: usize,
        outer: OuterBoundary<T>,
    ) -> Result<Self> {
        if !(r1 > T::zero() && r1 < r_outer) || n_geometric < 1 || n_uniform < 1 {
            return Err(invalid("grid", "need 0 < r1 < r_outer and positive interval counts"));
        }
        let ng = T::count(n_geometric);
        let nu = T::count(n_uniform);
        let mismatch = |rg: T| {
            let last = rg * (T::one() - (r1 / rg).powf(ng.recip()));
            last - (r_outer - rg) / nu
        };
        // last geometric step grows with the junction radius, uniform step shrinks
        let (mut lo, mut hi) = (r1, r_outer);
        if mismatch(lo) > T::zero() || mismatch(hi) < T::zero() {
            return Err(invalid("grid", "geometric and uniform spacings cannot be matched"));
        }
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mismatch(mid) > T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rg = (lo + hi) * lit(0.5);
        let mut r = vec![T::zero()];
        let ratio = (rg / r1).ln() / ng;
        for j in 0..n_geometric {
            r.push(r1 * (ratio * T::count(j)).exp());
        }
        let h = (r_outer - rg) / nu;
        for j in 0..n_uniform {
            r.push(rg + h * T::count(j));
        }
        r.push(r_outer);
        Self::from_nodes(dim, r, outer)
    }

    pub fn with_outer(&self, outer: OuterBoundary<T>) -> Self {
        Self { outer, ..self.clone() }
    }

    /// Every cell split in two; the new nodes are the old faces.
    pub fn refined(&self) -> Self {
        let mut r = Vec::with_capacity(2 * self.r.len());
        for i in 0..self.r.len() - 1 {
            r.push(self.r[i]);
            r.push(self.faces[i]);
        }
        r.push(self.r_outer());
        Self::from_nodes(self.dim, r, self.outer).expect("refinement of a valid grid")
    }

    pub fn nodes(&self) -> &[T] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Index of the outer node.
    pub fn last(&self) -> usize {
        self.r.len() - 1
    }

    pub fn r_outer(&self) -> T {
        self.r[self.last()]
    }

    pub fn faces(&self) -> &[T] {
        &self.faces
    }

    /// Physical cell volume.
    pub fn volume(&self, i: usize) -> T {
        self.volumes[i] * sphere_area::<T>(self.dim - 1)
    }

    pub(crate) fn reduced_volumes(&self) -> &[T] {
        &self.volumes
    }

    /// Outer face of the `k` innermost cells.
    pub fn inner_radius(&self, k: usize) -> T {
        self.faces[k.clamp(1, self.faces.len()) - 1]
    }

    /// `r_1 <= 1e-3 R_outer`, the resolution of the geometric inner zone.
    pub fn is_graded(&self) -> bool {
        self.r[1] <= self.r_outer() * lit(1e-3)
    }

    pub fn same_nodes(&self, other: &Self) -> bool {
        self.dim == other.dim && self.r == other.r
    }
}

/// Nonnegative nodal values on a shared grid, interpolated piecewise
/// linearly in `r` and extended past `R_outer` by the exterior value.
#[derive(Debug, Clone)]
pub struct RadialField<T> {
    pub grid: Arc<RadialGrid<T>>,
    pub values: Vec<T>,
    /// Nodes whose value was clipped at a cap.
    pub cap_mask: Vec<bool>,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
            return Err(invalid("values", format!("node {i} holds {}", values[i])));
        }
        let n = values.len();
        Ok(Self { grid, values, cap_mask: vec![false; n] })
    }

    pub fn zeros(grid: Arc<RadialGrid<T>>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![T::zero(); n], cap_mask: vec![false; n] }
    }

    pub fn constant(grid: Arc<RadialGrid<T>>, c: T) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub fn from_fn(grid: Arc<RadialGrid<T>>, mut u: impl FnMut(T) -> T) -> Result<Self> {
        let v = grid.nodes().iter().map(|&r| u(r)).collect();
        Self::new(grid, v)
    }

    /// `min(profile, cap)` at every node; `node0` replaces the profile at
    /// the origin, where singular profiles are infinite.
    pub fn capped(grid: Arc<RadialGrid<T>>, mut profile: impl FnMut(T) -> T, node0: T, cap: T) -> Result<Self> {
        if !(cap > T::zero()) {
            return Err(invalid("cap", format!("must be positive, got {cap}")));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut mask = Vec::with_capacity(grid.len());
        for (i, &r) in grid.nodes().iter().enumerate() {
            let v = if i == 0 { node0 } else { profile(r) };
            let clipped = !(v <= cap);
            values.push(if clipped { cap } else { v });
            mask.push(clipped);
        }
        let mut field = Self::new(grid, values)?;
        field.cap_mask = mask;
        Ok(field)
    }

    pub fn is_capped(&self) -> bool {
        self.cap_mask.iter().any(|&m| m)
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    /// Value used beyond `R_outer`.
    pub fn exterior(&self) -> T {
        match self.grid.outer {
            OuterBoundary::DirichletValue(v) => v,
            OuterBoundary::Neumann => *self.values.last().unwrap(),
        }
    }

    pub fn eval(&self, r: T) -> T {
        let nodes = self.grid.nodes();
        let r = r.abs();
        if r >= self.grid.r_outer() {
            return self.exterior();
        }
        let j = nodes.partition_point(|&x| x <= r).saturating_sub(1);
        let w = (r - nodes[j]) / (nodes[j + 1] - nodes[j]);
        self.values[j] * (T::one() - w) + self.values[j + 1] * w
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// `int_{B(0, R_outer)} h(u) dx` by the cell rule.
    pub fn cell_integral(&self, mut h: impl FnMut(T) -> T) -> T {
        (0..self.values.len()).map(|i| self.grid.volume(i) * h(self.values[i])).sum()
    }

    /// Largest `max(a_i - b_i, 0)` over nodes.
    pub fn max_excess_over(&self, other: &Self) -> Result<T> {
        if !self.grid.same_nodes(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).fold(T::zero(), |m, (&a, &b)| m.max(a - b)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if !self.grid.same_nodes(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }
}
