//! Radial grids and fields, the heat semigroup, uniformly local norms and
//! time stepping of `u_t = Δu + f(u)`.

mod grid;
mod norms;
mod semigroup;
mod step;

pub use grid::{OuterBoundary, RadialField, RadialGrid};
pub use norms::{sphere_window_area, ul_norm, window_integral, CenterSearch, ULNormEstimate};
pub use semigroup::{
    apply_semigroup, radial_heat_kernel, semigroup_at, semigroup_at_with_breaks, sphere_exp_mean,
    sphere_exp_mean_quadrature, SemigroupMatrix,
};
pub use step::{
    discrete_steady_state, evolve, inner_reaction_mass, solve_tridiagonal, step_imex, BlowUpGuards, Evolution,
    EvolveOptions, NormSample, RadialLaplacian, Reaction, SteadyState, StopReason, OVERFLOW_GUARD,
};
