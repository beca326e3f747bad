//! Singular stationary solutions of `Δu + f(u) = 0` for exponential-growth
//! nonlinearities and the existence/blow-up threshold they induce for
//! `u_t - Δu = f(u)` in `R^N`.
//!
//! All kernels are generic over [`Real`]; the `f64` aliases below are the
//! configuration used by the command-line tool and the published tolerances.

#![allow(non_snake_case)]

pub mod error;
pub mod io;
pub mod monotone;
pub mod nonlinearity;
pub mod ode;
pub mod quadrature;
pub mod radial;
pub mod scalar;
pub mod singular;
pub mod threshold;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Nonlinearity = nonlinearity::NonlinearitySpec<f64>;
