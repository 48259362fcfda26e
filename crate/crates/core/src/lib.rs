//! Self-similar gelling profiles for the diagonal-kernel coagulation equation.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`]: model parameters, changes of variables, local power series.
//! * [`delay`]: adaptive RK4 integrator for pantograph and constant-shift delay ODEs.
//! * [`shooting`]: long-time classification in the shooting parameter `b`.
//! * [`stability`]: the explicit stability boundary and winding-number counts.
//! * [`greens`]: fundamental solution of `phi' = phi - 2 phi(x/2)`.
//! * [`fixedpoint`]: perturbative construction of the critical `b` for large `gamma`.
//! * [`asymptotics`]: the `gamma = 1` profile and the `gamma -> 1` Laplace asymptotics.
//! * [`gelsim`]: dyadic-chain simulator of the coagulation equation itself.
//!
//! Point scans go through [`exec`], which uses rayon when the `parallel`
//! feature is on and a plain iterator otherwise.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod delay;
pub mod error;
pub mod exec;
pub mod fixedpoint;
pub mod gelsim;
pub mod greens;
pub mod io;
pub mod params;
pub mod quad;
pub mod shooting;
pub mod stability;

pub use error::{Error, Result};
pub use params::ModelParams;
