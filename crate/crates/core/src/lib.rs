//! Numerical lab for finite-time blow-up of the perturbed semilinear heat
//! equation u_t = Δu + |u|^{p−1}u + h(u).

pub mod classify;
pub mod csv;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod hermite;
pub mod numerics;
pub mod ode;
pub mod params;
pub mod pde;
pub mod profiles;

pub use error::{Error, Result};
pub use params::{Perturbation, ProblemParams};
