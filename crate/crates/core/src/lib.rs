//! Radial solvers for positive solitary waves of the electrostatic nonlinear
//! Maxwell-Klein-Gordon system and of the nonlinear Schrodinger-Poisson system,
//! together with the numerical studies of their nonrelativistic limit.

pub mod em_coupling;
pub mod error;
pub mod functionals;
pub mod ground_state;
pub mod limits;
mod linalg;
pub mod params;
pub mod radial;

pub use error::{Error, Result};
pub use params::Params;
pub use radial::{RadialField, RadialGrid};
