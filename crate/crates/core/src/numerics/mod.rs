//! Special functions, quadrature, the Weibull law and deterministic random
//! streams shared by every other module.

pub mod quadrature;
pub mod rng;
pub mod special;
pub mod weibull;

pub use quadrature::{integrate, integrate_to_infinity, Quadrature};
pub use rng::{RandomStream, UniformSource};
pub use special::{digamma, erf, erfc, ln_beta, ln_gamma, reg_inc_beta, trigamma};
pub use weibull::WeibullParams;
