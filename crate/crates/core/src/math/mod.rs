//! Numerical primitives shared by the surrogate, acquisition and benchmark code.

mod linalg;
mod normal;
mod random;
mod sampling;

pub use linalg::{spd_factor, spd_solve, SpdFactor};
pub use normal::{log_norm_cdf, norm_cdf, norm_pdf, LN_SQRT_2PI};
pub use random::RandomStream;
pub use sampling::{latin_hypercube, uniform_points};
