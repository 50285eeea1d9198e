//! Cross-validation estimation of the integrated squared density, ψ = ∫f²,
//! together with exact error calculations for normal mixtures, pilot-free
//! bandwidth selectors and a reproducible simulation harness.

pub mod bandwidth;
pub mod bessel;
pub mod competitors;
pub mod cv;
pub mod error;
pub mod extensions;
pub mod harness;
pub mod kernels;
pub mod mixtures;
pub mod normal;
pub mod oracle;
pub mod optim;
pub mod pairsum;
pub mod quad;
pub mod sample;

pub use error::{Error, Result};
