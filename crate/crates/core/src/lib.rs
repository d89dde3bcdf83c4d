//! Covariant completely positive maps over right LCM semigroup dynamical
//! systems, and their minimal isometric dilations computed at finite depth.

pub mod check;
pub mod cpmaps;
pub mod cstar;
pub mod dilation;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod semigroup;

pub use error::{Error, Result};
