//! Harmonic-analysis toolkit on the hyperbolic plane: spherical and Abel
//! transforms, Hecke/wave operators acting on cuspidal Fourier expansions,
//! a point-mass distribution algebra, Weyl-law counting utilities, and
//! Whittaker series.

pub mod error;
pub mod modular;
pub mod pointmass;
pub mod quad;
pub mod special;
pub mod transform;
pub mod wave;
pub mod weyl;
pub mod whittaker;

pub use error::{Error, Result};
pub use num_complex::Complex64;
