//! Stochastic convolutions of cylindrical α-stable and Wiener noise on a
//! diagonal spectral basis, with Monte Carlo checks of their moment,
//! maximal and small-ball behavior and a Galerkin solver for stochastic
//! Burgers.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burgers;
pub mod cli;
pub mod convolution;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod spectral;
pub mod stable_rng;

pub use convolution::{
    convolve_by_parts, convolve_direct, simulate_driving, simulate_driving_replica, wiener_convolve, DrivingPath,
    FieldPath, Role,
};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use spectral::{apply_semigroup, burgers_modes, check_assumption, frac_power_apply, hnorm, Coeffs, Mode, ModeSet};
pub use stable_rng::{moment_constant, sample_increment, sample_path, RngStream, StableLaw, StreamId};
