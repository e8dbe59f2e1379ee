//! Pseudo-spectral simulator and analysis toolkit for the two-dimensional
//! vorticity equation written in similarity variables.
//!
//! The evolved quantity is the rescaled vorticity w(ξ,τ) on the plane,
//! discretized on a periodic box [-Λ,Λ)² that is large enough to hold the
//! Gaussian-localized profiles of interest. The crate provides
//!
//! - grids, transforms, quadrature and weighted norms ([`grid`], [`field`]),
//! - the Biot-Savart velocity reconstruction and closed-form velocities for
//!   the Gaussian profile family ([`biot_savart`], [`profiles`]),
//! - the linear operator ℒ = Δ + ½ξ·∇ + 1, its Hermite eigenstructure,
//!   spectral projections and the exact semigroup e^{τℒ} ([`operator`]),
//! - nonlinear time integration with conservation monitors ([`evolution`]),
//! - moment extraction, asymptotic profiles (including the secular τe^{-τ}
//!   terms), decay-rate fits and the optimal-decay classifier
//!   ([`moments`], [`asymptotics`]),
//! - a self-contained verification battery ([`verify`]).


pub mod asymptotics;
pub mod biot_savart;
pub mod evolution;
pub mod error;

pub mod field;
pub mod fitting;
pub mod grid;
pub mod moments;
pub mod operator;
pub mod profiles;



mod fft;

pub use error::{Error, Result};
pub use field::{RealField, SpectralField, VectorField, WeightSpec};
pub use grid::Grid;
pub use moments::MomentSet;
