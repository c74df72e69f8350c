//! Minimum-energy (Mortensen) observers whose gain is learned by a small
//! residual network.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs: the exact linear theory (Kalman-Bucy filter, quadratic value
//! function), the extended Kalman filter baseline, the residual network that
//! approximates the value-function gradient, the adjoint-based training loop
//! and the network observer. File formats and the command line live in the
//! `moen` crate.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: small dense matrices, uniform time grids, RK4, quadrature.
//! - [`systems`]: harmonic and Duffing models, disturbance signals, truth data.
//! - [`filters`]: Kalman-Bucy, extended Kalman, closed-form value function.
//! - [`netgain`]: the residual MLP `g_θ`, its shift and Jacobians.
//! - [`training`]: reduced cost, adjoint gradient, Barzilai-Borwein descent.
//! - [`observer`]: the network-based observer.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod filters;
pub mod netgain;
pub mod numerics;
pub mod observer;
pub mod systems;
pub mod training;

pub use error::{Error, Result};
pub use filters::{KalmanResult, LinearOracle};
pub use netgain::{NetGain, NetworkShape, ShiftFunction, Theta, ValueGradient};
pub use numerics::{Direction, GridTrajectory, Mat, TimeGrid};
pub use observer::{ObserverOptions, ObserverResult};
pub use systems::{ObservationRecord, Scenario, Signal, SystemModel};
pub use training::{BbRule, EnsembleSpec, TrainingConfig, TrainingState};
