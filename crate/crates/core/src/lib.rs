//! Chirp-like signal model: a sum of sinusoids (phase `alpha t`) and
//! quadratic-phase terms (phase `beta t^2`) in stationary linear-process
//! noise.
//!
//! The crate covers synthesis ([`model`]), separable least-squares profiles
//! ([`designmat`]), periodogram initialization and scalar/2D minimization
//! ([`optimize`]), joint and sequential estimators with BIC order selection
//! ([`estimators`]), closed-form asymptotic variances ([`asymptotics`]) and a
//! replicated simulation harness ([`montecarlo`]). Text formats used by the
//! command-line front end live in [`io`].

// `!(x > 0.0)` is used deliberately so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod designmat;
pub mod error;
pub mod estimators;
pub mod io;
pub mod model;
pub mod montecarlo;
pub mod optimize;

pub use error::{Error, Result};
pub use estimators::{FitOptions, FitResult, Method};

pub use model::{Chirp, ChirpLikeParams, MultiParams, NoiseSpec, SignalSeries, Sinusoid};
