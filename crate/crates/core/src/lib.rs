//! Rate-distortion secrecy for wiretap broadcast channels.
//!
//! The crate evaluates achievable (rate, eavesdropper distortion) regions for
//! two channel families:
//!
//! * the binary symmetric broadcast channel with a Bernoulli source
//!   ([`bsbcc`]), and
//! * the multimode-fiber MIMO Gaussian wiretap channel with unitary modal
//!   crosstalk and mode-dependent loss ([`mmf_model`], [`mmf_regions`]).
//!
//! It also estimates secrecy-outage probabilities over random fiber
//! realizations ([`outage_mc`]) and runs an exact, enumeration-based model of
//! the typical-set binning source code with a brute-force eavesdropper
//! ([`binning_sim`]).
//!
//! The scalar layers are generic over [`Real`]; the aliases below fix them to
//! `f64`, which is what the matrix layers use throughout.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning_sim;
pub mod bsbcc;
mod error;
pub mod info_math;
pub mod mmf_model;
pub mod mmf_regions;
pub mod outage_mc;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Probability in `[0, 1]` over `f64`.
pub type Probability = info_math::Probability<f64>;
/// Finite distribution over `f64`.
pub type FiniteDistribution = info_math::FiniteDistribution<f64>;
/// Joint distribution over a product alphabet, `f64` masses.
pub type JointDistribution = info_math::JointDistribution<f64>;
/// Binary symmetric broadcast channel parameters over `f64`.
pub type BsbccParams = bsbcc::BsbccParams<f64>;
/// A (rate, distortion) point over `f64`.
pub type RdPoint = bsbcc::RdPoint<f64>;
/// Labelled distortion-rate curve over `f64`.
pub type RdCurve = bsbcc::RdCurve<f64>;
