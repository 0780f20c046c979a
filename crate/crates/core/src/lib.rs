//! Class-incremental recognition built from a frozen feature trunk, a growable
//! bank of per-class two-output detectors and an expandable decision network.
//!
//! The crate is `no_std` (with `alloc`). File IO, the experiment harness and
//! the command line live in the companion `accretion` crate.
//!
//! Layout:
//!
//! - [`nn`]: tensors, layers, forward/backward passes, momentum SGD, losses,
//!   the Mann-Whitney AUC and a finite-difference gradient checker.
//! - [`data`]: IDX parsing, per-class partitioning, the rehearsal data pool and
//!   detector training-set assembly.
//! - [`model`]: shared trunk, detector heads and bank, decision network,
//!   accretion state and the binary checkpoint codec.
//! - [`protocol`]: bootstrap training, per-class accretion, evaluation and
//!   decision-network replacement.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
mod error;
pub mod model;
pub mod nn;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};

/// Class identifier. MNIST digits use 0..=9.
pub type ClassId = u8;
