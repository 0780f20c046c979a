//! File formats, MNIST loading and the experiment harness around
//! `accretion-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod orders;
pub mod studies;

pub use error::{AppError, Result};
