//! Particulate dispersion, deposition and source-rate inversion.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fvm;
pub mod grid;
pub mod io;
pub mod inversion;
pub mod physics;
pub mod plume;
pub mod sensitivity;
pub mod synthetic;
pub mod wind;

pub use error::{Error, Result};
pub use grid::{DepositionField, Field3, Grid3};
