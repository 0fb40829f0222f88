//! Workbench for single-hop interference networks: channel models, exact
//! information measures, regime condition checks, rate-region polytopes and
//! unified outer-bound templates.

pub mod error;
pub mod infocalc;
pub mod expr;
pub mod netmodel;
pub mod ratepoly;
pub mod regimes;
pub mod regions;
pub mod boundsgen;

pub use error::{Error, Result};
