//! Generalized madogram of maxima over two disjoint regions of a
//! max-stable random field.
//!
//! * [`m4`]: moving-maxima (M4) fields, simulation and closed forms;
//! * [`estimators`]: known-margin and rank-based estimators;
//! * [`study`]: replication studies of bias, MSE and coverage;
//! * [`ingest`]: station data pipeline and file formats;
//! * [`cli`]: the `madogram` command.

pub mod cli;
pub mod domain;
pub mod error;
pub mod estimators;
pub mod ingest;
pub mod m4;
pub mod rng;
pub mod study;

pub use domain::{
    region_maxima, DependenceQuery, EstimateWithError, GridKind, Location, MadogramGrid, Margin,
    Panel, Region,
};
pub use error::{Error, Result};
