//! Distance estimation between two wireless nodes from the delay
//! differences of their multipath components as seen by one or more
//! observer nodes.
//!
//! Module map:
//!
//! - [`geom`]: room model and image-method ray tracer.
//! - [`channel`]: path amplitudes, diffuse multipath, SINR detection, CRLB.
//! - [`obs`]: observation sets from the statistical model or traced scenes.
//! - [`est`]: closed-form estimators and their analytic error laws.
//! - [`mle`]: likelihood and solvers for delay differences with errors.
//! - [`sim`]: Monte Carlo sweeps, room heatmaps and circle sweeps.
//! - [`config`]: scenario files.
//! - [`cli`]: command-line frontend.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod est;
pub mod geom;
pub mod mle;
pub mod obs;
pub mod sim;

pub use error::{Error, Result};
