//! Simulation and verification toolkit for the randomized averaging (gossip)
//! process, in which uniformly chosen pairs of agents repeatedly replace both
//! of their opinions by the pair mean.
//!
//! The crate has three layers:
//!
//! - **Simulators**: exact event-driven dynamics on the complete graph
//!   ([`sim_complete`]) and on the d-dimensional discrete torus
//!   ([`sim_torus`]), driven by replayable seeded random streams ([`rng`]).
//! - **Limit solvers**: deterministic references the empirical opinion
//!   distribution converges to for large populations — a convolution-type
//!   density equation on a truncated grid ([`pde`]), an atomic measure
//!   evolution on dyadic rationals ([`atoms`]), and a spectral heat-equation
//!   reference for the torus (in [`sim_torus`]).
//! - **Analysis**: measure pairings, convolution pairings, Wasserstein-1
//!   distance, and martingale-residual diagnostics ([`measure`]) that
//!   quantitatively cross-check simulation against the limits, plus the
//!   end-to-end [`acceptance`] suite.
//!
//! All randomness flows through [`rng::RngStream`]; a fixed `(seed, stream)`
//! pair reproduces every trajectory and every exported file byte for byte.

pub mod acceptance;
pub mod atoms;
pub mod error;
pub mod export;
mod fft;
pub mod init;
pub mod measure;
pub mod opinion;
pub mod pde;
pub mod rng;
pub mod sim_complete;
pub mod sim_torus;
pub mod stats;

pub use error::{Error, Result};
pub use init::InitialDistribution;
pub use measure::{ConvMethod, EmpiricalMeasure, TestFunction};
pub use opinion::OpinionConfig;
pub use rng::{EventLog, RngStream};
