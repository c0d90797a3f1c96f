//! Probabilistic domain decomposition for boundary-value problems.
//!
//! The library splits a box domain into subdomains, estimates the solution
//! on the interfaces by Monte Carlo (stochastic representations for linear
//! problems, branching diffusions for semilinear ones), interpolates those
//! pointwise estimates into boundary data, and then solves every subdomain
//! independently with a deterministic scheme. After the interface stage the
//! subdomain solves share no state, so they parallelize without
//! communication.
//!
//! Module map:
//!
//! - [`geometry`]: box domains, face classification, partitions, interface
//!   grids.
//! - [`rng`]: counter-keyed random streams for scheduling-independent
//!   reproducibility.
//! - [`sde`]: Euler–Maruyama engine for the position/weight/source path
//!   system with reflecting and absorbing boundaries.
//! - [`feynman_kac`]: pointwise solution estimators for linear problems.
//! - [`branching`]: branching-diffusion estimators for semilinear problems,
//!   including the well-posedness check for marked trees.
//! - [`pde`]: deterministic subdomain solvers (Crank–Nicolson in 1-d,
//!   five-point stencil in 2-d).
//! - [`orchestrator`]: the two-stage pipeline, configuration, presets,
//!   timing, and report assembly.

pub mod branching;
pub mod error;
pub mod feynman_kac;
pub mod geometry;
pub mod numerics;
pub mod orchestrator;
pub mod pde;
pub mod rng;
pub mod sde;

pub use error::{PddError, Result};
pub use geometry::{
    build_interface_grid, classify_point, partition_box, BoundaryEvent, BoxDomain, FaceKind,
    InterfaceGrid, InterfaceNodeValue, Partition,
};
pub use rng::{RngStream, StreamKey, StreamSampler};
pub use sde::{
    simulate_path, DiffusionCoefficients, Horizon, PathOutcome, PathState, ScalarDrivers,
};
