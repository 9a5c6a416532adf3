//! Spatially realistic metapopulation models on randomly placed patches.
//!
//! The crate computes equilibria of the incidence function model and its
//! Levins-type ODE limit, builds the local approximation `q_1(z)` together with
//! explicit upper and lower envelopes, evaluates the accompanying probability
//! guarantees and checks them by Monte Carlo.

pub mod bounds;
pub mod colonization;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod landscape;
pub mod montecarlo;
pub mod patches;
pub mod perron;
pub mod quadrature;
pub mod rng;
pub mod stochastic;

pub use colonization::{ColonizationFunction, ColonizationKind};
pub use error::{Error, Result};
pub use geometry::{Ball, Domain, Point, Region};
pub use landscape::{Field, FieldKind, Kernel, KernelProfile, Landscape, LandscapeConstants};
pub use patches::{CouplingMatrix, Network, PatchSet};

/// Version string recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
