//! Simulation and exact analysis of exclusion-type particle systems on
//! hypergraphs.
//!
//! A model is a finite hypergraph together with one probability measure per
//! edge, constant on conjugacy classes of the edge's symmetric group. Edges
//! ring as independent unit-rate Poisson clocks; when an edge rings, a
//! permutation drawn from the edge's measure moves every particle on the
//! edge at once.
//!
//! - [`permgroup`]: permutations, canonical cyclic decompositions, uniform
//!   conjugacy-class sampling, and the window-rewriting maps.
//! - [`hypermodel`]: the model type, its JSON file format, and validity
//!   checks (class-function measures, fixed-point bound, regularity,
//!   irreducibility).
//! - [`engine`]: the graphical construction — shared Poisson event streams
//!   from which random walks, exclusion and interchange processes are built
//!   as deterministic functionals — plus meeting times and the easy-model
//!   classifier.
//! - [`chameleon`]: the chameleon process (red/pink/white recolouring on top
//!   of an interchange process) with ink accounting and the modified,
//!   uncapped variant.
//! - [`exact`]: exact generators, uniformized transition probabilities,
//!   total-variation distances, mixing times, and the verification
//!   experiments built on them.

pub mod chameleon;
pub mod engine;
pub mod error;
pub mod exact;
pub mod hypermodel;
pub mod permgroup;
pub mod rng;

pub use error::{Error, Result};
pub use hypermodel::Model;
pub use permgroup::{CycleType, Permutation};

/// Vertex label. Labels are arbitrary `u32`s and need not be contiguous.
pub type Vertex = u32;
