//! Numerical laboratory for the multi-particle Anderson tight-binding model.
//!
//! The crate is organized around the objects a multi-scale analysis of the
//! model manipulates:
//!
//! - [`geometry`]: multi-particle configurations, lattice rectangles and
//!   cubes, boundaries, projections, separability, FI/PI classification and
//!   the length-scale ladder. Pure combinatorics, no floating point.
//! - [`operator`]: disorder ensembles with counter-based seeded sampling,
//!   the inter-particle interaction, and sparse assembly of restricted
//!   Hamiltonians (including the tensor decomposition of partially
//!   interactive cubes).
//! - [`solver`]: eigensolvers, Green (resolvent) columns and the resonance /
//!   singularity / tunnelling predicates evaluated on top of them.
//! - [`msa`]: seeded Monte Carlo experiments estimating the probabilities the
//!   multi-scale analysis bounds (Wegner-type events, complete
//!   non-resonance, initial-scale events, two-cube singularity, tunnelling,
//!   singular-cube count statistics) with Clopper-Pearson intervals.
//! - [`localization`]: finite-volume measurements of the headline physics:
//!   spectral-edge convergence, quasi-mode (Weyl) residuals, eigenfunction
//!   decay fits, and dynamical moments in the Hilbert-Schmidt norm.
//!
//! Everything is finite and explicit; all randomness is a deterministic
//! function of `(seed, realization index, lattice site)` so experiments are
//! reproducible at any worker count.

pub mod error;
pub mod geometry;
pub mod localization;
pub mod msa;
pub mod operator;
pub mod rng;
pub mod solver;

pub use error::LabError;
