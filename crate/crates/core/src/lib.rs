//! Desk-scale machinery for synchronous quantum correlations.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`linalg`] — dense Hermitian linear algebra: eigendecomposition,
//!    state-weighted 2-norms, positivity checks, and the upper-half spectral
//!    projection that everything else builds on.
//! 2. [`player`] — finite-dimensional measurement families: one
//!    projection-valued measure (PVM) per question, tracial states on block
//!    algebras, and generators for exact and perturbed instances.
//! 3. [`lift`] — rounding of positive-contraction tuples into exact PVMs by
//!    sequential compression, with a certified 2-norm distance bound per
//!    rounding step, applied indexwise to truncated matrix sequences.
//! 4. [`correlations`] — extraction of synchronous correlation tables
//!    `p(ab|xy)` from a representation and a tracial state, table validation,
//!    and convergence measurement against a target table.
//! 5. [`games`] — synchronous nonlocal games, their values on correlation
//!    tables, a brute-force classical oracle, and a seesaw optimizer that uses
//!    the rounding step for feasibility restoration.
//!
//! All randomness is driven by the seeded generator in [`rng`], so every
//! output is reproducible from a `u64` seed.

pub mod config;
pub mod correlations;
pub mod games;
pub mod io;
pub mod lift;
pub mod linalg;
pub mod player;
pub mod rng;

pub use config::Tolerances;
pub use correlations::{ConvergenceMetric, ConvergenceReport, CorrelationTable};
pub use games::{Game, OptimizationResult};
pub use lift::{ApproxRepSequence, DefectReport, MatrixSequence, RoundingMode};
pub use linalg::{CMatrix, EigenSystem, HermitianMatrix, StateVectorSpec};
pub use player::{PlayerRep, PositiveTuple, TraceSpec, PVM};
