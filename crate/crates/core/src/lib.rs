//! Moment-SOS relaxations for polynomials given as composition chains or
//! tensor trains.
//!
//! The pipeline is: build a [`chain::CompositionChain`] (by hand, from a
//! problem file, or with a generator in [`problems`]), assemble one of the
//! three relaxations in [`relax`], solve it through [`conic`], and optionally
//! recover a candidate minimizer with [`extraction`].

pub mod bench;
pub mod chain;
pub mod conic;
pub mod extraction;
pub mod poly;
pub mod problems;
pub mod problem_file;
pub mod relax;
pub mod runner;
pub mod sparsity;
