//! Exact simulator and numerical analysis toolkit for a three-party
//! semi-quantum key distribution protocol carried by four-particle cluster
//! states.
//!
//! A quantum party (Charlie) distributes cluster-state qubits to two
//! classical parties (Alice, Bob) who can only apply Hadamard and measure in
//! Z. The crate provides:
//!
//! - [`qcore`]: exact state-vector algebra, measurements, density matrices
//!   and entropies;
//! - [`protocol`]: the round state machine, sifting into the two raw keys,
//!   transcripts and qubit efficiency;
//! - [`attacks`]: eavesdropping models with their detection statistics and an
//!   exact, sampling-free analysis of collective attacks;
//! - [`keyrate`]: the asymptotic key-rate lower bound, its depolarizing-
//!   channel curve and the noise-tolerance threshold;
//! - [`stats`]: chi-square and binomial helpers for the Monte-Carlo checks.
//!
//! Everything is deterministic under an explicit seed: protocol rounds draw
//! from counter-based streams keyed by `(seed, round index)`.

pub mod attacks;
pub mod error;
pub mod keyrate;
pub mod protocol;
pub mod qcore;
pub mod rng;
pub mod stats;

pub use error::{QkdError, Result};
