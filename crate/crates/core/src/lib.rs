//! Deterministic federated-learning simulator with adaptive aggregation
//! weights computed from client vectors.
//!
//! The crate is organized bottom-up: flat parameter vectors ([`tensor`]), a
//! small MLP with SGD ([`model`]), datasets and non-IID partitioning
//! ([`data`]), aggregation rules ([`aggregation`]), the round loop
//! ([`orchestrator`]), diagnostics ([`analysis`]) and the config/artifact
//! layer behind the command-line tool ([`cli`]).

pub mod aggregation;
pub mod cli;
pub mod analysis;
pub mod data;
pub mod error;
pub mod model;
pub mod orchestrator;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
