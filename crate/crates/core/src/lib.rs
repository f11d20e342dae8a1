//! Decentralized consensus optimization over directed graphs.
//!
//! The crate is organized as a pipeline: [`digraph`] builds strongly
//! connected topologies and mixing matrices, [`objectives`] defines agent
//! losses, [`protocols`] implements the per-node message-passing state
//! machines, [`engine`] runs synchronous rounds and records traces,
//! [`theory`] provides spectral and convergence-rate predictions, and
//! [`cli`] wires it all into the `frsd` binary.

pub mod cli;
pub mod digraph;
pub mod engine;
pub mod objectives;
pub mod protocols;
pub mod theory;
