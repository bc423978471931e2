//! trilab — a desk-scale blockchain protocol laboratory.
//!
//! The lab models a blockchain protocol as a deterministic transition system
//! over a UTXO set and evaluates three predicates over protocol
//! configurations: security (adversarial reorg cost), scalability (amortised
//! validation cost under parallel UTXO partitioning), and decentralisation
//! (exact peer-graph connectivity). Message relay is simulated under unicast
//! gossip, compact block relay, and multicast, with byte-exact volume
//! accounting.
//!
//! Everything is deterministic given a scenario seed; see [`rng`] for the
//! seed-derivation scheme.

pub mod consensus;
pub mod harness;
pub mod hash;
pub mod ledger;
pub mod merkle;
pub mod netgraph;
pub mod propagation;
pub mod rng;
pub mod scenario;
pub mod workload;

pub use hash::Hash256;
