//! Federated random forests over multi-key homomorphic encryption, with a
//! trimmed-MSE defense against label-flip poisoning and encrypted diagnosis.

#[cfg(feature = "audit")]
pub mod audit;
pub mod attack;
pub mod crypto;
pub mod federated;
pub mod forest;
pub mod harness;
pub mod protocols;
pub mod rng;
