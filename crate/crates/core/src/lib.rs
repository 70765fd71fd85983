//! Rainbow matchings in the complete k-partite hypergraph `[n]^k`.
//!
//! The crate decides cross-dependence of family systems exactly, searches
//! for satisfying/non-satisfying threshold sequences at desk scale, samples
//! uniform perfect matchings and validates concentration/anticoncentration
//! bounds empirically, runs a spread-approximation engine, and issues
//! nonzero-coefficient certificates over GF(p^2) for the bipartite case.

pub mod docio;
pub mod error;
pub mod family;
pub mod matcher;
pub mod nullstellensatz;
pub mod randmatch;
pub mod sequences;
pub mod spread;

pub use error::{Error, Result};
