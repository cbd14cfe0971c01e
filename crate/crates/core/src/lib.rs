//! Private information retrieval from graph-structured non-replicated
//! storage.
//!
//! A (K,R,M,N) storage system spreads K messages over N databases, each
//! holding M of them, each message replicated R times; for M=2 the system is
//! an R-regular graph with messages as vertices and databases as edges. This
//! crate models such systems, computes the structure-dependent upper bound
//! on the private retrieval rate (via the spread of the graph), implements
//! the retrieval schemes that meet it on cyclic and fully-connected graphs
//! together with the baseline and M=3 constructions, and independently
//! verifies the three contracts every scheme must honor: privacy of the
//! request, exact decodability, and the claimed download rate.
//!
//! - [`gf`]: exact arithmetic and linear algebra over prime fields.
//! - [`storage`]: systems, the two graph families, spec files, messages.
//! - [`analysis`]: graph reduction, spread, bounds, capacities, baselines.
//! - [`schemes`]: query-plan construction, answering, decoding.
//! - [`verify`]: privacy/decodability/rate checks and the recovery oracle.

pub mod analysis;
pub mod gf;
pub mod schemes;
pub mod storage;
pub mod verify;
