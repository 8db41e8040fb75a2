//! Typed long-term memory for conversational agents.
//!
//! Dialogue history is compiled into grounded memory atoms (pages, spans,
//! handles, times, pivots and claims), retrieved through fused sparse and
//! dense routes, projected onto claim-centered candidate bundles, and lowered
//! into a provenance-scoped fact interface for answer generation.
//!
//! The pipeline, in order:
//!
//! 1. [`compiler`] turns an [`compiler::InteractionHistory`] into a validated
//!    [`store::MemoryStore`].
//! 2. [`retrieval`] rewrites the query, runs every route and fuses the ranked
//!    lists with reciprocal rank fusion.
//! 3. [`projection`] maps fused hits onto claims and builds candidate bundles.
//! 4. [`utilization`] reranks, selects and renders the fact interface, then
//!    hands it to an answer composer.
//!
//! [`engine::Engine`] wires the stages together; [`harness`] holds corpus
//! loaders, pipeline profiles and the evaluation harness behind the `memir`
//! command-line tool.

pub mod atom;
pub mod compiler;
pub mod engine;
pub mod exec;
pub mod harness;
pub mod persist;
pub mod projection;
pub mod providers;
pub mod retrieval;
pub mod store;
pub mod temporal;
pub mod text;
pub mod trace;
pub mod utilization;

pub use atom::{AtomId, AtomKind, MemoryAtom, RetrievalView, ViewKind};
pub use engine::{Engine, QueryResult};
pub use exec::ExecMode;
pub use store::{MemoryStore, StoreError};
