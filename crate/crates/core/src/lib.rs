//! Fully dynamic maximal independent set for graphs of bounded arboricity.
//!
//! The [`Engine`] keeps a maximal independent set (MIS) of an `n`-vertex
//! graph under edge insertions and deletions. It runs on top of a bounded
//! out-degree edge orientation ([`orientation`]) and keeps, for every vertex,
//! a partition of its in-neighbors into resolved, active (bucketed), passive
//! and residual sets. When an insertion evicts a vertex from the MIS, a
//! bucketed chain reaction picks a large batch of replacement candidates so
//! that the MIS grows by much more than it shrinks, which gives amortized
//! `O(α² log² n)` time per update.
//!
//! Supporting modules: [`verify`] audits the structure against first
//! principles, [`streams`] produces and parses update streams, and [`stats`]
//! replays streams with counters, CSV output and benchmarks.

pub mod engine;
pub mod orientation;
pub mod stats;
pub mod streams;
pub mod verify;

/// Vertex identifier, `0..n`.
pub type Vertex = usize;

pub use engine::{
    greedy_induced_mis, ChangeLog, Counters, Engine, EngineError, LemmaViolation, MisChange,
    Params, Phase, Placement, StagePlan, TraceEvent, Update, UpdateReport, VertexState,
};
pub use orientation::{FlipLog, OrientationError, OrientedGraph};
pub use streams::{StreamError, UpdateStream};
pub use verify::{AuditReport, Violation};
