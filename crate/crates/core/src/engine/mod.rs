//! The dynamic MIS engine.
//!
//! Every update runs in four phases:
//!
//! 1. update the MIS (`handle_insert` / `handle_delete`), touching only
//!    membership flags and the `m_minus` sets, and record a [`ChangeLog`];
//! 2. replay the change log to repair the per-vertex partitions;
//! 3. run the orientation (insertions only; deletions never flip);
//! 4. repair the partitions for every flip and integrate the new edge.
//!
//! For deletions the edge is taken out of the orientation, and out of the
//! head's partition, before phase 1, since the MIS decision has to see the
//! graph without it.

mod greedy;
mod partition;
mod stage;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::orientation::{OrientationError, OrientedGraph};
use crate::Vertex;

pub use greedy::greedy_induced_mis;
pub use partition::{Buckets, Placement, VertexState};
pub use stage::StagePlan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("graph must have at least one vertex")]
    NoVertices,
    #[error("arboricity bound must be at least 1")]
    ZeroAlpha,
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error("{} is not an independent set", format_set(.0))]
    NotIndependent(Vec<Vertex>),
    #[error("vertex {0} listed in the MIS is out of range")]
    MisOutOfRange(Vertex),
    #[error("invalid placement for vertex {0}")]
    BadPlacement(Vertex),
    /// Strict mode only. The update itself completed and the state is
    /// consistent; the listed analytical guarantees did not hold.
    #[error("lemma violations: {0:?}")]
    Lemma(Vec<LemmaViolation>),
}

fn format_set(v: &[Vertex]) -> String {
    format!("{v:?}")
}

/// Fixed sizing of the structure: bucket capacity `s = 8α` and bucket count
/// `b = ⌈log₂ n⌉ + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub n: usize,
    pub alpha: usize,
    pub s: usize,
    pub b: usize,
}

impl Params {
    pub fn new(n: usize, alpha: usize) -> Result<Self, EngineError> {
        if n == 0 {
            return Err(EngineError::NoVertices);
        }
        if alpha == 0 {
            return Err(EngineError::ZeroAlpha);
        }
        let log2_ceil = (usize::BITS - (n - 1).leading_zeros()) as usize;
        Ok(Params {
            n,
            alpha,
            s: 8 * alpha,
            b: log2_ceil + 1,
        })
    }

    /// Out-degree cap handed to the orientation.
    pub fn d_max(&self) -> usize {
        4 * self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Update {
    Insert(Vertex, Vertex),
    Delete(Vertex, Vertex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MisChange {
    Added,
    Removed,
}

/// Ordered MIS additions and removals made by one update.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeLog {
    pub events: Vec<(Vertex, MisChange)>,
}

impl ChangeLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn added(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.events
            .iter()
            .filter(|e| e.1 == MisChange::Added)
            .map(|e| e.0)
    }

    pub fn removed(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.events
            .iter()
            .filter(|e| e.1 == MisChange::Removed)
            .map(|e| e.0)
    }

    fn push(&mut self, v: Vertex, change: MisChange) {
        self.events.push((v, change));
    }
}

/// A guarantee from the analysis that failed to hold during an update.
/// On graphs whose arboricity is within the configured bound none of these
/// can occur; they are bugs or evidence that the bound is wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LemmaViolation {
    /// Stage 1 ended with `|S⁻| > 1` and `|S⁺| < 4α|S⁻|`.
    StageOneBound { s_plus: usize, s_minus: usize },
    /// A processed vertex had no full active bucket.
    NoFullBucket { vertex: Vertex },
    /// The queue ran dry with no unprocessed vertex left in `S⁻`.
    EmptyBatch,
    /// More epochs than buckets.
    EpochOverflow { epoch: usize, b: usize },
    /// Fewer than `⌈|S⁺|/(2α)⌉` additions in Stage 2.
    TooFewAdditions { added: usize, required: usize },
    /// More removals than `|S⁻|`.
    TooManyRemovals { removed: usize, s_minus: usize },
    RemovedOutsideSMinus { vertex: Vertex },
    AddedAndRemoved { vertex: Vertex },
    /// Stage 2 left the MIS invalid around this vertex (strict mode check).
    CommitNotMaximalIndependent { vertex: Vertex },
    /// A vertex finished an update above the out-degree cap.
    OutDegreeCap { vertex: Vertex, degree: usize },
}

/// Cumulative operation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub updates: u64,
    pub mis_additions: u64,
    pub mis_removals: u64,
    pub sum_s_plus: u64,
    pub sum_s_minus: u64,
    pub flips: u64,
    /// Set mutations in the partitions, out-neighborhood scan steps and
    /// flip repairs.
    pub elem_ops: u64,
    pub lemma_violations: u64,
}

/// Per-update measurements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateReport {
    pub s_plus: usize,
    pub s_minus: usize,
    pub epochs: usize,
    pub processed: usize,
    pub flips: usize,
    pub elem_ops: u64,
    pub violations: Vec<LemmaViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    UpdateMis = 1,
    RepairAfterMis = 2,
    Orient = 3,
    RepairAfterOrient = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    MisAdded(Vertex),
    MisRemoved(Vertex),
    StageOne { s_plus: usize, s_minus: usize, epochs: usize },
    Placed { vertex: Vertex, placement: Placement },
    EdgeInserted(Vertex, Vertex),
    EdgeDeleted(Vertex, Vertex),
    /// The edge that used to point `.0 -> .1` now points `.1 -> .0`.
    Flipped(Vertex, Vertex),
}

type TraceHook = Box<dyn FnMut(Phase, &TraceEvent) + Send>;

pub struct Engine {
    params: Params,
    graph: OrientedGraph,
    verts: Vec<VertexState>,
    strict: bool,
    counters: Counters,
    report: UpdateReport,
    phase: Phase,
    /// Edge being inserted while phase 1 runs; not yet in the orientation.
    pending: Option<(Vertex, Vertex)>,
    trace: Option<TraceHook>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("params", &self.params)
            .field("edges", &self.graph.edge_count())
            .field("mis_size", &self.mis_size())
            .field("strict", &self.strict)
            .field("counters", &self.counters)
            .finish()
    }
}

impl Engine {
    /// Empty graph; every vertex is in the MIS.
    pub fn new(params: Params) -> Result<Self, EngineError> {
        let graph = OrientedGraph::new(params.n, params.d_max())?;
        let verts = (0..params.n).map(|_| VertexState::new_in_mis()).collect();
        Ok(Engine {
            params,
            graph,
            verts,
            strict: false,
            counters: Counters::default(),
            report: UpdateReport::default(),
            phase: Phase::UpdateMis,
            pending: None,
            trace: None,
        })
    }

    pub fn with_alpha(n: usize, alpha: usize) -> Result<Self, EngineError> {
        Self::new(Params::new(n, alpha)?)
    }

    /// Builds an engine for an existing oriented graph and MIS. Unresolved
    /// vertices are hosted (or made residual) with the same rule the engine
    /// uses during updates, in ascending id order.
    pub fn from_oriented(
        params: Params,
        oriented_edges: &[(Vertex, Vertex)],
        mis: &BTreeSet<Vertex>,
    ) -> Result<Self, EngineError> {
        let mut engine = Self::from_state(params, oriented_edges, mis, &BTreeMap::new())?;
        for x in 0..params.n {
            if engine.verts[x].placement == Placement::Residual {
                engine.set_placement(x, Placement::Unplaced);
                engine.assign_unresolved(x);
            }
        }
        Ok(engine)
    }

    /// Restores an engine from an explicit snapshot: orientation, MIS, and
    /// the host and bucket of every hosted vertex. Unresolved vertices not
    /// listed become residual. The result is not validated beyond basic
    /// shape checks; run [`crate::verify::check_invariants`] on it.
    pub fn from_state(
        params: Params,
        oriented_edges: &[(Vertex, Vertex)],
        mis: &BTreeSet<Vertex>,
        hosted: &BTreeMap<Vertex, (Vertex, usize)>,
    ) -> Result<Self, EngineError> {
        let mut engine = Self::new(params)?;
        for &(u, v) in oriented_edges {
            engine.graph.add_edge_unbalanced(u, v)?;
        }
        for &v in mis {
            if v >= params.n {
                return Err(EngineError::MisOutOfRange(v));
            }
        }
        for (u, v) in engine.graph.oriented_edges() {
            if mis.contains(&u) && mis.contains(&v) {
                return Err(EngineError::NotIndependent(vec![u, v]));
            }
        }
        for x in 0..params.n {
            engine.verts[x].in_mis = mis.contains(&x);
            engine.verts[x].placement = Placement::Unplaced;
        }
        for x in 0..params.n {
            if mis.contains(&x) {
                for &y in engine.graph.out_neighbors(x) {
                    engine.verts[y].m_minus.insert(x);
                }
            }
        }
        for x in 0..params.n {
            let placement = if engine.is_resolved(x) {
                Placement::Resolved
            } else if let Some(&(host, bucket)) = hosted.get(&x) {
                let valid = host < params.n
                    && mis.contains(&host)
                    && engine.graph.out_neighbors(x).contains(&host)
                    && (1..=params.b).contains(&bucket);
                if !valid {
                    return Err(EngineError::BadPlacement(x));
                }
                Placement::Hosted { host, bucket }
            } else {
                Placement::Residual
            };
            engine.set_placement(x, placement);
        }
        engine.counters = Counters::default();
        Ok(engine)
    }

    /// Strict mode turns lemma violations into errors.
    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Installs a hook that receives `(phase, event)` for every MIS change,
    /// placement change and edge event.
    pub fn set_trace_hook<F>(&mut self, hook: F)
    where
        F: FnMut(Phase, &TraceEvent) + Send + 'static,
    {
        self.trace = Some(Box::new(hook));
    }

    pub fn clear_trace_hook(&mut self) {
        self.trace = None;
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn graph(&self) -> &OrientedGraph {
        &self.graph
    }

    pub fn vertex(&self, v: Vertex) -> &VertexState {
        &self.verts[v]
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Measurements of the most recent update.
    pub fn last_report(&self) -> &UpdateReport {
        &self.report
    }

    pub fn is_in_mis(&self, v: Vertex) -> bool {
        self.verts[v].in_mis
    }

    pub fn mis(&self) -> BTreeSet<Vertex> {
        (0..self.params.n).filter(|&v| self.verts[v].in_mis).collect()
    }

    pub fn mis_size(&self) -> usize {
        self.verts.iter().filter(|s| s.in_mis).count()
    }

    /// A vertex is resolved if it or one of its in-neighbors is in the MIS.
    pub fn is_resolved(&self, v: Vertex) -> bool {
        self.verts[v].in_mis || !self.verts[v].m_minus.is_empty()
    }

    pub fn insert(&mut self, u: Vertex, v: Vertex) -> Result<ChangeLog, EngineError> {
        self.apply_update(Update::Insert(u, v))
    }

    pub fn delete(&mut self, u: Vertex, v: Vertex) -> Result<ChangeLog, EngineError> {
        self.apply_update(Update::Delete(u, v))
    }

    pub fn apply_update(&mut self, op: Update) -> Result<ChangeLog, EngineError> {
        match op {
            Update::Insert(u, v) => self.graph.check_insert(u, v)?,
            Update::Delete(u, v) => self.graph.check_delete(u, v)?,
        }
        self.report = UpdateReport::default();
        let ops_before = self.counters.elem_ops;
        let log = match op {
            Update::Insert(u, v) => self.run_insert(u, v),
            Update::Delete(u, v) => self.run_delete(u, v),
        };
        self.counters.updates += 1;
        self.counters.mis_additions += log.added().count() as u64;
        self.counters.mis_removals += log.removed().count() as u64;
        self.counters.sum_s_plus += self.report.s_plus as u64;
        self.counters.sum_s_minus += self.report.s_minus as u64;
        self.counters.flips += self.report.flips as u64;
        self.counters.lemma_violations += self.report.violations.len() as u64;
        self.report.elem_ops = self.counters.elem_ops - ops_before;
        if self.strict && !self.report.violations.is_empty() {
            return Err(EngineError::Lemma(self.report.violations.clone()));
        }
        Ok(log)
    }

    fn run_insert(&mut self, u: Vertex, v: Vertex) -> ChangeLog {
        self.phase = Phase::UpdateMis;
        let log = self.handle_insert(u, v);

        self.phase = Phase::RepairAfterMis;
        self.replay_changes(&log);

        self.phase = Phase::Orient;
        self.graph
            .add_edge_unbalanced(u, v)
            .expect("insertion was validated");
        self.emit(TraceEvent::EdgeInserted(u, v));
        self.phase = Phase::RepairAfterOrient;
        self.handle_flip(u, v, false);
        let mut raised = vec![u];
        while let Some((a, b)) = self.graph.rebalance_step() {
            self.phase = Phase::Orient;
            self.emit(TraceEvent::Flipped(a, b));
            self.phase = Phase::RepairAfterOrient;
            self.report.flips += 1;
            self.counters.elem_ops += 1;
            self.handle_flip(b, a, true);
            raised.push(b);
        }
        for w in raised {
            let degree = self.graph.out_degree(w);
            if degree > self.params.d_max() {
                self.report
                    .violations
                    .push(LemmaViolation::OutDegreeCap { vertex: w, degree });
            }
        }
        self.report.violations.dedup();
        log
    }

    fn run_delete(&mut self, u: Vertex, v: Vertex) -> ChangeLog {
        let (tail, head) = self.graph.orientation(u, v).expect("deletion was validated");
        self.phase = Phase::Orient;
        self.graph
            .delete_oriented(u, v)
            .expect("deletion was validated");
        self.emit(TraceEvent::EdgeDeleted(tail, head));
        self.phase = Phase::RepairAfterOrient;
        self.detach_entry(tail, head);
        self.sync(tail);
        self.sync(head);

        self.phase = Phase::UpdateMis;
        let log = self.handle_delete(u, v);

        self.phase = Phase::RepairAfterMis;
        self.replay_changes(&log);
        log
    }

    /// Phase-1 logic for a deletion; the edge is already gone from the graph.
    pub(crate) fn handle_delete(&mut self, u: Vertex, v: Vertex) -> ChangeLog {
        let mut log = ChangeLog::default();
        let (u, v) = if self.verts[v].in_mis { (v, u) } else { (u, v) };
        assert!(
            !(self.verts[u].in_mis && self.verts[v].in_mis),
            "both endpoints of an edge in the MIS"
        );
        if self.verts[u].in_mis && !self.verts[v].in_mis && !self.has_mis_neighbor(v) {
            self.set_mis(v, true, &mut log);
        }
        log
    }

    /// Phase-1 logic for an insertion of `{u, v}`; the edge is not yet in
    /// the graph.
    pub(crate) fn handle_insert(&mut self, u: Vertex, v: Vertex) -> ChangeLog {
        if !(self.verts[u].in_mis && self.verts[v].in_mis) {
            return ChangeLog::default();
        }
        self.pending = Some((u, v));
        let plan = if self.active_full(v) {
            self.build_s_sets(v)
        } else {
            StagePlan::new(v)
        };
        self.report.s_plus = plan.s_plus.len();
        self.report.s_minus = plan.s_minus.len();
        self.report.epochs = plan.epoch;
        self.report.processed = plan.processed.len();
        self.emit(TraceEvent::StageOne {
            s_plus: plan.s_plus.len(),
            s_minus: plan.s_minus.len(),
            epochs: plan.epoch,
        });
        let log = self.commit_s_sets(u, v, &plan);
        self.pending = None;
        log
    }

    /// Phase 2: repairs the partitions for each MIS change, oldest first.
    fn replay_changes(&mut self, log: &ChangeLog) {
        for &(x, change) in &log.events {
            match change {
                MisChange::Removed => self.repair_after_removal(x),
                MisChange::Added => self.repair_after_addition(x),
            }
        }
    }

    /// Flips the membership of `x` and keeps `m_minus` of its out-neighbors
    /// in sync.
    fn set_mis(&mut self, x: Vertex, member: bool, log: &mut ChangeLog) {
        debug_assert_ne!(self.verts[x].in_mis, member);
        self.verts[x].in_mis = member;
        let outs: Vec<Vertex> = self.graph.out_neighbors(x).iter().copied().collect();
        for y in outs {
            self.counters.elem_ops += 1;
            if member {
                self.verts[y].m_minus.insert(x);
            } else {
                self.verts[y].m_minus.remove(&x);
            }
        }
        if member {
            log.push(x, MisChange::Added);
            self.emit(TraceEvent::MisAdded(x));
        } else {
            log.push(x, MisChange::Removed);
            self.emit(TraceEvent::MisRemoved(x));
        }
    }

    /// True if `x` has an MIS neighbor, counting the edge being inserted.
    fn has_mis_neighbor(&mut self, x: Vertex) -> bool {
        if !self.verts[x].m_minus.is_empty() {
            return true;
        }
        if let Some((a, b)) = self.pending {
            let other = if x == a { Some(b) } else if x == b { Some(a) } else { None };
            if other.is_some_and(|o| self.verts[o].in_mis) {
                return true;
            }
        }
        let mut found = false;
        for &y in self.graph.out_neighbors(x) {
            self.counters.elem_ops += 1;
            if self.verts[y].in_mis {
                found = true;
                break;
            }
        }
        found
    }

    fn emit(&mut self, event: TraceEvent) {
        if let Some(hook) = self.trace.as_mut() {
            hook(self.phase, &event);
        }
    }

    #[cfg(test)]
    pub(crate) fn vertex_mut(&mut self, v: Vertex) -> &mut VertexState {
        &mut self.verts[v]
    }
}

#[cfg(test)]
mod tests;
