//! Dynamic graph with a bounded out-degree edge orientation.
//!
//! New edges are oriented from the first endpoint to the second. Whenever a
//! vertex exceeds the out-degree cap, every one of its out-edges is flipped
//! (the reset rule of Brodal and Fagerberg). Over-full vertices are reset in
//! ascending id order, and the out-edges of a vertex are flipped in ascending
//! order of their heads, so the whole process is deterministic.
//!
//! Rebalancing can be driven one flip at a time through
//! [`OrientedGraph::add_edge_unbalanced`] and [`OrientedGraph::rebalance_step`],
//! which lets a consumer observe the orientation between consecutive flips.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::Vertex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrientationError {
    #[error("edge exists: {{{0}, {1}}}")]
    EdgeExists(Vertex, Vertex),
    #[error("edge absent: {{{0}, {1}}}")]
    EdgeAbsent(Vertex, Vertex),
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("out-degree cap must be positive")]
    ZeroCap,
}

/// Edge events produced by one insertion or deletion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlipLog {
    /// `(u, v)`: the edge that was oriented `u -> v` now points `v -> u`.
    pub flips: Vec<(Vertex, Vertex)>,
    /// Orientation initially given to a newly inserted edge.
    pub inserted: Option<(Vertex, Vertex)>,
    /// Set when rebalancing hit its flip budget and stopped with some vertex
    /// still above the cap. Only happens on graphs far denser than the cap
    /// allows.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct OrientedGraph {
    d_max: usize,
    out_adj: Vec<BTreeSet<Vertex>>,
    in_adj: Vec<BTreeSet<Vertex>>,
    edges: usize,
    // rebalancing state; `overfull` outlives a saturated round
    overfull: BTreeSet<Vertex>,
    resetting: VecDeque<(Vertex, Vertex)>,
    flips_this_round: usize,
    saturated: bool,
    total_flips: u64,
}

impl OrientedGraph {
    pub fn new(n: usize, d_max: usize) -> Result<Self, OrientationError> {
        if d_max == 0 {
            return Err(OrientationError::ZeroCap);
        }
        Ok(OrientedGraph {
            d_max,
            out_adj: vec![BTreeSet::new(); n],
            in_adj: vec![BTreeSet::new(); n],
            edges: 0,
            overfull: BTreeSet::new(),
            resetting: VecDeque::new(),
            flips_this_round: 0,
            saturated: false,
            total_flips: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.out_adj.len()
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Number of flips performed since construction.
    pub fn total_flips(&self) -> u64 {
        self.total_flips
    }

    pub fn out_neighbors(&self, v: Vertex) -> &BTreeSet<Vertex> {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: Vertex) -> &BTreeSet<Vertex> {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: Vertex) -> usize {
        self.out_adj[v].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.out_adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n() && v < self.n() && (self.out_adj[u].contains(&v) || self.out_adj[v].contains(&u))
    }

    /// Returns `(tail, head)` for the edge `{u, v}` if present.
    pub fn orientation(&self, u: Vertex, v: Vertex) -> Option<(Vertex, Vertex)> {
        if u >= self.n() || v >= self.n() {
            None
        } else if self.out_adj[u].contains(&v) {
            Some((u, v))
        } else if self.out_adj[v].contains(&u) {
            Some((v, u))
        } else {
            None
        }
    }

    /// All edges as `(tail, head)`, ascending.
    pub fn oriented_edges(&self) -> Vec<(Vertex, Vertex)> {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, outs)| outs.iter().map(move |&v| (u, v)))
            .collect()
    }

    /// All edges as unordered pairs `(min, max)`, ascending.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut all: Vec<_> = self
            .oriented_edges()
            .into_iter()
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        all.sort_unstable();
        all
    }

    /// One line per edge, `u -> v`, ascending by `(u, v)`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.oriented_edges() {
            let _ = writeln!(out, "{u} -> {v}");
        }
        out
    }

    fn check_pair(&self, u: Vertex, v: Vertex) -> Result<(), OrientationError> {
        let n = self.n();
        for w in [u, v] {
            if w >= n {
                return Err(OrientationError::VertexOutOfRange { vertex: w, n });
            }
        }
        if u == v {
            return Err(OrientationError::SelfLoop(u));
        }
        Ok(())
    }

    /// Validates an insertion without touching the graph.
    pub fn check_insert(&self, u: Vertex, v: Vertex) -> Result<(), OrientationError> {
        self.check_pair(u, v)?;
        if self.has_edge(u, v) {
            return Err(OrientationError::EdgeExists(u, v));
        }
        Ok(())
    }

    /// Validates a deletion without touching the graph.
    pub fn check_delete(&self, u: Vertex, v: Vertex) -> Result<(), OrientationError> {
        self.check_pair(u, v)?;
        if !self.has_edge(u, v) {
            return Err(OrientationError::EdgeAbsent(u, v));
        }
        Ok(())
    }

    /// Inserts `{u, v}` oriented `u -> v` and rebalances until every
    /// out-degree is within the cap.
    pub fn insert_oriented(&mut self, u: Vertex, v: Vertex) -> Result<FlipLog, OrientationError> {
        self.add_edge_unbalanced(u, v)?;
        let mut log = FlipLog {
            inserted: Some((u, v)),
            ..FlipLog::default()
        };
        while let Some(flip) = self.rebalance_step() {
            log.flips.push(flip);
        }
        log.saturated = self.saturated;
        debug_assert!(log.saturated || self.max_out_degree() <= self.d_max);
        Ok(log)
    }

    /// Removes `{u, v}` in whichever orientation it has. Never flips.
    pub fn delete_oriented(&mut self, u: Vertex, v: Vertex) -> Result<FlipLog, OrientationError> {
        self.check_delete(u, v)?;
        let (tail, head) = self.orientation(u, v).expect("checked");
        self.out_adj[tail].remove(&head);
        self.in_adj[head].remove(&tail);
        self.edges -= 1;
        Ok(FlipLog::default())
    }

    /// Inserts `u -> v` without rebalancing. The caller must drain
    /// [`rebalance_step`](Self::rebalance_step) afterwards.
    pub fn add_edge_unbalanced(&mut self, u: Vertex, v: Vertex) -> Result<(), OrientationError> {
        self.check_insert(u, v)?;
        self.out_adj[u].insert(v);
        self.in_adj[v].insert(u);
        self.edges += 1;
        self.flips_this_round = 0;
        self.saturated = false;
        // Vertices left over the cap by a saturated round stay in `overfull`.
        if self.out_adj[u].len() > self.d_max {
            self.overfull.insert(u);
        }
        Ok(())
    }

    /// Performs the next flip of the pending rebalance, returning the edge
    /// `(u, v)` that used to point `u -> v`. `None` once every out-degree is
    /// within the cap (or the flip budget ran out).
    pub fn rebalance_step(&mut self) -> Option<(Vertex, Vertex)> {
        loop {
            if let Some((w, x)) = self.resetting.pop_front() {
                if !self.out_adj[w].contains(&x) {
                    continue;
                }
                if self.flips_this_round >= self.flip_budget() {
                    self.saturated = true;
                    self.resetting.clear();
                    if self.out_adj[w].len() > self.d_max {
                        self.overfull.insert(w);
                    }
                    return None;
                }
                self.flip(w, x);
                if self.out_adj[x].len() > self.d_max {
                    self.overfull.insert(x);
                }
                return Some((w, x));
            }
            let w = self.overfull.pop_first()?;
            if self.out_adj[w].len() > self.d_max {
                self.resetting.extend(self.out_adj[w].iter().map(|&x| (w, x)));
            }
        }
    }

    // Generous: the reset rule terminates long before this on any graph whose
    // arboricity is at most half the cap.
    fn flip_budget(&self) -> usize {
        64 * (self.edges + self.n()) + 1024
    }

    fn flip(&mut self, u: Vertex, v: Vertex) {
        self.out_adj[u].remove(&v);
        self.in_adj[v].remove(&u);
        self.out_adj[v].insert(u);
        self.in_adj[u].insert(v);
        self.flips_this_round += 1;
        self.total_flips += 1;
    }

    #[cfg(test)]
    pub(crate) fn mirror_consistent(&self) -> bool {
        (0..self.n()).all(|u| self.out_adj[u].iter().all(|&v| self.in_adj[v].contains(&u)))
            && (0..self.n()).all(|v| self.in_adj[v].iter().all(|&u| self.out_adj[u].contains(&v)))
            && self.out_adj.iter().map(BTreeSet::len).sum::<usize>() == self.edges
    }
}
