//! Per-vertex partition of in-neighbors and the repair procedures that keep
//! it consistent.
//!
//! Every vertex `x` has a single [`Placement`]; its entry in the partition
//! of each out-neighbor `w` is a function of that placement:
//!
//! | placement of `x`        | entry at `w`                     |
//! |-------------------------|----------------------------------|
//! | `Resolved`              | `Z_w`                            |
//! | `Hosted { host, i }`    | `A_w(i)` if `w == host`, else `P_w(i)` |
//! | `Residual`              | `R_w`                            |
//! | `Unplaced` (transient)  | none                             |
//!
//! All placement changes go through [`Engine::set_placement`], which moves
//! the entries at every out-neighbor at once and refills the hole left in
//! the old host's active set.

use std::collections::{BTreeMap, BTreeSet};

use super::{Engine, TraceEvent};
use crate::Vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Between two steps of a repair only.
    Unplaced,
    Resolved,
    /// In bucket `bucket` (1-based) of `host`'s active set.
    Hosted { host: Vertex, bucket: usize },
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Z,
    A(usize),
    P(usize),
    R,
}

/// Bucketed vertex sets indexed `1..=b`; empty buckets are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Buckets {
    map: BTreeMap<usize, BTreeSet<Vertex>>,
    len: usize,
}

impl Buckets {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bucket(&self, i: usize) -> Option<&BTreeSet<Vertex>> {
        self.map.get(&i)
    }

    pub fn bucket_len(&self, i: usize) -> usize {
        self.map.get(&i).map_or(0, BTreeSet::len)
    }

    /// Nonempty buckets in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BTreeSet<Vertex>)> {
        self.map.iter().map(|(&i, set)| (i, set))
    }

    pub fn members(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.map.values().flat_map(|set| set.iter().copied())
    }

    pub fn contains(&self, x: Vertex) -> bool {
        self.map.values().any(|set| set.contains(&x))
    }

    pub fn highest_nonempty(&self) -> Option<usize> {
        self.map.keys().next_back().copied()
    }

    pub(crate) fn insert(&mut self, i: usize, x: Vertex) -> bool {
        let fresh = self.map.entry(i).or_default().insert(x);
        if fresh {
            self.len += 1;
        }
        fresh
    }

    pub(crate) fn remove(&mut self, i: usize, x: Vertex) -> bool {
        let Some(set) = self.map.get_mut(&i) else {
            return false;
        };
        let found = set.remove(&x);
        if found {
            self.len -= 1;
            if set.is_empty() {
                self.map.remove(&i);
            }
        }
        found
    }
}

/// MIS membership plus the partition `Z_v / A_v / P_v / R_v` of `N⁻(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexState {
    pub(crate) in_mis: bool,
    pub(crate) m_minus: BTreeSet<Vertex>,
    pub(crate) z: BTreeSet<Vertex>,
    pub(crate) a: Buckets,
    pub(crate) p: Buckets,
    pub(crate) r: BTreeSet<Vertex>,
    pub(crate) placement: Placement,
}

impl VertexState {
    pub(crate) fn new_in_mis() -> Self {
        VertexState {
            in_mis: true,
            m_minus: BTreeSet::new(),
            z: BTreeSet::new(),
            a: Buckets::default(),
            p: Buckets::default(),
            r: BTreeSet::new(),
            placement: Placement::Resolved,
        }
    }

    pub fn in_mis(&self) -> bool {
        self.in_mis
    }

    /// In-neighbors currently in the MIS.
    pub fn m_minus(&self) -> &BTreeSet<Vertex> {
        &self.m_minus
    }

    pub fn resolved_set(&self) -> &BTreeSet<Vertex> {
        &self.z
    }

    pub fn active(&self) -> &Buckets {
        &self.a
    }

    pub fn passive(&self) -> &Buckets {
        &self.p
    }

    pub fn residual(&self) -> &BTreeSet<Vertex> {
        &self.r
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    /// The vertex whose active set holds this one.
    pub fn owner(&self) -> Option<Vertex> {
        match self.placement {
            Placement::Hosted { host, .. } => Some(host),
            _ => None,
        }
    }

    pub fn bucket_idx(&self) -> Option<usize> {
        match self.placement {
            Placement::Hosted { bucket, .. } => Some(bucket),
            _ => None,
        }
    }
}

fn slot_for(placement: Placement, w: Vertex) -> Option<Slot> {
    match placement {
        Placement::Unplaced => None,
        Placement::Resolved => Some(Slot::Z),
        Placement::Hosted { host, bucket } if host == w => Some(Slot::A(bucket)),
        Placement::Hosted { bucket, .. } => Some(Slot::P(bucket)),
        Placement::Residual => Some(Slot::R),
    }
}

impl Engine {
    fn insert_entry(&mut self, w: Vertex, x: Vertex, slot: Slot) {
        self.counters.elem_ops += 1;
        let st = &mut self.verts[w];
        let fresh = match slot {
            Slot::Z => st.z.insert(x),
            Slot::A(i) => st.a.insert(i, x),
            Slot::P(i) => st.p.insert(i, x),
            Slot::R => st.r.insert(x),
        };
        debug_assert!(fresh, "{x} already in {slot:?} of {w}");
    }

    fn remove_entry(&mut self, w: Vertex, x: Vertex, slot: Slot) {
        self.counters.elem_ops += 1;
        let st = &mut self.verts[w];
        let found = match slot {
            Slot::Z => st.z.remove(&x),
            Slot::A(i) => st.a.remove(i, x),
            Slot::P(i) => st.p.remove(i, x),
            Slot::R => st.r.remove(&x),
        };
        debug_assert!(found, "{x} missing from {slot:?} of {w}");
    }

    pub(crate) fn active_full(&self, v: Vertex) -> bool {
        self.verts[v].a.len() == self.params.s * self.params.b
    }

    /// Index of the lowest bucket of `A_v` holding fewer than `s` vertices.
    pub(crate) fn lowest_nonfull(&self, v: Vertex) -> Option<usize> {
        let a = &self.verts[v].a;
        (1..=self.params.b).find(|&i| a.bucket_len(i) < self.params.s)
    }

    /// Moves `x` to `new`, updating its entry at every out-neighbor. If `x`
    /// leaves a slot in an MIS vertex's active set, that hole is refilled.
    pub(crate) fn set_placement(&mut self, x: Vertex, new: Placement) {
        let old = self.verts[x].placement;
        if old == new {
            return;
        }
        let outs: Vec<Vertex> = self.graph.out_neighbors(x).iter().copied().collect();
        for w in outs {
            if let Some(slot) = slot_for(old, w) {
                self.remove_entry(w, x, slot);
            }
            if let Some(slot) = slot_for(new, w) {
                self.insert_entry(w, x, slot);
            }
        }
        self.verts[x].placement = new;
        self.emit(TraceEvent::Placed { vertex: x, placement: new });
        if let Placement::Hosted { host, .. } = old {
            self.refill(host);
        }
    }

    /// Restores the Full Invariant at `h` after vertices left `A_h`.
    ///
    /// The replacement comes from `R_h` if possible (which ends the chain),
    /// otherwise from the highest nonempty bucket above the hole, `A_h`
    /// before `P_h` at equal index. Pulling from `P_h(j)` leaves a hole in
    /// bucket `j` of another host, so the chain continues there with a
    /// strictly larger bucket index.
    fn refill(&mut self, h: Vertex) {
        if !self.verts[h].in_mis {
            return;
        }
        while let Some(k) = self.lowest_nonfull(h) {
            let st = &self.verts[h];
            let candidate = if let Some(&r) = st.r.first() {
                Some(r)
            } else {
                let ja = st.a.highest_nonempty().filter(|&j| j > k);
                let jp = st.p.highest_nonempty().filter(|&j| j > k);
                match (ja, jp) {
                    (Some(ja), jp) if jp.is_none_or(|jp| ja >= jp) => {
                        st.a.bucket(ja).and_then(|set| set.first().copied())
                    }
                    (_, Some(jp)) => st.p.bucket(jp).and_then(|set| set.first().copied()),
                    _ => None,
                }
            };
            let Some(w) = candidate else {
                break;
            };
            self.set_placement(w, Placement::Hosted { host: h, bucket: k });
        }
    }

    /// Hosts unplaced, unresolved `x` in the lowest non-full bucket of the
    /// MIS out-neighbor with the smallest active set (ties by id), or makes
    /// it residual if every candidate is full or none exists.
    pub(crate) fn assign_unresolved(&mut self, x: Vertex) {
        debug_assert_eq!(self.verts[x].placement, Placement::Unplaced);
        let mut best: Option<(usize, Vertex)> = None;
        for &y in self.graph.out_neighbors(x) {
            self.counters.elem_ops += 1;
            if self.verts[y].in_mis {
                let key = (self.verts[y].a.len(), y);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let target = best
            .map(|(_, y)| y)
            .and_then(|y| self.lowest_nonfull(y).map(|k| (y, k)));
        match target {
            Some((host, bucket)) => self.add_to_active(x, host, bucket),
            None => self.set_placement(x, Placement::Residual),
        }
    }

    /// Brings the placement of `x` in line with its resolved status.
    pub(crate) fn sync(&mut self, x: Vertex) {
        let resolved = self.is_resolved(x);
        match self.verts[x].placement {
            Placement::Resolved if resolved => {}
            _ if resolved => self.set_placement(x, Placement::Resolved),
            Placement::Resolved | Placement::Unplaced => {
                self.set_placement(x, Placement::Unplaced);
                self.assign_unresolved(x);
            }
            Placement::Hosted { host, .. } if !self.verts[host].in_mis => {
                self.set_placement(x, Placement::Unplaced);
                self.assign_unresolved(x);
            }
            Placement::Hosted { .. } | Placement::Residual => {}
        }
    }

    /// Phase-2 repair after `v` left the MIS: fix resolved status around
    /// `v`, then empty `A_v`.
    pub(crate) fn repair_after_removal(&mut self, v: Vertex) {
        self.sync(v);
        let outs: Vec<Vertex> = self.graph.out_neighbors(v).iter().copied().collect();
        for u in outs {
            self.counters.elem_ops += 1;
            self.sync(u);
        }
        let mut members: Vec<Vertex> = self.verts[v].a.members().collect();
        members.sort_unstable();
        for u in members {
            if self.verts[u].owner() == Some(v) {
                self.remove_from_active(u);
                self.sync(u);
            }
        }
        debug_assert!(self.verts[v].in_mis || self.verts[v].a.is_empty());
    }

    /// Phase-2 repair after `v` joined the MIS: everything in
    /// `N⁺(v) ∪ {v}` becomes resolved, then `A_v` is populated bottom-up,
    /// first from `R_v`, then from `P_v` (highest bucket first) as long as a
    /// move strictly lowers the moved vertex's bucket index.
    pub(crate) fn repair_after_addition(&mut self, v: Vertex) {
        self.sync(v);
        let outs: Vec<Vertex> = self.graph.out_neighbors(v).iter().copied().collect();
        for u in outs {
            self.counters.elem_ops += 1;
            self.sync(u);
        }
        self.populate(v);
    }

    fn populate(&mut self, v: Vertex) {
        if !self.verts[v].in_mis {
            return;
        }
        while let Some(k) = self.lowest_nonfull(v) {
            let Some(&r) = self.verts[v].r.first() else {
                break;
            };
            self.set_placement(r, Placement::Hosted { host: v, bucket: k });
        }
        loop {
            let Some(j) = self.verts[v].p.highest_nonempty() else {
                break;
            };
            let Some(k) = self.lowest_nonfull(v) else {
                break;
            };
            if k >= j {
                break;
            }
            let u = *self.verts[v]
                .p
                .bucket(j)
                .and_then(BTreeSet::first)
                .expect("nonempty bucket");
            self.set_placement(u, Placement::Hosted { host: v, bucket: k });
        }
    }

    /// The edge `t -> h` has left the graph: drop `t`'s entry at `h`. If `h`
    /// hosted `t`, `t` ends up unplaced and `h`'s hole is refilled.
    pub(crate) fn detach_entry(&mut self, t: Vertex, h: Vertex) {
        let placement = self.verts[t].placement;
        if let Some(slot) = slot_for(placement, h) {
            self.remove_entry(h, t, slot);
        }
        if self.verts[t].in_mis {
            self.verts[h].m_minus.remove(&t);
        }
        if let Placement::Hosted { host, bucket } = placement {
            if host == h {
                let outs: Vec<Vertex> = self.graph.out_neighbors(t).iter().copied().collect();
                for w in outs {
                    self.remove_entry(w, t, Slot::P(bucket));
                }
                self.verts[t].placement = Placement::Unplaced;
                self.emit(TraceEvent::Placed { vertex: t, placement: Placement::Unplaced });
                self.refill(h);
            }
        }
    }

    /// The edge `u -> v` has just appeared (insertion or flip): give `u` an
    /// entry at `v` and repair around both endpoints.
    pub(crate) fn integrate_edge(&mut self, u: Vertex, v: Vertex) {
        if let Some(slot) = slot_for(self.verts[u].placement, v) {
            self.insert_entry(v, u, slot);
        }
        if self.verts[u].in_mis {
            self.verts[v].m_minus.insert(u);
        }
        self.sync(u);
        if self.verts[v].in_mis {
            let better = match self.verts[u].placement {
                Placement::Hosted { bucket, .. } => {
                    self.lowest_nonfull(v).filter(|&k| k < bucket)
                }
                Placement::Residual => self.lowest_nonfull(v),
                _ => None,
            };
            if let Some(k) = better {
                self.set_placement(u, Placement::Hosted { host: v, bucket: k });
            }
        }
        self.sync(v);
    }

    /// The edge that pointed `a -> b` now points `b -> a`.
    pub(crate) fn integrate_flip(&mut self, a: Vertex, b: Vertex) {
        self.detach_entry(a, b);
        self.integrate_edge(b, a);
    }

    /// Phase-4 repair for the edge now oriented `u -> v`. `flipped` says
    /// whether it previously pointed `v -> u` (as opposed to being new).
    pub(crate) fn handle_flip(&mut self, u: Vertex, v: Vertex, flipped: bool) {
        if flipped {
            self.integrate_flip(v, u);
        } else {
            self.integrate_edge(u, v);
        }
    }

    /// Hosts unresolved `x` in bucket `i` of `host`, which must be the
    /// lowest non-full bucket.
    pub(crate) fn add_to_active(&mut self, x: Vertex, host: Vertex, i: usize) {
        assert!(!self.is_resolved(x), "{x} is resolved");
        assert!(self.verts[host].in_mis, "host {host} not in the MIS");
        assert!(self.graph.out_neighbors(x).contains(&host), "{x} -> {host} missing");
        assert_eq!(self.lowest_nonfull(host), Some(i), "bucket {i} of {host}");
        assert!(self.verts[x].owner().is_none(), "{x} already hosted");
        self.set_placement(x, Placement::Hosted { host, bucket: i });
    }

    /// Takes `x` out of its host's active set, leaving it unplaced, and
    /// refills the hole.
    pub(crate) fn remove_from_active(&mut self, x: Vertex) {
        assert!(self.verts[x].owner().is_some(), "{x} is not hosted");
        self.set_placement(x, Placement::Unplaced);
    }
}
