//! Insertion between two MIS vertices: pick a batch `S⁺` of unresolved
//! candidates and the set `S⁻` of MIS vertices they touch (Stage 1), then
//! swap a large independent subset of `S⁺` in for `S⁻` (Stage 2).

use std::collections::{BTreeSet, VecDeque};

use super::{greedy_induced_mis, ChangeLog, Engine, LemmaViolation};
use crate::Vertex;

/// Transient state of the `S⁺`/`S⁻` construction for one insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StagePlan {
    pub s_plus: BTreeSet<Vertex>,
    pub s_minus: BTreeSet<Vertex>,
    pub processed: BTreeSet<Vertex>,
    /// Unprocessed members of `s_minus` whose active set is full.
    pub unprocessed_full: BTreeSet<Vertex>,
    pub queue: VecDeque<Vertex>,
    /// 0 if the construction never started, else the current epoch.
    pub epoch: usize,
}

impl StagePlan {
    /// Plan with `S⁻ = {v}` and nothing processed.
    pub fn new(v: Vertex) -> Self {
        StagePlan {
            s_minus: BTreeSet::from([v]),
            ..StagePlan::default()
        }
    }

    /// Processed members of `S⁻` (`p_j` at an epoch boundary).
    pub fn processed_count(&self) -> usize {
        self.processed.len()
    }

    /// Unprocessed members of `S⁻` (`u_j` at an epoch boundary).
    pub fn unprocessed_count(&self) -> usize {
        self.s_minus.len() - self.processed.len()
    }

    /// The stopping rule `|S⁺| ≥ 4α|S⁻|`.
    pub fn large_enough(&self, alpha: usize) -> bool {
        self.s_plus.len() >= 4 * alpha * self.s_minus.len()
    }
}

impl Engine {
    /// Stage 1, started at `v` whose active set is full.
    pub(crate) fn build_s_sets(&mut self, v: Vertex) -> StagePlan {
        let alpha = self.params.alpha;
        let mut plan = StagePlan::new(v);
        plan.epoch = 1;
        self.process_vertex(v, &mut plan);
        while !plan.large_enough(alpha) {
            let next = loop {
                match plan.queue.pop_front() {
                    Some(w) if plan.processed.contains(&w) => continue,
                    other => break other,
                }
            };
            let w = match next {
                Some(w) => w,
                None => {
                    let batch: Vec<Vertex> =
                        plan.s_minus.difference(&plan.processed).copied().collect();
                    if batch.is_empty() {
                        self.report.violations.push(LemmaViolation::EmptyBatch);
                        break;
                    }
                    plan.epoch += 1;
                    if plan.epoch > self.params.b {
                        self.report.violations.push(LemmaViolation::EpochOverflow {
                            epoch: plan.epoch,
                            b: self.params.b,
                        });
                        break;
                    }
                    plan.queue.extend(batch);
                    continue;
                }
            };
            self.process_vertex(w, &mut plan);
        }
        if plan.s_minus.len() > 1 && !plan.large_enough(alpha) {
            self.report.violations.push(LemmaViolation::StageOneBound {
                s_plus: plan.s_plus.len(),
                s_minus: plan.s_minus.len(),
            });
        }
        plan
    }

    /// Processes `w`, then every member of `S⁻` with a full active set that
    /// is still unprocessed, lowest id first.
    pub(crate) fn process_vertex(&mut self, w: Vertex, plan: &mut StagePlan) {
        self.process_one(w, plan);
        while let Some(&x) = plan.unprocessed_full.first() {
            self.process_one(x, plan);
        }
    }

    fn process_one(&mut self, w: Vertex, plan: &mut StagePlan) {
        if !plan.processed.insert(w) {
            return;
        }
        plan.unprocessed_full.remove(&w);
        let (s, b) = (self.params.s, self.params.b);
        let st = &self.verts[w];
        let mut batch: Vec<Vertex> = Vec::new();
        if self.active_full(w) {
            batch.extend(st.a.bucket(b).into_iter().flatten());
            batch.extend(st.r.iter());
        } else if let Some(i) = (1..=b).rev().find(|&i| st.a.bucket_len(i) == s) {
            batch.extend(st.a.bucket(i).into_iter().flatten());
            batch.extend(st.a.bucket(i + 1).into_iter().flatten());
        } else {
            batch.extend(st.a.members());
            self.report
                .violations
                .push(LemmaViolation::NoFullBucket { vertex: w });
        }
        for x in batch {
            self.counters.elem_ops += 1;
            if !plan.s_plus.insert(x) {
                continue;
            }
            let outs: Vec<Vertex> = self.graph.out_neighbors(x).iter().copied().collect();
            for y in outs {
                self.counters.elem_ops += 1;
                if self.verts[y].in_mis && plan.s_minus.insert(y) && self.active_full(y) {
                    plan.unprocessed_full.insert(y);
                }
            }
        }
    }

    /// Stage 2 for the insertion of `{u, v}`.
    pub(crate) fn commit_s_sets(&mut self, u: Vertex, v: Vertex, plan: &StagePlan) -> ChangeLog {
        let mut log = ChangeLog::default();

        let mut induced = Vec::new();
        for &x in &plan.s_plus {
            for &y in self.graph.out_neighbors(x) {
                self.counters.elem_ops += 1;
                if plan.s_plus.contains(&y) {
                    induced.push((x, y));
                }
            }
        }
        let m_prime = greedy_induced_mis(&plan.s_plus, &induced, self.params.alpha);
        self.counters.elem_ops += plan.s_plus.len() as u64;
        for &w in &m_prime {
            self.set_mis(w, true, &mut log);
        }

        let mut removed = Vec::new();
        for &w in &m_prime {
            let outs: Vec<Vertex> = self.graph.out_neighbors(w).iter().copied().collect();
            for y in outs {
                if self.verts[y].in_mis {
                    self.set_mis(y, false, &mut log);
                    removed.push(y);
                }
            }
        }
        if self.verts[u].in_mis && self.verts[v].in_mis {
            self.set_mis(v, false, &mut log);
            removed.push(v);
        }

        for &w in &removed {
            let st = &self.verts[w];
            let mut candidates: BTreeSet<Vertex> = self.graph.out_neighbors(w).clone();
            candidates.extend(st.a.members());
            // Normally empty: every unprocessed member of S⁻ has a non-full
            // active set. Only reachable when a Stage-1 guarantee failed.
            if !plan.processed.contains(&w) {
                candidates.extend(st.r.iter().copied());
            }
            for x in candidates {
                self.counters.elem_ops += 1;
                if !self.verts[x].in_mis && !self.has_mis_neighbor(x) {
                    self.set_mis(x, true, &mut log);
                }
            }
        }

        self.check_commit(plan, &log);
        log
    }

    fn check_commit(&mut self, plan: &StagePlan, log: &ChangeLog) {
        let added: BTreeSet<Vertex> = log.added().collect();
        let removed: BTreeSet<Vertex> = log.removed().collect();
        let required = plan.s_plus.len().div_ceil(2 * self.params.alpha);
        let mut violations = Vec::new();
        if added.len() < required {
            violations.push(LemmaViolation::TooFewAdditions {
                added: added.len(),
                required,
            });
        }
        if removed.len() > plan.s_minus.len() {
            violations.push(LemmaViolation::TooManyRemovals {
                removed: removed.len(),
                s_minus: plan.s_minus.len(),
            });
        }
        for &x in removed.difference(&plan.s_minus) {
            violations.push(LemmaViolation::RemovedOutsideSMinus { vertex: x });
        }
        for &x in added.intersection(&removed) {
            violations.push(LemmaViolation::AddedAndRemoved { vertex: x });
        }
        if self.strict {
            let mut around: BTreeSet<Vertex> = BTreeSet::new();
            for &x in added.union(&removed) {
                around.insert(x);
                around.extend(self.graph.out_neighbors(x).iter().copied());
                around.extend(self.graph.in_neighbors(x).iter().copied());
            }
            for x in around {
                if !self.locally_valid(x) {
                    violations.push(LemmaViolation::CommitNotMaximalIndependent { vertex: x });
                }
            }
        }
        self.report.violations.extend(violations);
    }

    /// Independence and domination at `x`, counting the edge being inserted.
    fn locally_valid(&self, x: Vertex) -> bool {
        let mut neighbors: Vec<Vertex> = self
            .graph
            .out_neighbors(x)
            .iter()
            .chain(self.graph.in_neighbors(x))
            .copied()
            .collect();
        if let Some((a, b)) = self.pending {
            if x == a {
                neighbors.push(b);
            } else if x == b {
                neighbors.push(a);
            }
        }
        let mis_neighbor = neighbors.iter().any(|&y| self.verts[y].in_mis);
        if self.verts[x].in_mis {
            !mis_neighbor
        } else {
            mis_neighbor
        }
    }
}
