//! Auditing from first principles.
//!
//! Nothing here reuses the engine's partition maintenance: adjacency,
//! in-neighborhoods and resolved status are recomputed from the list of
//! oriented edges, and the engine's sets are only read.

use std::collections::BTreeSet;
use std::fmt;

use crate::engine::{Engine, Placement};
use crate::Vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Witness {
    Vertex(Vertex),
    Edge(Vertex, Vertex),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Vertex(v) => write!(f, "{v}"),
            Witness::Edge(u, v) => write!(f, "({u},{v})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub witness: Witness,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: AuditReport) {
        self.violations.extend(other.violations);
    }

    fn push(&mut self, invariant: &'static str, witness: Witness, description: String) {
        self.violations.push(Violation {
            invariant,
            witness,
            description,
        });
    }

    /// Tab-separated `invariant`, `witness`, `description`, one violation
    /// per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            out.push_str(&format!("{}\t{}\t{}\n", v.invariant, v.witness, v.description));
        }
        out
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return writeln!(f, "ok");
        }
        writeln!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  [{}] at {}: {}", v.invariant, v.witness, v.description)?;
        }
        Ok(())
    }
}

/// Independence (every edge inside `mis` is reported) and maximality (every
/// vertex of `0..n` outside `mis` without a neighbor in it is reported).
pub fn check_mis(n: usize, edges: &[(Vertex, Vertex)], mis: &BTreeSet<Vertex>) -> AuditReport {
    let mut report = AuditReport::default();
    let mut dominated = vec![false; n];
    for &(u, v) in edges {
        let (iu, iv) = (mis.contains(&u), mis.contains(&v));
        if iu && iv {
            report.push(
                "independence",
                Witness::Edge(u.min(v), u.max(v)),
                "both endpoints in the MIS".into(),
            );
        }
        if iu {
            dominated[v] = true;
        }
        if iv {
            dominated[u] = true;
        }
    }
    for x in 0..n {
        if !mis.contains(&x) && !dominated[x] {
            report.push(
                "maximality",
                Witness::Vertex(x),
                "no neighbor in the MIS".into(),
            );
        }
    }
    for &x in mis.range(n..) {
        report.push("independence", Witness::Vertex(x), "vertex out of range".into());
    }
    report
}

/// Checks the MIS, the out-degree cap, the partition invariants, `m_minus`
/// and the placement bookkeeping of `engine`.
pub fn check_invariants(engine: &Engine) -> AuditReport {
    let n = engine.n();
    let params = *engine.params();
    let (s, b) = (params.s, params.b);
    let edges = engine.graph().oriented_edges();
    let mut outs: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); n];
    let mut ins: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); n];
    for &(u, v) in &edges {
        outs[u].insert(v);
        ins[v].insert(u);
    }
    let mis: BTreeSet<Vertex> = (0..n).filter(|&v| engine.vertex(v).in_mis()).collect();
    let resolved: Vec<bool> = (0..n)
        .map(|v| mis.contains(&v) || ins[v].iter().any(|u| mis.contains(u)))
        .collect();

    let mut report = check_mis(n, &edges, &mis);

    for v in 0..n {
        if outs[v].len() > params.d_max() {
            report.push(
                "out-degree cap",
                Witness::Vertex(v),
                format!("out-degree {} > {}", outs[v].len(), params.d_max()),
            );
        }
        let st = engine.vertex(v);
        let expected_m: BTreeSet<Vertex> = ins[v].intersection(&mis).copied().collect();
        if st.m_minus() != &expected_m {
            report.push(
                "m_minus",
                Witness::Vertex(v),
                format!("stored {:?}, expected {:?}", st.m_minus(), expected_m),
            );
        }
    }

    // Resolved: a resolved vertex sits in Z of each out-neighbor.
    for v in 0..n {
        if !resolved[v] {
            continue;
        }
        for &u in &outs[v] {
            if !engine.vertex(u).resolved_set().contains(&v) {
                report.push("resolved", Witness::Edge(v, u), format!("{v} missing from Z_{u}"));
            }
        }
    }

    // Orientation: the four sets partition N⁻(v).
    for v in 0..n {
        let st = engine.vertex(v);
        let mut seen: BTreeSet<Vertex> = BTreeSet::new();
        let mut total = 0;
        let parts = st
            .resolved_set()
            .iter()
            .chain(st.residual())
            .copied()
            .chain(st.active().members())
            .chain(st.passive().members());
        for x in parts {
            total += 1;
            seen.insert(x);
        }
        if seen != ins[v] || total != ins[v].len() {
            report.push(
                "orientation",
                Witness::Vertex(v),
                format!(
                    "Z/A/P/R hold {total} entries over {:?}, N⁻ is {:?}",
                    seen, ins[v]
                ),
            );
        }
    }

    // Empty active set.
    for v in 0..n {
        if !mis.contains(&v) && !engine.vertex(v).active().is_empty() {
            report.push(
                "empty active set",
                Witness::Vertex(v),
                format!("{v} not in the MIS but A_{v} has {}", engine.vertex(v).active().len()),
            );
        }
    }

    // Consistency, including the placement bookkeeping.
    let mut hosts: Vec<Vec<(Vertex, usize)>> = vec![Vec::new(); n];
    for h in 0..n {
        for (i, set) in engine.vertex(h).active().iter() {
            for &x in set {
                if x < n {
                    hosts[x].push((h, i));
                }
            }
        }
    }
    for x in 0..n {
        let placement = engine.vertex(x).placement();
        if resolved[x] {
            if !hosts[x].is_empty() {
                report.push(
                    "consistency",
                    Witness::Vertex(x),
                    format!("resolved but in active sets {:?}", hosts[x]),
                );
            }
            if placement != Placement::Resolved {
                report.push(
                    "consistency",
                    Witness::Vertex(x),
                    format!("resolved but marked {placement:?}"),
                );
            }
            continue;
        }
        match hosts[x].as_slice() {
            [] => {
                if placement != Placement::Residual {
                    report.push(
                        "consistency",
                        Witness::Vertex(x),
                        format!("in no active set but marked {placement:?}"),
                    );
                }
                for &w in &outs[x] {
                    if !engine.vertex(w).residual().contains(&x) {
                        report.push(
                            "consistency",
                            Witness::Edge(x, w),
                            format!("unhosted {x} missing from R_{w}"),
                        );
                    }
                }
            }
            &[(h, i)] => {
                if placement != (Placement::Hosted { host: h, bucket: i }) {
                    report.push(
                        "consistency",
                        Witness::Vertex(x),
                        format!("in A_{h}({i}) but marked {placement:?}"),
                    );
                }
                for &w in &outs[x] {
                    if w != h
                        && !engine
                            .vertex(w)
                            .passive()
                            .bucket(i)
                            .is_some_and(|set| set.contains(&x))
                    {
                        report.push(
                            "consistency",
                            Witness::Edge(x, w),
                            format!("{x} hosted at bucket {i} but missing from P_{w}({i})"),
                        );
                    }
                }
            }
            many => report.push(
                "consistency",
                Witness::Vertex(x),
                format!("in several active sets {many:?}"),
            ),
        }
    }

    // Full.
    for v in 0..n {
        let a = engine.vertex(v).active();
        for (i, set) in a.iter() {
            if i == 0 || i > b {
                report.push("full", Witness::Vertex(v), format!("bucket index {i} outside 1..={b}"));
            }
            if set.len() > s {
                report.push(
                    "full",
                    Witness::Vertex(v),
                    format!("A_{v}({i}) holds {} > {s}", set.len()),
                );
            }
        }
        for i in 1..b {
            if a.bucket_len(i) < s && a.bucket_len(i + 1) > 0 {
                report.push(
                    "full",
                    Witness::Vertex(v),
                    format!("A_{v}({i}) not full but A_{v}({}) nonempty", i + 1),
                );
            }
        }
        if mis.contains(&v) && a.len() < s * b && !engine.vertex(v).residual().is_empty() {
            report.push(
                "full",
                Witness::Vertex(v),
                format!("A_{v} not full but R_{v} nonempty"),
            );
        }
    }

    // Main.
    for x in 0..n {
        if let &[(_, i)] = hosts[x].as_slice() {
            if i <= 1 {
                continue;
            }
            for &u in outs[x].iter().filter(|u| mis.contains(u)) {
                if engine.vertex(u).active().bucket_len(i - 1) < s {
                    report.push(
                        "main",
                        Witness::Edge(x, u),
                        format!("{x} in bucket {i} but A_{u}({}) not full", i - 1),
                    );
                }
            }
        }
    }

    report
}

fn adjacency_matrix(n: usize, edges: &[(Vertex, Vertex)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    adj
}

/// Straight `O(n²)` validity check on an adjacency matrix.
pub fn brute_force_maximality_oracle(
    n: usize,
    edges: &[(Vertex, Vertex)],
    mis: &BTreeSet<Vertex>,
) -> bool {
    if mis.iter().any(|&v| v >= n) {
        return false;
    }
    let adj = adjacency_matrix(n, edges);
    for &u in mis {
        for &v in mis {
            if adj[u][v] {
                return false;
            }
        }
    }
    (0..n).all(|x| mis.contains(&x) || mis.iter().any(|&m| adj[x][m]))
}

/// Every maximal independent set of a graph on at most 25 vertices, as
/// bitmasks, by Bron–Kerbosch on the complement.
pub fn maximal_independent_sets(n: usize, edges: &[(Vertex, Vertex)]) -> Vec<u32> {
    assert!(n <= 25, "exhaustive enumeration limited to 25 vertices");
    let mut nbr = vec![0u32; n];
    for &(u, v) in edges {
        nbr[u] |= 1 << v;
        nbr[v] |= 1 << u;
    }
    let mut out = Vec::new();
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    enumerate(&nbr, 0, all, 0, &mut out);
    out
}

fn enumerate(nbr: &[u32], r: u32, mut p: u32, mut x: u32, out: &mut Vec<u32>) {
    if p == 0 {
        if x == 0 {
            out.push(r);
        }
        return;
    }
    while p != 0 {
        let v = p.trailing_zeros() as usize;
        let closed = nbr[v] | (1 << v);
        enumerate(nbr, r | (1 << v), p & !closed, x & !closed, out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}

/// Mask-to-set conversion for [`maximal_independent_sets`].
pub fn mask_to_set(mask: u32) -> BTreeSet<Vertex> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}
