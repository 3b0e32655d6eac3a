//! Update streams: generators, text format, replay checks.
//!
//! File format: a header line `n=<int> alpha=<int>`, then one line per
//! update, `+ u v` or `- u v`, single spaces, newline-terminated.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::Update;
use crate::Vertex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("op {index}: {msg}")]
    Replay { index: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateStream {
    pub n: usize,
    pub alpha_hint: usize,
    pub ops: Vec<Update>,
}

fn key(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    (u.min(v), u.max(v))
}

impl UpdateStream {
    pub fn parse(text: &str) -> Result<Self, StreamError> {
        let mut lines = text.split('\n').enumerate();
        let err = |line: usize, msg: &str| StreamError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        let (n, alpha_hint) = parse_header(header).ok_or_else(|| {
            err(0, "expected header `n=<int> alpha=<int>`")
        })?;
        let mut ops = Vec::new();
        let mut ended = false;
        for (i, line) in lines {
            if ended {
                return Err(err(i - 1, "blank line inside stream"));
            }
            if line.is_empty() {
                ended = true;
                continue;
            }
            let mut parts = line.split(' ');
            let (Some(sign), Some(a), Some(b), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err(i, "expected `+ u v` or `- u v`"));
            };
            let (Some(u), Some(v)) = (parse_uint(a), parse_uint(b)) else {
                return Err(err(i, "vertex ids must be non-negative integers"));
            };
            if u >= n || v >= n {
                return Err(err(i, &format!("vertex out of range for n={n}")));
            }
            if u == v {
                return Err(err(i, "self-loop"));
            }
            ops.push(match sign {
                "+" => Update::Insert(u, v),
                "-" => Update::Delete(u, v),
                _ => return Err(err(i, "operation must be `+` or `-`")),
            });
        }
        if !ended && !text.is_empty() {
            // Missing final newline.
            return Err(err(text.split('\n').count() - 1, "missing trailing newline"));
        }
        Ok(UpdateStream { n, alpha_hint, ops })
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("n={} alpha={}\n", self.n, self.alpha_hint);
        for op in &self.ops {
            match *op {
                Update::Insert(u, v) => writeln!(out, "+ {u} {v}"),
                Update::Delete(u, v) => writeln!(out, "- {u} {v}"),
            }
            .expect("writing to a String");
        }
        out
    }

    /// Checks that every insertion targets an absent edge and every deletion
    /// a present one.
    pub fn validate(&self) -> Result<(), StreamError> {
        let mut present = BTreeSet::new();
        for (index, op) in self.ops.iter().enumerate() {
            let (ok, what) = match *op {
                Update::Insert(u, v) => (present.insert(key(u, v)), "insert of present edge"),
                Update::Delete(u, v) => (present.remove(&key(u, v)), "delete of absent edge"),
            };
            if !ok {
                return Err(StreamError::Replay {
                    index,
                    msg: what.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Largest `⌈m/(n−1)⌉` over all prefixes, a cheap lower bound on the
    /// arboricity of the densest prefix graph.
    pub fn max_density(&self) -> usize {
        if self.n < 2 {
            return 0;
        }
        let mut m = 0usize;
        let mut best = 0usize;
        for op in &self.ops {
            match op {
                Update::Insert(..) => m += 1,
                Update::Delete(..) => m = m.saturating_sub(1),
            }
            best = best.max(m.div_ceil(self.n - 1));
        }
        best
    }

    pub fn density_ok(&self) -> bool {
        self.max_density() <= self.alpha_hint
    }

    /// Edges present after replaying every op, as sorted pairs.
    pub fn final_edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut present = BTreeSet::new();
        for op in &self.ops {
            match *op {
                Update::Insert(u, v) => present.insert(key(u, v)),
                Update::Delete(u, v) => present.remove(&key(u, v)),
            };
        }
        present.into_iter().collect()
    }
}

fn parse_uint(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("n=")?;
    let (n, alpha) = rest.split_once(" alpha=")?;
    Some((parse_uint(n)?, parse_uint(alpha)?))
}

/// Set with O(1) insert, remove and uniform sampling.
#[derive(Default)]
struct Pool<T: Copy + Eq + std::hash::Hash> {
    items: Vec<T>,
    index: HashMap<T, usize>,
}

impl<T: Copy + Eq + std::hash::Hash> Pool<T> {
    fn insert(&mut self, x: T) {
        if !self.index.contains_key(&x) {
            self.index.insert(x, self.items.len());
            self.items.push(x);
        }
    }

    fn remove(&mut self, x: &T) {
        if let Some(i) = self.index.remove(x) {
            let last = self.items.pop().expect("nonempty");
            if i < self.items.len() {
                self.items[i] = last;
                self.index.insert(last, i);
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Option<T> {
        self.items.choose(rng).copied()
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

/// Random stream over the union of `k` edge-disjoint forests.
///
/// Each op is a deletion of a uniformly random present edge with
/// probability `churn` (an insertion when the graph is empty), otherwise an
/// insertion into a random forest. Acyclicity holds by construction: a
/// seeded random ranking of the vertices is fixed, and within a forest every
/// vertex has at most one parent, of lower rank. When no insertion is found
/// after a bounded number of tries a deletion is emitted instead.
pub fn gen_forest_union(n: usize, k: usize, ops: usize, churn: f64, seed: u64) -> UpdateStream {
    assert!(k >= 1, "need at least one forest");
    assert!((0.0..=1.0).contains(&churn), "churn must be in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    // Per forest: vertices that could still receive a parent.
    let mut orphans: Vec<Pool<Vertex>> = (0..k).map(|_| Pool::default()).collect();
    for pool in &mut orphans {
        for &v in order.iter().skip(1) {
            pool.insert(v);
        }
    }
    // Present edge -> (child, forest).
    let mut owner: HashMap<(Vertex, Vertex), (Vertex, usize)> = HashMap::new();
    let mut present: Pool<(Vertex, Vertex)> = Pool::default();
    let mut out = Vec::with_capacity(ops);

    let delete = |rng: &mut ChaCha8Rng,
                  present: &mut Pool<(Vertex, Vertex)>,
                  owner: &mut HashMap<(Vertex, Vertex), (Vertex, usize)>,
                  orphans: &mut Vec<Pool<Vertex>>,
                  out: &mut Vec<Update>| {
        let e = present.sample(rng).expect("graph nonempty");
        present.remove(&e);
        let (child, forest) = owner.remove(&e).expect("tracked edge");
        orphans[forest].insert(child);
        out.push(Update::Delete(e.0, e.1));
    };

    for _ in 0..ops {
        if n < 2 {
            break;
        }
        if present.len() > 0 && rng.gen_bool(churn) {
            delete(&mut rng, &mut present, &mut owner, &mut orphans, &mut out);
            continue;
        }
        let mut inserted = false;
        for _ in 0..64 {
            let f = rng.gen_range(0..k);
            let Some(child) = orphans[f].sample(&mut rng) else {
                continue;
            };
            let parent = order[rng.gen_range(0..rank[child])];
            let e = key(child, parent);
            if owner.contains_key(&e) {
                continue;
            }
            orphans[f].remove(&child);
            owner.insert(e, (child, f));
            present.insert(e);
            out.push(if rng.gen_bool(0.5) {
                Update::Insert(child, parent)
            } else {
                Update::Insert(parent, child)
            });
            inserted = true;
            break;
        }
        if !inserted && present.len() > 0 {
            delete(&mut rng, &mut present, &mut owner, &mut orphans, &mut out);
        }
    }
    UpdateStream {
        n,
        alpha_hint: k,
        ops: out,
    }
}

/// Insert-only preferential attachment: vertex `t` joins with edges to
/// `min(m, t)` distinct earlier vertices, each chosen with probability
/// proportional to its degree plus one.
pub fn gen_preferential(n: usize, m: usize, seed: u64) -> UpdateStream {
    assert!(m >= 1, "need at least one edge per vertex");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Each vertex once, plus once per incident edge.
    let mut urn: Vec<Vertex> = Vec::new();
    let mut ops = Vec::new();
    for t in 0..n {
        let want = m.min(t);
        let mut chosen: Vec<Vertex> = Vec::with_capacity(want);
        while chosen.len() < want {
            let u = urn[rng.gen_range(0..urn.len())];
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        urn.push(t);
        for u in chosen {
            ops.push(Update::Insert(t, u));
            urn.push(t);
            urn.push(u);
        }
    }
    UpdateStream {
        n,
        alpha_hint: m,
        ops,
    }
}
