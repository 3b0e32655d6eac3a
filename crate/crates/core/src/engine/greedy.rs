use std::collections::{BTreeSet, HashMap};

use crate::Vertex;

/// Maximal independent set of the graph induced by `vertices`, built by
/// peeling: repeatedly take the lowest-id vertex of degree below `2α`, add
/// it, and delete it with its neighbors. If no such vertex exists (the
/// induced graph is denser than `α` allows) the minimum-degree vertex is
/// taken instead, so the result is always maximal independent.
///
/// When the induced graph has arboricity at most `α` the result has at
/// least `⌈n'/(2α)⌉` vertices. Edges with an endpoint outside `vertices`
/// are ignored.
pub fn greedy_induced_mis(
    vertices: &BTreeSet<Vertex>,
    edges: &[(Vertex, Vertex)],
    alpha: usize,
) -> BTreeSet<Vertex> {
    let ids: Vec<Vertex> = vertices.iter().copied().collect();
    let index: HashMap<Vertex, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
    for &(a, b) in edges {
        if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let threshold = 2 * alpha;
    let mut degree: Vec<usize> = adj.iter().map(BTreeSet::len).collect();
    let mut alive = vec![true; ids.len()];
    // Indices follow id order, so the first element of `low` is the lowest id.
    let mut low: BTreeSet<usize> = BTreeSet::new();
    let mut high: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..ids.len() {
        if degree[i] < threshold {
            low.insert(i);
        } else {
            high.insert((degree[i], i));
        }
    }

    let mut out = BTreeSet::new();
    loop {
        let w = match low.first() {
            Some(&i) => i,
            None => match high.first() {
                Some(&(_, i)) => i,
                None => break,
            },
        };
        out.insert(ids[w]);
        let mut doomed = vec![w];
        doomed.extend(adj[w].iter().copied().filter(|&j| alive[j]));
        for &x in &doomed {
            alive[x] = false;
            low.remove(&x);
            high.remove(&(degree[x], x));
        }
        for &x in &doomed {
            for &y in &adj[x] {
                if !alive[y] {
                    continue;
                }
                let d = degree[y];
                degree[y] = d - 1;
                if d >= threshold {
                    high.remove(&(d, y));
                    if d - 1 < threshold {
                        low.insert(y);
                    } else {
                        high.insert((d - 1, y));
                    }
                }
            }
        }
    }
    out
}
