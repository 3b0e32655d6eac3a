use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use proptest::prelude::*;

use super::*;
use crate::streams::gen_forest_union;
use crate::verify::{brute_force_maximality_oracle, check_invariants, mask_to_set, maximal_independent_sets};

fn set(v: &[Vertex]) -> BTreeSet<Vertex> {
    v.iter().copied().collect()
}

fn assert_clean(e: &Engine) {
    let r = check_invariants(e);
    assert!(r.ok(), "{r}");
}

/// Hosting entries that fill `host`'s buckets in order, `s` per bucket,
/// starting at bucket `first`.
fn fill(host: Vertex, members: impl IntoIterator<Item = Vertex>, s: usize, first: usize) -> Vec<(Vertex, (Vertex, usize))> {
    members
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (host, first + i / s)))
        .collect()
}

fn fixture(
    n: usize,
    alpha: usize,
    edges: &[(Vertex, Vertex)],
    mis: &[Vertex],
    hosted: Vec<(Vertex, (Vertex, usize))>,
) -> Engine {
    let params = Params::new(n, alpha).unwrap();
    let hosted: BTreeMap<_, _> = hosted.into_iter().collect();
    let e = Engine::from_state(params, edges, &set(mis), &hosted).unwrap();
    assert_clean(&e);
    e
}

fn all_but(n: usize, skip: &[Vertex]) -> Vec<Vertex> {
    (0..n).filter(|v| !skip.contains(v)).collect()
}

#[test]
fn params() {
    let p = Params::new(64, 1).unwrap();
    assert_eq!((p.s, p.b), (8, 7));
    assert_eq!(Params::new(65, 2).unwrap().b, 8);
    assert_eq!(Params::new(1, 1).unwrap().b, 1);
    assert_eq!(Params::new(2, 1).unwrap().b, 2);
    assert_eq!(Params::new(0, 1), Err(EngineError::NoVertices));
    assert_eq!(Params::new(3, 0), Err(EngineError::ZeroAlpha));
    assert_eq!(p.d_max(), 4);
}

#[test]
fn fresh_engines() {
    let e = Engine::with_alpha(4, 1).unwrap();
    assert_eq!(e.mis_size(), 4);
    assert_clean(&e);
    for v in 0..4 {
        let st = e.vertex(v);
        assert!(st.resolved_set().is_empty() && st.active().is_empty() && st.residual().is_empty());
    }
    assert_eq!(Engine::with_alpha(1, 1).unwrap().mis(), set(&[0]));
    assert!(Engine::with_alpha(0, 1).is_err());
}

#[test]
fn first_insert_then_delete() {
    let mut e = Engine::with_alpha(4, 1).unwrap();
    let log = e.insert(0, 1).unwrap();
    assert_eq!(log.events, vec![(1, MisChange::Removed)]);
    assert_eq!(e.mis(), set(&[0, 2, 3]));
    assert_eq!(e.vertex(1).resolved_set(), &set(&[0]));
    assert_clean(&e);
    let log = e.delete(0, 1).unwrap();
    assert_eq!(log.events, vec![(1, MisChange::Added)]);
    assert_eq!(e.mis(), set(&[0, 1, 2, 3]));
    assert_clean(&e);
}

#[test]
fn insert_touching_non_member() {
    let mut e = Engine::with_alpha(3, 1).unwrap();
    e.insert(0, 1).unwrap();
    assert!(e.insert(1, 2).unwrap().is_empty());
    assert_eq!(e.mis(), set(&[0, 2]));
    assert!(brute_force_maximality_oracle(3, &e.graph().edges(), &e.mis()));
}

#[test]
fn delete_keeps_vertex_resolved_elsewhere() {
    let mut e = Engine::with_alpha(4, 1).unwrap();
    e.insert(0, 1).unwrap();
    e.insert(2, 1).unwrap();
    assert!(e.delete(0, 1).unwrap().is_empty());
    assert!(!e.is_in_mis(1));
    assert_clean(&e);
}

#[test]
fn delete_between_non_members() {
    let mut e = Engine::with_alpha(4, 1).unwrap();
    e.insert(0, 1).unwrap();
    e.insert(2, 3).unwrap();
    assert!(e.insert(1, 3).unwrap().is_empty());
    assert!(e.delete(1, 3).unwrap().is_empty());
    assert_eq!(e.mis(), set(&[0, 2]));
}

#[test]
fn delete_readds_unresolved_endpoint() {
    // 1 is dominated only through the deleted edge.
    let mut e = Engine::with_alpha(5, 1).unwrap();
    e.insert(0, 1).unwrap();
    e.insert(1, 2).unwrap();
    let log = e.delete(0, 1).unwrap();
    assert!(log.is_empty(), "2 still dominates 1");
    e.delete(1, 2).unwrap();
    assert!(e.is_in_mis(1));
    assert_clean(&e);
}

#[test]
fn rejects_bad_updates() {
    let mut e = Engine::with_alpha(3, 1).unwrap();
    assert!(matches!(e.insert(0, 0), Err(EngineError::Orientation(_))));
    assert!(matches!(e.insert(0, 3), Err(EngineError::Orientation(_))));
    assert!(matches!(e.delete(0, 1), Err(EngineError::Orientation(_))));
    e.insert(0, 1).unwrap();
    assert!(matches!(e.insert(1, 0), Err(EngineError::Orientation(_))));
    assert_eq!(e.counters().updates, 1);
}

/// v = 0 and u = 1 in the MIS, A_0 full (2..=57), R_0 = {58, 59}.
fn full_host_fixture() -> Engine {
    let n = 64;
    let edges: Vec<_> = (2..60).map(|x| (x, 0)).collect();
    let hosted = fill(0, 2..58, 8, 1);
    fixture(n, 1, &edges, &[&[0, 1][..], &(60..64).collect::<Vec<_>>()].concat(), hosted)
}

#[test]
fn full_host_fixture_shape() {
    let e = full_host_fixture();
    assert!(e.active_full(0));
    assert_eq!(e.vertex(0).residual(), &set(&[58, 59]));
    assert_eq!(e.vertex(0).active().bucket(7).unwrap(), &(50..58).collect());
}

#[test]
fn stage_one_single_process() {
    let mut e = full_host_fixture();
    let log = e.insert(1, 0).unwrap();
    let r = e.last_report().clone();
    // A_0(7) ∪ R_0 = s + 2 vertices, S⁻ = {0}, 10 ≥ 4α.
    assert_eq!((r.s_plus, r.s_minus, r.epochs, r.processed), (10, 1, 1, 1));
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    let first: Vec<_> = log.events.iter().take(11).copied().collect();
    let mut expected: Vec<_> = (50..60).map(|x| (x, MisChange::Added)).collect();
    expected.push((0, MisChange::Removed));
    assert_eq!(first, expected);
    // The rest of A_0 had no other MIS neighbor.
    assert_eq!(log.added().count(), 58);
    assert_eq!(e.mis(), set(&all_but(64, &[0])));
    assert_clean(&e);
}

#[test]
fn stage_one_direct() {
    let mut e = full_host_fixture();
    let plan = e.build_s_sets(0);
    assert_eq!(plan.s_plus, (50..60).collect());
    assert_eq!(plan.s_minus, set(&[0]));
    assert_eq!(plan.epoch, 1);
    assert!(plan.queue.is_empty());
    assert!(plan.large_enough(1));
}

#[test]
fn stage_one_skipped_when_active_set_not_full() {
    // 0 hosts 2, 3, 4; inserting {1, 0} removes 0 and rescues its hosted set.
    let edges = [(2, 0), (3, 0), (4, 0)];
    let mut e = fixture(6, 1, &edges, &[0, 1, 5], fill(0, [2, 3, 4], 8, 1));
    let log = e.insert(1, 0).unwrap();
    assert_eq!(e.last_report().s_plus, 0);
    assert_eq!(e.last_report().epochs, 0);
    assert_eq!(
        log.events,
        vec![
            (0, MisChange::Removed),
            (2, MisChange::Added),
            (3, MisChange::Added),
            (4, MisChange::Added)
        ]
    );
    assert_clean(&e);
}

#[test]
fn process_takes_top_full_bucket_and_next() {
    // A_0(1) full, A_0(2) half full.
    let edges: Vec<_> = (2..14).map(|x| (x, 0)).collect();
    let mis = [&[0, 1][..], &(14..64).collect::<Vec<_>>()].concat();
    let mut e = fixture(64, 1, &edges, &mis, fill(0, 2..14, 8, 1));
    let mut plan = StagePlan::new(0);
    e.process_vertex(0, &mut plan);
    assert_eq!(plan.s_plus, (2..14).collect());
    assert_eq!(plan.processed, set(&[0]));
    assert!(e.last_report().violations.is_empty());
}

#[test]
fn process_without_full_bucket_is_flagged() {
    let edges = [(2, 0), (3, 0)];
    let mut e = fixture(8, 1, &edges, &[0, 1, 4, 5, 6, 7], fill(0, [2, 3], 8, 1));
    let mut plan = StagePlan::new(0);
    e.process_vertex(0, &mut plan);
    assert_eq!(plan.s_plus, set(&[2, 3]));
    assert_eq!(
        e.last_report().violations,
        vec![LemmaViolation::NoFullBucket { vertex: 0 }]
    );
}

#[test]
fn recursive_processing_within_one_call() {
    // n = 256: s = 8, b = 9, a full active set holds 72.
    // v = 0 hosts 2..74, y = 1 hosts 74..146; vertex 66 (bucket 9 of v)
    // also points to y.
    let n = 256;
    let mut edges: Vec<_> = (2..74).map(|x| (x, 0)).collect();
    edges.extend((74..146).map(|x| (x, 1)));
    edges.push((66, 1));
    let mut hosted = fill(0, 2..74, 8, 1);
    hosted.extend(fill(1, 74..146, 8, 1));
    let others: Vec<_> = (146..n).collect();
    let mis = [&[0, 1][..], &others].concat();
    let mut e = fixture(n, 1, &edges, &mis, hosted);
    let u = 146;
    e.insert(u, 0).unwrap();
    let r = e.last_report().clone();
    assert_eq!((r.s_plus, r.s_minus, r.epochs, r.processed), (16, 2, 1, 2));
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert!(!e.is_in_mis(0) && !e.is_in_mis(1));
    assert_clean(&e);
}

/// Two epochs: the first Process pulls y1, y2 into S⁻ without reaching the
/// threshold; the batch {y1, y2} is then processed, pulling in z1 and z2.
fn two_epoch_fixture() -> (Engine, [Vertex; 5]) {
    // n = 512: s = 8, b = 10, full = 80.
    let n = 512;
    let (v, u, y1, y2, z1, z2) = (0, 1, 2, 3, 4, 5);
    let mut next = 6;
    let mut take = |k: usize| {
        let r: Vec<Vertex> = (next..next + k).collect();
        next += k;
        r
    };
    let a_v = take(80);
    let a_y1 = take(72);
    let a_y2 = take(72);
    let a_z1 = take(64);
    let a_z2 = take(64);
    let mut edges = Vec::new();
    let mut hosted = Vec::new();
    for (host, members) in [(v, &a_v), (y1, &a_y1), (y2, &a_y2), (z1, &a_z1), (z2, &a_z2)] {
        edges.extend(members.iter().map(|&x| (x, host)));
        hosted.extend(fill(host, members.iter().copied(), 8, 1));
    }
    // Bucket 10 of v: four point to y1, four to y2.
    for (i, &x) in a_v[72..].iter().enumerate() {
        edges.push((x, if i < 4 { y1 } else { y2 }));
    }
    // Bucket 9 of y1: four point to z1, four to z2.
    for (i, &x) in a_y1[64..].iter().enumerate() {
        edges.push((x, if i < 4 { z1 } else { z2 }));
    }
    let rest: Vec<_> = (next..n).collect();
    let mis = [&[v, u, y1, y2, z1, z2][..], &rest].concat();
    (fixture(n, 1, &edges, &mis, hosted), [v, y1, y2, z1, z2])
}

#[test]
fn stage_one_two_epochs() {
    let (mut e, [v, y1, y2, ..]) = two_epoch_fixture();
    let plan = e.build_s_sets(v);
    assert_eq!(plan.epoch, 2);
    assert_eq!(plan.processed, set(&[v, y1, y2]));
    assert_eq!(plan.s_plus.len(), 24);
    assert_eq!(plan.s_minus.len(), 5);
    assert!(plan.large_enough(1));
    assert!(e.last_report().violations.is_empty(), "{:?}", e.last_report().violations);
}

#[test]
fn two_epoch_insert_commits() {
    let (mut e, hubs) = two_epoch_fixture();
    let before = e.mis_size();
    let log = e.insert(1, 0).unwrap();
    let r = e.last_report().clone();
    assert_eq!((r.s_plus, r.s_minus, r.epochs, r.processed), (24, 5, 2, 3));
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    let removed: BTreeSet<_> = log.removed().collect();
    assert_eq!(removed, hubs.iter().copied().collect());
    assert!(log.added().count() >= 24);
    assert!(e.mis_size() > before);
    assert_clean(&e);
}

#[test]
fn commit_on_star_keeps_center_out() {
    // A_0(7) = 50..58 where 51..58 point at 50; R_0 = {58, 59}.
    let n = 64;
    let mut edges: Vec<_> = (2..60).map(|x| (x, 0)).collect();
    edges.extend((51..55).map(|x| (x, 50)));
    let mis = [&[0, 1][..], &(60..64).collect::<Vec<_>>()].concat();
    let mut e = fixture(n, 1, &edges, &mis, fill(0, 2..58, 8, 1));
    e.insert(1, 0).unwrap();
    assert!(!e.is_in_mis(50));
    for x in 51..60 {
        assert!(e.is_in_mis(x), "{x}");
    }
    assert!(e.last_report().violations.is_empty());
    assert_clean(&e);
}

#[test]
fn assign_prefers_smallest_active_set() {
    // Vertex 20 points at 0 (|A| = 3) and 1 (|A| = 5 without 20).
    let mut edges: Vec<_> = (2..5).map(|x| (x, 0)).collect();
    edges.extend((5..10).map(|x| (x, 1)));
    edges.extend([(20, 0), (20, 1)]);
    let mut hosted = fill(0, 2..5, 8, 1);
    hosted.extend(fill(1, 5..10, 8, 1));
    hosted.push((20, (1, 1)));
    let mis = [&[0, 1][..], &(10..20).collect::<Vec<_>>(), &(21..32).collect::<Vec<_>>()].concat();
    let mut e = fixture(32, 1, &edges, &mis, hosted);
    e.set_placement(20, Placement::Unplaced);
    e.assign_unresolved(20);
    assert_eq!(e.vertex(20).placement(), Placement::Hosted { host: 0, bucket: 1 });
    assert!(e.vertex(1).passive().bucket(1).unwrap().contains(&20));
    assert_clean(&e);
}

#[test]
fn assign_to_residual_when_all_full() {
    let n = 64;
    let mut edges: Vec<_> = (2..58).map(|x| (x, 0)).collect();
    edges.push((60, 0));
    let mis = [&[0, 1][..], &(58..60).collect::<Vec<_>>(), &(61..64).collect::<Vec<_>>()].concat();
    let mut e = fixture(n, 1, &edges, &mis, fill(0, 2..58, 8, 1));
    e.set_placement(60, Placement::Unplaced);
    e.assign_unresolved(60);
    assert_eq!(e.vertex(60).placement(), Placement::Residual);
    assert!(e.vertex(0).residual().contains(&60));
}

#[test]
fn assign_without_out_neighbors() {
    let mut e = fixture(3, 1, &[], &[0, 1, 2], vec![]);
    e.vertex_mut(2).in_mis = false;
    e.set_placement(2, Placement::Unplaced);
    e.assign_unresolved(2);
    assert_eq!(e.vertex(2).placement(), Placement::Residual);
}

#[test]
fn refill_from_next_bucket() {
    // A_0(1) full (2..10), A_0(2) = {10, 11, 12}.
    let edges: Vec<_> = (2..13).map(|x| (x, 0)).collect();
    let mut e = fixture(16, 1, &edges, &[0, 1, 13, 14, 15], fill(0, 2..13, 8, 1));
    e.remove_from_active(4);
    assert_eq!(e.vertex(0).active().bucket_len(1), 8);
    assert_eq!(e.vertex(0).active().bucket(2).unwrap(), &set(&[11, 12]));
    assert_eq!(e.vertex(10).placement(), Placement::Hosted { host: 0, bucket: 1 });
    e.assign_unresolved(4);
    assert_eq!(e.vertex(4).placement(), Placement::Hosted { host: 0, bucket: 2 });
    assert_clean(&e);
}

#[test]
fn refill_from_residual() {
    let mut e = full_host_fixture();
    e.remove_from_active(20);
    assert_eq!(e.vertex(58).placement(), Placement::Hosted { host: 0, bucket: 3 });
    assert_eq!(e.vertex(0).residual(), &set(&[59]));
    e.set_placement(20, Placement::Residual);
    assert_clean(&e);
}

#[test]
fn refill_with_nothing_above() {
    let edges: Vec<_> = (2..6).map(|x| (x, 0)).collect();
    let mut e = fixture(8, 1, &edges, &[0, 1, 6, 7], fill(0, 2..6, 8, 1));
    e.remove_from_active(3);
    assert_eq!(e.vertex(0).active().len(), 3);
    e.assign_unresolved(3);
    assert_clean(&e);
}

#[test]
#[should_panic]
fn add_to_active_rejects_non_lowest_bucket() {
    let edges = [(2, 0), (3, 0)];
    let mut e = fixture(8, 1, &edges, &[0, 1, 4, 5, 6, 7], fill(0, [2], 8, 1));
    e.set_placement(3, Placement::Unplaced);
    e.add_to_active(3, 0, 2);
}

#[test]
fn removal_rehomes_active_set() {
    // 2 is hosted at 0 and also points to 1 (|A_1| = 0 after 0 leaves).
    let edges = [(2, 0), (2, 1), (3, 0), (4, 0)];
    let mut hosted = fill(0, [2, 3, 4], 8, 1);
    hosted.sort();
    let mut e = fixture(8, 1, &edges, &[0, 1, 5, 6, 7], hosted);
    e.insert(5, 0).unwrap();
    assert!(!e.is_in_mis(0));
    assert!(e.vertex(0).active().is_empty());
    assert_eq!(e.vertex(2).placement(), Placement::Hosted { host: 1, bucket: 1 });
    assert!(e.is_in_mis(3) && e.is_in_mis(4));
    assert_clean(&e);
}

#[test]
fn addition_populates_from_residual() {
    // n = 128: b = 8, full = 64. q = 1 hosts 10..74; v = 0 -> q;
    // r = 74..84 are residual at q and v.
    let n = 128;
    let (v, q) = (0, 1);
    let mut edges: Vec<_> = (10..74).map(|x| (x, q)).collect();
    edges.push((v, q));
    for r in 74..84 {
        edges.extend([(r, q), (r, v)]);
    }
    let mis = [&[q][..], &(2..10).collect::<Vec<_>>(), &(84..n).collect::<Vec<_>>()].concat();
    let mut e = fixture(n, 1, &edges, &mis, fill(q, 10..74, 8, 1));
    assert_eq!(e.vertex(v).residual().len(), 10);
    let log = e.delete(v, q).unwrap();
    assert_eq!(log.events, vec![(v, MisChange::Added)]);
    let a = e.vertex(v).active();
    assert_eq!(a.bucket(1).unwrap(), &(74..82).collect());
    assert_eq!(a.bucket(2).unwrap(), &set(&[82, 83]));
    assert_eq!(e.vertex(q).passive().bucket(1).unwrap(), &(74..82).collect());
    assert!(e.vertex(q).residual().is_empty());
    assert_clean(&e);
}

#[test]
fn addition_pulls_passive_vertex_down() {
    // w = 1 hosts 3..19 in buckets 1-2 and u = 20 in bucket 3; u -> v = 0.
    // q = 2 is full (hosts 21..85) and holds r = 85..93 residually, which
    // also point at v. v -> q until deleted.
    let n = 128;
    let (v, w, q, u) = (0, 1, 2, 20);
    let mut edges: Vec<_> = (3..19).map(|x| (x, w)).collect();
    edges.extend([(u, w), (u, v), (v, q)]);
    edges.extend((21..85).map(|x| (x, q)));
    for r in 85..93 {
        edges.extend([(r, q), (r, v)]);
    }
    let mut hosted = fill(w, 3..19, 8, 1);
    hosted.push((u, (w, 3)));
    hosted.extend(fill(q, 21..85, 8, 1));
    let mis = [&[w, q, 19][..], &(93..n).collect::<Vec<_>>()].concat();
    let mut e = fixture(n, 1, &edges, &mis, hosted);
    assert!(e.vertex(v).passive().bucket(3).unwrap().contains(&u));
    e.delete(v, q).unwrap();
    assert!(e.is_in_mis(v));
    assert_eq!(e.vertex(v).active().bucket(1).unwrap(), &(85..93).collect());
    assert_eq!(e.vertex(u).placement(), Placement::Hosted { host: v, bucket: 2 });
    assert_clean(&e);
}

#[test]
fn addition_leaves_low_passive_vertex() {
    // 2 hosted at 1 in bucket 1, also points to 0; 0 -> 1 until deleted.
    let edges = [(2, 1), (2, 0), (0, 1)];
    let mut e = fixture(4, 1, &edges, &[1, 3], fill(1, [0, 2], 8, 1));
    e.delete(0, 1).unwrap();
    assert!(e.is_in_mis(0));
    assert_eq!(e.vertex(2).placement(), Placement::Hosted { host: 1, bucket: 1 });
    assert!(e.vertex(0).passive().bucket(1).unwrap().contains(&2));
    assert_clean(&e);
}

#[test]
fn new_edge_from_unhosted_vertex_into_full_host() {
    // n = 256: full = 72. v = 0 hosts 2..74; q = 1 hosts 74..146; x = 146
    // is residual at q. Inserting {146, 0} leaves x residual, now also at v.
    let n = 256;
    let mut edges: Vec<_> = (2..74).map(|x| (x, 0)).collect();
    edges.extend((74..147).map(|x| (x, 1)));
    let mut hosted = fill(0, 2..74, 8, 1);
    hosted.extend(fill(1, 74..146, 8, 1));
    let mis = [&[0, 1][..], &(147..n).collect::<Vec<_>>()].concat();
    let mut e = fixture(n, 1, &edges, &mis, hosted);
    assert!(e.insert(146, 0).unwrap().is_empty());
    assert_eq!(e.graph().orientation(146, 0), Some((146, 0)));
    assert!(e.vertex(0).residual().contains(&146));
    assert_clean(&e);
}

#[test]
fn flips_keep_structure_consistent() {
    // A star forces resets at the center.
    let mut e = Engine::with_alpha(12, 1).unwrap();
    for leaf in 1..12 {
        e.insert(0, leaf).unwrap();
        assert_clean(&e);
    }
    assert!(e.counters().flips > 0);
    assert!(e.graph().max_out_degree() <= 4);
}

#[test]
fn golden_trace() {
    let events = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&events);
    let mut e = Engine::with_alpha(4, 1).unwrap();
    e.set_trace_hook(move |phase, ev| sink.lock().unwrap().push((phase, ev.clone())));
    e.insert(0, 1).unwrap();
    let got = events.lock().unwrap().clone();
    assert_eq!(
        got,
        vec![
            (Phase::UpdateMis, TraceEvent::StageOne { s_plus: 0, s_minus: 1, epochs: 0 }),
            (Phase::UpdateMis, TraceEvent::MisRemoved(1)),
            (Phase::RepairAfterMis, TraceEvent::Placed { vertex: 1, placement: Placement::Unplaced }),
            (Phase::RepairAfterMis, TraceEvent::Placed { vertex: 1, placement: Placement::Residual }),
            (Phase::Orient, TraceEvent::EdgeInserted(0, 1)),
            (Phase::RepairAfterOrient, TraceEvent::Placed { vertex: 1, placement: Placement::Resolved }),
        ]
    );
    e.clear_trace_hook();
    e.delete(0, 1).unwrap();
    assert_eq!(events.lock().unwrap().len(), 6);
}

#[test]
fn strict_mode_reports_after_completing() {
    // α = 1 declared, K5 inserted: the cap and Stage-1 bounds may break, but
    // the MIS stays valid either way.
    let mut e = Engine::with_alpha(5, 1).unwrap();
    e.set_strict(true);
    let mut failures = 0;
    for a in 0..5 {
        for b in a + 1..5 {
            if let Err(EngineError::Lemma(v)) = e.insert(a, b) {
                assert!(!v.is_empty());
                failures += 1;
            }
        }
    }
    assert_eq!(e.graph().edge_count(), 10);
    assert!(brute_force_maximality_oracle(5, &e.graph().edges(), &e.mis()));
    assert_eq!(e.mis_size(), 1);
    assert_eq!(e.counters().lemma_violations as usize >= failures, true);
}

#[test]
fn from_oriented_places_unresolved() {
    let edges = [(2, 0), (2, 1), (3, 1)];
    let e = Engine::from_oriented(Params::new(4, 1).unwrap(), &edges, &set(&[0, 1])).unwrap();
    assert_eq!(e.vertex(2).placement(), Placement::Hosted { host: 0, bucket: 1 });
    assert_eq!(e.vertex(3).placement(), Placement::Hosted { host: 1, bucket: 1 });
    assert_clean(&e);
}

#[test]
fn from_state_rejects_bad_input() {
    let p = Params::new(4, 1).unwrap();
    let none = BTreeMap::new();
    assert!(matches!(
        Engine::from_state(p, &[(0, 1)], &set(&[0, 1]), &none),
        Err(EngineError::NotIndependent(_))
    ));
    assert!(matches!(
        Engine::from_state(p, &[], &set(&[7]), &none),
        Err(EngineError::MisOutOfRange(7))
    ));
    let bad: BTreeMap<_, _> = [(2, (3, 1))].into_iter().collect();
    assert!(matches!(
        Engine::from_state(p, &[(2, 0)], &set(&[0, 1, 3]), &bad),
        Err(EngineError::BadPlacement(2))
    ));
}

fn apply_all(e: &mut Engine, ops: &[(bool, Vertex, Vertex)]) -> Vec<ChangeLog> {
    let mut logs = Vec::new();
    for &(ins, a, b) in ops {
        let present = e.graph().has_edge(a, b);
        let op = if present { Update::Delete(a, b) } else { Update::Insert(a, b) };
        let _ = ins;
        logs.push(e.apply_update(op).unwrap());
    }
    logs
}

fn op_strategy(n: usize, len: usize) -> impl Strategy<Value = Vec<(bool, Vertex, Vertex)>> {
    prop::collection::vec((any::<bool>(), 0..n, 0..n), 1..len)
        .prop_map(|v| v.into_iter().filter(|&(_, a, b)| a != b).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Arbitrary toggles on a small vertex set; α is large enough that the
    /// out-degree cap cannot bind.
    #[test]
    fn random_toggles_keep_everything(ops in op_strategy(9, 80)) {
        let mut e = Engine::with_alpha(9, 3).unwrap();
        for &(_, a, b) in &ops {
            let op = if e.graph().has_edge(a, b) { Update::Delete(a, b) } else { Update::Insert(a, b) };
            let log = e.apply_update(op).unwrap();
            let added: BTreeSet<_> = log.added().collect();
            let removed: BTreeSet<_> = log.removed().collect();
            prop_assert!(added.is_disjoint(&removed));
            let r = check_invariants(&e);
            prop_assert!(r.ok(), "{}", r);
            let edges = e.graph().edges();
            let mis = e.mis();
            prop_assert!(brute_force_maximality_oracle(9, &edges, &mis));
            let all: BTreeSet<u32> = maximal_independent_sets(9, &edges).into_iter().collect();
            let mask = mis.iter().fold(0u32, |m, &v| m | (1 << v));
            prop_assert!(all.contains(&mask), "{:?} not maximal independent", mask_to_set(mask));
        }
    }

    /// Tiny buckets make Stage 1 run on small graphs. The analytical bounds
    /// need the real bucket sizes, so only correctness is checked here.
    #[test]
    fn tiny_buckets_stay_correct(
        ops in op_strategy(14, 150),
        s in 1usize..4,
        b in 1usize..4,
    ) {
        let params = Params { n: 14, alpha: 4, s, b };
        let mut e = Engine::new(params).unwrap();
        for &(_, a, c) in &ops {
            let op = if e.graph().has_edge(a, c) { Update::Delete(a, c) } else { Update::Insert(a, c) };
            e.apply_update(op).unwrap();
            let r = check_invariants(&e);
            prop_assert!(r.ok(), "{}", r);
        }
    }

    /// Forest-union streams within the declared bound: strict mode never
    /// fires and every audit passes.
    #[test]
    fn forest_streams_strict(k in 1usize..4, seed in 0u64..1000) {
        let s = gen_forest_union(40, k, 250, 0.3, seed);
        let mut e = Engine::with_alpha(40, k).unwrap();
        e.set_strict(true);
        for op in &s.ops {
            e.apply_update(*op).unwrap();
            let r = check_invariants(&e);
            prop_assert!(r.ok(), "{}", r);
        }
    }

    #[test]
    fn replay_is_deterministic(ops in op_strategy(10, 60)) {
        let run = |ops: &[(bool, Vertex, Vertex)]| {
            let trace = Arc::new(Mutex::new(Vec::new()));
            let sink = Arc::clone(&trace);
            let mut e = Engine::with_alpha(10, 3).unwrap();
            e.set_trace_hook(move |p, ev| sink.lock().unwrap().push((p, ev.clone())));
            let logs = apply_all(&mut e, ops);
            let t = trace.lock().unwrap().clone();
            (logs, t, e.mis(), *e.counters())
        };
        prop_assert_eq!(run(&ops), run(&ops));
    }
}

#[test]
fn tiny_buckets_reach_stage_one() {
    // With s = b = 1 one hosted vertex fills A_0; the next goes to R_0.
    let params = Params { n: 10, alpha: 1, s: 1, b: 1 };
    let mut e = Engine::new(params).unwrap();
    for (dom, x) in [(5, 1), (6, 2)] {
        e.insert(dom, x).unwrap();
        e.insert(x, 0).unwrap();
        e.delete(dom, x).unwrap();
    }
    assert!(e.active_full(0));
    assert_eq!(e.vertex(0).residual(), &set(&[2]));
    e.insert(9, 0).unwrap();
    let r = e.last_report();
    assert_eq!((r.processed, r.s_plus), (1, 2));
    assert!(!e.is_in_mis(0));
    assert_clean(&e);
}
