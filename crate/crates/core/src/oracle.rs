//! Reference searches used to check the engine.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::engine::{Label, LabelState, RunStats, SearchTree};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::network::NodeId;

/// Largest network the brute-force enumerator accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Textbook time-dependent Dijkstra on a binary heap with lazy deletion.
pub fn td_dijkstra(inst: Instance<'_>, source: NodeId, t0: u64) -> Result<SearchTree> {
    inst.net.check_node(source)?;
    let start = Instant::now();
    let n = inst.net.node_count();
    let mut labels = vec![Label { d: None, parent_link: None, state: LabelState::Unlabeled }; n];
    let mut stats = RunStats::default();
    let mut heap = BinaryHeap::new();
    labels[source.index()] = Label { d: Some(t0), parent_link: None, state: LabelState::Labeled };
    heap.push(Reverse((t0, source.0)));

    while let Some(Reverse((du, u))) = heap.pop() {
        let u = NodeId(u);
        let lu = &mut labels[u.index()];
        if lu.state == LabelState::Settled || lu.d != Some(du) {
            continue;
        }
        lu.state = LabelState::Settled;
        stats.extractions += 1;
        for &l in inst.net.out_links(u) {
            let tt = inst.traverse(l, du);
            stats.relaxations += 1;
            stats.table_queries += tt.slot_queries as u64;
            let Some(delta) = tt.completed() else {
                stats.interrupted += 1;
                continue;
            };
            let v = inst.net.link(l).to;
            let arr = du + delta as u64;
            let lv = &mut labels[v.index()];
            if lv.state != LabelState::Settled && lv.d.is_none_or(|dv| arr < dv) {
                *lv = Label { d: Some(arr), parent_link: Some(l), state: LabelState::Labeled };
                heap.push(Reverse((arr, v.0)));
            }
        }
    }
    stats.total_nanos = start.elapsed().as_nanos() as u64;
    stats.atq = stats.table_queries as f64 / inst.net.link_count().max(1) as f64;
    Ok(SearchTree { source, t0, labels, stats })
}

/// Earliest arrival at every node over all simple walks of at most `hop_bound`
/// links from `source`, by exhaustive enumeration.
pub fn brute_force_all(inst: Instance<'_>, source: NodeId, t0: u64, hop_bound: usize) -> Result<Vec<Option<u64>>> {
    let n = inst.net.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, network has {n}"
        )));
    }
    if hop_bound < n.saturating_sub(1) {
        return Err(Error::InvalidArgument(format!("hop bound {hop_bound} cannot reach all {n} nodes")));
    }
    inst.net.check_node(source)?;
    let mut best = vec![None; n];
    walk(inst, source, t0, 1u32 << source.0, hop_bound, &mut best);
    Ok(best)
}

fn walk(inst: Instance<'_>, u: NodeId, t: u64, visited: u32, hops_left: usize, best: &mut [Option<u64>]) {
    let slot = &mut best[u.index()];
    if slot.is_none_or(|b| t < b) {
        *slot = Some(t);
    }
    if hops_left == 0 {
        return;
    }
    for &l in inst.net.out_links(u) {
        let v = inst.net.link(l).to;
        if visited & (1 << v.0) != 0 {
            continue;
        }
        if let Some(arr) = inst.arrival(l, t) {
            walk(inst, v, arr, visited | (1 << v.0), hops_left - 1, best);
        }
    }
}

/// Earliest arrival at `target` by exhaustive walk enumeration.
pub fn brute_force_best_arrival(
    inst: Instance<'_>,
    source: NodeId,
    target: NodeId,
    t0: u64,
    hop_bound: usize,
) -> Result<u64> {
    inst.net.check_node(target)?;
    brute_force_all(inst, source, t0, hop_bound)?[target.index()].ok_or(Error::NoPath { from: source, to: target })
}
