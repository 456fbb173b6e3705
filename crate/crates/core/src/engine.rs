//! Two-phase one-to-all fastest-path search.
//!
//! The labeling phase is a single best-first pass that labels every reachable
//! node once and records the order in which labels were fixed (the origin
//! list). The correcting phase seeds the priority store with the origin list
//! and relaxes links until no link `(u, v)` satisfies
//! `d(u) + delta((u, v), d(u)) < d(v)`.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::instance::Instance;
use crate::network::{LinkId, NodeId, RoadNetwork};
use crate::store::PriorityStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelState {
    Unlabeled,
    Labeled,
    Settled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Label {
    /// Arrival time in seconds.
    pub d: Option<u64>,
    pub parent_link: Option<LinkId>,
    pub state: LabelState,
}

impl Label {
    const UNLABELED: Label = Label { d: None, parent_link: None, state: LabelState::Unlabeled };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    #[default]
    None,
    ShortestLane,
    LongestLane,
}

impl std::str::FromStr for TieBreak {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TieBreak::None),
            "shortest" => Ok(TieBreak::ShortestLane),
            "longest" => Ok(TieBreak::LongestLane),
            other => Err(crate::error::Error::InvalidArgument(format!("unknown tie-break `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    /// Total table slot accesses.
    pub table_queries: u64,
    /// `table_queries / E`.
    pub atq: f64,
    /// Time spent in priority-store operations.
    pub dc_nanos: u64,
    /// Time spent scanning links and evaluating through-times.
    pub sc_nanos: u64,
    /// Wall time of the labeling phase.
    pub hdm_nanos: u64,
    pub total_nanos: u64,
    pub st_pairs: u64,
    pub extractions: u64,
    pub decreases: u64,
    pub relaxations: u64,
    /// Correcting-phase relaxations answered from the labeling pass without a table access.
    pub reused: u64,
    /// Label improvements made by the correcting phase.
    pub improvements: u64,
    pub interrupted: u64,
    /// Extractions whose key was below an earlier extracted key.
    pub key_regressions: u64,
}

impl RunStats {
    pub fn runtime_ms(&self) -> f64 {
        self.total_nanos as f64 / 1e6
    }

    pub fn hdm_ms(&self) -> f64 {
        self.hdm_nanos as f64 / 1e6
    }

    /// Share of DC in DC + SC, in percent.
    pub fn dc_pct(&self) -> f64 {
        let total = self.dc_nanos + self.sc_nanos;
        if total == 0 {
            0.0
        } else {
            100.0 * self.dc_nanos as f64 / total as f64
        }
    }

    pub fn sc_pct(&self) -> f64 {
        if self.dc_nanos + self.sc_nanos == 0 {
            0.0
        } else {
            100.0 - self.dc_pct()
        }
    }

    /// Store operations per node, the empirical factor in front of `n log n`.
    pub fn lambda(&self, n: usize) -> f64 {
        (self.extractions + self.decreases) as f64 / n as f64
    }
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    pub source: NodeId,
    pub t0: u64,
    pub labels: Vec<Label>,
    pub stats: RunStats,
}

impl SearchTree {
    #[inline]
    pub fn arrival(&self, node: NodeId) -> Option<u64> {
        self.labels[node.index()].d
    }

    #[inline]
    pub fn parent_link(&self, node: NodeId) -> Option<LinkId> {
        self.labels[node.index()].parent_link
    }

    pub fn arrivals(&self) -> Vec<Option<u64>> {
        self.labels.iter().map(|l| l.d).collect()
    }

    pub fn reached(&self) -> usize {
        self.labels.iter().filter(|l| l.d.is_some()).count()
    }

    /// Links of the search tree.
    pub fn tree_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.labels.iter().filter_map(|l| l.parent_link)
    }

    /// Node sequence from the source to `target`.
    pub fn path_to(&self, net: &RoadNetwork, target: NodeId) -> Option<Vec<NodeId>> {
        self.arrival(target)?;
        let mut path = vec![target];
        let mut v = target;
        while let Some(l) = self.parent_link(v) {
            v = net.link(l).from;
            path.push(v);
            if path.len() > self.labels.len() {
                panic!("parent links contain a cycle");
            }
        }
        path.reverse();
        Some(path)
    }

    /// Tree depth (hop count from the source) of each reached node.
    pub fn depths(&self, net: &RoadNetwork) -> Vec<Option<u32>> {
        let mut order: Vec<usize> = (0..self.labels.len()).filter(|&v| self.labels[v].d.is_some()).collect();
        order.sort_by_key(|&v| self.labels[v].d);
        let mut depth = vec![None; self.labels.len()];
        for v in order {
            depth[v] = Some(match self.labels[v].parent_link {
                None => 0,
                Some(l) => depth[net.link(l).from.index()].expect("parent settles before child") + 1,
            });
        }
        depth
    }
}

/// Output of the labeling phase.
#[derive(Clone, Debug)]
pub struct Labeling {
    pub source: NodeId,
    pub t0: u64,
    pub labels: Vec<Label>,
    /// Labeled nodes in the order their labels were fixed (non-decreasing label).
    pub origin: Vec<NodeId>,
    pub stats: RunStats,
    /// Label each node held when its out-links were evaluated.
    scanned_at: Vec<Option<u64>>,
    /// Through-time per link from that evaluation; `INTERRUPTED` if it did not complete.
    through: Vec<u32>,
}

const INTERRUPTED: u32 = u32::MAX;

struct Clock {
    dc: Duration,
}

impl Clock {
    #[inline]
    fn dc<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.dc += start.elapsed();
        out
    }
}

pub fn hdm_label(inst: Instance<'_>, source: NodeId, t0: u64) -> Result<Labeling> {
    inst.net.check_node(source)?;
    let start = Instant::now();
    let n = inst.net.node_count();
    let mut labels = vec![Label::UNLABELED; n];
    let mut closed = vec![false; n];
    let mut origin = Vec::with_capacity(n);
    let mut store = PriorityStore::new(n);
    let mut stats = RunStats::default();
    let mut clock = Clock { dc: Duration::ZERO };
    let mut sc = Duration::ZERO;
    let mut group = Vec::new();
    let mut scanned_at = vec![None; n];
    let mut through = vec![INTERRUPTED; inst.net.link_count()];

    labels[source.index()] = Label { d: Some(t0), parent_link: None, state: LabelState::Labeled };
    clock.dc(|| store.insert(source, t0)).expect("fresh store");

    while let Some(_key) = clock.dc(|| store.extract_min_group_into(&mut group)) {
        for &u in &group {
            closed[u.index()] = true;
            origin.push(u);
            let du = labels[u.index()].d.expect("stored nodes are labeled");
            scanned_at[u.index()] = Some(du);
            let scan = Instant::now();
            let dc_before = clock.dc;
            for &l in inst.net.out_links(u) {
                let tt = inst.traverse(l, du);
                stats.relaxations += 1;
                stats.table_queries += tt.slot_queries as u64;
                let Some(delta) = tt.completed() else {
                    stats.interrupted += 1;
                    continue;
                };
                through[l.index()] = delta;
                let v = inst.net.link(l).to;
                if closed[v.index()] {
                    continue;
                }
                let arr = du + delta as u64;
                let lv = &mut labels[v.index()];
                match lv.d {
                    Some(dv) if arr >= dv => {}
                    _ => {
                        *lv = Label { d: Some(arr), parent_link: Some(l), state: LabelState::Labeled };
                        clock.dc(|| store.push_or_decrease(v, arr)).expect("open node");
                    }
                }
            }
            sc += scan.elapsed().saturating_sub(clock.dc - dc_before);
        }
    }

    let counters = store.counters();
    stats.extractions = counters.extractions;
    stats.decreases = counters.decreases;
    stats.dc_nanos = clock.dc.as_nanos() as u64;
    stats.sc_nanos = sc.as_nanos() as u64;
    stats.hdm_nanos = start.elapsed().as_nanos() as u64;
    Ok(Labeling { source, t0, labels, origin, stats, scanned_at, through })
}

/// Correcting phase: relaxes from the origin list to the fixpoint.
pub fn correct(inst: Instance<'_>, labeling: Labeling) -> SearchTree {
    let start = Instant::now();
    let Labeling { source, t0, mut labels, origin, mut stats, scanned_at, through } = labeling;
    let n = inst.net.node_count();
    let mut store = PriorityStore::new(n);
    let mut clock = Clock { dc: Duration::ZERO };
    let mut sc = Duration::ZERO;
    let mut group = Vec::new();
    let mut last_key = 0u64;

    clock.dc(|| {
        for &v in &origin {
            store.insert(v, labels[v.index()].d.expect("origin nodes are labeled")).expect("origin nodes are distinct");
        }
    });

    while let Some(key) = clock.dc(|| store.extract_min_group_into(&mut group)) {
        if key < last_key {
            stats.key_regressions += 1;
        }
        last_key = last_key.max(key);
        for &u in &group {
            labels[u.index()].state = LabelState::Settled;
            let du = labels[u.index()].d.expect("stored nodes are labeled");
            let unchanged = scanned_at[u.index()] == Some(du);
            let scan = Instant::now();
            let dc_before = clock.dc;
            for &l in inst.net.out_links(u) {
                stats.relaxations += 1;
                let delta = if unchanged {
                    // same departure as in the labeling pass: same through-time
                    stats.reused += 1;
                    Some(through[l.index()]).filter(|&d| d != INTERRUPTED)
                } else {
                    let tt = inst.traverse(l, du);
                    stats.table_queries += tt.slot_queries as u64;
                    if tt.is_interrupted() {
                        stats.interrupted += 1;
                    }
                    tt.completed()
                };
                let Some(delta) = delta else {
                    continue;
                };
                let v = inst.net.link(l).to;
                let arr = du + delta as u64;
                let lv = &mut labels[v.index()];
                if lv.d.is_none_or(|dv| arr < dv) {
                    *lv = Label { d: Some(arr), parent_link: Some(l), state: LabelState::Labeled };
                    stats.improvements += 1;
                    clock.dc(|| store.push_or_decrease(v, arr)).expect("key decreases");
                }
            }
            sc += scan.elapsed().saturating_sub(clock.dc - dc_before);
        }
    }

    let counters = store.counters();
    stats.extractions += counters.extractions;
    stats.decreases += counters.decreases;
    stats.dc_nanos += clock.dc.as_nanos() as u64;
    stats.sc_nanos += sc.as_nanos() as u64;
    stats.total_nanos = stats.hdm_nanos + start.elapsed().as_nanos() as u64;
    stats.atq = stats.table_queries as f64 / inst.net.link_count().max(1) as f64;
    SearchTree { source, t0, labels, stats }
}

/// Labeling followed by correcting, then optional tie-break re-parenting.
pub fn run_dca(inst: Instance<'_>, source: NodeId, t0: u64, tie_break: TieBreak) -> Result<SearchTree> {
    let labeling = hdm_label(inst, source, t0)?;
    let mut tree = correct(inst, labeling);
    if tie_break != TieBreak::None {
        let mut stats = tree.stats;
        let parents: Vec<Option<LinkId>> =
            inst.net.nodes().map(|v| tie_break_parent(inst, &tree, v, tie_break, &mut stats)).collect();
        for (label, p) in tree.labels.iter_mut().zip(parents) {
            label.parent_link = p;
        }
        stats.atq = stats.table_queries as f64 / inst.net.link_count().max(1) as f64;
        tree.stats = stats;
    }
    tree.stats.st_pairs = tree.depths(inst.net).into_iter().flatten().map(u64::from).sum();
    Ok(tree)
}

/// Chooses among equally fast incoming links of `node` by lane length.
/// Ties on length go to the smallest link id; arrival times are never changed.
pub fn tie_break_parent(
    inst: Instance<'_>,
    tree: &SearchTree,
    node: NodeId,
    mode: TieBreak,
    stats: &mut RunStats,
) -> Option<LinkId> {
    let current = tree.parent_link(node);
    let (Some(dv), Some(_)) = (tree.arrival(node), current) else {
        return current;
    };
    if mode == TieBreak::None {
        return current;
    }
    let mut best: Option<(u32, LinkId)> = None;
    for &l in inst.net.in_links(node) {
        let link = inst.net.link(l);
        let Some(du) = tree.arrival(link.from) else { continue };
        let tt = inst.traverse(l, du);
        stats.table_queries += tt.slot_queries as u64;
        if tt.completed().map(|d| du + d as u64) != Some(dv) {
            continue;
        }
        let better = match best {
            None => true,
            Some((len, id)) => match mode {
                TieBreak::ShortestLane => (link.length_m, l) < (len, id),
                TieBreak::LongestLane => link.length_m > len || (link.length_m == len && l < id),
                TieBreak::None => unreachable!(),
            },
        };
        if better {
            best = Some((link.length_m, l));
        }
    }
    best.map(|(_, l)| l).or(current)
}
