//! All-to-all coverage analytics, hot zones, zone-restricted queries and the
//! best departure-time problem.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::apf::ApfConfig;
use crate::engine::{run_dca, SearchTree, TieBreak};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::network::{Link, LinkId, NodeId, RoadNetwork};
use crate::time_domain::{TimeTableBinding, WAVE_PERIOD_SLOTS};

/// Ordered optimal sub-paths in a tree: every (ancestor, descendant) pair,
/// i.e. the sum of node depths.
pub fn count_st_pairs(net: &RoadNetwork, tree: &SearchTree) -> u64 {
    tree.depths(net).into_iter().flatten().map(u64::from).sum()
}

/// Triangle-area estimate of the pairs in a corner-rooted tree of a k x k grid:
/// height `2k - 1`, bottom `2n / (2k - 1)`, about `sqrt(n) * n = k^3` pairs.
pub fn estimate_st_pairs(k: u64) -> u64 {
    k * k * k
}

/// Sources for a coverage run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceSet {
    Corners,
    Perimeter,
    All,
    Explicit(Vec<NodeId>),
}

impl SourceSet {
    pub fn resolve(&self, net: &RoadNetwork) -> Result<Vec<NodeId>> {
        let nodes = match self {
            SourceSet::Corners => net.corners(),
            SourceSet::Perimeter => net.perimeter(),
            SourceSet::All => net.nodes().collect(),
            SourceSet::Explicit(list) => {
                for &v in list {
                    net.check_node(v)?;
                }
                list.clone()
            }
        };
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("source set is empty (corner/perimeter need a grid)".into()));
        }
        Ok(nodes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub sources_used: usize,
    pub st_pairs_covered: u64,
    /// Covered ordered pairs over n(n-1).
    pub fraction: f64,
    pub wall_ms: Vec<f64>,
}

/// Set of ordered (s, t) pairs, one bit each.
struct PairSet {
    n: usize,
    bits: Vec<u64>,
}

impl PairSet {
    fn new(n: usize) -> Self {
        Self { n, bits: vec![0; (n * n).div_ceil(64)] }
    }

    fn insert(&mut self, s: usize, t: usize) {
        let i = s * self.n + t;
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn union(&mut self, other: &PairSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn add_tree(&mut self, net: &RoadNetwork, tree: &SearchTree) {
        for v in net.nodes() {
            let mut link = tree.parent_link(v);
            while let Some(l) = link {
                let a = net.link(l).from;
                self.insert(a.index(), v.index());
                link = tree.parent_link(a);
            }
        }
    }
}

/// Runs one search per source and unions the (ancestor, descendant) pairs of all trees.
pub fn run_coverage(inst: Instance<'_>, sources: &SourceSet, t0: u64, parallel: bool) -> Result<CoverageReport> {
    let sources = sources.resolve(inst.net)?;
    let n = inst.net.node_count();
    let one = |s: NodeId| -> Result<(PairSet, f64)> {
        let start = Instant::now();
        let tree = run_dca(inst, s, t0, TieBreak::None)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let mut pairs = PairSet::new(n);
        pairs.add_tree(inst.net, &tree);
        Ok((pairs, ms))
    };
    let mut covered = PairSet::new(n);
    let mut wall_ms = Vec::with_capacity(sources.len());
    if parallel {
        let results: Vec<Result<(PairSet, f64)>> = sources.par_iter().map(|&s| one(s)).collect();
        for r in results {
            let (pairs, ms) = r?;
            covered.union(&pairs);
            wall_ms.push(ms);
        }
    } else {
        for &s in &sources {
            let (pairs, ms) = one(s)?;
            covered.union(&pairs);
            wall_ms.push(ms);
        }
    }
    let st_pairs_covered = covered.count();
    let denom = (n * n.saturating_sub(1)).max(1) as f64;
    Ok(CoverageReport { sources_used: sources.len(), st_pairs_covered, fraction: st_pairs_covered as f64 / denom, wall_ms })
}

/// Default zone size cap, `8 sqrt(n)`.
pub fn default_zone_cap(n: usize) -> usize {
    (8.0 * (n as f64).sqrt()).floor() as usize
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HotZone {
    /// Ascending node ids.
    pub nodes: Vec<NodeId>,
    /// Ascending ids of links with both endpoints in the zone.
    pub induced_links: Vec<LinkId>,
    pub source: NodeId,
    pub target: NodeId,
    /// Departure times (seconds) the zone is meant to serve, inclusive.
    pub valid_window: (u64, u64),
}

impl HotZone {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Builds a zone covering a whole network.
    pub fn whole(net: &RoadNetwork, source: NodeId, target: NodeId, valid_window: (u64, u64)) -> Self {
        Self::from_nodes(net, net.nodes().collect(), source, target, valid_window)
    }

    fn from_nodes(net: &RoadNetwork, mut nodes: Vec<NodeId>, source: NodeId, target: NodeId, valid_window: (u64, u64)) -> Self {
        nodes.sort();
        nodes.dedup();
        let mut member = vec![false; net.node_count()];
        for v in &nodes {
            member[v.index()] = true;
        }
        let induced_links =
            net.links().iter().filter(|l| member[l.from.index()] && member[l.to.index()]).map(|l| l.id).collect();
        Self { nodes, induced_links, source, target, valid_window }
    }

    /// Local sub-network of the zone, ready for repeated queries.
    pub fn prepare(&self, inst: Instance<'_>) -> Result<PreparedZone> {
        let local = |v: NodeId| NodeId(self.nodes.binary_search(&v).expect("zone node") as u32);
        let links: Vec<Link> = self
            .induced_links
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let g = inst.net.link(l);
                Link { id: LinkId(i as u32), from: local(g.from), to: local(g.to), length_m: g.length_m }
            })
            .collect();
        let net = RoadNetwork::new(self.nodes.len(), None, links)?;
        let binding = inst.binding.restrict(&self.induced_links);
        Ok(PreparedZone { zone: self.clone(), net, binding, cfg: inst.cfg.clone() })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
        writeln!(
            w,
            "zone {} {} {} {} {}",
            self.nodes.len(),
            self.source,
            self.target,
            self.valid_window.0,
            self.valid_window.1
        )
        .map_err(io)?;
        let join = |it: Vec<String>| it.join(" ");
        writeln!(w, "{}", join(self.nodes.iter().map(|v| v.to_string()).collect())).map_err(io)?;
        writeln!(w, "{}", join(self.induced_links.iter().map(|l| l.to_string()).collect())).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Reads a zone file; link ids are checked against `net`.
    pub fn load(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if header.len() != 6 || header[0] != "zone" {
            return Err(Error::parse(path, 1, "expected header `zone |Z| s t window_a window_b`"));
        }
        let num = |i: usize| -> Result<u64> {
            header[i].parse().map_err(|_| Error::parse(path, 1, format!("bad header field `{}`", header[i])))
        };
        let (size, s, t, a, b) = (num(1)? as usize, num(2)?, num(3)?, num(4)?, num(5)?);
        let ids = |line: Option<&str>, lno: usize| -> Result<Vec<u32>> {
            line.unwrap_or("")
                .split_whitespace()
                .map(|tok| tok.parse().map_err(|_| Error::parse(path, lno, format!("bad id `{tok}`"))))
                .collect()
        };
        let nodes: Vec<NodeId> = ids(lines.next(), 2)?.into_iter().map(NodeId).collect();
        let links = ids(lines.next(), 3)?;
        if nodes.len() != size {
            return Err(Error::parse(path, 2, format!("header declares {size} nodes, found {}", nodes.len())));
        }
        for &v in &nodes {
            net.check_node(v).map_err(|e| Error::parse(path, 2, e.to_string()))?;
        }
        let (s, t) = (NodeId(s as u32), NodeId(t as u32));
        let zone = Self::from_nodes(net, nodes, s, t, (a, b));
        let listed: Vec<LinkId> = {
            let mut v: Vec<LinkId> = links.into_iter().map(LinkId).collect();
            v.sort();
            v
        };
        if listed != zone.induced_links {
            return Err(Error::parse(path, 3, "induced link list does not match the node set"));
        }
        if !zone.contains(s) || !zone.contains(t) {
            return Err(Error::parse(path, 1, "zone does not contain its anchor pair"));
        }
        Ok(zone)
    }
}

/// Zone with its own renumbered sub-network and table binding.
#[derive(Clone, Debug)]
pub struct PreparedZone {
    pub zone: HotZone,
    pub net: RoadNetwork,
    pub binding: TimeTableBinding,
    pub cfg: ApfConfig,
}

impl PreparedZone {
    fn local(&self, v: NodeId) -> Option<NodeId> {
        self.zone.nodes.binary_search(&v).ok().map(|i| NodeId(i as u32))
    }

    /// Fastest s -> t path inside the zone, in global node ids, with its arrival time.
    pub fn query(&self, s: NodeId, t: NodeId, t0: u64) -> Result<(Vec<NodeId>, u64)> {
        let (w0, w1) = self.zone.valid_window;
        if t0 < w0 || t0 > w1 {
            return Err(Error::InvalidArgument(format!("departure {t0} outside zone window [{w0}, {w1}]")));
        }
        let ls = self.local(s).ok_or_else(|| Error::ZoneMiss(format!("source {s} not in zone")))?;
        let lt = self.local(t).ok_or_else(|| Error::ZoneMiss(format!("target {t} not in zone")))?;
        let inst = Instance::new(&self.net, &self.binding, &self.cfg)?;
        let tree = run_dca(inst, ls, t0, TieBreak::None)?;
        let path = tree
            .path_to(&self.net, lt)
            .ok_or_else(|| Error::ZoneMiss(format!("{t} unreachable from {s} inside zone")))?;
        let arrival = tree.arrival(lt).expect("path implies label");
        Ok((path.into_iter().map(|v| self.zone.nodes[v.index()]).collect(), arrival))
    }
}

/// Builds a hot zone around the `s -> t` paths found in `trees`, then grows it
/// by breadth-first rings until `size_cap` nodes or no frontier remains.
///
/// A tree contributes if `s` is an ancestor of `t` in it. The validity window
/// spans the departure times at `s` across those trees, padded by one wave period.
pub fn extract_zone(inst: Instance<'_>, trees: &[SearchTree], s: NodeId, t: NodeId, size_cap: usize) -> Result<HotZone> {
    let net = inst.net;
    net.check_node(s)?;
    net.check_node(t)?;
    let mut member = vec![false; net.node_count()];
    let mut nodes = Vec::new();
    let mut departures = Vec::new();
    for tree in trees {
        let mut segment = vec![t];
        let mut v = t;
        let mut found = v == s && tree.arrival(s).is_some();
        while !found {
            let Some(l) = tree.parent_link(v) else { break };
            v = net.link(l).from;
            segment.push(v);
            found = v == s;
        }
        if !found {
            continue;
        }
        departures.push(tree.arrival(s).expect("ancestor is labeled"));
        for v in segment {
            if !member[v.index()] {
                member[v.index()] = true;
                nodes.push(v);
            }
        }
    }
    if departures.is_empty() {
        return Err(Error::NoZone(format!("no tree contains a path from {s} to {t}")));
    }
    if nodes.len() > size_cap {
        return Err(Error::NoZone(format!("path union has {} nodes, above the cap {size_cap}", nodes.len())));
    }

    let mut queue: VecDeque<NodeId> = nodes.iter().copied().collect();
    'grow: while let Some(u) = queue.pop_front() {
        let neighbours = net
            .out_links(u)
            .iter()
            .map(|&l| net.link(l).to)
            .chain(net.in_links(u).iter().map(|&l| net.link(l).from));
        for v in neighbours {
            if nodes.len() >= size_cap {
                break 'grow;
            }
            if !member[v.index()] {
                member[v.index()] = true;
                nodes.push(v);
                queue.push_back(v);
            }
        }
    }

    let pad = WAVE_PERIOD_SLOTS as u64 * inst.cfg.chi_s() as u64;
    let lo = departures.iter().min().copied().unwrap_or(0);
    let hi = departures.iter().max().copied().unwrap_or(0);
    Ok(HotZone::from_nodes(net, nodes, s, t, (lo.saturating_sub(pad), hi + pad)))
}

/// Fastest `s -> t` path restricted to the zone's induced links.
pub fn zone_query(inst: Instance<'_>, zone: &HotZone, s: NodeId, t: NodeId, t0: u64) -> Result<(Vec<NodeId>, u64)> {
    zone.prepare(inst)?.query(s, t, t0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BopResult {
    pub best_t0: u64,
    /// Through-time `arrival - t0` of the best departure.
    pub best_delta: u64,
    pub trials: usize,
    pub misses: usize,
}

/// Departure times `a, a + step, ..., <= b`.
pub fn departure_grid(window: (u64, u64), step: u64) -> Result<Vec<u64>> {
    let (a, b) = window;
    if a > b {
        return Err(Error::InvalidArgument(format!("empty window {a}:{b}")));
    }
    if step == 0 {
        return Err(Error::InvalidArgument("step must be at least 1 s".into()));
    }
    Ok((a..=b).step_by(step.min(usize::MAX as u64) as usize).collect())
}

/// Grid scan over departures in `window`; ties go to the earliest departure.
pub fn solve_bop(
    inst: Instance<'_>,
    zone: &HotZone,
    s: NodeId,
    t: NodeId,
    window: (u64, u64),
    step: u64,
) -> Result<BopResult> {
    let grid = departure_grid(window, step)?;
    let prepared = zone.prepare(inst)?;
    let mut best: Option<(u64, u64)> = None;
    let mut misses = 0;
    for &t0 in &grid {
        match prepared.query(s, t, t0) {
            Ok((_, arrival)) => {
                let delta = arrival - t0;
                if best.is_none_or(|(_, d)| delta < d) {
                    best = Some((t0, delta));
                }
            }
            Err(Error::ZoneMiss(_)) => misses += 1,
            Err(e) => return Err(e),
        }
    }
    let (best_t0, best_delta) =
        best.ok_or_else(|| Error::NoSolution(format!("{t} unreachable from {s} inside the zone for every departure")))?;
    Ok(BopResult { best_t0, best_delta, trials: grid.len(), misses })
}
