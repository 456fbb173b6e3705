//! Fixed road topology: nodes, directed links with integer lengths, and the
//! square-grid benchmark generator.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u32);

impl LinkId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: u32,
}

/// Number of length grades available to the grid generator.
pub const LENGTH_GRADE_COUNT: usize = 46;

/// Lane lengths in meters: 250, 300, ..., 2500.
pub const LENGTH_GRADES: [u32; LENGTH_GRADE_COUNT] = {
    let mut grades = [0u32; LENGTH_GRADE_COUNT];
    let mut k = 0;
    while k < LENGTH_GRADE_COUNT {
        grades[k] = 250 + 50 * k as u32;
        k += 1;
    }
    grades
};

/// Row/column layout of a grid instance. Node (r, c) has index `r * cols + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

/// Immutable directed road graph with CSR adjacency in both directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoadNetwork {
    n: usize,
    grid: Option<GridShape>,
    links: Vec<Link>,
    out_first: Vec<u32>,
    out_links: Vec<LinkId>,
    in_first: Vec<u32>,
    in_links: Vec<LinkId>,
}

impl RoadNetwork {
    /// Builds a network from a link list. Link ids must equal their position.
    pub fn new(n: usize, grid: Option<GridShape>, links: Vec<Link>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("network has no nodes".into()));
        }
        if n > u32::MAX as usize || links.len() > u32::MAX as usize {
            return Err(Error::InvalidInstance("network too large".into()));
        }
        if let Some(g) = grid {
            if g.rows * g.cols != n {
                return Err(Error::InvalidInstance(format!(
                    "grid {}x{} does not match node count {n}",
                    g.rows, g.cols
                )));
            }
        }
        let mut pairs: HashMap<(u32, u32), u32> = HashMap::with_capacity(links.len());
        for (pos, link) in links.iter().enumerate() {
            if link.id.index() != pos {
                return Err(Error::InvalidInstance(format!("link at position {pos} has id {}", link.id)));
            }
            if link.from.index() >= n || link.to.index() >= n {
                return Err(Error::InvalidInstance(format!("link {} has an endpoint outside 0..{n}", link.id)));
            }
            if link.from == link.to {
                return Err(Error::InvalidInstance(format!("link {} is a self-loop", link.id)));
            }
            if link.length_m == 0 {
                return Err(Error::InvalidInstance(format!("link {} has zero length", link.id)));
            }
            if pairs.insert((link.from.0, link.to.0), link.length_m).is_some() {
                return Err(Error::InvalidInstance(format!(
                    "duplicate link {} -> {}",
                    link.from, link.to
                )));
            }
        }
        for link in &links {
            if let Some(&back) = pairs.get(&(link.to.0, link.from.0)) {
                if back != link.length_m {
                    return Err(Error::InvalidInstance(format!(
                        "lane {}-{} has unequal inverse lengths {} and {back}",
                        link.from, link.to, link.length_m
                    )));
                }
            }
        }

        let (out_first, out_links) = csr(n, &links, |l| l.from);
        let (in_first, in_links) = csr(n, &links, |l| l.to);
        Ok(Self { n, grid, links, out_first, out_links, in_first, in_links })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    #[inline]
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    #[inline]
    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    #[inline]
    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        let v = node.index();
        &self.out_links[self.out_first[v] as usize..self.out_first[v + 1] as usize]
    }

    #[inline]
    pub fn in_links(&self, node: NodeId) -> &[LinkId] {
        let v = node.index();
        &self.in_links[self.in_first[v] as usize..self.in_first[v + 1] as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n as u32).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.n
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("node {node} outside 0..{}", self.n)))
        }
    }

    /// Link from `from` to `to`, if one exists.
    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.out_links(from).iter().copied().find(|&l| self.link(l).to == to)
    }

    pub fn node_at(&self, row: usize, col: usize) -> Option<NodeId> {
        let g = self.grid?;
        (row < g.rows && col < g.cols).then(|| NodeId((row * g.cols + col) as u32))
    }

    pub fn coords(&self, node: NodeId) -> Option<(usize, usize)> {
        let g = self.grid?;
        Some((node.index() / g.cols, node.index() % g.cols))
    }

    /// Grid corners in the order top-left, top-right, bottom-left, bottom-right (deduplicated).
    pub fn corners(&self) -> Vec<NodeId> {
        let Some(g) = self.grid else { return Vec::new() };
        let mut out = vec![
            NodeId(0),
            NodeId((g.cols - 1) as u32),
            NodeId(((g.rows - 1) * g.cols) as u32),
            NodeId((self.n - 1) as u32),
        ];
        out.dedup();
        out.sort();
        out.dedup();
        out
    }

    /// Every node on the grid boundary, ascending. 4(k-1) nodes for a k x k grid.
    pub fn perimeter(&self) -> Vec<NodeId> {
        let Some(g) = self.grid else { return Vec::new() };
        self.nodes()
            .filter(|&v| {
                let (r, c) = (v.index() / g.cols, v.index() % g.cols);
                r == 0 || c == 0 || r + 1 == g.rows || c + 1 == g.cols
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        // Non-grid networks (zones) carry width 0.
        let cols = self.grid.map_or(0, |g| g.cols);
        writeln!(w, "grid {cols} {} {}", self.n, self.links.len())?;
        for l in &self.links {
            writeln!(w, "{} {} {} {}", l.id, l.from, l.to, l.length_m)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty network file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "grid" {
            return Err(Error::parse(path, hline + 1, "expected header `grid k n E`"));
        }
        let cols: usize = parse_field(fields[1], path, hline, "k")?;
        let n: usize = parse_field(fields[2], path, hline, "n")?;
        let e: usize = parse_field(fields[3], path, hline, "E")?;

        let mut links = Vec::with_capacity(e);
        for (lno, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(path, lno + 1, "expected `link_id from to length_m`"));
            }
            links.push(Link {
                id: LinkId(parse_field(f[0], path, lno, "link_id")?),
                from: NodeId(parse_field(f[1], path, lno, "from")?),
                to: NodeId(parse_field(f[2], path, lno, "to")?),
                length_m: parse_field(f[3], path, lno, "length_m")?,
            });
        }
        if links.len() != e {
            return Err(Error::parse(
                path,
                text.lines().count(),
                format!("header declares {e} links but file has {}", links.len()),
            ));
        }
        let grid = (cols > 0).then(|| GridShape { rows: n / cols, cols });
        Self::new(n, grid, links).map_err(|err| Error::parse(path, hline + 1, err.to_string()))
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, path: &Path, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(path, line + 1, format!("bad {what} `{s}`")))
}

fn csr(n: usize, links: &[Link], key: impl Fn(&Link) -> NodeId) -> (Vec<u32>, Vec<LinkId>) {
    let mut first = vec![0u32; n + 1];
    for l in links {
        first[key(l).index() + 1] += 1;
    }
    for i in 0..n {
        first[i + 1] += first[i];
    }
    let mut fill = first.clone();
    let mut adj = vec![LinkId(0); links.len()];
    for l in links {
        let slot = &mut fill[key(l).index()];
        adj[*slot as usize] = l.id;
        *slot += 1;
    }
    (first, adj)
}

/// k x k grid with a lane between every pair of horizontal/vertical neighbors.
pub fn generate_grid(k: usize, seed: u64) -> Result<RoadNetwork> {
    if k < 2 {
        return Err(Error::InvalidInstance(format!("grid side must be at least 2, got {k}")));
    }
    generate_grid_rect(k, k, seed)
}

/// Rectangular variant of [`generate_grid`]; lane lengths are drawn uniformly from
/// [`LENGTH_GRADES`] in row-major lane order.
pub fn generate_grid_rect(rows: usize, cols: usize, seed: u64) -> Result<RoadNetwork> {
    if rows < 1 || cols < 1 || rows * cols < 2 {
        return Err(Error::InvalidInstance(format!("grid {rows}x{cols} has fewer than two nodes")));
    }
    let n = rows * cols;
    let lanes = rows * (cols - 1) + cols * (rows - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(2 * lanes);
    let mut add_lane = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        let length_m = LENGTH_GRADES[rng.gen_range(0..LENGTH_GRADE_COUNT)];
        for (from, to) in [(a, b), (b, a)] {
            let id = LinkId(links.len() as u32);
            links.push(Link { id, from: NodeId(from as u32), to: NodeId(to as u32), length_m });
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                add_lane(v, v + 1, &mut rng);
            }
            if r + 1 < rows {
                add_lane(v, v + cols, &mut rng);
            }
        }
    }
    RoadNetwork::new(n, Some(GridShape { rows, cols }), links)
}
