//! Python bindings for `tdroute`.

use std::collections::HashMap;

use pyo3::exceptions::{PyLookupError, PyOSError, PyValueError};
use pyo3::prelude::*;

use tdroute::apf::{through_time, ApfConfig};
use tdroute::engine::{run_dca, SearchTree, TieBreak};
use tdroute::network::{generate_grid, generate_grid_rect, LinkId, NodeId, RoadNetwork};
use tdroute::oracle::td_dijkstra;
use tdroute::time_domain::{generate_table, TableMode, TimeTable, TimeTableBinding};
use tdroute::zones::{run_coverage, solve_bop, HotZone, SourceSet};
use tdroute::{Error, Instance};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_domain() => PyLookupError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Directed grid road network.
#[pyclass(name = "Network", module = "tdroute_py", frozen)]
struct PyNetwork {
    inner: RoadNetwork,
}

#[pymethods]
impl PyNetwork {
    /// Square k x k grid with seeded lane lengths.
    #[staticmethod]
    fn grid(k: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: generate_grid(k, seed).map_err(to_py)? })
    }

    #[staticmethod]
    fn grid_rect(rows: usize, cols: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: generate_grid_rect(rows, cols, seed).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: RoadNetwork::load(path).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn link_count(&self) -> usize {
        self.inner.link_count()
    }

    /// `(id, from, to, length_m)` for every link.
    fn links(&self) -> Vec<(u32, u32, u32, u32)> {
        self.inner.links().iter().map(|l| (l.id.0, l.from.0, l.to.0, l.length_m)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Network(n={}, links={})", self.inner.node_count(), self.inner.link_count())
    }
}

/// Circular velocity-grade table.
#[pyclass(name = "Table", module = "tdroute_py", frozen)]
struct PyTable {
    inner: TimeTable,
}

#[pymethods]
impl PyTable {
    #[staticmethod]
    #[pyo3(signature = (mode, size, seed, allow_zero = false, chi = 10))]
    fn generate(mode: &str, size: usize, seed: u64, allow_zero: bool, chi: u32) -> PyResult<Self> {
        let mode: TableMode = mode.parse().map_err(to_py)?;
        Ok(Self { inner: generate_table(mode, size, seed, allow_zero, chi).map_err(to_py)? })
    }

    #[new]
    #[pyo3(signature = (slots, chi = 10))]
    fn new(slots: Vec<u8>, chi: u32) -> PyResult<Self> {
        Ok(Self { inner: TimeTable::new(chi, slots).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: TimeTable::load(path).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn chi(&self) -> u32 {
        self.inner.chi_s()
    }

    fn slots(&self) -> Vec<u8> {
        self.inner.slots().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Converged one-to-all search tree.
#[pyclass(name = "Tree", module = "tdroute_py", frozen)]
struct PyTree {
    net: RoadNetwork,
    tree: SearchTree,
}

#[pymethods]
impl PyTree {
    #[getter]
    fn source(&self) -> u32 {
        self.tree.source.0
    }

    /// Arrival time per node; `None` where unreached.
    fn arrivals(&self) -> Vec<Option<u64>> {
        self.tree.arrivals()
    }

    fn parent_links(&self) -> Vec<Option<u32>> {
        self.tree.labels.iter().map(|l| l.parent_link.map(|p| p.0)).collect()
    }

    fn arrival(&self, node: u32) -> Option<u64> {
        self.tree.labels.get(node as usize).and_then(|l| l.d)
    }

    fn path_to(&self, target: u32) -> PyResult<Vec<u32>> {
        self.net.check_node(NodeId(target)).map_err(to_py)?;
        let path = self
            .tree
            .path_to(&self.net, NodeId(target))
            .ok_or_else(|| to_py(Error::NoPath { from: self.tree.source, to: NodeId(target) }))?;
        Ok(path.into_iter().map(|v| v.0).collect())
    }

    fn stats(&self) -> HashMap<&'static str, f64> {
        let s = &self.tree.stats;
        HashMap::from([
            ("runtime_ms", s.runtime_ms()),
            ("hdm_ms", s.hdm_ms()),
            ("atq", s.atq),
            ("dc_pct", s.dc_pct()),
            ("sc_pct", s.sc_pct()),
            ("st_pairs", s.st_pairs as f64),
            ("table_queries", s.table_queries as f64),
            ("relaxations", s.relaxations as f64),
        ])
    }
}

/// A network bound to a shared table, ready for queries.
#[pyclass(name = "Router", module = "tdroute_py", frozen)]
struct PyRouter {
    net: RoadNetwork,
    binding: TimeTableBinding,
    cfg: ApfConfig,
}

impl PyRouter {
    fn inst(&self) -> Instance<'_> {
        Instance::new(&self.net, &self.binding, &self.cfg).expect("validated at construction")
    }
}

#[pymethods]
impl PyRouter {
    #[new]
    #[pyo3(signature = (network, table, perturb = true, max_slots = None))]
    fn new(network: &PyNetwork, table: &PyTable, perturb: bool, max_slots: Option<u32>) -> PyResult<Self> {
        let chi = table.inner.chi_s();
        let binding = TimeTableBinding::shared(table.inner.clone(), perturb);
        let cfg = match max_slots {
            Some(m) => ApfConfig::new(chi, m),
            None => ApfConfig::for_binding(chi, &binding),
        }
        .map_err(to_py)?;
        Instance::new(&network.inner, &binding, &cfg).map_err(to_py)?;
        Ok(Self { net: network.inner.clone(), binding, cfg })
    }

    /// One-to-all fastest paths from `source` departing at `t0`.
    #[pyo3(signature = (source, t0, tie_break = "none"))]
    fn run(&self, py: Python<'_>, source: u32, t0: u64, tie_break: &str) -> PyResult<PyTree> {
        let mode: TieBreak = tie_break.parse().map_err(to_py)?;
        let tree = py.detach(|| run_dca(self.inst(), NodeId(source), t0, mode)).map_err(to_py)?;
        Ok(PyTree { net: self.net.clone(), tree })
    }

    /// Reference arrivals from a plain time-dependent Dijkstra.
    fn reference_arrivals(&self, py: Python<'_>, source: u32, t0: u64) -> PyResult<Vec<Option<u64>>> {
        py.detach(|| td_dijkstra(self.inst(), NodeId(source), t0)).map(|t| t.arrivals()).map_err(to_py)
    }

    /// `(delta_s, kappa, slot_queries)` for one link; `delta_s` is `None` when interrupted.
    fn through_time(&self, link: u32, t: u64) -> PyResult<(Option<u32>, u32, u32)> {
        if link as usize >= self.net.link_count() {
            return Err(PyValueError::new_err(format!("link {link} out of range")));
        }
        let l = self.net.link(LinkId(link));
        let tt = through_time(l, t, self.binding.table_for(l), &self.cfg, self.binding.query_offset(l));
        Ok((tt.completed(), tt.kappa, tt.slot_queries))
    }

    /// Best departure in `[a, b]` on a `step` grid over the whole network: `(best_t0, best_delta)`.
    fn best_departure(&self, py: Python<'_>, s: u32, t: u32, a: u64, b: u64, step: u64) -> PyResult<(u64, u64)> {
        self.net.check_node(NodeId(s)).and_then(|_| self.net.check_node(NodeId(t))).map_err(to_py)?;
        let zone = HotZone::whole(&self.net, NodeId(s), NodeId(t), (a, b));
        let r = py.detach(|| solve_bop(self.inst(), &zone, NodeId(s), NodeId(t), (a, b), step)).map_err(to_py)?;
        Ok((r.best_t0, r.best_delta))
    }

    /// Covered fraction of ordered pairs for `corners`, `perimeter` or `all` sources.
    #[pyo3(signature = (mode, t0 = 0))]
    fn coverage(&self, py: Python<'_>, mode: &str, t0: u64) -> PyResult<(usize, u64, f64)> {
        let set = match mode {
            "corners" => SourceSet::Corners,
            "perimeter" => SourceSet::Perimeter,
            "all" => SourceSet::All,
            other => return Err(PyValueError::new_err(format!("unknown coverage mode `{other}`"))),
        };
        let r = py.detach(|| run_coverage(self.inst(), &set, t0, true)).map_err(to_py)?;
        Ok((r.sources_used, r.st_pairs_covered, r.fraction))
    }
}

#[pymodule]
fn tdroute_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyTree>()?;
    m.add_class::<PyRouter>()?;
    Ok(())
}
