//! Experiment harness: performance, overhead, sampling-interval sweep and
//! transport statistics on square grids, plus figure data.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::apf::ApfConfig;
use crate::engine::{run_dca, SearchTree, TieBreak};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::network::{generate_grid, NodeId, RoadNetwork};
use crate::time_domain::{
    generate_table, wave_table, TableMode, TimeTable, TimeTableBinding, DEFAULT_CHI_S, DEFAULT_TABLE_SIZE,
    WAVE_PERIOD_SLOTS,
};

/// Desk-scale grid sides.
pub const DEFAULT_SIZES: [usize; 3] = [50, 100, 400];
/// Sides added by `--large`.
pub const LARGE_SIZES: [usize; 3] = [1000, 2000, 3500];
/// Sampling intervals of the sweep, coarse to fine.
pub const CHI_SWEEP: [u32; 8] = [10, 9, 8, 7, 6, 5, 4, 3];

const DAY_S: usize = 86_400;
const WAVE_PERIOD_S: f64 = 3_600.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub mode: TableMode,
    pub seed: u64,
    pub chi_s: u32,
    pub table_size: usize,
    /// Shared table queried at departure plus link length.
    pub perturb: bool,
    /// Runs per size; runtimes are the median.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: TableMode::Wave,
            seed: 0,
            chi_s: DEFAULT_CHI_S,
            table_size: DEFAULT_TABLE_SIZE,
            perturb: true,
            repeats: 1,
        }
    }
}

/// Owned network, binding and configuration of one benchmark instance.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub k: usize,
    pub net: RoadNetwork,
    pub binding: TimeTableBinding,
    pub cfg: ApfConfig,
}

impl Scenario {
    pub fn grid(k: usize, bench: &BenchConfig) -> Result<Self> {
        let net = generate_grid(k, bench.seed)?;
        let table = generate_table(bench.mode, bench.table_size, bench.seed ^ 0x7ab1e, false, bench.chi_s)?;
        Self::with_table(k, net, table, bench.perturb)
    }

    /// Grid whose table describes the same physical day at any sampling interval:
    /// one day of slots, a one-hour wave period.
    pub fn grid_resampled(k: usize, bench: &BenchConfig, chi_s: u32) -> Result<Self> {
        let net = generate_grid(k, bench.seed)?;
        let len = DAY_S / chi_s as usize;
        let table = match bench.mode {
            TableMode::Wave => {
                let mut rng = ChaCha8Rng::seed_from_u64(bench.seed ^ 0x7ab1e);
                let phase_s = rng.gen_range(0..WAVE_PERIOD_SLOTS) as f64 * DEFAULT_CHI_S as f64;
                wave_table(len, WAVE_PERIOD_S / chi_s as f64, phase_s / chi_s as f64, false, chi_s)?
            }
            TableMode::Random => generate_table(TableMode::Random, len, bench.seed ^ 0x7ab1e, false, chi_s)?,
        };
        Self::with_table(k, net, table, bench.perturb)
    }

    pub fn with_table(k: usize, net: RoadNetwork, table: TimeTable, perturb: bool) -> Result<Self> {
        let chi = table.chi_s();
        let binding = TimeTableBinding::shared(table, perturb);
        let cfg = ApfConfig::for_binding(chi, &binding)?;
        Ok(Self { k, net, binding, cfg })
    }

    pub fn instance(&self) -> Instance<'_> {
        Instance::new(&self.net, &self.binding, &self.cfg).expect("scenario is consistent")
    }

    /// Random source and a departure within one table revolution.
    pub fn random_query(&self, seed: u64) -> (NodeId, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let source = NodeId(rng.gen_range(0..self.net.node_count() as u32));
        let span = self.binding.max_len() as u64 * self.cfg.chi_s() as u64;
        (source, rng.gen_range(0..span))
    }

    /// Runs the random query `repeats` times; returns the first tree and the median runtime.
    pub fn timed_run(&self, seed: u64, repeats: usize) -> Result<(SearchTree, f64)> {
        let (source, t0) = self.random_query(seed);
        let mut times = Vec::with_capacity(repeats.max(1));
        let mut first = None;
        for _ in 0..repeats.max(1) {
            let tree = run_dca(self.instance(), source, t0, TieBreak::None)?;
            times.push(tree.stats.runtime_ms());
            first.get_or_insert(tree);
        }
        Ok((first.expect("at least one run"), median(&mut times)))
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn inst_name(k: usize) -> String {
    if k >= 1000 && k.is_multiple_of(1000) {
        format!("g.{}k", k / 1000)
    } else if k >= 1000 && k.is_multiple_of(100) {
        format!("g.{}.{}k", k / 1000, (k % 1000) / 100)
    } else {
        format!("g.{k}")
    }
}

/// Rough peak memory of one search on a k x k grid, in bytes.
pub fn estimated_bytes(k: usize) -> u64 {
    let n = (k * k) as u64;
    let e = 4 * (k as u64) * (k as u64).saturating_sub(1);
    n * 120 + e * 64
}

fn available_bytes() -> Option<u64> {
    let info = fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Sizes that fit in memory, and notes for the ones skipped.
pub fn feasible_sizes(sizes: &[usize]) -> (Vec<usize>, Vec<String>) {
    let avail = available_bytes();
    let mut keep = Vec::new();
    let mut notes = Vec::new();
    for &k in sizes {
        match avail {
            Some(a) if estimated_bytes(k) > a => notes.push(format!(
                "skipping {}: needs about {} MiB, {} MiB available",
                inst_name(k),
                estimated_bytes(k) >> 20,
                a >> 20
            )),
            _ => keep.push(k),
        }
    }
    (keep, notes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerformanceRow {
    pub inst: String,
    pub k: usize,
    pub n: usize,
    pub e: usize,
    pub runtime_ms: f64,
    pub st_pairs: u64,
    /// Runtime per s-t pair in microseconds.
    pub t_per_s_us: f64,
    pub atq: f64,
}

pub fn bench_performance(sizes: &[usize], bench: &BenchConfig) -> Result<Vec<PerformanceRow>> {
    sizes
        .iter()
        .map(|&k| {
            let sc = Scenario::grid(k, bench)?;
            let (tree, runtime_ms) = sc.timed_run(bench.seed, bench.repeats)?;
            let st_pairs = tree.stats.st_pairs;
            Ok(PerformanceRow {
                inst: inst_name(k),
                k,
                n: sc.net.node_count(),
                e: sc.net.link_count(),
                runtime_ms,
                st_pairs,
                t_per_s_us: runtime_ms * 1e3 / st_pairs.max(1) as f64,
                atq: tree.stats.atq,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadRow {
    pub inst: String,
    pub sc_pct: f64,
    pub dc_pct: f64,
    pub dc_sc: f64,
    pub hdm_ms: f64,
}

pub fn bench_overhead(sizes: &[usize], bench: &BenchConfig) -> Result<Vec<OverheadRow>> {
    sizes
        .iter()
        .map(|&k| {
            let sc = Scenario::grid(k, bench)?;
            let (tree, _) = sc.timed_run(bench.seed, bench.repeats)?;
            let s = tree.stats;
            Ok(OverheadRow {
                inst: inst_name(k),
                sc_pct: s.sc_pct(),
                dc_pct: s.dc_pct(),
                dc_sc: s.dc_nanos as f64 / s.sc_nanos.max(1) as f64,
                hdm_ms: s.hdm_ms(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiRow {
    pub chi_s: u32,
    pub atq: f64,
    pub sc_pct: f64,
    pub dc_pct: f64,
    pub dc_sc: f64,
    pub hdm_ms: f64,
}

/// Same grid and the same physical traffic day, sampled at each interval in `chis`.
pub fn bench_chi_sweep(k: usize, chis: &[u32], bench: &BenchConfig) -> Result<Vec<ChiRow>> {
    chis.iter()
        .map(|&chi| {
            let sc = Scenario::grid_resampled(k, bench, chi)?;
            let (tree, _) = sc.timed_run(bench.seed, bench.repeats)?;
            let s = tree.stats;
            Ok(ChiRow {
                chi_s: chi,
                atq: s.atq,
                sc_pct: s.sc_pct(),
                dc_pct: s.dc_pct(),
                dc_sc: s.dc_nanos as f64 / s.sc_nanos.max(1) as f64,
                hdm_ms: s.hdm_ms(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportRow {
    pub inst: String,
    pub mean_length_m: f64,
    pub mean_kph: f64,
    /// `mean_length_m / mean_kph`, in seconds.
    pub tt_s: f64,
}

/// Length and through-time totals over the links of converged trees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkTotals {
    pub links: u64,
    pub length_m: u64,
    pub through_s: u64,
}

impl LinkTotals {
    pub fn add_tree(&mut self, inst: Instance<'_>, tree: &SearchTree) {
        for l in tree.tree_links() {
            let link = inst.net.link(l);
            let du = tree.arrival(link.from).expect("tree link tail is labeled");
            let dv = tree.arrival(link.to).expect("tree link head is labeled");
            self.links += 1;
            self.length_m += link.length_m as u64;
            self.through_s += dv - du;
        }
    }

    pub fn mean_length_m(&self) -> f64 {
        self.length_m as f64 / self.links.max(1) as f64
    }

    /// Aggregate speed `sum(length) / sum(through-time)` in km/h.
    pub fn mean_kph(&self) -> f64 {
        3.6 * self.length_m as f64 / self.through_s.max(1) as f64
    }

    /// `mean_length_m / mean_kph` in seconds, which is the mean through-time per link.
    pub fn tt_s(&self) -> f64 {
        self.through_s as f64 / self.links.max(1) as f64
    }
}

/// Source and departure for the `i`-th sample of a seeded experiment.
fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x2545f4914f6cdd1d))
}

/// Link averages pooled over `repeats` random one-to-all runs per size.
pub fn bench_transport_stats(sizes: &[usize], bench: &BenchConfig) -> Result<Vec<TransportRow>> {
    sizes
        .iter()
        .map(|&k| {
            let sc = Scenario::grid(k, bench)?;
            let mut totals = LinkTotals::default();
            for i in 0..bench.repeats.max(1) {
                let (source, t0) = sc.random_query(sample_seed(bench.seed, i));
                let tree = run_dca(sc.instance(), source, t0, TieBreak::None)?;
                totals.add_tree(sc.instance(), &tree);
            }
            Ok(TransportRow {
                inst: inst_name(k),
                mean_length_m: totals.mean_length_m(),
                mean_kph: totals.mean_kph(),
                tt_s: totals.tt_s(),
            })
        })
        .collect()
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

pub fn write_table1(path: &Path, rows: &[PerformanceRow]) -> Result<()> {
    write_rows(
        path,
        &["Inst.", "T(ms)", "s-t-pairs(S)", "T/S(us)", "ATQ"],
        rows.iter().map(|r| {
            vec![
                r.inst.clone(),
                format!("{:.3}", r.runtime_ms),
                r.st_pairs.to_string(),
                format!("{:.5}", r.t_per_s_us),
                format!("{:.2}", r.atq),
            ]
        }),
    )
}

pub fn write_table2(path: &Path, rows: &[OverheadRow]) -> Result<()> {
    write_rows(
        path,
        &["Inst.", "SC", "DC", "DC/SC", "HDM(ms)"],
        rows.iter().map(|r| {
            vec![
                r.inst.clone(),
                format!("{:.2}%", r.sc_pct),
                format!("{:.2}%", r.dc_pct),
                format!("{:.2}", r.dc_sc),
                format!("{:.3}", r.hdm_ms),
            ]
        }),
    )
}

pub fn write_table3(path: &Path, rows: &[ChiRow]) -> Result<()> {
    write_rows(
        path,
        &["chi", "ATQ", "SC", "DC", "DC/SC", "HDM(ms)"],
        rows.iter().map(|r| {
            vec![
                r.chi_s.to_string(),
                format!("{:.2}", r.atq),
                format!("{:.2}%", r.sc_pct),
                format!("{:.2}%", r.dc_pct),
                format!("{:.2}", r.dc_sc),
                format!("{:.3}", r.hdm_ms),
            ]
        }),
    )
}

pub fn write_table4(path: &Path, rows: &[TransportRow]) -> Result<()> {
    write_rows(
        path,
        &["Inst.", "L (meter)", "V (kph)", "TT (L/V)(sec.)"],
        rows.iter().map(|r| {
            vec![
                r.inst.clone(),
                format!("{:.2}", r.mean_length_m),
                format!("{:.2}", r.mean_kph),
                format!("{:.2}", r.tt_s),
            ]
        }),
    )
}

/// Writes figure1.csv (n, E, runtime), figure2.csv (n, T/S) and
/// figure3.csv (n, sqrt n, ln n, runtime per node scaled by 10^4).
pub fn emit_figure_data(rows: &[PerformanceRow], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let f1 = dir.join("figure1.csv");
    let f2 = dir.join("figure2.csv");
    let f3 = dir.join("figure3.csv");
    write_rows(
        &f1,
        &["n", "E", "runtime_ms"],
        rows.iter().map(|r| vec![r.n.to_string(), r.e.to_string(), format!("{:.3}", r.runtime_ms)]),
    )?;
    write_rows(
        &f2,
        &["n", "T/S(us)"],
        rows.iter().map(|r| vec![r.n.to_string(), format!("{:.5}", r.t_per_s_us)]),
    )?;
    write_rows(
        &f3,
        &["n", "sqrt_n", "log_n", "scaled_runtime"],
        rows.iter().map(|r| {
            let n = r.n as f64;
            vec![
                r.n.to_string(),
                format!("{:.3}", n.sqrt()),
                format!("{:.3}", n.ln()),
                format!("{:.3}", r.runtime_ms / n * 1e4),
            ]
        }),
    )?;
    Ok(vec![f1, f2, f3])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Table2,
    Table3,
    Table4,
    Figures,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => Suite::Table1,
            "table2" => Suite::Table2,
            "table3" => Suite::Table3,
            "table4" => Suite::Table4,
            "figures" => Suite::Figures,
            "all" => Suite::All,
            other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        })
    }
}

/// Runs a suite and writes its CSV files into `out`. Returns the files written
/// and notes about skipped sizes.
pub fn run_suite(suite: Suite, sizes: &[usize], chi_k: usize, bench: &BenchConfig, out: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (sizes, notes) = feasible_sizes(sizes);
    let mut written = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Table1) || want(Suite::Figures) {
        let rows = bench_performance(&sizes, bench)?;
        if want(Suite::Table1) {
            let p = out.join("table1.csv");
            write_table1(&p, &rows)?;
            written.push(p);
        }
        if want(Suite::Figures) {
            written.extend(emit_figure_data(&rows, out)?);
        }
    }
    if want(Suite::Table2) {
        let p = out.join("table2.csv");
        write_table2(&p, &bench_overhead(&sizes, bench)?)?;
        written.push(p);
    }
    if want(Suite::Table3) {
        let p = out.join("table3.csv");
        write_table3(&p, &bench_chi_sweep(chi_k, &CHI_SWEEP, bench)?)?;
        written.push(p);
    }
    if want(Suite::Table4) {
        let p = out.join("table4.csv");
        write_table4(&p, &bench_transport_stats(&sizes, bench)?)?;
        written.push(p);
    }
    Ok((written, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{GridShape, Link};

    #[test]
    fn names() {
        assert_eq!(inst_name(50), "g.50");
        assert_eq!(inst_name(1000), "g.1k");
        assert_eq!(inst_name(3500), "g.3.5k");
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn constant_sixty_kph_kilometer_links() {
        // 3x3 grid, every lane 1000 m, every slot 60 km/h, aligned departure.
        let g = generate_grid(3, 1).unwrap();
        let links: Vec<Link> = g.links().iter().map(|l| Link { length_m: 1000, ..*l }).collect();
        let net = RoadNetwork::new(9, Some(GridShape { rows: 3, cols: 3 }), links).unwrap();
        let table = TimeTable::constant(10, 100, 11).unwrap();
        let sc = Scenario::with_table(3, net, table, false).unwrap();
        let tree = run_dca(sc.instance(), NodeId(0), 0, TieBreak::None).unwrap();
        let mut totals = LinkTotals::default();
        totals.add_tree(sc.instance(), &tree);
        assert_eq!(totals.links, 8);
        assert_eq!(totals.mean_length_m(), 1000.0);
        assert_eq!(totals.tt_s(), 60.0);
        assert!((totals.mean_kph() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn suite_headers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = BenchConfig { repeats: 1, ..BenchConfig::default() };
        let (files, _) = run_suite(Suite::All, &[6, 8], 6, &cfg, dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        let header = |name: &str| {
            let text = fs::read_to_string(dir.path().join(name)).unwrap();
            (text.lines().next().unwrap().to_string(), text.lines().count())
        };
        assert_eq!(header("table1.csv"), ("Inst.,T(ms),s-t-pairs(S),T/S(us),ATQ".into(), 3));
        assert_eq!(header("table2.csv"), ("Inst.,SC,DC,DC/SC,HDM(ms)".into(), 3));
        assert_eq!(header("table3.csv"), ("chi,ATQ,SC,DC,DC/SC,HDM(ms)".into(), 9));
        assert_eq!(header("table4.csv"), ("Inst.,L (meter),V (kph),TT (L/V)(sec.)".into(), 3));
        assert_eq!(header("figure3.csv"), ("n,sqrt_n,log_n,scaled_runtime".into(), 3));
    }

    #[test]
    fn reproducible_counts() {
        let cfg = BenchConfig { repeats: 1, ..BenchConfig::default() };
        let a = bench_performance(&[12], &cfg).unwrap();
        let b = bench_performance(&[12], &cfg).unwrap();
        assert_eq!((a[0].atq, a[0].st_pairs), (b[0].atq, b[0].st_pairs));
        assert_eq!(bench_transport_stats(&[12], &cfg).unwrap(), bench_transport_stats(&[12], &cfg).unwrap());
    }
}
