//! `tdroute` command line.
//!
//! Exit codes: 0 on success, 1 on domain failures (no path, zone miss, no
//! zone, no solution, oracle disagreement), 2 on usage, parse and I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::apf::{through_time, ApfConfig};
use crate::bench::{self, BenchConfig, Suite, DEFAULT_SIZES, LARGE_SIZES};
use crate::engine::{run_dca, SearchTree, TieBreak};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::network::{generate_grid, generate_grid_rect, LinkId, NodeId, RoadNetwork};
use crate::oracle::{brute_force_all, td_dijkstra, BRUTE_FORCE_MAX_NODES};
use crate::time_domain::{
    generate_table, TableMode, TimeTable, TimeTableBinding, DEFAULT_CHI_S, DEFAULT_TABLE_SIZE,
};
use crate::zones::{default_zone_cap, extract_zone, run_coverage, solve_bop, HotZone, SourceSet};

#[derive(Parser, Debug)]
#[command(name = "tdroute", version, about = "Time-dependent fastest paths on grid road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a grid network and optionally a time table.
    Gen(GenArgs),
    /// One-to-all search from a source at a departure time.
    Run(RunArgs),
    /// Through-time of a single link.
    Apf(ApfArgs),
    /// Compare the engine against the reference searches.
    Validate(ValidateArgs),
    /// Experiment suites written as CSV.
    Bench(BenchArgs),
    /// s-t pair coverage of a source set.
    Coverage(CoverageArgs),
    /// Extract a hot zone around an s-t pair.
    Zone(ZoneArgs),
    /// Best departure time for an s-t pair within a window.
    Bop(BopArgs),
}

#[derive(Args, Debug, Clone)]
struct TableArgs {
    /// Table file; when absent a table is generated from the flags below.
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long, default_value = "wave")]
    table_mode: TableMode,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = DEFAULT_CHI_S)]
    chi: u32,
    #[arg(long, default_value_t = DEFAULT_TABLE_SIZE)]
    table_size: usize,
    /// Allow standstill slots in generated tables.
    #[arg(long)]
    allow_zero: bool,
    /// Query the shared table at departure plus link length.
    #[arg(long)]
    perturb: bool,
    /// Seed for generated tables (and trial draws where a command has them).
    #[arg(long)]
    seed: Option<u64>,
    /// Slot query budget per link; defaults to twice the table length.
    #[arg(long)]
    max_slots: Option<u32>,
}

impl TableArgs {
    fn table(&self) -> Result<TimeTable> {
        match (&self.tables, self.seed) {
            (Some(path), _) => TimeTable::load(path),
            (None, Some(seed)) => generate_table(self.table_mode, self.table_size, seed, self.allow_zero, self.chi),
            (None, None) => Err(Error::InvalidArgument("pass --tables <file> or --seed <u64>".into())),
        }
    }

    fn load(&self, net: &RoadNetwork) -> Result<(TimeTableBinding, ApfConfig)> {
        let table = self.table()?;
        let chi = table.chi_s();
        let binding = TimeTableBinding::shared(table, self.perturb);
        let cfg = match self.max_slots {
            Some(m) => ApfConfig::new(chi, m)?,
            None => ApfConfig::for_binding(chi, &binding)?,
        };
        cfg.check_binding(&binding, net.link_count())?;
        Ok((binding, cfg))
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Side of a square grid.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    k: Option<usize>,
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write a time table generated with the same seed.
    #[arg(long)]
    table_out: Option<PathBuf>,
    #[arg(long, default_value = "wave")]
    table_mode: TableMode,
    #[arg(long, default_value_t = DEFAULT_CHI_S)]
    chi: u32,
    #[arg(long, default_value_t = DEFAULT_TABLE_SIZE)]
    table_size: usize,
    #[arg(long)]
    allow_zero: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long)]
    source: u32,
    #[arg(long, default_value_t = 0)]
    t0: u64,
    #[arg(long, default_value = "none")]
    tie_break: TieBreak,
    /// Tree file (`node d parent_link` per line); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the path to this node after the stats line.
    #[arg(long)]
    target: Option<u32>,
}

#[derive(Args, Debug)]
struct ApfArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long)]
    link: u32,
    #[arg(long)]
    t: u64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value = "wave")]
    mode: TableMode,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Grid side for the sampling-interval sweep.
    #[arg(long, default_value_t = 100)]
    chi_k: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Add the large sizes; also enabled by TDROUTE_LARGE=1.
    #[arg(long)]
    large: bool,
    /// Disable the query-time perturbation of the shared table.
    #[arg(long)]
    no_perturb: bool,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long, default_value = "corners")]
    mode: String,
    /// Explicit comma-separated source ids; overrides --mode.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0)]
    t0: u64,
    #[arg(long)]
    parallel: bool,
}

#[derive(Args, Debug)]
struct ZoneArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long)]
    s: u32,
    #[arg(long)]
    t: u32,
    /// Number of departure samples, spaced by --spacing from --t0.
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    t0: u64,
    #[arg(long, default_value_t = 900)]
    spacing: u64,
    /// Zone size cap; defaults to 8 sqrt(n).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BopArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
    #[arg(long)]
    s: u32,
    #[arg(long)]
    t: u32,
    /// Departure window `a:b` in seconds.
    #[arg(long)]
    window: String,
    #[arg(long, default_value_t = 60)]
    step: u64,
    /// Zone file; the whole network when absent.
    #[arg(long)]
    zone: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = execute(cli.command, &mut out);
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_domain() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(command: Command, out: &mut impl Write) -> Result<i32> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Run(a) => run(a, out),
        Command::Apf(a) => apf(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Bench(a) => bench_cmd(a, out),
        Command::Coverage(a) => coverage(a, out),
        Command::Zone(a) => zone(a, out),
        Command::Bop(a) => bop(a, out),
    }
}

fn stdout_err(e: io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn emit(out: &mut impl Write, value: serde_json::Value) -> Result<()> {
    writeln!(out, "{value}").map_err(stdout_err)
}

fn gen(a: GenArgs, out: &mut impl Write) -> Result<i32> {
    let net = match (a.k, a.rows, a.cols) {
        (Some(k), _, _) => generate_grid(k, a.seed)?,
        (None, Some(r), Some(c)) => generate_grid_rect(r, c, a.seed)?,
        _ => return Err(Error::InvalidArgument("pass --k or --rows and --cols".into())),
    };
    net.save(&a.out)?;
    if let Some(path) = &a.table_out {
        generate_table(a.table_mode, a.table_size, a.seed, a.allow_zero, a.chi)?.save(path)?;
    }
    emit(out, json!({ "net": a.out, "n": net.node_count(), "links": net.link_count(), "table": a.table_out }))?;
    Ok(0)
}

fn run(a: RunArgs, out: &mut impl Write) -> Result<i32> {
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let inst = Instance::new(&net, &binding, &cfg)?;
    let source = NodeId(a.source);
    let tree = run_dca(inst, source, a.t0, a.tie_break)?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            write_tree(&tree, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
        }
        None => write_tree(&tree, out).map_err(stdout_err)?,
    }
    let s = &tree.stats;
    emit(
        out,
        json!({
            "runtime_ms": s.runtime_ms(),
            "atq": s.atq,
            "dc_pct": s.dc_pct(),
            "sc_pct": s.sc_pct(),
            "hdm_ms": s.hdm_ms(),
            "st_pairs": s.st_pairs,
            "reached": tree.reached(),
        }),
    )?;
    if let Some(t) = a.target {
        let target = NodeId(t);
        net.check_node(target)?;
        let path = tree.path_to(&net, target).ok_or(Error::NoPath { from: source, to: target })?;
        let ids: Vec<u32> = path.iter().map(|v| v.0).collect();
        emit(out, json!({ "target": t, "arrival": tree.arrival(target), "path": ids }))?;
    }
    Ok(0)
}

fn write_tree(tree: &SearchTree, w: &mut impl Write) -> io::Result<()> {
    for (v, label) in tree.labels.iter().enumerate() {
        let d = label.d.map_or_else(|| "-".to_string(), |d| d.to_string());
        let p = label.parent_link.map_or_else(|| "-".to_string(), |l| l.0.to_string());
        writeln!(w, "{v} {d} {p}")?;
    }
    Ok(())
}

fn apf(a: ApfArgs, out: &mut impl Write) -> Result<i32> {
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let id = LinkId(a.link);
    if id.index() >= net.link_count() {
        return Err(Error::InvalidArgument(format!("link {} out of range", a.link)));
    }
    let link = net.link(id);
    let tt = through_time(link, a.t, binding.table_for(link), &cfg, binding.query_offset(link));
    emit(
        out,
        json!({
            "link": a.link,
            "t": a.t,
            "length_m": link.length_m,
            "delta": tt.completed(),
            "kappa": tt.kappa,
            "queries": tt.slot_queries,
            "interrupted": tt.is_interrupted(),
        }),
    )?;
    Ok(0)
}

fn validate(a: ValidateArgs, out: &mut impl Write) -> Result<i32> {
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let inst = Instance::new(&net, &binding, &cfg)?;
    let span = binding.max_len() as u64 * cfg.chi_s() as u64;
    let brute = net.node_count() <= BRUTE_FORCE_MAX_NODES;
    let seed = a.tables.seed.ok_or_else(|| Error::InvalidArgument("validate needs --seed".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0;
    for _ in 0..a.trials {
        let source = NodeId(rng.gen_range(0..net.node_count() as u32));
        let t0 = rng.gen_range(0..span.max(1));
        let got = run_dca(inst, source, t0, TieBreak::None)?.arrivals();
        let mut ok = got == td_dijkstra(inst, source, t0)?.arrivals();
        if brute {
            ok &= got == brute_force_all(inst, source, t0, net.node_count() - 1)?;
        }
        agree += usize::from(ok);
    }
    writeln!(out, "{agree}/{} agree", a.trials).map_err(stdout_err)?;
    Ok(if agree == a.trials { 0 } else { 1 })
}

fn large_enabled(flag: bool) -> bool {
    flag || std::env::var("TDROUTE_LARGE").is_ok_and(|v| v == "1")
}

fn bench_cmd(a: BenchArgs, out: &mut impl Write) -> Result<i32> {
    let mut sizes = a.sizes.unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    if large_enabled(a.large) {
        sizes.extend(LARGE_SIZES.iter().filter(|k| !sizes.contains(k)).collect::<Vec<_>>());
    }
    let cfg = BenchConfig {
        mode: a.mode,
        seed: a.seed,
        perturb: !a.no_perturb,
        repeats: a.repeats.max(1),
        ..BenchConfig::default()
    };
    let (files, notes) = bench::run_suite(a.suite, &sizes, a.chi_k, &cfg, &a.out)?;
    for note in notes {
        eprintln!("{note}");
    }
    for f in files {
        writeln!(out, "{}", f.display()).map_err(stdout_err)?;
    }
    Ok(0)
}

fn coverage(a: CoverageArgs, out: &mut impl Write) -> Result<i32> {
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let inst = Instance::new(&net, &binding, &cfg)?;
    let set = match a.sources {
        Some(ids) => SourceSet::Explicit(ids.into_iter().map(NodeId).collect()),
        None => match a.mode.as_str() {
            "corners" => SourceSet::Corners,
            "perimeter" => SourceSet::Perimeter,
            "all" => SourceSet::All,
            other => return Err(Error::InvalidArgument(format!("unknown coverage mode `{other}`"))),
        },
    };
    let report = run_coverage(inst, &set, a.t0, a.parallel)?;
    emit(out, serde_json::to_value(&report).expect("report serializes"))?;
    Ok(0)
}

fn zone(a: ZoneArgs, out: &mut impl Write) -> Result<i32> {
    if a.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()));
    }
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let inst = Instance::new(&net, &binding, &cfg)?;
    let s = NodeId(a.s);
    let trees = (0..a.samples as u64)
        .map(|i| run_dca(inst, s, a.t0 + i * a.spacing, TieBreak::None))
        .collect::<Result<Vec<_>>>()?;
    let cap = a.cap.unwrap_or_else(|| default_zone_cap(net.node_count()));
    let z = extract_zone(inst, &trees, s, NodeId(a.t), cap)?;
    z.save(&a.out)?;
    emit(
        out,
        json!({
            "zone": a.out,
            "size": z.len(),
            "links": z.induced_links.len(),
            "cap": cap,
            "window": [z.valid_window.0, z.valid_window.1],
        }),
    )?;
    Ok(0)
}

fn parse_window(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::InvalidArgument(format!("window must be `a:b` in seconds, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn bop(a: BopArgs, out: &mut impl Write) -> Result<i32> {
    let window = parse_window(&a.window)?;
    crate::zones::departure_grid(window, a.step)?;
    let net = RoadNetwork::load(&a.net)?;
    let (binding, cfg) = a.tables.load(&net)?;
    let inst = Instance::new(&net, &binding, &cfg)?;
    let (s, t) = (NodeId(a.s), NodeId(a.t));
    net.check_node(s)?;
    net.check_node(t)?;
    let zone = match &a.zone {
        Some(path) => HotZone::load(path, &net)?,
        None => HotZone::whole(&net, s, t, window),
    };
    let r = solve_bop(inst, &zone, s, t, window, a.step)?;
    emit(out, serde_json::to_value(r).expect("result serializes"))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("10:20").unwrap(), (10, 20));
        assert!(parse_window("10-20").is_err());
        assert!(parse_window("a:2").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["tdroute", "frobnicate"]), 2);
        assert_eq!(dispatch(["tdroute", "gen", "--k", "3"]), 2);
        assert_eq!(dispatch(["tdroute", "gen", "--k", "3", "--seed", "1", "--out", "x", "--bogus"]), 2);
    }
}
