use std::path::Path;
use std::process::{Command, Output};

fn tdroute(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdroute")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tdroute(d, &["gen", "--k", "50", "--seed", "7", "--out", "g50.net"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(d.join("g50.net")).unwrap().starts_with("grid 50 2500 9800\n"));

    let o = tdroute(d, &["run", "--net", "g50.net", "--seed", "7", "--perturb", "--source", "0", "--t0", "100", "--out", "tree.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let stats: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    for key in ["runtime_ms", "atq", "dc_pct", "sc_pct", "hdm_ms", "st_pairs"] {
        assert!(stats.get(key).is_some(), "missing {key}");
    }
    let tree = std::fs::read_to_string(d.join("tree.txt")).unwrap();
    assert_eq!(tree.lines().count(), 2500);
    assert_eq!(tree.lines().next(), Some("0 100 -"));
}

#[test]
fn validate_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tdroute(d, &["gen", "--rows", "3", "--cols", "3", "--seed", "2", "--out", "tiny.net"]);
    assert_eq!(o.status.code(), Some(0));
    let o = tdroute(
        d,
        &["validate", "--net", "tiny.net", "--seed", "5", "--table-mode", "random", "--table-size", "24", "--allow-zero", "--trials", "100"],
    );
    assert_eq!(stdout(&o).trim(), "100/100 agree");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn apf_reports_delta() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("one.net"), "grid 0 2 2\n0 0 1 1000\n1 1 0 1000\n").unwrap();
    std::fs::write(d.join("flat.tbl"), "table 3 10\n11 11 11\n").unwrap();
    let o = tdroute(d, &["apf", "--net", "one.net", "--tables", "flat.tbl", "--link", "0", "--t", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["delta"], 60);
    assert_eq!(v["kappa"], 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tdroute(d, &["gen", "--k", "6", "--seed", "1", "--out", "g6.net"]);
    let o = tdroute(d, &["bop", "--net", "g6.net", "--seed", "1", "--s", "0", "--t", "35", "--window", "500:100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tdroute(d, &["run", "--net", "g6.net", "--source", "0", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tdroute(d, &["run", "--net", "missing.net", "--seed", "1", "--source", "0"]);
    assert_eq!(o.status.code(), Some(2));
    // standstill everywhere but a tiny budget: the target cannot be reached
    std::fs::write(d.join("stop.tbl"), "table 4 10\n0 0 0 1\n").unwrap();
    let o = tdroute(d, &["run", "--net", "g6.net", "--tables", "stop.tbl", "--max-slots", "2", "--source", "0", "--target", "35"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tdroute(d, &["bop", "--net", "g6.net", "--seed", "1", "--s", "0", "--t", "35", "--window", "0:600", "--step", "60"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["trials"], 11);
}

#[test]
fn zone_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tdroute(d, &["gen", "--k", "20", "--seed", "3", "--out", "g20.net", "--table-out", "g20.tbl"]);
    let o = tdroute(d, &["zone", "--net", "g20.net", "--tables", "g20.tbl", "--s", "0", "--t", "210", "--samples", "3", "--out", "z.zone"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["size"].as_u64().unwrap() <= 160);
    let o = tdroute(d, &["bop", "--net", "g20.net", "--tables", "g20.tbl", "--zone", "z.zone", "--s", "0", "--t", "210", "--window", "0:1200", "--step", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = tdroute(d, &["coverage", "--net", "g20.net", "--tables", "g20.tbl", "--mode", "corners"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["sources_used"], 4);
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tdroute(d, &["bench", "--suite", "table1", "--sizes", "10,20", "--seed", "1", "--out", "out", "--repeats", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("out/table1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("Inst.,T(ms),s-t-pairs(S),T/S(us),ATQ"));
    assert!(lines.next().unwrap().starts_with("g.10,"));
    let o = tdroute(d, &["bench", "--suite", "figures", "--sizes", "10,20", "--seed", "1", "--out", "out", "--repeats", "1"]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["figure1.csv", "figure2.csv", "figure3.csv"] {
        assert_eq!(std::fs::read_to_string(d.join("out").join(f)).unwrap().lines().count(), 3);
    }
}
