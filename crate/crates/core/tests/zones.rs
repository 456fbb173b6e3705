use tdroute::apf::ApfConfig;
use tdroute::engine::{run_dca, TieBreak};
use tdroute::network::{generate_grid, NodeId, RoadNetwork};
use tdroute::oracle::td_dijkstra;
use tdroute::time_domain::{generate_table, TableMode, TimeTable, TimeTableBinding};
use tdroute::zones::{
    count_st_pairs, default_zone_cap, departure_grid, estimate_st_pairs, extract_zone, run_coverage, solve_bop,
    zone_query, HotZone, SourceSet,
};
use tdroute::{Error, Instance};

struct Fixture {
    net: RoadNetwork,
    binding: TimeTableBinding,
    cfg: ApfConfig,
}

impl Fixture {
    fn wave(k: usize, seed: u64) -> Self {
        let net = generate_grid(k, seed).unwrap();
        let binding = TimeTableBinding::shared(generate_table(TableMode::Wave, 8640, seed, false, 10).unwrap(), true);
        let cfg = ApfConfig::for_binding(10, &binding).unwrap();
        Self { net, binding, cfg }
    }

    fn constant(k: usize) -> Self {
        let net = generate_grid(k, 1).unwrap();
        let binding = TimeTableBinding::shared(TimeTable::constant(10, 100, 12).unwrap(), false);
        let cfg = ApfConfig::for_binding(10, &binding).unwrap();
        Self { net, binding, cfg }
    }

    fn inst(&self) -> Instance<'_> {
        Instance::new(&self.net, &self.binding, &self.cfg).unwrap()
    }
}

#[test]
fn st_pairs_on_a_path() {
    // 2x2 grid from a corner: two children at depth 1, the far corner at depth 2
    let f = Fixture::constant(2);
    let tree = run_dca(f.inst(), NodeId(0), 0, TieBreak::None).unwrap();
    assert_eq!(count_st_pairs(&f.net, &tree), 4);
    assert_eq!(estimate_st_pairs(2), 8);
    assert_eq!(estimate_st_pairs(50), 125_000);
}

#[test]
fn coverage_modes() {
    let f = Fixture::wave(5, 3);
    let all = run_coverage(f.inst(), &SourceSet::All, 0, true).unwrap();
    assert_eq!(all.fraction, 1.0);
    assert_eq!(all.sources_used, 25);
    let corner = run_coverage(f.inst(), &SourceSet::Explicit(vec![NodeId(0)]), 0, false).unwrap();
    assert!(corner.st_pairs_covered >= 24);
    let perimeter = run_coverage(f.inst(), &SourceSet::Perimeter, 0, false).unwrap();
    assert_eq!(perimeter.sources_used, 16);
    let serial = run_coverage(f.inst(), &SourceSet::Perimeter, 0, true).unwrap();
    assert_eq!(serial.st_pairs_covered, perimeter.st_pairs_covered);
}

#[test]
fn whole_zone_equals_full_search() {
    let f = Fixture::wave(12, 5);
    let inst = f.inst();
    let zone = HotZone::whole(&f.net, NodeId(3), NodeId(140), (0, 10_000));
    for t0 in [0, 777, 5000] {
        let (path, arrival) = zone_query(inst, &zone, NodeId(3), NodeId(140), t0).unwrap();
        let full = td_dijkstra(inst, NodeId(3), t0).unwrap();
        assert_eq!(Some(arrival), full.arrival(NodeId(140)));
        assert_eq!(path.first(), Some(&NodeId(3)));
        assert_eq!(path.last(), Some(&NodeId(140)));
    }
}

#[test]
fn zone_contains_sample_paths() {
    let f = Fixture::wave(20, 6);
    let inst = f.inst();
    let (s, t) = (NodeId(21), NodeId(250));
    let trees: Vec<_> = [0, 900, 1800].iter().map(|&t0| run_dca(inst, s, t0, TieBreak::None).unwrap()).collect();
    let cap = default_zone_cap(400);
    assert_eq!(cap, 160);
    let zone = extract_zone(inst, &trees, s, t, cap).unwrap();
    assert!(zone.len() <= cap);
    for tree in &trees {
        for v in tree.path_to(&f.net, t).unwrap() {
            assert!(zone.contains(v));
        }
    }
    assert!(zone.valid_window.0 == 0 && zone.valid_window.1 >= 1800);
    let (_, arrival) = zone_query(inst, &zone, s, t, 900).unwrap();
    assert_eq!(Some(arrival), trees[1].arrival(t));
}

#[test]
fn zone_errors() {
    let f = Fixture::wave(10, 2);
    let inst = f.inst();
    let tree = run_dca(inst, NodeId(0), 0, TieBreak::None).unwrap();
    // s is not an ancestor of t in a tree rooted at 0 unless it is on the path
    let miss = extract_zone(inst, std::slice::from_ref(&tree), NodeId(99), NodeId(0), 80);
    assert!(matches!(miss, Err(Error::NoZone(_))));
    let tight = extract_zone(inst, &[tree], NodeId(0), NodeId(99), 3);
    assert!(matches!(tight, Err(Error::NoZone(_))));
    // a zone that drops a cut node: only the two endpoints
    let mut zone = HotZone::whole(&f.net, NodeId(0), NodeId(99), (0, 100));
    zone.nodes = vec![NodeId(0), NodeId(99)];
    zone.induced_links.clear();
    assert!(matches!(zone_query(inst, &zone, NodeId(0), NodeId(99), 0), Err(Error::ZoneMiss(_))));
    assert!(matches!(zone_query(inst, &zone, NodeId(0), NodeId(99), 500), Err(Error::InvalidArgument(_))));
}

#[test]
fn zone_file_round_trip() {
    let f = Fixture::wave(10, 4);
    let inst = f.inst();
    let tree = run_dca(inst, NodeId(0), 0, TieBreak::None).unwrap();
    let zone = extract_zone(inst, &[tree], NodeId(0), NodeId(99), 40).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.zone");
    zone.save(&path).unwrap();
    let header = std::fs::read_to_string(&path).unwrap();
    assert!(header.starts_with(&format!("zone {} 0 99 ", zone.len())));
    assert_eq!(HotZone::load(&path, &f.net).unwrap(), zone);
}

#[test]
fn bop_flat_profile_picks_earliest() {
    let f = Fixture::constant(6);
    let zone = HotZone::whole(&f.net, NodeId(0), NodeId(35), (0, 1000));
    let r = solve_bop(f.inst(), &zone, NodeId(0), NodeId(35), (100, 700), 50).unwrap();
    assert_eq!(r.best_t0, 100);
    assert_eq!(r.trials, 13);
    let single = solve_bop(f.inst(), &zone, NodeId(0), NodeId(35), (100, 120), 500).unwrap();
    assert_eq!((single.best_t0, single.trials), (100, 1));
}

#[test]
fn bop_errors() {
    assert!(matches!(departure_grid((5, 4), 1), Err(Error::InvalidArgument(_))));
    assert!(matches!(departure_grid((0, 4), 0), Err(Error::InvalidArgument(_))));
    let f = Fixture::constant(4);
    let mut zone = HotZone::whole(&f.net, NodeId(0), NodeId(15), (0, 100));
    zone.nodes = vec![NodeId(0), NodeId(15)];
    zone.induced_links.clear();
    let r = solve_bop(f.inst(), &zone, NodeId(0), NodeId(15), (0, 100), 10);
    assert!(matches!(r, Err(Error::NoSolution(_))));
}
