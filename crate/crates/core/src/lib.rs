//! Time-dependent fastest paths on road networks whose links carry circular
//! velocity tables.
//!
//! Through-times are computed by piecing a link's length through successive
//! per-slot velocities ([`apf`]). One-to-all searches run a labeling pass and
//! a correcting pass over an ordered frontier store ([`engine`], [`store`]),
//! and are cross-checked against reference searches ([`oracle`]). On top sit
//! coverage analytics, hot-zone queries and departure-time optimisation
//! ([`zones`]), the experiment harness ([`bench`]) and the `tdroute` command
//! line ([`cli`]).

pub mod apf;
pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod instance;
pub mod network;
pub mod oracle;
pub mod store;
pub mod time_domain;
pub mod zones;

pub use apf::{arrival_time, check_fifo, through_time, ApfConfig, FifoCheck, Outcome, ThroughTime};
pub use engine::{correct, hdm_label, run_dca, tie_break_parent, Label, LabelState, RunStats, SearchTree, TieBreak};
pub use error::{Error, Result};
pub use instance::Instance;
pub use network::{generate_grid, generate_grid_rect, Link, LinkId, NodeId, RoadNetwork, LENGTH_GRADES};
pub use oracle::{brute_force_all, brute_force_best_arrival, td_dijkstra};
pub use store::{PriorityStore, StoreError};
pub use time_domain::{generate_table, perturbed_query_time, TableMode, Tid, TimeTable, TimeTableBinding, VelocityGrades};
pub use zones::{
    count_st_pairs, estimate_st_pairs, extract_zone, run_coverage, solve_bop, zone_query, BopResult, CoverageReport,
    HotZone, SourceSet,
};
