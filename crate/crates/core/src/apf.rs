//! Arithmetic piecewise through-time over a link.
//!
//! A departure time `t` splits into a table index `I = t / chi` and a remainder
//! `s = t % chi`. The link length is consumed by the distance coverable in the
//! rest of the first interval, then by whole intervals, and the final partial
//! interval is resolved to whole seconds, rounding up. All arithmetic is
//! integral, so FIFO holds exactly: a later departure never arrives earlier.

use crate::error::{Error, Result};
use crate::network::Link;
use crate::time_domain::{Tid, TimeTable, TimeTableBinding};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApfConfig {
    pub tid: Tid,
    /// Maximum slots scanned by one link query before it is declared interrupted.
    pub max_slots: u32,
}

impl ApfConfig {
    pub fn new(chi_s: u32, max_slots: u32) -> Result<Self> {
        Self::with_tid(Tid::build(chi_s)?, max_slots)
    }

    pub fn with_tid(tid: Tid, max_slots: u32) -> Result<Self> {
        if max_slots == 0 {
            return Err(Error::Config("slot bound M must be at least 1".into()));
        }
        Ok(Self { tid, max_slots })
    }

    /// Standard grades with `M = 2P` for the longest table of the binding.
    pub fn for_binding(chi_s: u32, binding: &TimeTableBinding) -> Result<Self> {
        let m = (2 * binding.max_len()).min(u32::MAX as usize) as u32;
        Self::new(chi_s, m)
    }

    #[inline]
    pub fn chi_s(&self) -> u32 {
        self.tid.chi_s()
    }

    /// Checks that every table of the binding matches this configuration.
    pub fn check_binding(&self, binding: &TimeTableBinding, link_count: usize) -> Result<()> {
        if let TimeTableBinding::PerLink(tables) = binding {
            if tables.len() != link_count {
                return Err(Error::Config(format!(
                    "{} per-link tables for {link_count} links",
                    tables.len()
                )));
            }
        }
        for table in binding.tables() {
            if table.chi_s() != self.chi_s() {
                return Err(Error::Config(format!(
                    "table sampled every {} s but configuration uses {} s",
                    table.chi_s(),
                    self.chi_s()
                )));
            }
            if table.max_grade() as usize > self.tid.grade_count() {
                return Err(Error::Config(format!(
                    "table grade {} exceeds the {} configured grades",
                    table.max_grade(),
                    self.tid.grade_count()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Interrupted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThroughTime {
    /// Seconds to traverse the link; 0 when interrupted.
    pub delta_s: u32,
    /// Whole intervals consumed.
    pub kappa: u32,
    pub slot_queries: u32,
    /// Grade of the last slot queried.
    pub final_grade: u8,
    pub outcome: Outcome,
}

impl ThroughTime {
    #[inline]
    pub fn completed(&self) -> Option<u32> {
        match self.outcome {
            Outcome::Completed => Some(self.delta_s),
            Outcome::Interrupted => None,
        }
    }

    pub fn is_interrupted(&self) -> bool {
        self.outcome == Outcome::Interrupted
    }
}

/// Distance bookkeeping of one evaluation, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PieceTrace {
    /// Remainder `s` of the (query) departure time.
    pub offset_s: u32,
    pub first_m: u32,
    pub whole_m: u64,
    pub final_m: u32,
    /// Meters per interval of the final slot.
    pub final_interval_m: u32,
    /// `final_m * chi = q * final_interval_m + r`.
    pub q: u64,
    pub r: u64,
    /// The link was covered within the first, partial interval.
    pub within_first: bool,
}

#[inline]
pub fn through_time(link: &Link, t: u64, table: &TimeTable, cfg: &ApfConfig, perturb_offset: u64) -> ThroughTime {
    through_time_traced(link, t, table, cfg, perturb_offset).0
}

pub fn through_time_traced(
    link: &Link,
    t: u64,
    table: &TimeTable,
    cfg: &ApfConfig,
    perturb_offset: u64,
) -> (ThroughTime, PieceTrace) {
    let tid = &cfg.tid;
    let chi = tid.chi_s();
    let query_t = t + perturb_offset;
    let mut index = query_t / chi as u64;
    let s = (query_t % chi as u64) as u32;
    let mut rest = link.length_m;
    let mut trace = PieceTrace { offset_s: s, ..PieceTrace::default() };
    let mut queries = 0u32;
    let mut kappa = 0u32;
    let mut head_s = 0u32;
    let mut grade = 0u8;

    if s > 0 {
        grade = table.velocity_at(index);
        queries += 1;
        let window = chi - s;
        let reach = tid.cell(window, grade);
        if rest <= reach {
            // Ends inside the first interval.
            let per = tid.per_interval(grade);
            let secs = ceil_div(rest as u64 * chi as u64, per as u64).clamp(1, window as u64) as u32;
            trace.final_m = rest;
            trace.final_interval_m = per;
            trace.q = rest as u64 * chi as u64 / per as u64;
            trace.r = rest as u64 * chi as u64 % per as u64;
            trace.within_first = true;
            let tt = ThroughTime { delta_s: secs, kappa: 0, slot_queries: queries, final_grade: grade, outcome: Outcome::Completed };
            return (tt, trace);
        }
        rest -= reach;
        trace.first_m = reach;
        head_s = window;
        index += 1;
    }

    loop {
        if queries >= cfg.max_slots {
            let tt = ThroughTime { delta_s: 0, kappa, slot_queries: queries, final_grade: grade, outcome: Outcome::Interrupted };
            return (tt, trace);
        }
        grade = table.velocity_at(index);
        queries += 1;
        let per = tid.per_interval(grade);
        if rest > per {
            rest -= per;
            trace.whole_m += per as u64;
            kappa += 1;
            index += 1;
            continue;
        }
        debug_assert!(per > 0, "a standstill slot cannot end the piecing loop");
        let num = rest as u64 * chi as u64;
        let q = num / per as u64;
        let r = num % per as u64;
        let delta = head_s as u64 + kappa as u64 * chi as u64 + q + u64::from(r > 0);
        trace.final_m = rest;
        trace.final_interval_m = per;
        trace.q = q;
        trace.r = r;
        let tt = ThroughTime {
            delta_s: delta.min(u32::MAX as u64) as u32,
            kappa,
            slot_queries: queries,
            final_grade: grade,
            outcome: Outcome::Completed,
        };
        return (tt, trace);
    }
}

#[inline]
fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Arrival time at the head of `link`, or `None` if the query was interrupted.
pub fn arrival_time(link: &Link, t: u64, binding: &TimeTableBinding, cfg: &ApfConfig) -> Option<u64> {
    let tt = through_time(link, t, binding.table_for(link), cfg, binding.query_offset(link));
    tt.completed().map(|d| t + d as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FifoCheck {
    Holds,
    Violated { arrival: u64, later_arrival: u64 },
    /// At least one of the two queries was interrupted.
    Interrupted,
}

impl FifoCheck {
    /// Interrupted comparisons count as holding.
    pub fn holds(&self) -> bool {
        !matches!(self, FifoCheck::Violated { .. })
    }
}

/// Compares arrivals for departures `t <= t_prime` over the same link.
pub fn check_fifo(link: &Link, t: u64, t_prime: u64, binding: &TimeTableBinding, cfg: &ApfConfig) -> FifoCheck {
    let (early, late) = if t <= t_prime { (t, t_prime) } else { (t_prime, t) };
    match (arrival_time(link, early, binding, cfg), arrival_time(link, late, binding, cfg)) {
        (Some(a), Some(b)) if a <= b => FifoCheck::Holds,
        (Some(a), Some(b)) => FifoCheck::Violated { arrival: a, later_arrival: b },
        _ => FifoCheck::Interrupted,
    }
}
