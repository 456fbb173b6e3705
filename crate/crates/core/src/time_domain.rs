//! Dynamic domain: velocity grades, the time-interval distance lookup (TID),
//! circular velocity tables, and how tables are bound to links.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::Link;

/// Highest grade index a table may hold. Index 0 is zero velocity.
pub const MAX_GRADE: u8 = 23;

/// Wave period in slots: one hour at a 10 s sampling interval.
pub const WAVE_PERIOD_SLOTS: usize = 360;

/// One simulated day at a 10 s sampling interval.
pub const DEFAULT_TABLE_SIZE: usize = 8640;

pub const DEFAULT_CHI_S: u32 = 10;

/// Speeds in km/h for grade indices 1..=len. Grade 0 is always a standstill.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VelocityGrades {
    kph: Vec<u32>,
}

impl VelocityGrades {
    /// 23 grades, 10 km/h to 120 km/h in steps of 5.
    pub fn standard() -> Self {
        Self { kph: (0..MAX_GRADE as u32).map(|j| 10 + 5 * j).collect() }
    }

    pub fn custom(kph: Vec<u32>) -> Result<Self> {
        if kph.is_empty() || kph.len() > MAX_GRADE as usize {
            return Err(Error::Config(format!("grade count must be in 1..={MAX_GRADE}, got {}", kph.len())));
        }
        if kph.contains(&0) {
            return Err(Error::Config("grade speeds must be positive".into()));
        }
        Ok(Self { kph })
    }

    /// Number of non-zero grades.
    pub fn len(&self) -> usize {
        self.kph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kph.is_empty()
    }

    /// Speed of a grade index; 0 for the standstill grade.
    pub fn kph(&self, grade: u8) -> u32 {
        match grade {
            0 => 0,
            g => self.kph[g as usize - 1],
        }
    }
}

impl Default for VelocityGrades {
    fn default() -> Self {
        Self::standard()
    }
}

/// Distance in meters covered in `i` seconds (1..=chi) at each grade.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tid {
    chi_s: u32,
    grades: VelocityGrades,
    /// Row-major `(chi_s + 1) x (grades + 1)`; row 0 and column 0 are zero.
    cells: Vec<u32>,
}

impl Tid {
    pub fn build(chi_s: u32) -> Result<Self> {
        Self::with_grades(chi_s, VelocityGrades::standard())
    }

    pub fn with_grades(chi_s: u32, grades: VelocityGrades) -> Result<Self> {
        if !(1..=60).contains(&chi_s) {
            return Err(Error::Config(format!("sampling interval must be in 1..=60 s, got {chi_s}")));
        }
        let width = grades.len() + 1;
        let mut cells = vec![0u32; (chi_s as usize + 1) * width];
        for i in 1..=chi_s {
            for g in 1..width {
                // round-half-up of kph * 1000 * i / 3600
                let num = grades.kph(g as u8) as u64 * 1000 * i as u64;
                cells[i as usize * width + g] = ((2 * num + 3600) / 7200) as u32;
            }
        }
        Ok(Self { chi_s, grades, cells })
    }

    #[inline]
    pub fn chi_s(&self) -> u32 {
        self.chi_s
    }

    pub fn grades(&self) -> &VelocityGrades {
        &self.grades
    }

    pub fn grade_count(&self) -> usize {
        self.grades.len()
    }

    /// Meters covered in `secs` seconds at `grade`.
    #[inline]
    pub fn cell(&self, secs: u32, grade: u8) -> u32 {
        debug_assert!(secs <= self.chi_s);
        self.cells[secs as usize * (self.grades.len() + 1) + grade as usize]
    }

    /// Meters covered in one full interval at `grade`.
    #[inline]
    pub fn per_interval(&self, grade: u8) -> u32 {
        self.cell(self.chi_s, grade)
    }
}

/// Circular table of velocity grade indices, one per `chi_s`-second slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeTable {
    chi_s: u32,
    slots: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    Wave,
    Random,
}

impl std::str::FromStr for TableMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wave" => Ok(TableMode::Wave),
            "random" => Ok(TableMode::Random),
            other => Err(Error::InvalidArgument(format!("unknown table mode `{other}`"))),
        }
    }
}

impl TimeTable {
    pub fn new(chi_s: u32, slots: Vec<u8>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Config("time table needs at least one slot".into()));
        }
        if chi_s == 0 {
            return Err(Error::Config("sampling interval must be positive".into()));
        }
        if let Some(bad) = slots.iter().find(|&&g| g > MAX_GRADE) {
            return Err(Error::Config(format!("grade index {bad} outside 0..={MAX_GRADE}")));
        }
        Ok(Self { chi_s, slots })
    }

    /// Constant table: every slot holds `grade`.
    pub fn constant(chi_s: u32, len: usize, grade: u8) -> Result<Self> {
        Self::new(chi_s, vec![grade; len])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn chi_s(&self) -> u32 {
        self.chi_s
    }

    pub fn slots(&self) -> &[u8] {
        &self.slots
    }

    pub fn max_grade(&self) -> u8 {
        self.slots.iter().copied().max().unwrap_or(0)
    }

    /// Grade at an unbounded slot index; the cursor wraps modulo the table length.
    #[inline]
    pub fn velocity_at(&self, index: u64) -> u8 {
        self.slots[(index % self.slots.len() as u64) as usize]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "table {} {}", self.slots.len(), self.chi_s).map_err(io)?;
        for row in self.slots.chunks(30) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty table file"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 3 || f[0] != "table" {
            return Err(Error::parse(path, hline + 1, "expected header `table P chi_s`"));
        }
        let p: usize = f[1].parse().map_err(|_| Error::parse(path, hline + 1, "bad P"))?;
        let chi: u32 = f[2].parse().map_err(|_| Error::parse(path, hline + 1, "bad chi_s"))?;
        let mut slots = Vec::with_capacity(p);
        let mut last = hline + 1;
        for (lno, line) in lines {
            last = lno + 1;
            for tok in line.split_whitespace() {
                let g: u8 = tok
                    .parse()
                    .ok()
                    .filter(|&g| g <= MAX_GRADE)
                    .ok_or_else(|| Error::parse(path, lno + 1, format!("bad grade `{tok}`")))?;
                slots.push(g);
            }
        }
        if slots.len() != p {
            return Err(Error::parse(path, last, format!("header declares {p} slots but file has {}", slots.len())));
        }
        Self::new(chi, slots).map_err(|e| Error::parse(path, hline + 1, e.to_string()))
    }
}

/// Seeded table generator. Wave tables draw their phase offset from the seed.
pub fn generate_table(mode: TableMode, len: usize, seed: u64, allow_zero: bool, chi_s: u32) -> Result<TimeTable> {
    if len == 0 {
        return Err(Error::Config("table size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        TableMode::Random => {
            let lo = if allow_zero { 0 } else { 1 };
            let slots = (0..len).map(|_| rng.gen_range(lo..=MAX_GRADE)).collect();
            TimeTable::new(chi_s, slots)
        }
        TableMode::Wave => {
            let phase = rng.gen_range(0..WAVE_PERIOD_SLOTS);
            wave_table(len, WAVE_PERIOD_SLOTS as f64, phase as f64, allow_zero, chi_s)
        }
    }
}

/// Sinusoid over the full grade range: `clamp(round(12 + 11 sin(2 pi (i + phase) / period)), 1, 23)`.
/// With `allow_zero`, trough slots (grade 1) become standstills.
pub fn wave_table(len: usize, period: f64, phase: f64, allow_zero: bool, chi_s: u32) -> Result<TimeTable> {
    if period.is_nan() || period <= 0.0 {
        return Err(Error::Config("wave period must be positive".into()));
    }
    let slots = (0..len)
        .map(|i| {
            let angle = 2.0 * PI * (i as f64 + phase) / period;
            let g = (12.0 + 11.0 * angle.sin()).round().clamp(1.0, MAX_GRADE as f64) as u8;
            if allow_zero && g == 1 {
                0
            } else {
                g
            }
        })
        .collect();
    TimeTable::new(chi_s, slots)
}

/// How tables are attached to links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimeTableBinding {
    /// One table for every link. With `perturb`, the table is queried at
    /// departure time plus the link length (in seconds).
    Shared { table: Arc<TimeTable>, perturb: bool },
    /// One table per link, indexed by link id.
    PerLink(Vec<Arc<TimeTable>>),
}

impl TimeTableBinding {
    pub fn shared(table: TimeTable, perturb: bool) -> Self {
        TimeTableBinding::Shared { table: Arc::new(table), perturb }
    }

    pub fn per_link(tables: Vec<TimeTable>) -> Self {
        TimeTableBinding::PerLink(tables.into_iter().map(Arc::new).collect())
    }

    #[inline]
    pub fn table_for(&self, link: &Link) -> &TimeTable {
        match self {
            TimeTableBinding::Shared { table, .. } => table,
            TimeTableBinding::PerLink(tables) => &tables[link.id.index()],
        }
    }

    /// Offset added to the departure time when querying the table.
    #[inline]
    pub fn query_offset(&self, link: &Link) -> u64 {
        match self {
            TimeTableBinding::Shared { perturb: true, .. } => link.length_m as u64,
            _ => 0,
        }
    }

    pub fn tables(&self) -> Vec<&TimeTable> {
        match self {
            TimeTableBinding::Shared { table, .. } => vec![table],
            TimeTableBinding::PerLink(tables) => tables.iter().map(|t| &**t).collect(),
        }
    }

    /// Longest table length in the binding.
    pub fn max_len(&self) -> usize {
        self.tables().iter().map(|t| t.len()).max().unwrap_or(0)
    }

    /// Binding restricted to a subset of links, renumbered in the given order.
    pub fn restrict(&self, link_ids: &[crate::network::LinkId]) -> Self {
        match self {
            TimeTableBinding::Shared { .. } => self.clone(),
            TimeTableBinding::PerLink(tables) => {
                TimeTableBinding::PerLink(link_ids.iter().map(|l| Arc::clone(&tables[l.index()])).collect())
            }
        }
    }
}

/// Table query time for a departure at `t` over `link`.
pub fn perturbed_query_time(t: u64, link: &Link, binding: &TimeTableBinding) -> u64 {
    t + binding.query_offset(link)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{LinkId, NodeId};

    #[test]
    fn grades() {
        let g = VelocityGrades::standard();
        assert_eq!(g.len(), 23);
        assert_eq!(g.kph(1), 10);
        assert_eq!(g.kph(23), 120);
        assert_eq!(g.kph(0), 0);
        assert!((1..23u8).all(|j| g.kph(j + 1) - g.kph(j) == 5));
    }

    #[test]
    fn tid_values() {
        let t10 = Tid::build(10).unwrap();
        assert_eq!(t10.cell(1, 1), 3);
        assert_eq!(t10.cell(10, 7), 111);
        assert_eq!(Tid::build(1).unwrap().cell(1, 23), 33);
        assert_eq!(t10.per_interval(0), 0);
        // 60 km/h for 10 s is 166.67 m
        assert_eq!(t10.per_interval(11), 167);
    }

    #[test]
    fn tid_monotone() {
        for chi in [1, 3, 10, 60] {
            let tid = Tid::build(chi).unwrap();
            for i in 1..=chi {
                for g in 1..=MAX_GRADE {
                    assert!(tid.cell(i, g) >= tid.cell(i, g - 1));
                    assert!(tid.cell(i, g) >= tid.cell(i - 1, g));
                }
            }
        }
    }

    #[test]
    fn tid_bounds() {
        assert!(matches!(Tid::build(0), Err(Error::Config(_))));
        assert!(matches!(Tid::build(61), Err(Error::Config(_))));
    }

    #[test]
    fn wrap() {
        let table = TimeTable::new(10, (0..100).map(|i| (i % 23) as u8 + 1).collect()).unwrap();
        assert_eq!(table.velocity_at(100), table.slots()[0]);
        assert_eq!(table.velocity_at(37), table.slots()[37]);
        let small = TimeTable::new(10, vec![4, 5, 6]).unwrap();
        assert_eq!(small.velocity_at(10), 5);
        assert_eq!(small.velocity_at(u64::MAX), small.slots()[(u64::MAX % 3) as usize]);
    }

    #[test]
    fn wave_shape() {
        let t = wave_table(360, 360.0, 0.0, false, 10).unwrap();
        assert_eq!(t.slots()[90], 23);
        assert_eq!(t.slots()[270], 1);
        assert_eq!(t.slots()[0], 12);
        let gen = generate_table(TableMode::Wave, 5000, 3, false, 10).unwrap();
        assert!(gen.slots().iter().all(|&g| (1..=23).contains(&g)));
        // smooth: neighbouring slots differ by at most one grade
        assert!(gen.slots().windows(2).all(|w| w[0].abs_diff(w[1]) <= 1));
    }

    #[test]
    fn random_support() {
        let t = generate_table(TableMode::Random, 10_000, 11, false, 10).unwrap();
        assert!(t.slots().iter().all(|g| (1..=MAX_GRADE).contains(g)));
        let z = generate_table(TableMode::Random, 10_000, 11, true, 10).unwrap();
        assert!(z.slots().contains(&0));
    }

    #[test]
    fn reproducible() {
        for mode in [TableMode::Wave, TableMode::Random] {
            assert_eq!(
                generate_table(mode, 500, 7, false, 10).unwrap(),
                generate_table(mode, 500, 7, false, 10).unwrap()
            );
        }
    }

    #[test]
    fn perturbation() {
        let link = |len| Link { id: LinkId(0), from: NodeId(0), to: NodeId(1), length_m: len };
        let table = TimeTable::constant(10, 8, 5).unwrap();
        let off = TimeTableBinding::shared(table.clone(), false);
        let on = TimeTableBinding::shared(table.clone(), true);
        assert_eq!(perturbed_query_time(500, &link(250), &off), 500);
        assert_eq!(perturbed_query_time(500, &link(250), &on), 750);
        assert_eq!(perturbed_query_time(0, &link(2500), &on), 2500);
        let per = TimeTableBinding::per_link(vec![table]);
        assert_eq!(perturbed_query_time(500, &link(250), &per), 500);
    }

    #[test]
    fn table_file_errors() {
        let p = Path::new("t.tbl");
        assert!(TimeTable::parse("table 3 10\n1 2 3\n", p).is_ok());
        assert!(matches!(TimeTable::parse("table 3 10\n1 2\n", p), Err(Error::Parse { .. })));
        match TimeTable::parse("table 3 10\n1 2\n99\n", p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
