//! Sweeps over instance spaces. Every solved instance is checked against
//! `1 ≤ IRSE ≤ 4/3` in exact arithmetic; a violation aborts the sweep.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::time::Instant;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Instance, Potential};
use crate::generators::{random_instance_from, seeded_rng};
use crate::ratio::Ratio;
use crate::solvers::{self, SolverConfig};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SearchMode {
    Exhaustive,
    Random { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Inclusive job-count range.
    pub n_range: (usize, usize),
    /// Inclusive machine-count range.
    pub m_range: (usize, usize),
    pub w_max: u64,
    pub mode: SearchMode,
}

impl SearchSpace {
    pub fn exhaustive(n_range: (usize, usize), m_range: (usize, usize), w_max: u64) -> Self {
        SearchSpace {
            n_range,
            m_range,
            w_max,
            mode: SearchMode::Exhaustive,
        }
    }

    pub fn random(n_range: (usize, usize), m_range: (usize, usize), w_max: u64, count: u64, seed: u64) -> Self {
        SearchSpace {
            n_range,
            m_range,
            w_max,
            mode: SearchMode::Random { count, seed },
        }
    }

    /// An inverted range is allowed and yields nothing.
    pub fn validate(&self) -> Result<()> {
        if self.w_max == 0 {
            return Err(Error::InvalidParameter("w_max must be at least 1".into()));
        }
        if self.n_range.0 == 0 || self.m_range.0 == 0 {
            return Err(Error::InvalidParameter("job and machine counts start at 1".into()));
        }
        Ok(())
    }

    fn is_empty(&self) -> bool {
        self.n_range.0 > self.n_range.1 || self.m_range.0 > self.m_range.1
    }
}

/// Ordering used for every list of instances in this module: job count,
/// machine count, then the nonincreasing weight vector lexicographically.
fn canonical_order(a: &Instance, b: &Instance) -> std::cmp::Ordering {
    (a.n(), a.m(), a.weights()).cmp(&(b.n(), b.m(), b.weights()))
}

/// Nonincreasing vectors over `[1, w_max]^n` in increasing lexicographic
/// order.
struct Multisets {
    current: Option<Vec<u64>>,
    w_max: u64,
}

impl Multisets {
    fn new(n: usize, w_max: u64) -> Self {
        Multisets {
            current: Some(vec![1; n]),
            w_max,
        }
    }
}

impl Iterator for Multisets {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        // rightmost position that can grow without breaking the order
        let pos = (0..next.len())
            .rev()
            .find(|&i| next[i] < self.w_max && (i == 0 || next[i] < next[i - 1]));
        if let Some(i) = pos {
            next[i] += 1;
            next[i + 1..].iter_mut().for_each(|w| *w = 1);
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Canonical instances of an exhaustive space: every nonincreasing weight
/// vector with gcd 1, for every `(n, m)` in range.
pub fn enumerate_canonical(space: &SearchSpace) -> Result<Box<dyn Iterator<Item = Instance>>> {
    space.validate()?;
    if space.mode != SearchMode::Exhaustive {
        return Err(Error::InvalidParameter("enumeration needs an exhaustive space".into()));
    }
    if space.is_empty() {
        return Ok(Box::new(std::iter::empty()));
    }
    let (n_lo, n_hi) = space.n_range;
    let (m_lo, m_hi) = space.m_range;
    let w_max = space.w_max;
    Ok(Box::new((n_lo..=n_hi).flat_map(move |n| {
        (m_lo..=m_hi).flat_map(move |m| {
            Multisets::new(n, w_max)
                .filter(|w| w.iter().fold(0u64, |g, &x| g.gcd(&x)) == 1)
                .map(move |w| Instance::new(m, w).expect("small weights"))
        })
    })))
}

/// Instances a space covers, deduplicated and in canonical order.
pub fn space_instances(space: &SearchSpace) -> Result<Vec<Instance>> {
    match space.mode {
        SearchMode::Exhaustive => Ok(enumerate_canonical(space)?.collect()),
        SearchMode::Random { count, seed } => {
            space.validate()?;
            if space.is_empty() {
                return Ok(Vec::new());
            }
            let mut rng = seeded_rng(seed);
            let mut seen = BTreeSet::new();
            for _ in 0..count {
                let n = rng.random_range(space.n_range.0..=space.n_range.1);
                let m = rng.random_range(space.m_range.0..=space.m_range.1);
                let instance = random_instance_from(&mut rng, n, m, space.w_max)?.canonicalize();
                seen.insert((instance.n(), instance.m(), instance.weights().to_vec()));
            }
            Ok(seen
                .into_iter()
                .map(|(_, m, w)| Instance::new(m, w).expect("drawn weights are valid"))
                .collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub instance: Instance,
    pub opt_makespan: u64,
    pub worst_po_makespan: u64,
    pub min_potential: Potential,
    pub irse: Ratio,
    pub nodes_explored: u64,
    pub po_count_up_to_symmetry: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchFailure {
    pub instance: Instance,
    pub error: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub workers: usize,
    pub node_limit: u64,
    /// Keep every record, not only those with IRSE above 1.
    pub keep_all: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            workers: 1,
            node_limit: solvers::DEFAULT_NODE_LIMIT,
            keep_all: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub format_version: u32,
    pub instance_count: u64,
    pub solved: u64,
    pub records_reported: u64,
    pub best: Option<SearchRecord>,
    pub failures: Vec<SearchFailure>,
    /// Only filled in on request; it would break byte-identical reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub best: Option<SearchRecord>,
    pub records: Vec<SearchRecord>,
    pub summary: SearchSummary,
}

fn four_thirds() -> Ratio {
    Ratio::new(4, 3).expect("nonzero denominator")
}

/// Solves one instance and checks the IRSE bounds.
pub fn solve_record(instance: &Instance, config: &SolverConfig) -> Result<SearchRecord> {
    let report = solvers::solve(instance, config)?;
    let irse = report.irse()?;
    if irse < Ratio::from_integer(1) || irse > four_thirds() {
        return Err(Error::BoundViolation {
            m: instance.m(),
            weights: instance.weights().to_vec(),
            irse: irse.to_string(),
        });
    }
    Ok(SearchRecord {
        instance: instance.clone(),
        opt_makespan: report.opt_makespan,
        worst_po_makespan: report.worst_po_makespan,
        min_potential: report.min_potential,
        irse,
        nodes_explored: report.nodes_explored,
        po_count_up_to_symmetry: report.po_count_up_to_symmetry,
    })
}

/// Solves every instance of the space. Instances are split into contiguous
/// chunks, one per worker, and results are concatenated in canonical order,
/// so the outcome is the same for any worker count. A node-limit overrun is
/// recorded as a failure; a bound violation aborts with an error.
pub fn run_search(space: &SearchSpace, options: &SearchOptions) -> Result<SearchOutcome> {
    let instances = space_instances(space)?;
    debug_assert!(instances.windows(2).all(|w| canonical_order(&w[0], &w[1]).is_lt()));
    let config = SolverConfig {
        node_limit: options.node_limit,
    };
    let results = solve_all(&instances, &config, options.workers);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<SearchRecord> = None;
    let mut solved = 0;
    for (instance, result) in instances.iter().zip(results) {
        match result {
            Ok(record) => {
                solved += 1;
                if best.as_ref().is_none_or(|b| record.irse > b.irse) {
                    best = Some(record.clone());
                }
                if options.keep_all || record.irse > Ratio::from_integer(1) {
                    records.push(record);
                }
            }
            Err(e @ Error::BoundViolation { .. }) => return Err(e),
            Err(e) => failures.push(SearchFailure {
                instance: instance.clone(),
                error: e.to_string(),
            }),
        }
    }
    let summary = SearchSummary {
        format_version: 1,
        instance_count: instances.len() as u64,
        solved,
        records_reported: records.len() as u64,
        best: best.clone(),
        failures,
        wall_time_ms: None,
    };
    Ok(SearchOutcome { best, records, summary })
}

/// Like [`run_search`], with the elapsed wall time in the summary.
pub fn run_search_timed(space: &SearchSpace, options: &SearchOptions) -> Result<SearchOutcome> {
    let start = Instant::now();
    let mut outcome = run_search(space, options)?;
    outcome.summary.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    Ok(outcome)
}

fn solve_all(instances: &[Instance], config: &SolverConfig, workers: usize) -> Vec<Result<SearchRecord>> {
    if instances.is_empty() {
        return Vec::new();
    }
    let workers = workers.clamp(1, instances.len());
    let chunk = instances.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|i| solve_record(i, config)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("search worker panicked"))
            .collect()
    })
}

pub const CSV_HEADER: [&str; 8] = [
    "n",
    "m",
    "weights",
    "opt_makespan",
    "worst_po_makespan",
    "irse_num",
    "irse_den",
    "nodes_explored",
];

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub n: usize,
    pub m: usize,
    /// Semicolon-joined, nonincreasing.
    pub weights: String,
    pub opt_makespan: u64,
    pub worst_po_makespan: u64,
    pub irse_num: u64,
    pub irse_den: u64,
    pub nodes_explored: u64,
}

impl From<&SearchRecord> for CsvRow {
    fn from(r: &SearchRecord) -> Self {
        let weights: Vec<String> = r.instance.weights().iter().map(|w| w.to_string()).collect();
        CsvRow {
            n: r.instance.n(),
            m: r.instance.m(),
            weights: weights.join(";"),
            opt_makespan: r.opt_makespan,
            worst_po_makespan: r.worst_po_makespan,
            irse_num: r.irse.num(),
            irse_den: r.irse.den(),
            nodes_explored: r.nodes_explored,
        }
    }
}

impl CsvRow {
    pub fn instance(&self) -> Result<Instance> {
        let weights = self
            .weights
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u64>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(self.m, weights)
    }
}

/// Writes `# format_version=1`, the header, then one row per record.
pub fn write_csv<W: Write>(records: &[SearchRecord], mut out: W) -> Result<()> {
    writeln!(out, "# format_version=1").map_err(|e| Error::Format(e.to_string()))?;
    let mut writer = csv::Writer::from_writer(out);
    if records.is_empty() {
        writer.write_record(CSV_HEADER)?;
    }
    for record in records {
        writer.serialize(CsvRow::from(record))?;
    }
    writer.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let rows = reader.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multisets_in_order() {
        let all: Vec<_> = Multisets::new(2, 3).collect();
        assert_eq!(
            all,
            vec![vec![1, 1], vec![2, 1], vec![2, 2], vec![3, 1], vec![3, 2], vec![3, 3]]
        );
        assert_eq!(Multisets::new(0, 3).count(), 1);
    }

    #[test]
    fn enumeration_examples() {
        let s = SearchSpace::exhaustive((2, 2), (2, 2), 2);
        let got: Vec<Vec<u64>> = enumerate_canonical(&s).unwrap().map(|i| i.weights().to_vec()).collect();
        assert_eq!(got, vec![vec![1, 1], vec![2, 1]]);
        let empty = SearchSpace::exhaustive((3, 2), (1, 1), 4);
        assert_eq!(enumerate_canonical(&empty).unwrap().count(), 0);
        assert!(enumerate_canonical(&SearchSpace::random((1, 2), (1, 1), 3, 5, 0)).is_err());
        assert!(enumerate_canonical(&SearchSpace::exhaustive((1, 2), (1, 1), 0)).is_err());
    }

    #[test]
    fn random_space_is_deduplicated_and_sorted() {
        let s = SearchSpace::random((1, 3), (1, 2), 2, 200, 9);
        let v = space_instances(&s).unwrap();
        assert!(v.windows(2).all(|w| canonical_order(&w[0], &w[1]).is_lt()));
        assert!(v.iter().all(|i| i.is_canonical()));
        assert_eq!(v, space_instances(&s).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let i = Instance::new(4, vec![7, 5, 5, 4, 4, 3, 3, 3]).unwrap();
        let r = solve_record(&i, &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# format_version=1\nn,m,weights,opt_makespan,worst_po_makespan,irse_num,irse_den,nodes_explored\n"
        ));
        assert!(text.contains("8,4,7;5;5;4;4;3;3;3,9,10,10,9,"));
        let rows = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, vec![CsvRow::from(&r)]);
        assert_eq!(rows[0].instance().unwrap(), i);
    }

    #[test]
    fn empty_csv_has_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# format_version=1\nn,m,weights,opt_makespan,worst_po_makespan,irse_num,irse_den,nodes_explored\n"
        );
    }

    #[test]
    fn node_limit_failures_are_not_fatal() {
        let s = SearchSpace::exhaustive((6, 6), (3, 3), 2);
        let opts = SearchOptions {
            workers: 2,
            node_limit: 3,
            keep_all: false,
        };
        let out = run_search(&s, &opts).unwrap();
        assert_eq!(
            out.summary.solved + out.summary.failures.len() as u64,
            out.summary.instance_count
        );
        assert!(!out.summary.failures.is_empty());
    }
}
