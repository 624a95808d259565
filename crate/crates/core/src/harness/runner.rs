//! Monte Carlo execution of simulation cells.
//!
//! Every (cell, replicate) pair is an independent task. Its seeds come from
//! `derive(master_seed, [design hash, replicate, attempt])`, never from the
//! order in which tasks run, so results are identical for any worker count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::penhance::growth_ratio;
use crate::qtest::{single_split_test, Rejections, TestOutcome};
use crate::seed::{derive, purpose};
use crate::simgen::generate;

use super::config::{CellSpec, ExperimentConfig, TestKind};
use super::report::ResultRow;

/// A failed replicate is redrawn with a fresh seed at most this many times.
pub const MAX_RETRIES: u64 = 3;

/// Outcome of one Monte Carlo replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    /// Redraws needed before the replicate succeeded (or gave up).
    pub retries: u64,
    pub stat_tilde: f64,
    pub stat_pe_hard: Option<f64>,
    pub stat_pe_soft: Option<f64>,
    pub reject: Rejections,
    /// Hard and soft thresholds of both folds, `[fold 1, fold 2]`.
    pub delta_hard: Option<[f64; 2]>,
    pub delta_soft: Option<[f64; 2]>,
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

impl ReplicateRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn stat(&self, test: TestKind) -> Option<f64> {
        match test {
            TestKind::Tilde => Some(self.stat_tilde),
            TestKind::PeHard => self.stat_pe_hard,
            TestKind::PeSoft => self.stat_pe_soft,
        }
    }

    pub fn rejected(&self, test: TestKind) -> Option<bool> {
        match test {
            TestKind::Tilde => Some(self.reject.tilde),
            TestKind::PeHard => self.reject.pe_hard,
            TestKind::PeSoft => self.reject.pe_soft,
        }
    }

    /// Counts the enhanced tests for which T_PE < T̃ or T̃ rejects while T_PE does not.
    pub fn dominance_violations(&self) -> usize {
        [TestKind::PeHard, TestKind::PeSoft]
            .into_iter()
            .filter(|&t| match (self.stat(t), self.rejected(t)) {
                (Some(s), Some(r)) => s < self.stat_tilde || (self.reject.tilde && !r),
                _ => false,
            })
            .count()
    }

    fn from_outcome(replicate: usize, retries: u64, o: &TestOutcome) -> Self {
        let deltas = |f: fn(&crate::qtest::FoldRecord) -> Option<f64>| -> Option<[f64; 2]> {
            match o.per_fold.as_slice() {
                [a, b] => f(a).zip(f(b)).map(|(a, b)| [a, b]),
                _ => None,
            }
        };
        ReplicateRecord {
            replicate,
            retries,
            stat_tilde: o.stat_tilde_n,
            stat_pe_hard: o.stat_pe_hard,
            stat_pe_soft: o.stat_pe_soft,
            reject: o.reject,
            delta_hard: deltas(|f| f.hard.map(|e| e.delta)),
            delta_soft: deltas(|f| f.soft.map(|e| e.delta)),
            error: None,
            elapsed_ms: 0.0,
        }
    }

    fn failed(replicate: usize, retries: u64, e: &Error) -> Self {
        ReplicateRecord {
            replicate,
            retries,
            stat_tilde: f64::NAN,
            stat_pe_hard: None,
            stat_pe_soft: None,
            reject: Rejections { tilde: false, pe_hard: None, pe_soft: None },
            delta_hard: None,
            delta_soft: None,
            error: Some(e.to_string()),
            elapsed_ms: 0.0,
        }
    }
}

/// Rejection tally of one test in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTally {
    pub test: TestKind,
    /// Successful replicates; the denominator of `err`.
    pub replicates: usize,
    pub rejections: usize,
    pub err: f64,
    pub mc_stderr: f64,
    pub mean_stat: f64,
}

impl TestTally {
    pub fn from_records(test: TestKind, records: &[ReplicateRecord]) -> Self {
        let mut replicates = 0;
        let mut rejections = 0;
        let mut sum = 0.0;
        for r in records.iter().filter(|r| r.succeeded()) {
            if let (Some(s), Some(rej)) = (r.stat(test), r.rejected(test)) {
                replicates += 1;
                rejections += rej as usize;
                sum += s;
            }
        }
        let (err, mc_stderr, mean_stat) = if replicates == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let n = replicates as f64;
            let err = rejections as f64 / n;
            (err, (err * (1.0 - err) / n).sqrt(), sum / n)
        };
        TestTally { test, replicates, rejections, err, mc_stderr, mean_stat }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub spec: CellSpec,
    pub tallies: Vec<TestTally>,
    pub records: Vec<ReplicateRecord>,
    /// Replicates that still failed after every redraw.
    pub failures: usize,
    /// Total redraws over all replicates.
    pub retries: u64,
    pub dominance_violations: usize,
    /// Summed replicate time; 0 when timing is not recorded.
    pub wall_ms: u64,
}

impl CellResult {
    fn from_records(spec: CellSpec, mut records: Vec<ReplicateRecord>, record_timing: bool) -> Self {
        if !record_timing {
            records.iter_mut().for_each(|r| r.elapsed_ms = 0.0);
        }
        let tallies = spec.tests.iter().map(|&t| TestTally::from_records(t, &records)).collect();
        let failures = records.iter().filter(|r| !r.succeeded()).count();
        let retries = records.iter().map(|r| r.retries).sum();
        let dominance_violations = records.iter().map(|r| r.dominance_violations()).sum();
        let wall_ms = if record_timing {
            records.iter().map(|r| r.elapsed_ms).sum::<f64>().round() as u64
        } else {
            0
        };
        if failures > 0 {
            log::warn!("{}: {failures} replicate(s) failed after {MAX_RETRIES} redraws", spec.design_id());
        }
        CellResult { spec, tallies, records, failures, retries, dominance_violations, wall_ms }
    }

    pub fn tally(&self, test: TestKind) -> Option<&TestTally> {
        self.tallies.iter().find(|t| t.test == test)
    }

    pub fn err(&self, test: TestKind) -> Option<f64> {
        self.tally(test).map(|t| t.err)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.tallies.iter().map(|t| ResultRow::new(self, t)).collect()
    }
}

/// Runs one replicate, redrawing data and splits on numerical failures.
pub fn run_replicate(cell: &CellSpec, master_seed: u64, replicate: usize) -> ReplicateRecord {
    let start = Instant::now();
    let hash = cell.design_hash();
    let mut attempt = 0;
    let mut record = loop {
        let seed = derive(master_seed, &[hash, replicate as u64, attempt]);
        let mut gen = cell.gen.clone();
        gen.seed = derive(seed, &[purpose::DATA]);
        let outcome = generate(&gen).and_then(|d| single_split_test(&d, &cell.nuisance, &cell.settings, seed));
        match outcome {
            Ok(o) => break ReplicateRecord::from_outcome(replicate, attempt, &o),
            Err(e) if e.is_numerical() && attempt < MAX_RETRIES => {
                log::debug!("{} replicate {replicate}: {e}; redrawing", cell.design_id());
                attempt += 1;
            }
            Err(e) => {
                log::warn!("{} replicate {replicate}: {e}", cell.design_id());
                break ReplicateRecord::failed(replicate, attempt, &e);
            }
        }
    };
    record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    record
}

fn warn_growth(cell: &CellSpec) {
    if !cell.tests.contains(&TestKind::PeHard) {
        return;
    }
    let n = cell.gen.n_total / 2;
    if let Ok(delta) = cell.settings.pe.hard_threshold(n, cell.gen.p1) {
        let ratio = growth_ratio(cell.settings.pe.a_np, delta, cell.gen.p1);
        if ratio < 1.0 {
            log::warn!(
                "{}: a*delta/sqrt(p1) = {ratio:.3} < 1, the hard-threshold enhancement may not dominate noise",
                cell.design_id()
            );
        }
    }
}

/// Runs one cell with its replicates spread over `workers` threads.
pub fn run_cell(cell: &CellSpec, master_seed: u64, workers: usize, record_timing: bool) -> CellResult {
    warn_growth(cell);
    let records = map_indexed(cell.replicates, workers, |r| run_replicate(cell, master_seed, r));
    CellResult::from_records(cell.clone(), records, record_timing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
}

impl GridResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells.iter().flat_map(|c| c.rows()).collect()
    }

    pub fn dominance_violations(&self) -> usize {
        self.cells.iter().map(|c| c.dominance_violations).sum()
    }
}

/// Expands the configuration and runs every (cell, replicate) task on one pool.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridResult> {
    let cells = cfg.expand()?;
    cells.iter().for_each(warn_growth);
    let offsets: Vec<usize> = cells
        .iter()
        .scan(0, |acc, c| {
            let start = *acc;
            *acc += c.replicates;
            Some(start)
        })
        .collect();
    let total: usize = cells.iter().map(|c| c.replicates).sum();
    log::info!("running {} cells, {total} replicates", cells.len());
    let mut records = map_indexed(total, cfg.workers, |task| {
        let ci = offsets.partition_point(|&o| o <= task) - 1;
        run_replicate(&cells[ci], cfg.master_seed, task - offsets[ci])
    })
    .into_iter();
    let cells = cells
        .into_iter()
        .map(|c| {
            let recs: Vec<ReplicateRecord> = records.by_ref().take(c.replicates).collect();
            let result = CellResult::from_records(c, recs, cfg.record_timing);
            log::info!(
                "{}: {}",
                result.spec.design_id(),
                result
                    .tallies
                    .iter()
                    .map(|t| format!("{}={:.3}", t.test.as_str(), t.err))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            result
        })
        .collect();
    Ok(GridResult { cells })
}
