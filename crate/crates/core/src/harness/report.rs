//! CSV rows and the aligned text report.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

use super::runner::{CellResult, TestTally};

/// One CSV row: one test in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub p: usize,
    pub rho: f64,
    pub scenario: String,
    pub s1: usize,
    pub c1: f64,
    pub estimator: String,
    pub test: String,
    pub alpha: f64,
    pub replicates: usize,
    pub rejections: usize,
    /// Rejection rate, rounded to three decimals.
    #[serde(serialize_with = "three_decimals")]
    pub err: f64,
    pub mc_stderr: f64,
    pub mean_stat: f64,
    pub wall_ms: u64,
    pub retries: u64,
}

fn three_decimals<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.3}"))
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

impl ResultRow {
    pub fn new(cell: &CellResult, tally: &TestTally) -> Self {
        let g = &cell.spec.gen;
        ResultRow {
            model: g.model.as_str().to_string(),
            n_total: g.n_total,
            p: g.p1 + g.p2,
            rho: g.rho,
            scenario: cell.spec.scenario.as_str().to_string(),
            s1: g.s1,
            c1: g.c1,
            estimator: cell.spec.nuisance.short_name().to_string(),
            test: tally.test.as_str().to_string(),
            alpha: cell.spec.settings.alpha,
            replicates: tally.replicates,
            rejections: tally.rejections,
            err: round3(tally.err),
            mc_stderr: tally.mc_stderr,
            mean_stat: tally.mean_stat,
            wall_ms: cell.wall_ms,
            retries: cell.retries,
        }
    }
}

pub fn emit_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    emit_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn group_label(scenario: &str) -> &'static str {
    match scenario {
        "S1" => "Size",
        "S2" => "Power (Sparse)",
        _ => "Power (Dense)",
    }
}

/// Aligned text table: one block per (model, estimator, test, ρ), one line per
/// (N, p), columns grouped as Size | Power (Sparse) | Power (Dense).
pub fn emit_report(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no results to report".into()));
    }
    let mut columns: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let key = (r.scenario.clone(), r.s1);
        if !columns.contains(&key) {
            columns.push(key);
        }
    }
    columns.sort();

    type BlockKey = (String, String, String, u64);
    let mut blocks: BTreeMap<BlockKey, BTreeMap<(usize, usize), BTreeMap<(String, usize), f64>>> = BTreeMap::new();
    for r in rows {
        blocks
            .entry((r.model.clone(), r.estimator.clone(), r.test.clone(), r.rho.to_bits()))
            .or_default()
            .entry((r.n_total, r.p))
            .or_default()
            .insert((r.scenario.clone(), r.s1), r.err);
    }

    const W: usize = 7;
    let mut out = String::new();
    for ((model, estimator, test, rho_bits), lines) in &blocks {
        out.push_str(&format!(
            "{model}  estimator={estimator}  test={test}  rho={}\n",
            f64::from_bits(*rho_bits)
        ));
        let mut group_line = format!("{:<12}", "");
        let mut head = format!("{:<6}{:<6}", "N", "p");
        let mut i = 0;
        while i < columns.len() {
            let label = group_label(&columns[i].0);
            let span = columns[i..].iter().take_while(|c| group_label(&c.0) == label).count();
            let width = span * W;
            group_line.push_str(&format!("| {label:<w$}", w = width.saturating_sub(2).max(label.len())));
            for c in &columns[i..i + span] {
                head.push_str(&format!("{:>W$}", format!("s1={}", c.1)));
            }
            i += span;
        }
        out.push_str(group_line.trim_end());
        out.push('\n');
        out.push_str(&head);
        out.push('\n');
        for ((n, p), cells) in lines {
            let mut line = format!("{n:<6}{p:<6}");
            for c in &columns {
                match cells.get(c) {
                    Some(e) if e.is_finite() => line.push_str(&format!("{e:>W$.3}")),
                    Some(_) => line.push_str(&format!("{:>W$}", "nan")),
                    None => line.push_str(&format!("{:>W$}", "-")),
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}
