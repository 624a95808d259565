//! Real-data analysis: test the designated block, then the complementary block.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::datamodel::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::nuisance::NuisanceMethod;
use crate::qtest::{multi_split_test, TestOutcome, TestSettings};
use crate::seed::derive;

/// Inputs of a real-data run.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDataRequest {
    pub data: PathBuf,
    pub response: String,
    pub x_index: PathBuf,
    pub method: NuisanceMethod,
    pub settings: TestSettings,
    pub m_splits: usize,
    pub seed: u64,
}

/// Parses an index file: 1-based positions among the predictor columns (the
/// CSV columns other than the response, in file order) or column names,
/// separated by whitespace or commas. `#` starts a comment.
pub fn parse_x_index(text: &str, predictors: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let idx = match tok.parse::<usize>() {
                Ok(i) if i >= 1 && i <= predictors.len() => i - 1,
                Ok(i) => return Err(Error::IndexOutOfRange { index: i, max: predictors.len() }),
                Err(_) => predictors
                    .iter()
                    .position(|p| p == tok)
                    .ok_or_else(|| Error::Parse(format!("x-index entry '{tok}' is neither an index nor a column name")))?,
            };
            if !out.contains(&idx) {
                out.push(idx);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("x-index file selects no columns".into()));
    }
    if out.len() == predictors.len() {
        return Err(Error::Parse("x-index file selects every predictor; Z would be empty".into()));
    }
    out.sort_unstable();
    Ok(out)
}

/// Numeric CSV with a header row, split into response, X block and Z block.
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<RawTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {}, column '{}': '{v}' is not a number", i + 1, header[j]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(RawTable { header, rows })
}

/// Loads and standardizes a dataset; X is the block selected by the index file.
pub fn load_real_data(data: &Path, response: &str, x_index: &Path) -> Result<Dataset> {
    let table = read_table(data)?;
    let resp = table
        .header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::Parse(format!("response column '{response}' not found")))?;
    let predictors: Vec<usize> = (0..table.header.len()).filter(|&j| j != resp).collect();
    let names: Vec<String> = predictors.iter().map(|&j| table.header[j].clone()).collect();
    let text = std::fs::read_to_string(x_index).map_err(|e| Error::Io(format!("{}: {e}", x_index.display())))?;
    let x_pos = parse_x_index(&text, &names)?;
    let x_cols: Vec<usize> = x_pos.iter().map(|&k| predictors[k]).collect();
    let z_cols: Vec<usize> = predictors.iter().copied().filter(|j| !x_cols.contains(j)).collect();

    let n = table.rows.len();
    let pick = |cols: &[usize]| Array2::from_shape_fn((n, cols.len()), |(i, k)| table.rows[i][cols[k]]);
    let y = Array1::from_iter(table.rows.iter().map(|r| r[resp]));
    let d = Dataset::new(pick(&x_cols), pick(&z_cols), y)?;
    standardize(&d)
}

/// p-values for both hypotheses: the X block, then the Z block with roles swapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataReport {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub m_splits: usize,
    pub estimator: String,
    pub h0: TestOutcome,
    pub h0_swapped: TestOutcome,
}

/// Formats a p-value the way results tables usually do.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

impl RealDataReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "n = {}, p1 = {}, p2 = {}, estimator = {}, splits = {}\n",
            self.n, self.p1, self.p2, self.estimator, self.m_splits
        );
        s.push_str(&format!("{:<22}{:>10}{:>12}{:>12}\n", "hypothesis", "T~n", "T_PE hard", "T_PE soft"));
        for (name, o) in [("H0:  beta_X = 0", &self.h0), ("H0': beta_Z = 0", &self.h0_swapped)] {
            let cell = |p: Option<f64>| p.map(format_p).unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "{name:<22}{:>10}{:>12}{:>12}\n",
                format_p(o.p_value),
                cell(o.p_value_pe_hard),
                cell(o.p_value_pe_soft)
            ));
        }
        s
    }
}

/// Runs the multiple-split test for the X block and for the Z block on standardized data.
pub fn run_on_dataset(d: &Dataset, method: &NuisanceMethod, settings: &TestSettings, m_splits: usize, seed: u64) -> Result<RealDataReport> {
    let h0 = multi_split_test(d, method, settings, m_splits, derive(seed, &[0]))?;
    let swapped = d.clone().swap_roles();
    let h0_swapped = multi_split_test(&swapped, method, settings, m_splits, derive(seed, &[1]))?;
    Ok(RealDataReport {
        n: d.n_rows(),
        p1: d.p1(),
        p2: d.p2(),
        m_splits,
        estimator: method.short_name().to_string(),
        h0,
        h0_swapped,
    })
}

pub fn real_data_run(req: &RealDataRequest) -> Result<RealDataReport> {
    let d = load_real_data(&req.data, &req.response, &req.x_index)?;
    run_on_dataset(&d, &req.method, &req.settings, req.m_splits, req.seed)
}
