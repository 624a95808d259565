//! Experiment configuration (JSON) and its expansion into concrete cells.
//!
//! ```json
//! {
//!   "grid": { "n_total": [200], "p": [1000], "rho": [0.5], "model": ["M1"] },
//!   "scenarios": [ { "kind": "S1" },
//!                  { "kind": "S2", "sparsity": [1, 3, 5] },
//!                  { "kind": "S3", "fractions": [0.3, 0.5, 0.7] } ],
//!   "gamma": { "s2": 20, "c2": 0.5 },
//!   "nuisance": { "method": "lasso", "folds": 10 },
//!   "tests": ["tilde", "pe_hard", "pe_soft"],
//!   "pe": { "lambda": 0.9, "a_np": 5.0, "r_boot": 30 },
//!   "alpha": 0.05, "replicates": 500, "master_seed": 1, "workers": 0
//! }
//! ```
//!
//! `p` is the total number of covariates, split evenly: p₁ = p₂ = p/2.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nuisance::NuisanceMethod;
use crate::penhance::{PeSettings, ThresholdKind};
use crate::qtest::TestSettings;
use crate::seed::fnv1a;
use crate::simgen::{dense_sparsity, GenConfig, Model, Scenario, DEFAULT_C2, DEFAULT_S2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Tilde,
    PeHard,
    PeSoft,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Tilde => "tilde",
            TestKind::PeHard => "pe_hard",
            TestKind::PeSoft => "pe_soft",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tilde" => Ok(TestKind::Tilde),
            "pe_hard" => Ok(TestKind::PeHard),
            "pe_soft" => Ok(TestKind::PeSoft),
            other => Err(Error::Config(format!("unknown test '{other}' (expected tilde, pe_hard, pe_soft)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Quick,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Preset::Quick),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected quick or paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_total: Vec<usize>,
    pub p: Vec<usize>,
    pub rho: Vec<f64>,
    pub model: Vec<Model>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_total: vec![200], p: vec![1000], rho: vec![0.5], model: vec![Model::M1] }
    }
}

/// A scenario with its sparsity levels: absolute counts and/or fractions of p₁.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: Scenario,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sparsity: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fractions: Vec<f64>,
}

impl ScenarioSpec {
    pub fn null() -> Self {
        ScenarioSpec { kind: Scenario::S1, sparsity: vec![], fractions: vec![] }
    }

    pub fn sparse(s: &[usize]) -> Self {
        ScenarioSpec { kind: Scenario::S2, sparsity: s.to_vec(), fractions: vec![] }
    }

    pub fn dense_fractions(f: &[f64]) -> Self {
        ScenarioSpec { kind: Scenario::S3, sparsity: vec![], fractions: f.to_vec() }
    }

    fn levels(&self, p1: usize) -> Result<Vec<usize>> {
        if self.kind == Scenario::S1 {
            return Ok(vec![0]);
        }
        let mut out = self.sparsity.clone();
        for &f in &self.fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("sparsity fraction must lie in (0, 1], got {f}")));
            }
            out.push(dense_sparsity(p1, f));
        }
        if out.is_empty() {
            return Err(Error::Config(format!("scenario {} lists no sparsity levels", self.kind.as_str())));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSpec {
    pub s2: usize,
    pub c2: f64,
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec { s2: DEFAULT_S2, c2: DEFAULT_C2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub grid: GridSpec,
    pub scenarios: Vec<ScenarioSpec>,
    pub gamma: GammaSpec,
    pub nuisance: NuisanceMethod,
    pub tests: Vec<TestKind>,
    pub pe: PeSettings,
    pub alpha: f64,
    pub replicates: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub noise_sd: f64,
    /// When false, `wall_ms` is written as 0 so output depends only on the seed.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: None,
            grid: GridSpec::default(),
            scenarios: vec![
                ScenarioSpec::null(),
                ScenarioSpec::sparse(&[1, 3, 5]),
                ScenarioSpec::dense_fractions(&[0.3, 0.5, 0.7]),
            ],
            gamma: GammaSpec::default(),
            nuisance: NuisanceMethod::default(),
            tests: vec![TestKind::Tilde],
            pe: PeSettings::default(),
            alpha: 0.05,
            replicates: 500,
            master_seed: 1,
            workers: 0,
            noise_sd: 1.0,
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Overwrites grid-level settings with a named preset.
    pub fn apply_preset(&mut self, preset: Preset) {
        self.preset = Some(preset);
        match preset {
            Preset::Quick => {
                self.replicates = 200;
                self.grid.p = vec![500, 1000];
                if let NuisanceMethod::Forest(f) = &mut self.nuisance {
                    f.trees = 50;
                }
            }
            Preset::Paper => {
                self.replicates = 500;
                self.grid = GridSpec {
                    n_total: vec![200, 300],
                    p: vec![1000, 1500, 2000],
                    rho: vec![0.5],
                    model: vec![Model::M1, Model::M2, Model::M3],
                };
                self.scenarios = ExperimentConfig::default().scenarios;
            }
        }
    }

    pub fn test_settings(&self) -> TestSettings {
        let mut enhance = Vec::new();
        if self.tests.contains(&TestKind::PeHard) {
            enhance.push(ThresholdKind::Hard);
        }
        if self.tests.contains(&TestKind::PeSoft) {
            enhance.push(ThresholdKind::Soft);
        }
        TestSettings { alpha: self.alpha, enhance, pe: self.pe.clone(), ..TestSettings::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tests.is_empty() {
            return Err(Error::Config("no tests selected".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios given".into()));
        }
        let g = &self.grid;
        if g.n_total.is_empty() || g.p.is_empty() || g.rho.is_empty() || g.model.is_empty() {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        if let Some(&p) = g.p.iter().find(|&&p| p < 4 || p % 2 == 1) {
            return Err(Error::Config(format!("p must be even and at least 4, got {p}")));
        }
        if let Some(&n) = g.n_total.iter().find(|&&n| n < crate::datamodel::MIN_TEST_ROWS) {
            return Err(Error::Config(format!("n_total must be at least 8, got {n}")));
        }
        if let Some(&r) = g.rho.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::RhoOutOfRange(r));
        }
        self.test_settings().validate()
    }

    /// Every concrete cell, in model → N → p → ρ → scenario → sparsity order.
    pub fn expand(&self) -> Result<Vec<CellSpec>> {
        self.validate()?;
        let settings = self.test_settings();
        let mut tests = self.tests.clone();
        tests.sort();
        tests.dedup();
        let mut cells = Vec::new();
        for &model in &self.grid.model {
            for &n_total in &self.grid.n_total {
                for &p in &self.grid.p {
                    for &rho in &self.grid.rho {
                        let p1 = p / 2;
                        for sc in &self.scenarios {
                            for s1 in sc.levels(p1)? {
                                let gen = GenConfig {
                                    n_total,
                                    p1,
                                    p2: p - p1,
                                    rho,
                                    model,
                                    s1,
                                    c1: sc.kind.signal(s1),
                                    s2: self.gamma.s2,
                                    c2: self.gamma.c2,
                                    seed: 0,
                                    noise_sd: self.noise_sd,
                                };
                                gen.validate()?;
                                cells.push(CellSpec {
                                    scenario: sc.kind,
                                    gen,
                                    nuisance: self.nuisance.clone(),
                                    tests: tests.clone(),
                                    settings: settings.clone(),
                                    replicates: self.replicates,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One fully concrete simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub scenario: Scenario,
    /// Data-generating configuration; its `seed` is replaced per replicate.
    pub gen: GenConfig,
    pub nuisance: NuisanceMethod,
    pub tests: Vec<TestKind>,
    pub settings: TestSettings,
    pub replicates: usize,
}

impl CellSpec {
    /// Identifier of the data-generating design; replicate seeds derive from it,
    /// so cells that differ only in estimator or test see the same datasets.
    pub fn design_id(&self) -> String {
        let g = &self.gen;
        format!(
            "{}|N={}|p1={}|p2={}|rho={:?}|{}|s1={}|c1={:?}|s2={}|c2={:?}|sd={:?}",
            g.model.as_str(),
            g.n_total,
            g.p1,
            g.p2,
            g.rho,
            self.scenario.as_str(),
            g.s1,
            g.c1,
            g.s2,
            g.c2,
            g.noise_sd
        )
    }

    pub fn design_hash(&self) -> u64 {
        fnv1a(&self.design_id())
    }

    pub fn p(&self) -> usize {
        self.gen.p1 + self.gen.p2
    }
}
