//! Replicated benchmark experiments and their reports.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::lhs::lhs_sample_scaled;
use crate::bench::rmse::{rmse, RmseVariant};
use crate::bench::testfns::TestFunction;
use crate::design::{DesignMatrix, LevelData, MultiLevelData};
use crate::error::{Error, Result};
use crate::gp::fit_gp;
use crate::kernels::{KernelSpec, MeanSpec};
use crate::multilevel::{fit_bayhem, fit_hk, fit_ko, Objective, RhoMode, ThetaMode};
use crate::optim::OptimizerConfig;

/// The emulators a benchmark can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "single")]
    SingleGp,
    #[serde(rename = "bayhem")]
    BayHem,
    #[serde(rename = "ko")]
    KennedyOHagan,
    #[serde(rename = "hk")]
    HierarchicalKriging,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SingleGp => "single",
            Method::BayHem => "bayhem",
            Method::KennedyOHagan => "ko",
            Method::HierarchicalKriging => "hk",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::SingleGp => "Single GP",
            Method::BayHem => "BayHEm",
            Method::KennedyOHagan => "K&O",
            Method::HierarchicalKriging => "HK",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Method::SingleGp),
            "bayhem" => Ok(Method::BayHem),
            "ko" => Ok(Method::KennedyOHagan),
            "hk" => Ok(Method::HierarchicalKriging),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Shared modelling choices applied to every method in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mean_spec: MeanSpec,
    pub kernel_spec: KernelSpec,
    pub opt: OptimizerConfig,
    pub bayhem_mode: ThetaMode,
    pub bayhem_objective: Objective,
    pub rho_mode: RhoMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mean_spec: MeanSpec::Linear,
            kernel_spec: KernelSpec::default(),
            opt: OptimizerConfig::default(),
            bayhem_mode: ThetaMode::SharedTheta,
            bayhem_objective: Objective::Joint,
            rho_mode: RhoMode::Fixed(1.0),
        }
    }
}

/// How the shared test set is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSetSpec {
    RandomLhs { n: usize },
    EquallySpaced { n: usize },
}

/// One benchmarked configuration: the functions per level, design sizes
/// and optional pinned designs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseConfig {
    pub label: String,
    /// Level functions, cheapest first.
    pub functions: Vec<TestFunction>,
    pub level_sizes: Vec<usize>,
    /// Designs fixed across replicates (overrides the per-replicate draw).
    pub fixed_designs: Vec<Option<DesignMatrix>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub cases: Vec<CaseConfig>,
    pub methods: Vec<Method>,
    /// Number of independent design redraws.
    pub replicates: usize,
    pub test_set: TestSetSpec,
    pub seed: u64,
    pub rmse_variant: RmseVariant,
    pub model: ModelConfig,
}

/// Aggregate of one (case, method) cell across the replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellStats {
    pub method: Method,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub failures: usize,
    /// Per-replicate RMSE, aligned with the replicate index; `None`
    /// marks a failed fit.
    pub rmse_values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub cells: Vec<CellStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub tool: String,
    pub name: String,
    pub seed: u64,
    pub replicates: usize,
    pub rmse_variant: RmseVariant,
    /// Canonical rendering of the effective configuration.
    pub config: String,
    pub config_hash: String,
    pub rows: Vec<ReportRow>,
}

impl ExperimentConfig {
    /// Validate shapes and cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be ≥ 1".into()));
        }
        if self.cases.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "experiment needs at least one case and one method".into(),
            ));
        }
        for case in &self.cases {
            if case.functions.is_empty() || case.functions.len() != case.level_sizes.len() {
                return Err(Error::InvalidArgument(format!(
                    "case '{}': functions and level sizes must align",
                    case.label
                )));
            }
            if case.fixed_designs.len() != case.functions.len() {
                return Err(Error::InvalidArgument(format!(
                    "case '{}': fixed designs must align with levels",
                    case.label
                )));
            }
            let dim = case.functions[0].dim();
            let dom = case.functions[0].domain();
            for f in &case.functions {
                if f.dim() != dim || f.domain() != dom {
                    return Err(Error::InvalidArgument(format!(
                        "case '{}': levels must share dimension and domain",
                        case.label
                    )));
                }
            }
        }
        let dim0 = self.cases[0].functions[0].dim();
        let dom0 = self.cases[0].functions[0].domain();
        for case in &self.cases {
            if case.functions[0].dim() != dim0 || case.functions[0].domain() != dom0 {
                return Err(Error::InvalidArgument(
                    "all cases must share one test-set domain".into(),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text rendering, the input of the config hash.
    pub fn canonical_string(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = write!(
            s,
            "name={};seed={};replicates={};",
            self.name, self.seed, self.replicates
        );
        let _ = write!(
            s,
            "rmse={};test={:?};",
            self.rmse_variant.name(),
            self.test_set
        );
        let _ = write!(
            s,
            "mean={};jitter={:e};restarts={};max_iters={};ftol={:e};opt_seed={};",
            self.model.mean_spec.name(),
            self.model.kernel_spec.jitter,
            self.model.opt.restarts,
            self.model.opt.max_iters,
            self.model.opt.ftol,
            self.model.opt.seed
        );
        let _ = write!(
            s,
            "mode={};objective={};rho={:?};",
            self.model.bayhem_mode.name(),
            self.model.bayhem_objective.name(),
            self.model.rho_mode
        );
        for m in &self.methods {
            let _ = write!(s, "method={};", m.name());
        }
        for c in &self.cases {
            let _ = write!(s, "case={}:", c.label);
            for (f, n) in c.functions.iter().zip(&c.level_sizes) {
                let _ = write!(s, "{}@{n},", f.name());
            }
            for d in c.fixed_designs.iter().flatten() {
                for r in d.rows_iter() {
                    for v in r {
                        let _ = write!(s, "{v:.16e} ");
                    }
                }
            }
            s.push(';');
        }
        s
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Built-in experiments with every unstated detail pinned.
    pub fn builtin(name: &str) -> Result<Self> {
        let two_level = |label: &str, fns: [TestFunction; 2], n2: usize| CaseConfig {
            label: label.to_string(),
            functions: fns.to_vec(),
            level_sizes: vec![20, n2],
            fixed_designs: vec![None, None],
        };
        match name {
            "example1" => Ok(Self {
                name: name.into(),
                cases: [20, 12, 10, 5]
                    .into_iter()
                    .map(|n2| {
                        two_level(
                            &format!("n2={n2}"),
                            [TestFunction::Ex1L1, TestFunction::Ex1L2],
                            n2,
                        )
                    })
                    .collect(),
                methods: vec![
                    Method::SingleGp,
                    Method::BayHem,
                    Method::KennedyOHagan,
                    Method::HierarchicalKriging,
                ],
                replicates: 20,
                test_set: TestSetSpec::RandomLhs { n: 10_000 },
                seed: 1,
                rmse_variant: RmseVariant::Standard,
                model: ModelConfig::default(),
            }),
            "example1-sparse" => Ok(Self {
                name: name.into(),
                cases: [1, 2]
                    .into_iter()
                    .map(|n2| {
                        two_level(
                            &format!("n2={n2}"),
                            [TestFunction::Ex1L1, TestFunction::Ex1L2],
                            n2,
                        )
                    })
                    .collect(),
                methods: vec![Method::BayHem],
                replicates: 20,
                test_set: TestSetSpec::RandomLhs { n: 10_000 },
                seed: 1,
                rmse_variant: RmseVariant::Standard,
                model: ModelConfig::default(),
            }),
            "example2-corr" => Ok(Self {
                name: name.into(),
                cases: vec![two_level(
                    "highly-correlated",
                    [TestFunction::Ex2CorrL1, TestFunction::Ex2CorrL2],
                    10,
                )],
                methods: vec![
                    Method::SingleGp,
                    Method::BayHem,
                    Method::KennedyOHagan,
                    Method::HierarchicalKriging,
                ],
                replicates: 20,
                test_set: TestSetSpec::RandomLhs { n: 10_000 },
                seed: 1,
                rmse_variant: RmseVariant::Standard,
                model: ModelConfig::default(),
            }),
            "example2-uncorr" => Ok(Self {
                name: name.into(),
                cases: vec![two_level(
                    "uncorrelated",
                    [TestFunction::Ex2UncorrL1, TestFunction::Ex2UncorrL2],
                    10,
                )],
                methods: vec![
                    Method::SingleGp,
                    Method::BayHem,
                    Method::KennedyOHagan,
                    Method::HierarchicalKriging,
                ],
                replicates: 20,
                test_set: TestSetSpec::RandomLhs { n: 10_000 },
                seed: 1,
                rmse_variant: RmseVariant::Standard,
                model: ModelConfig::default(),
            }),
            "example3" => {
                // Domain [0, 10]; the two top-level runs sit at 0.15 and
                // 0.85 of the domain, fixed so results are reproducible.
                let l2 = DesignMatrix::from_column(&[1.5, 8.5]);
                let case = |label: &str, f2: TestFunction| CaseConfig {
                    label: label.to_string(),
                    functions: vec![TestFunction::Ex3L1, f2],
                    level_sizes: vec![25, 2],
                    fixed_designs: vec![None, Some(l2.clone())],
                };
                Ok(Self {
                    name: name.into(),
                    cases: vec![
                        case("shift", TestFunction::Ex3L2Shift),
                        case("tilt", TestFunction::Ex3L2Tilt),
                        case("stretch", TestFunction::Ex3L2Stretch),
                    ],
                    methods: vec![Method::BayHem, Method::KennedyOHagan],
                    replicates: 20,
                    test_set: TestSetSpec::EquallySpaced { n: 1000 },
                    seed: 1,
                    rmse_variant: RmseVariant::Standard,
                    model: ModelConfig::default(),
                })
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown experiment '{other}'; available: example1, example1-sparse, \
                 example2-corr, example2-uncorr, example3"
            ))),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &[
            "example1",
            "example1-sparse",
            "example2-corr",
            "example2-uncorr",
            "example3",
        ]
    }
}

/// Generate the shared test design for an experiment.
fn test_design(cfg: &ExperimentConfig) -> Result<DesignMatrix> {
    let dim = cfg.cases[0].functions[0].dim();
    let (lo, hi) = cfg.cases[0].functions[0].domain();
    match cfg.test_set {
        TestSetSpec::RandomLhs { n } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0);
            lhs_sample_scaled(n, dim, lo, hi, &mut rng)
        }
        TestSetSpec::EquallySpaced { n } => {
            if dim != 1 {
                return Err(Error::InvalidArgument(
                    "equally spaced test sets are one-dimensional".into(),
                ));
            }
            if n < 2 {
                return Err(Error::InvalidArgument("test set needs n ≥ 2".into()));
            }
            let pts: Vec<f64> = (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect();
            Ok(DesignMatrix::from_column(&pts))
        }
    }
}

impl ExperimentConfig {
    /// The shared test design of this experiment.
    pub fn test_design(&self) -> Result<DesignMatrix> {
        test_design(self)
    }

    /// Training data of one (case, replicate) cell, as `run_experiment`
    /// draws it.
    pub fn draw_case_data(&self, case_idx: usize, replicate: usize) -> Result<MultiLevelData> {
        let case = self
            .cases
            .get(case_idx)
            .ok_or_else(|| Error::InvalidArgument(format!("case index {case_idx} out of range")))?;
        if replicate >= self.replicates {
            return Err(Error::InvalidArgument(format!(
                "replicate {replicate} out of range"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 + (case_idx * self.replicates + replicate) as u64);
        draw_levels(case, &mut rng)
    }
}

/// Draw one replicate's training data for a case.
fn draw_levels(case: &CaseConfig, rng: &mut ChaCha8Rng) -> Result<MultiLevelData> {
    let dim = case.functions[0].dim();
    let (lo, hi) = case.functions[0].domain();
    let mut levels = Vec::with_capacity(case.functions.len());
    for (l, (f, &n)) in case.functions.iter().zip(&case.level_sizes).enumerate() {
        let x = match &case.fixed_designs[l] {
            Some(d) => d.clone(),
            None => lhs_sample_scaled(n, dim, lo, hi, rng)?,
        };
        let y = f.eval_design(&x)?;
        levels.push(LevelData::new(x, y.iter().copied().collect(), l + 1)?);
    }
    MultiLevelData::new(levels)
}

fn fit_and_score(
    method: Method,
    data: &MultiLevelData,
    test_x: &DesignMatrix,
    truth: &DVector<f64>,
    cfg: &ExperimentConfig,
) -> Result<f64> {
    let m = &cfg.model;
    let pred = match method {
        Method::SingleGp => {
            let gp = fit_gp(data.top(), m.mean_spec, m.kernel_spec, &m.opt)?;
            gp.predict(test_x, false)?
        }
        Method::BayHem => {
            let model = fit_bayhem(
                data,
                m.bayhem_mode,
                m.bayhem_objective,
                m.mean_spec,
                m.kernel_spec,
                &m.opt,
            )?;
            model.predict(test_x, false)?
        }
        Method::KennedyOHagan => {
            let model = fit_ko(data, m.rho_mode, m.mean_spec, m.kernel_spec, &m.opt)?;
            model.predict(test_x)?
        }
        Method::HierarchicalKriging => {
            let model = fit_hk(data, m.mean_spec, m.kernel_spec, &m.opt)?;
            model.predict(test_x)?
        }
    };
    if pred.mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite prediction".into()));
    }
    rmse(&pred.mean, truth, cfg.rmse_variant)
}

/// Run every (case, method, replicate) cell and aggregate.
///
/// Replicates run in parallel; per-replicate RNG streams are derived
/// from the seed and the replicate index, so parallel and serial runs
/// produce identical reports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let test_x = test_design(cfg)?;

    let mut rows = Vec::with_capacity(cfg.cases.len());
    for (case_idx, case) in cfg.cases.iter().enumerate() {
        let truth = case
            .functions
            .last()
            .expect("validated non-empty")
            .eval_design(&test_x)?;

        let replicate_scores: Vec<Vec<Option<f64>>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(1 + (case_idx * cfg.replicates + rep) as u64);
                let data = match draw_levels(case, &mut rng) {
                    Ok(d) => d,
                    Err(_) => return vec![None; cfg.methods.len()],
                };
                cfg.methods
                    .iter()
                    .map(|&method| fit_and_score(method, &data, &test_x, &truth, cfg).ok())
                    .collect()
            })
            .collect();

        let cells = cfg
            .methods
            .iter()
            .enumerate()
            .map(|(mi, &method)| {
                let rmse_values: Vec<Option<f64>> =
                    replicate_scores.iter().map(|r| r[mi]).collect();
                let ok: Vec<f64> = rmse_values.iter().flatten().copied().collect();
                let failures = rmse_values.len() - ok.len();
                let (mean, min, max) = if ok.is_empty() {
                    (None, None, None)
                } else {
                    (
                        Some(ok.iter().sum::<f64>() / ok.len() as f64),
                        Some(ok.iter().copied().fold(f64::INFINITY, f64::min)),
                        Some(ok.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    )
                };
                CellStats {
                    method,
                    mean,
                    min,
                    max,
                    failures,
                    rmse_values,
                }
            })
            .collect();
        rows.push(ReportRow {
            label: case.label.clone(),
            cells,
        });
    }

    Ok(BenchmarkReport {
        tool: format!("bayhem {}", crate::VERSION),
        name: cfg.name.clone(),
        seed: cfg.seed,
        replicates: cfg.replicates,
        rmse_variant: cfg.rmse_variant,
        config: cfg.canonical_string(),
        config_hash: cfg.config_hash(),
        rows,
    })
}

impl BenchmarkReport {
    /// Cell lookup by case label and method.
    pub fn cell(&self, label: &str, method: Method) -> Option<&CellStats> {
        self.rows
            .iter()
            .find(|r| r.label == label)?
            .cells
            .iter()
            .find(|c| c.method == method)
    }

    /// Machine CSV: one row per case × method, 17 significant digits.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {}", self.tool);
        let _ = writeln!(s, "# experiment: {}", self.name);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# replicates: {}", self.replicates);
        let _ = writeln!(s, "# rmse_variant: {}", self.rmse_variant.name());
        let _ = writeln!(s, "# config: {}", self.config);
        let _ = writeln!(s, "# config_hash: {}", self.config_hash);
        let _ = writeln!(
            s,
            "case,method,mean_rmse,min_rmse,max_rmse,failures,replicates"
        );
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for row in &self.rows {
            for c in &row.cells {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    row.label,
                    c.method.name(),
                    fmt(c.mean),
                    fmt(c.min),
                    fmt(c.max),
                    c.failures,
                    self.replicates
                );
            }
        }
        s
    }

    /// Structured JSON mirror of the CSV fields, plus retained
    /// per-replicate values.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }

    /// Human-readable table, `mean (min, max)` cells at table precision.
    pub fn to_table(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let methods: Vec<Method> = self
            .rows
            .first()
            .map(|r| r.cells.iter().map(|c| c.method).collect())
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "experiment {} (seed {}, {} replicates, rmse {})",
            self.name,
            self.seed,
            self.replicates,
            self.rmse_variant.name()
        );
        let _ = write!(s, "{:<16}", "case");
        for m in &methods {
            let _ = write!(s, "{:<24}", m.display_name());
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{:<16}", row.label);
            for c in &row.cells {
                let cell = match (c.mean, c.min, c.max) {
                    (Some(mean), Some(min), Some(max)) => {
                        let mut t = format!("{mean:.4} ({min:.2},{max:.2})");
                        if c.failures > 0 {
                            t.push_str(&format!(" [{} failed]", c.failures));
                        }
                        t
                    }
                    _ => format!("failed ({}/{})", c.failures, self.replicates),
                };
                let _ = write!(s, "{cell:<24}");
            }
            s.push('\n');
        }
        s
    }
}
