//! Versioned model persistence.
//!
//! Models are stored as a structured JSON document carrying the method
//! tag, training data and fitted hyperparameters; loading rebuilds the
//! factorized state deterministically, so a saved model predicts
//! bit-identically to the one it came from.

use serde::{Deserialize, Serialize};

use crate::bench::Method;
use crate::design::{DesignMatrix, LevelData, MultiLevelData};
use crate::error::{Error, Result};
use crate::gp::{FittedGP, Prediction};
use crate::kernels::{Hyperparams, KernelSpec, MeanSpec};
use crate::multilevel::{
    hk_with_hyperparams, ko_with_hyperparams, BayHEmModel, HKModel, KOModel, Objective, RhoMode,
    ThetaMode,
};

/// Current model-file format version.
pub const FORMAT_VERSION: u32 = 1;

/// Provenance written into every model file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub tool: String,
    /// Canonical rendering of the effective configuration.
    pub config: String,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level_index: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl LevelRecord {
    fn from_data(d: &LevelData) -> Self {
        Self {
            level_index: d.level_index,
            x: d.x.rows_iter().map(|r| r.to_vec()).collect(),
            y: d.y.iter().copied().collect(),
        }
    }

    fn to_data(&self) -> Result<LevelData> {
        LevelData::new(
            DesignMatrix::from_rows(&self.x)?,
            self.y.clone(),
            self.level_index,
        )
    }
}

/// Method-specific fitted state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodState {
    Single {
        hyperparams: Hyperparams,
    },
    Bayhem {
        mode: ThetaMode,
        objective: Objective,
        hp_chain: Vec<Hyperparams>,
    },
    Ko {
        rho_mode: RhoMode,
        rho: Vec<f64>,
        base: Hyperparams,
        discrepancies: Vec<Hyperparams>,
    },
    Hk {
        base: Hyperparams,
        levels: Vec<Hyperparams>,
    },
}

/// The on-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub meta: ModelMeta,
    pub method: Method,
    pub mean: MeanSpec,
    pub kernel: KernelSpec,
    pub input_dim: usize,
    pub levels: Vec<LevelRecord>,
    pub state: MethodState,
}

/// Any fitted emulator, dispatching prediction by method.
#[derive(Clone)]
pub enum FittedModel {
    Single(FittedGP),
    BayHem(BayHEmModel),
    KennedyOHagan(KOModel),
    HierarchicalKriging(HKModel),
}

impl FittedModel {
    pub fn method(&self) -> Method {
        match self {
            FittedModel::Single(_) => Method::SingleGp,
            FittedModel::BayHem(_) => Method::BayHem,
            FittedModel::KennedyOHagan(_) => Method::KennedyOHagan,
            FittedModel::HierarchicalKriging(_) => Method::HierarchicalKriging,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedModel::Single(m) => m.input_dim(),
            FittedModel::BayHem(m) => m.input_dim(),
            FittedModel::KennedyOHagan(m) => m.input_dim(),
            FittedModel::HierarchicalKriging(m) => m.input_dim(),
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Prediction> {
        match self {
            FittedModel::Single(m) => m.predict(x, false),
            FittedModel::BayHem(m) => m.predict(x, false),
            FittedModel::KennedyOHagan(m) => m.predict(x),
            FittedModel::HierarchicalKriging(m) => m.predict(x),
        }
    }

    /// Designs the model was trained on, cheapest level first.
    pub fn training_designs(&self) -> Vec<&DesignMatrix> {
        match self {
            FittedModel::Single(m) => vec![m.design()],
            FittedModel::BayHem(m) => m.data().levels().iter().map(|l| &l.x).collect(),
            FittedModel::KennedyOHagan(m) => {
                let mut v = vec![m.base_gp().design()];
                v.extend(m.discrepancy_gps().iter().map(|g| g.design()));
                v
            }
            FittedModel::HierarchicalKriging(m) => {
                let mut v = vec![m.base_gp().design()];
                v.extend(m.levels().iter().map(|_| m.base_gp().design()));
                v
            }
        }
    }

    /// Short description of the fitted hyperparameters and likelihood.
    pub fn describe(&self) -> String {
        let hp_line = |tag: &str, hp: &Hyperparams| {
            format!(
                "{tag}: beta={:?} sigma2={:.6e} lengthscales={:?}",
                hp.beta.as_slice(),
                hp.sigma2,
                hp.lengthscales.as_slice()
            )
        };
        match self {
            FittedModel::Single(m) => format!(
                "{}\nlog_likelihood: {:.6}",
                hp_line("theta", m.hyperparams()),
                m.log_lik()
            ),
            FittedModel::BayHem(m) => {
                let mut s = String::new();
                for (i, hp) in m.hyperparam_chain().iter().enumerate() {
                    s.push_str(&hp_line(&format!("theta_{i}"), hp));
                    s.push('\n');
                }
                s.push_str(&format!("log_likelihood: {:.6}", m.log_lik()));
                s
            }
            FittedModel::KennedyOHagan(m) => {
                let mut s = hp_line("base", m.base_gp().hyperparams());
                for (i, gp) in m.discrepancy_gps().iter().enumerate() {
                    s.push('\n');
                    s.push_str(&hp_line(
                        &format!("discrepancy_{}", i + 2),
                        gp.hyperparams(),
                    ));
                    s.push_str(&format!(" rho={}", m.rho()[i]));
                }
                s.push_str(&format!(
                    "\nlog_likelihood: {:.6}",
                    m.base_gp().log_lik()
                        + m.discrepancy_gps().iter().map(|g| g.log_lik()).sum::<f64>()
                ));
                s
            }
            FittedModel::HierarchicalKriging(m) => {
                let mut s = hp_line("base", m.base_gp().hyperparams());
                for (i, lvl) in m.levels().iter().enumerate() {
                    s.push('\n');
                    s.push_str(&hp_line(&format!("level_{}", i + 2), lvl.hyperparams()));
                }
                s.push_str(&format!(
                    "\nlog_likelihood: {:.6}",
                    m.base_gp().log_lik() + m.levels().iter().map(|l| l.log_lik()).sum::<f64>()
                ));
                s
            }
        }
    }

    /// Serialize to the versioned document.
    pub fn to_model_file(&self, data: &MultiLevelData, meta: ModelMeta) -> ModelFile {
        let (method, mean, kernel, state) = match self {
            FittedModel::Single(m) => (
                Method::SingleGp,
                m.mean_spec(),
                *m.kernel_spec(),
                MethodState::Single {
                    hyperparams: m.hyperparams().clone(),
                },
            ),
            FittedModel::BayHem(m) => (
                Method::BayHem,
                m.mean_spec(),
                *m.kernel_spec(),
                MethodState::Bayhem {
                    mode: m.mode(),
                    objective: m.objective(),
                    hp_chain: m.hyperparam_chain().to_vec(),
                },
            ),
            FittedModel::KennedyOHagan(m) => (
                Method::KennedyOHagan,
                m.base_gp().mean_spec(),
                *m.base_gp().kernel_spec(),
                MethodState::Ko {
                    rho_mode: m.rho_mode(),
                    rho: m.rho().to_vec(),
                    base: m.base_gp().hyperparams().clone(),
                    discrepancies: m
                        .discrepancy_gps()
                        .iter()
                        .map(|g| g.hyperparams().clone())
                        .collect(),
                },
            ),
            FittedModel::HierarchicalKriging(m) => (
                Method::HierarchicalKriging,
                m.base_gp().mean_spec(),
                *m.base_gp().kernel_spec(),
                MethodState::Hk {
                    base: m.base_gp().hyperparams().clone(),
                    levels: m.levels().iter().map(|l| l.hyperparams().clone()).collect(),
                },
            ),
        };
        ModelFile {
            format_version: FORMAT_VERSION,
            meta,
            method,
            mean,
            kernel,
            input_dim: data.input_dim(),
            levels: data.levels().iter().map(LevelRecord::from_data).collect(),
            state,
        }
    }

    /// Rebuild the fitted model from a document.
    pub fn from_model_file(mf: &ModelFile) -> Result<Self> {
        if mf.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unknown model file version {} (expected {})",
                mf.format_version, FORMAT_VERSION
            )));
        }
        let levels: Result<Vec<LevelData>> = mf.levels.iter().map(|r| r.to_data()).collect();
        let data = MultiLevelData::new(levels?)?;
        match &mf.state {
            MethodState::Single { hyperparams } => Ok(FittedModel::Single(
                FittedGP::with_hyperparams(data.top(), hyperparams.clone(), mf.mean, mf.kernel)?,
            )),
            MethodState::Bayhem {
                mode,
                objective,
                hp_chain,
            } => Ok(FittedModel::BayHem(BayHEmModel::with_hyperparams(
                data,
                *mode,
                *objective,
                hp_chain.clone(),
                mf.mean,
                mf.kernel,
            )?)),
            MethodState::Ko {
                rho_mode,
                rho,
                base,
                discrepancies,
            } => Ok(FittedModel::KennedyOHagan(ko_with_hyperparams(
                &data,
                base.clone(),
                discrepancies.clone(),
                rho.clone(),
                *rho_mode,
                mf.mean,
                mf.kernel,
            )?)),
            MethodState::Hk { base, levels } => Ok(FittedModel::HierarchicalKriging(
                hk_with_hyperparams(&data, base.clone(), levels.clone(), mf.mean, mf.kernel)?,
            )),
        }
    }
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("malformed model file: {e}")))
    }
}
