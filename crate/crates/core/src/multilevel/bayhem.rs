//! Hierarchical Bayesian emulator: the posterior of each level becomes
//! the prior of the next.
//!
//! Two hyperparameter regimes are supported. `SharedTheta` drives the
//! whole chain from one set θ₀, which makes sequential conditioning
//! coincide with joint conditioning on the stacked data. `PerLevelTheta`
//! gives each conditioning stage its own θ, fitted greedily on the
//! conditional likelihood of that level given everything below it.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, LevelData, MultiLevelData};
use crate::error::{Error, Result};
use crate::gp::{
    clamp_variance, fit_core, lengthscale_bounds, log_marginal_likelihood, profile_gls, CoreFit,
    Prediction,
};
use crate::kernels::{
    corr_matrix, corr_matrix_self, cov_matrix_self, Hyperparams, KernelSpec, MeanSpec,
};
use crate::multilevel::surface::{condition_level, GaussianSurface, PriorSurface};
use crate::optim::{multistart_minimize, OptimizerConfig};

const LN_2PI: f64 = 1.8378770664093453;

/// How hyperparameters are shared across the level chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaMode {
    /// One θ₀ for every level.
    SharedTheta,
    /// A fresh θ per conditioning stage, earlier stages frozen.
    PerLevelTheta,
}

impl ThetaMode {
    pub fn name(self) -> &'static str {
        match self {
            ThetaMode::SharedTheta => "shared",
            ThetaMode::PerLevelTheta => "per-level",
        }
    }
}

/// Which likelihood the shared-θ fit maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Joint likelihood of all levels (equals the stacked marginal).
    Joint,
    /// Conditional likelihood of the top level given the levels below.
    TopConditional,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Joint => "joint",
            Objective::TopConditional => "top-conditional",
        }
    }
}

/// Pieces of the conditional Gaussian of `upper` given `lower` at fixed
/// lengthscales: Cholesky of the conditional correlation, the projected
/// basis and data.
struct ConditionalParts {
    chol: Cholesky<f64, Dyn>,
    h: DMatrix<f64>,
    y: DVector<f64>,
}

fn conditional_parts(
    lower_x: &DesignMatrix,
    lower_y: &DVector<f64>,
    upper_x: &DesignMatrix,
    upper_y: &DVector<f64>,
    mean_spec: MeanSpec,
    lengthscales: &DVector<f64>,
    jitter: f64,
) -> Option<ConditionalParts> {
    let c_ll = corr_matrix_self(lower_x, lengthscales, jitter);
    let chol_ll = Cholesky::new(c_ll)?;
    let c_ul = corr_matrix(upper_x, lower_x, lengthscales);
    // A = C_ul C_ll⁻¹, via C_ll⁻¹ C_lu = Aᵀ.
    let a_t = chol_ll.solve(&c_ul.transpose());
    let mut c_cond = corr_matrix_self(upper_x, lengthscales, jitter) - &c_ul * &a_t;
    // Reject hyperparameters under which the upper design is numerically
    // determined by the lower data: the conditional law is degenerate and
    // its profiled variance blows up.
    let floor = (10.0 * jitter).max(1e-10);
    for i in 0..c_cond.nrows() {
        if c_cond[(i, i)] <= floor {
            return None;
        }
        for j in (i + 1)..c_cond.ncols() {
            let v = 0.5 * (c_cond[(i, j)] + c_cond[(j, i)]);
            c_cond[(i, j)] = v;
            c_cond[(j, i)] = v;
        }
    }
    let chol = Cholesky::new(c_cond)?;
    let h_low = mean_spec.basis_matrix(lower_x);
    let h_up = mean_spec.basis_matrix(upper_x);
    let h = h_up - a_t.transpose() * h_low;
    let y = upper_y - a_t.transpose() * lower_y;
    Some(ConditionalParts { chol, h, y })
}

/// Log conditional likelihood `log p(y_up | y_low; θ)` at fixed θ.
pub fn conditional_log_marginal_likelihood(
    lower_x: &DesignMatrix,
    lower_y: &DVector<f64>,
    upper: &LevelData,
    hp: &Hyperparams,
    mean_spec: MeanSpec,
    kernel_spec: &KernelSpec,
) -> Result<f64> {
    let parts = conditional_parts(
        lower_x,
        lower_y,
        &upper.x,
        &upper.y,
        mean_spec,
        &hp.lengthscales,
        kernel_spec.jitter,
    )
    .ok_or_else(|| {
        Error::Numerical(format!(
            "conditional covariance not positive definite at lengthscales={:?}",
            hp.lengthscales.as_slice()
        ))
    })?;
    let n = upper.len() as f64;
    let r = &parts.y - &parts.h * &hp.beta;
    let solved = parts.chol.solve(&r);
    let quad = r.dot(&solved) / hp.sigma2;
    let logdet = n * hp.sigma2.ln() + crate::gp::log_det(&parts.chol);
    Ok(-0.5 * quad - 0.5 * logdet - 0.5 * n * LN_2PI)
}

/// Maximize the concentrated conditional likelihood over lengthscales.
fn fit_conditional_core(
    lower_x: &DesignMatrix,
    lower_y: &DVector<f64>,
    upper: &LevelData,
    mean_spec: MeanSpec,
    kernel_spec: &KernelSpec,
    opt: &OptimizerConfig,
) -> Result<CoreFit> {
    let all_x = DesignMatrix::vstack(&[lower_x, &upper.x])?;
    let bounds = lengthscale_bounds(&all_x);
    let objective = |logls: &[f64]| -> f64 {
        let ls = DVector::from_iterator(logls.len(), logls.iter().map(|v| v.exp()));
        match conditional_parts(
            lower_x,
            lower_y,
            &upper.x,
            &upper.y,
            mean_spec,
            &ls,
            kernel_spec.jitter,
        ) {
            Some(parts) => match profile_gls(&parts.chol, &parts.h, &parts.y) {
                Some(p) => -p.loglik,
                None => f64::INFINITY,
            },
            None => f64::INFINITY,
        }
    };
    let (logls, _) = multistart_minimize(objective, &bounds, opt)?;
    let lengthscales = DVector::from_iterator(logls.len(), logls.iter().map(|v| v.exp()));
    let parts = conditional_parts(
        lower_x,
        lower_y,
        &upper.x,
        &upper.y,
        mean_spec,
        &lengthscales,
        kernel_spec.jitter,
    )
    .ok_or_else(|| Error::Numerical("conditional covariance singular at the optimum".into()))?;
    let p = profile_gls(&parts.chol, &parts.h, &parts.y)
        .ok_or_else(|| Error::Numerical("profiling failed at the optimum".into()))?;
    Ok(CoreFit {
        lengthscales,
        beta: p.beta,
        sigma2: p.sigma2,
    })
}

/// The hierarchical emulator for an ordered chain of fidelity levels.
pub struct BayHEmModel {
    mode: ThetaMode,
    objective: Objective,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    /// `[θ₀]` for shared mode; `[θ₀, θ₁, …, θ_{L−1}]` per level.
    hp_chain: Vec<Hyperparams>,
    data: MultiLevelData,
    top: Arc<dyn GaussianSurface>,
    log_lik: f64,
}

impl Clone for BayHEmModel {
    fn clone(&self) -> Self {
        Self {
            mode: self.mode,
            objective: self.objective,
            mean_spec: self.mean_spec,
            kernel_spec: self.kernel_spec,
            hp_chain: self.hp_chain.clone(),
            data: self.data.clone(),
            top: Arc::clone(&self.top),
            log_lik: self.log_lik,
        }
    }
}

impl BayHEmModel {
    /// Build the chain at fixed hyperparameters (no optimization).
    pub fn with_hyperparams(
        data: MultiLevelData,
        mode: ThetaMode,
        objective: Objective,
        hp_chain: Vec<Hyperparams>,
        mean_spec: MeanSpec,
        kernel_spec: KernelSpec,
    ) -> Result<Self> {
        let levels = data.level_count();
        let expected = match mode {
            ThetaMode::SharedTheta => 1,
            ThetaMode::PerLevelTheta => levels,
        };
        if hp_chain.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "hyperparameter chain",
                expected,
                got: hp_chain.len(),
            });
        }
        for hp in &hp_chain {
            if hp.input_dim() != data.input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "lengthscales",
                    expected: data.input_dim(),
                    got: hp.input_dim(),
                });
            }
        }
        let active = hp_chain.last().expect("non-empty chain").clone();
        let jitter_abs = kernel_spec.jitter * active.sigma2;
        let mut surface: Arc<dyn GaussianSurface> = Arc::new(PriorSurface::new(mean_spec, active)?);
        for level in data.levels() {
            surface = condition_level(surface, level, jitter_abs)
                .map_err(|e| e.at_level(level.level_index))?;
        }
        let log_lik = chain_log_lik(&data, mode, objective, &hp_chain, mean_spec, &kernel_spec)?;
        Ok(Self {
            mode,
            objective,
            mean_spec,
            kernel_spec,
            hp_chain,
            data,
            top: surface,
            log_lik,
        })
    }

    pub fn mode(&self) -> ThetaMode {
        self.mode
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn mean_spec(&self) -> MeanSpec {
        self.mean_spec
    }

    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.kernel_spec
    }

    pub fn hyperparam_chain(&self) -> &[Hyperparams] {
        &self.hp_chain
    }

    pub fn data(&self) -> &MultiLevelData {
        &self.data
    }

    pub fn log_lik(&self) -> f64 {
        self.log_lik
    }

    pub fn level_count(&self) -> usize {
        self.data.level_count()
    }

    pub fn input_dim(&self) -> usize {
        self.data.input_dim()
    }

    /// Top-level posterior mean and variance.
    pub fn predict(&self, xnew: &DesignMatrix, want_cov: bool) -> Result<Prediction> {
        if xnew.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "prediction inputs",
                expected: self.input_dim(),
                got: xnew.ncols(),
            });
        }
        let mean = self.top.mean(xnew);
        let scale = self.hp_chain.last().expect("non-empty chain").sigma2;
        let variance = clamp_variance(self.top.var_diag(xnew), scale);
        let covariance = want_cov.then(|| self.top.cross_cov(xnew, xnew));
        Ok(Prediction {
            mean,
            variance,
            covariance,
        })
    }

    /// Prediction at an explicit level. Only the top level is valid: the
    /// hyperparameters target the top of the hierarchy, so intermediate
    /// posteriors are not calibrated and are refused.
    pub fn predict_level(&self, level: usize, xnew: &DesignMatrix) -> Result<Prediction> {
        let top = self.data.levels().last().expect("non-empty").level_index;
        if level == top {
            return self.predict(xnew, false);
        }
        if self.data.levels().iter().any(|l| l.level_index == level) {
            return Err(Error::Unsupported(format!(
                "prediction at intermediate level {level} is not valid: hyperparameters \
                 are tuned for the top level {top} only"
            )));
        }
        Err(Error::InvalidArgument(format!(
            "level {level} is not part of this model"
        )))
    }
}

fn chain_log_lik(
    data: &MultiLevelData,
    mode: ThetaMode,
    objective: Objective,
    hp_chain: &[Hyperparams],
    mean_spec: MeanSpec,
    kernel_spec: &KernelSpec,
) -> Result<f64> {
    let non_empty: Vec<&LevelData> = data.levels().iter().filter(|l| !l.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(Error::InvalidArgument("all levels are empty".into()));
    }
    match mode {
        ThetaMode::SharedTheta => {
            let hp = &hp_chain[0];
            match objective {
                Objective::Joint => stacked_lml(&non_empty, hp, mean_spec, kernel_spec),
                Objective::TopConditional => {
                    if non_empty.len() < 2 {
                        return stacked_lml(&non_empty, hp, mean_spec, kernel_spec);
                    }
                    let (low, top) = non_empty.split_at(non_empty.len() - 1);
                    let (lx, ly) = stack(low)?;
                    conditional_log_marginal_likelihood(
                        &lx,
                        &ly,
                        top[0],
                        hp,
                        mean_spec,
                        kernel_spec,
                    )
                }
            }
        }
        ThetaMode::PerLevelTheta => {
            // Sum of per-stage objectives: level 1 marginal plus each
            // conditional p(y_l | y_{<l}; θ_{l−1}).
            let mut total =
                log_marginal_likelihood(&data.levels()[0], &hp_chain[0], mean_spec, kernel_spec)?;
            for (l, (level, hp)) in data.levels().iter().zip(hp_chain).enumerate().skip(1) {
                if level.is_empty() {
                    continue;
                }
                let lower: Vec<&LevelData> = data.levels()[..l]
                    .iter()
                    .filter(|d| !d.is_empty())
                    .collect();
                let (lx, ly) = stack(&lower)?;
                total += conditional_log_marginal_likelihood(
                    &lx,
                    &ly,
                    level,
                    hp,
                    mean_spec,
                    kernel_spec,
                )?;
            }
            Ok(total)
        }
    }
}

fn stack(levels: &[&LevelData]) -> Result<(DesignMatrix, DVector<f64>)> {
    let xs: Vec<&DesignMatrix> = levels.iter().map(|l| &l.x).collect();
    let x = DesignMatrix::vstack(&xs)?;
    let mut y = Vec::with_capacity(x.nrows());
    for l in levels {
        y.extend(l.y.iter().copied());
    }
    Ok((x, DVector::from_vec(y)))
}

fn stacked_lml(
    levels: &[&LevelData],
    hp: &Hyperparams,
    mean_spec: MeanSpec,
    kernel_spec: &KernelSpec,
) -> Result<f64> {
    let (x, y) = stack(levels)?;
    let n = y.len() as f64;
    let k = cov_matrix_self(&x, hp, kernel_spec.jitter);
    let chol = Cholesky::new(k).ok_or_else(|| {
        Error::Numerical(format!(
            "stacked covariance not positive definite at sigma2={} lengthscales={:?}",
            hp.sigma2,
            hp.lengthscales.as_slice()
        ))
    })?;
    let h = mean_spec.basis_matrix(&x);
    let r = &y - h * &hp.beta;
    let alpha = chol.solve(&r);
    Ok(-0.5 * r.dot(&alpha) - 0.5 * crate::gp::log_det(&chol) - 0.5 * n * LN_2PI)
}

/// Fit the hierarchical emulator.
pub fn fit_bayhem(
    data: &MultiLevelData,
    mode: ThetaMode,
    objective: Objective,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    opt: &OptimizerConfig,
) -> Result<BayHEmModel> {
    let non_empty: Vec<&LevelData> = data.levels().iter().filter(|l| !l.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(Error::InvalidArgument("all levels are empty".into()));
    }
    let hp_chain = match mode {
        ThetaMode::SharedTheta => {
            let core = match objective {
                Objective::TopConditional if non_empty.len() >= 2 => {
                    let (low, top) = non_empty.split_at(non_empty.len() - 1);
                    let (lx, ly) = stack(low)?;
                    fit_conditional_core(&lx, &ly, top[0], mean_spec, &kernel_spec, opt)
                        .map_err(|e| e.at_level(top[0].level_index))?
                }
                _ => {
                    let (x, y) = stack(&non_empty)?;
                    fit_core(&x, &y, &mean_spec, &kernel_spec, opt)?
                }
            };
            vec![Hyperparams {
                beta: core.beta,
                sigma2: core.sigma2,
                lengthscales: core.lengthscales,
            }]
        }
        ThetaMode::PerLevelTheta => {
            let base = &data.levels()[0];
            if base.len() < 2 {
                return Err(
                    Error::InvalidArgument("level 1 needs at least 2 points".into())
                        .at_level(base.level_index),
                );
            }
            let core = fit_core(&base.x, &base.y, &mean_spec, &kernel_spec, opt)
                .map_err(|e| e.at_level(base.level_index))?;
            let mut chain = vec![Hyperparams {
                beta: core.beta,
                sigma2: core.sigma2,
                lengthscales: core.lengthscales,
            }];
            for l in 1..data.level_count() {
                let level = &data.levels()[l];
                if level.is_empty() {
                    chain.push(chain[l - 1].clone());
                    continue;
                }
                let lower: Vec<&LevelData> = data.levels()[..l]
                    .iter()
                    .filter(|d| !d.is_empty())
                    .collect();
                let (lx, ly) = stack(&lower)?;
                let core = fit_conditional_core(&lx, &ly, level, mean_spec, &kernel_spec, opt)
                    .map_err(|e| e.at_level(level.level_index))?;
                chain.push(Hyperparams {
                    beta: core.beta,
                    sigma2: core.sigma2,
                    lengthscales: core.lengthscales,
                });
            }
            chain
        }
    };
    BayHEmModel::with_hyperparams(
        data.clone(),
        mode,
        objective,
        hp_chain,
        mean_spec,
        kernel_spec,
    )
}
