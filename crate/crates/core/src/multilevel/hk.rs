//! Hierarchical kriging: the lower level's posterior mean, scaled by a
//! fitted coefficient, is the mean trend of the next level's GP.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::design::{DesignMatrix, LevelData, MultiLevelData};
use crate::error::{Error, Result};
use crate::gp::{clamp_variance, fit_core, fit_gp, Basis, FittedGP, Prediction};
use crate::kernels::{corr_matrix, cov_matrix_self, Hyperparams, KernelSpec, MeanSpec};
use crate::optim::OptimizerConfig;

/// Basis with one precomputed regression column (the lower-level
/// predictor evaluated at the training design).
struct FixedColumnBasis {
    col: DVector<f64>,
}

impl Basis for FixedColumnBasis {
    fn matrix(&self, x: &DesignMatrix) -> Result<DMatrix<f64>> {
        if x.nrows() != self.col.len() {
            return Err(Error::DimensionMismatch {
                context: "trend column",
                expected: self.col.len(),
                got: x.nrows(),
            });
        }
        Ok(DMatrix::from_column_slice(
            self.col.len(),
            1,
            self.col.as_slice(),
        ))
    }
}

/// One scaled-trend level above the base GP.
#[derive(Debug, Clone)]
pub struct HkLevel {
    /// β holds the single trend coefficient.
    hp: Hyperparams,
    x: DesignMatrix,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_lik: f64,
}

impl HkLevel {
    pub fn coefficient(&self) -> f64 {
        self.hp.beta[0]
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn log_lik(&self) -> f64 {
        self.log_lik
    }
}

/// Fitted hierarchical kriging chain.
#[derive(Debug, Clone)]
pub struct HKModel {
    base: FittedGP,
    scaled: Vec<HkLevel>,
}

impl HKModel {
    pub fn base_gp(&self) -> &FittedGP {
        &self.base
    }

    pub fn levels(&self) -> &[HkLevel] {
        &self.scaled
    }

    pub fn level_count(&self) -> usize {
        self.scaled.len() + 1
    }

    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    /// Posterior mean of the chain at `xnew`.
    fn chain_mean(&self, xnew: &DesignMatrix) -> Result<DVector<f64>> {
        let mut mean = self.base.predict(xnew, false)?.mean;
        for lvl in &self.scaled {
            let cross = corr_matrix(xnew, &lvl.x, &lvl.hp.lengthscales) * lvl.hp.sigma2;
            mean = mean * lvl.coefficient() + cross * &lvl.alpha;
        }
        Ok(mean)
    }

    /// Standard GP prediction at the top of the chain.
    pub fn predict(&self, xnew: &DesignMatrix) -> Result<Prediction> {
        if xnew.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "prediction inputs",
                expected: self.input_dim(),
                got: xnew.ncols(),
            });
        }
        let Some(top) = self.scaled.last() else {
            return self.base.predict(xnew, false);
        };
        let mean = self.chain_mean(xnew)?;
        let cross = corr_matrix(xnew, &top.x, &top.hp.lengthscales) * top.hp.sigma2;
        let solved = top.chol.solve(&cross.transpose());
        let mut variance = DVector::from_element(xnew.nrows(), top.hp.sigma2);
        for i in 0..xnew.nrows() {
            variance[i] -= cross.row(i).dot(&solved.column(i).transpose());
        }
        Ok(Prediction {
            mean,
            variance: clamp_variance(variance, top.hp.sigma2),
            covariance: None,
        })
    }
}

fn build_level(
    level: &LevelData,
    hp: Hyperparams,
    trend: &DVector<f64>,
    kernel_spec: &KernelSpec,
) -> Result<HkLevel> {
    let k = cov_matrix_self(&level.x, &hp, kernel_spec.jitter);
    let chol = Cholesky::new(k).ok_or_else(|| {
        Error::Numerical("training covariance not positive definite".into())
            .at_level(level.level_index)
    })?;
    let resid = &level.y - trend * hp.beta[0];
    let alpha = chol.solve(&resid);
    let n = level.len() as f64;
    let log_det = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    let log_lik = -0.5 * resid.dot(&alpha) - 0.5 * log_det - 0.5 * n * 1.8378770664093453;
    Ok(HkLevel {
        hp,
        x: level.x.clone(),
        chol,
        alpha,
        log_lik,
    })
}

/// Fit the hierarchical kriging chain bottom-up.
pub fn fit_hk(
    data: &MultiLevelData,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    opt: &OptimizerConfig,
) -> Result<HKModel> {
    let levels = data.levels();
    let base = fit_gp(&levels[0], mean_spec, kernel_spec, opt)
        .map_err(|e| e.at_level(levels[0].level_index))?;
    let mut model = HKModel {
        base,
        scaled: Vec::new(),
    };
    for level in &levels[1..] {
        if level.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "fitting needs at least 2 points, got {}",
                level.len()
            ))
            .at_level(level.level_index));
        }
        let trend = model.chain_mean(&level.x)?;
        let basis = FixedColumnBasis { col: trend.clone() };
        let core = fit_core(&level.x, &level.y, &basis, &kernel_spec, opt)
            .map_err(|e| e.at_level(level.level_index))?;
        let hp = Hyperparams {
            beta: core.beta,
            sigma2: core.sigma2,
            lengthscales: core.lengthscales,
        };
        model
            .scaled
            .push(build_level(level, hp, &trend, &kernel_spec)?);
    }
    Ok(model)
}

/// Rebuild a fitted chain from stored hyperparameters.
pub fn hk_with_hyperparams(
    data: &MultiLevelData,
    base_hp: Hyperparams,
    level_hps: Vec<Hyperparams>,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
) -> Result<HKModel> {
    let levels = data.levels();
    if level_hps.len() != levels.len() - 1 {
        return Err(Error::DimensionMismatch {
            context: "kriging chain",
            expected: levels.len() - 1,
            got: level_hps.len(),
        });
    }
    let base = FittedGP::with_hyperparams(&levels[0], base_hp, mean_spec, kernel_spec)
        .map_err(|e| e.at_level(levels[0].level_index))?;
    let mut model = HKModel {
        base,
        scaled: Vec::new(),
    };
    for (level, hp) in levels[1..].iter().zip(level_hps) {
        let trend = model.chain_mean(&level.x)?;
        model
            .scaled
            .push(build_level(level, hp, &trend, &kernel_spec)?);
    }
    Ok(model)
}
