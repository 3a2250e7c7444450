//! Single-level Gaussian process fitting and prediction.
//!
//! Fitting maximizes the marginal likelihood over the lengthscales with
//! Nelder–Mead restarts; the regression coefficients β are profiled out
//! by generalized least squares and σ² by its closed-form maximizer, so
//! the search runs over log-lengthscales only.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::design::{DesignMatrix, LevelData};
use crate::error::{Error, Result};
use crate::kernels::{
    corr_matrix, corr_matrix_self, cov_matrix_self, Hyperparams, KernelSpec, MeanSpec,
};
use crate::optim::{multistart_minimize, OptimizerConfig};

const LN_2PI: f64 = 1.8378770664093453;
/// Floor applied to the profiled σ̂², guarding exactly-reproduced data.
const SIGMA2_FLOOR: f64 = 1e-300;

/// Posterior mean and variance at a set of points.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub mean: DVector<f64>,
    /// Pointwise posterior variance, clamped at zero.
    pub variance: DVector<f64>,
    /// Full posterior covariance when requested.
    pub covariance: Option<DMatrix<f64>>,
}

/// Regression basis abstraction: the classic `h(x)` bases and, for
/// hierarchical kriging, a lower-level predictor used as the trend.
pub(crate) trait Basis {
    fn matrix(&self, x: &DesignMatrix) -> Result<DMatrix<f64>>;
}

impl Basis for MeanSpec {
    fn matrix(&self, x: &DesignMatrix) -> Result<DMatrix<f64>> {
        Ok(self.basis_matrix(x))
    }
}

pub(crate) fn chol_or_err(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Numerical(format!("Cholesky failed for {what}")))
}

pub(crate) fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum::<f64>()
}

/// β and σ² profiled out of the Gaussian likelihood at a fixed
/// correlation structure `C` (Cholesky-factored), basis `H` and data `y`.
#[derive(Debug, Clone)]
pub(crate) struct GlsProfile {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    /// Concentrated log-likelihood at (β̂, σ̂²).
    pub loglik: f64,
}

pub(crate) fn profile_gls(
    chol: &Cholesky<f64, Dyn>,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Option<GlsProfile> {
    let n = y.len();
    let w = chol.solve(y);
    let beta = if h.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let z = chol.solve(h);
        let hz = h.transpose() * &z;
        let hw = h.transpose() * &w;
        Cholesky::new(hz)?.solve(&hw)
    };
    let r = y - h * &beta;
    let cr = chol.solve(&r);
    let mut sigma2 = r.dot(&cr) / n as f64;
    if !sigma2.is_finite() {
        return None;
    }
    sigma2 = sigma2.max(SIGMA2_FLOOR);
    let loglik =
        -0.5 * n as f64 * sigma2.ln() - 0.5 * log_det(chol) - 0.5 * n as f64 * (1.0 + LN_2PI);
    loglik.is_finite().then_some(GlsProfile {
        beta,
        sigma2,
        loglik,
    })
}

/// Lengthscale search box `[0.05 · range_j, 2 · range_j]` in log-space.
pub(crate) fn lengthscale_bounds(x: &DesignMatrix) -> Vec<(f64, f64)> {
    x.column_ranges()
        .iter()
        .map(|(lo, hi)| {
            let range = if hi - lo > 0.0 { hi - lo } else { 1.0 };
            ((0.05 * range).ln(), (2.0 * range).ln())
        })
        .collect()
}

pub(crate) struct CoreFit {
    pub lengthscales: DVector<f64>,
    pub beta: DVector<f64>,
    pub sigma2: f64,
}

/// Maximize the concentrated likelihood of `(x, y)` over lengthscales.
pub(crate) fn fit_core(
    x: &DesignMatrix,
    y: &DVector<f64>,
    basis: &dyn Basis,
    kernel_spec: &KernelSpec,
    opt: &OptimizerConfig,
) -> Result<CoreFit> {
    let h = basis.matrix(x)?;
    let bounds = lengthscale_bounds(x);
    let objective = |logls: &[f64]| -> f64 {
        let ls = DVector::from_iterator(logls.len(), logls.iter().map(|v| v.exp()));
        let c = corr_matrix_self(x, &ls, kernel_spec.jitter);
        match Cholesky::new(c) {
            Some(chol) => match profile_gls(&chol, &h, y) {
                Some(p) => -p.loglik,
                None => f64::INFINITY,
            },
            None => f64::INFINITY,
        }
    };
    let (logls, neg) = multistart_minimize(objective, &bounds, opt)?;
    let lengthscales = DVector::from_iterator(logls.len(), logls.iter().map(|v| v.exp()));
    let c = corr_matrix_self(x, &lengthscales, kernel_spec.jitter);
    let chol = chol_or_err(c, "optimized correlation matrix")?;
    let p = profile_gls(&chol, &h, y)
        .ok_or_else(|| Error::Numerical("profiling failed at the optimum".into()))?;
    debug_assert!((p.loglik + neg).abs() <= 1e-6 * (1.0 + neg.abs()));
    Ok(CoreFit {
        lengthscales,
        beta: p.beta,
        sigma2: p.sigma2,
    })
}

/// Log marginal likelihood `log N(y; m(X), K)` at fixed hyperparameters.
pub fn log_marginal_likelihood(
    data: &LevelData,
    hp: &Hyperparams,
    mean_spec: MeanSpec,
    kernel_spec: &KernelSpec,
) -> Result<f64> {
    if hp.input_dim() != data.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "lengthscales",
            expected: data.input_dim(),
            got: hp.input_dim(),
        });
    }
    let h = mean_spec.basis_matrix(&data.x);
    if hp.beta.len() != h.ncols() {
        return Err(Error::DimensionMismatch {
            context: "mean coefficients",
            expected: h.ncols(),
            got: hp.beta.len(),
        });
    }
    let n = data.len();
    let k = cov_matrix_self(&data.x, hp, kernel_spec.jitter);
    let chol = Cholesky::new(k).ok_or_else(|| {
        Error::Numerical(format!(
            "covariance matrix not positive definite at sigma2={} lengthscales={:?}",
            hp.sigma2,
            hp.lengthscales.as_slice()
        ))
    })?;
    let r = &data.y - h * &hp.beta;
    let alpha = chol.solve(&r);
    Ok(-0.5 * r.dot(&alpha) - 0.5 * log_det(&chol) - 0.5 * n as f64 * LN_2PI)
}

/// An immutable fitted Gaussian process.
#[derive(Debug, Clone)]
pub struct FittedGP {
    hp: Hyperparams,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    x: DesignMatrix,
    y: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_lik: f64,
}

impl FittedGP {
    /// Build the posterior state at fixed hyperparameters.
    pub fn with_hyperparams(
        data: &LevelData,
        hp: Hyperparams,
        mean_spec: MeanSpec,
        kernel_spec: KernelSpec,
    ) -> Result<Self> {
        let log_lik = log_marginal_likelihood(data, &hp, mean_spec, &kernel_spec)?;
        let k = cov_matrix_self(&data.x, &hp, kernel_spec.jitter);
        let chol = chol_or_err(k, "training covariance matrix")?;
        let h = mean_spec.basis_matrix(&data.x);
        let r = &data.y - h * &hp.beta;
        let alpha = chol.solve(&r);
        Ok(Self {
            hp,
            mean_spec,
            kernel_spec,
            x: data.x.clone(),
            y: data.y.clone(),
            chol,
            alpha,
            log_lik,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn mean_spec(&self) -> MeanSpec {
        self.mean_spec
    }

    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.kernel_spec
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn outputs(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn log_lik(&self) -> f64 {
        self.log_lik
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Posterior mean and variance at `xnew`; full covariance on request.
    pub fn predict(&self, xnew: &DesignMatrix, want_cov: bool) -> Result<Prediction> {
        if xnew.ncols() != self.x.ncols() {
            return Err(Error::DimensionMismatch {
                context: "prediction inputs",
                expected: self.x.ncols(),
                got: xnew.ncols(),
            });
        }
        let cross = corr_matrix(xnew, &self.x, &self.hp.lengthscales) * self.hp.sigma2;
        let h = self.mean_spec.basis_matrix(xnew);
        let mean = h * &self.hp.beta + &cross * &self.alpha;

        // v_i = σ² − k(x_i, X) K⁻¹ k(X, x_i)
        let solved = self.chol.solve(&cross.transpose());
        let mut variance = DVector::from_element(xnew.nrows(), self.hp.sigma2);
        for i in 0..xnew.nrows() {
            variance[i] -= cross.row(i).dot(&solved.column(i).transpose());
        }
        let variance = clamp_variance(variance, self.hp.sigma2);

        let covariance = want_cov.then(|| {
            corr_matrix(xnew, xnew, &self.hp.lengthscales) * self.hp.sigma2 - &cross * &solved
        });
        Ok(Prediction {
            mean,
            variance,
            covariance,
        })
    }
}

pub(crate) fn clamp_variance(mut v: DVector<f64>, scale: f64) -> DVector<f64> {
    for x in v.iter_mut() {
        debug_assert!(
            *x >= -1e-10 * scale.max(1.0),
            "posterior variance {x} below the floating-point guard"
        );
        *x = x.max(0.0);
    }
    v
}

/// Fit a GP to one level of data by maximum marginal likelihood.
pub fn fit_gp(
    data: &LevelData,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    opt: &OptimizerConfig,
) -> Result<FittedGP> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fitting needs at least 2 points, got {}",
            data.len()
        )));
    }
    let core = fit_core(&data.x, &data.y, &mean_spec, &kernel_spec, opt)?;
    let hp = Hyperparams {
        beta: core.beta,
        sigma2: core.sigma2,
        lengthscales: core.lengthscales,
    };
    FittedGP::with_hyperparams(data, hp, mean_spec, kernel_spec)
}
