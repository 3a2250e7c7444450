//! Gaussian surfaces and the per-level conditioning step.
//!
//! A surface is a Gaussian law over functions exposing its mean, cross
//! covariance and pointwise variance. Conditioning a surface on one
//! level's data yields another surface; chaining the step builds the
//! hierarchical posterior, level by level.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::design::{DesignMatrix, LevelData};
use crate::error::{Error, Result};
use crate::kernels::{corr_matrix, Hyperparams, MeanSpec};

/// A Gaussian law over functions on `R^p`.
pub trait GaussianSurface: Send + Sync {
    fn input_dim(&self) -> usize;

    /// Mean evaluated at every row of `x`.
    fn mean(&self, x: &DesignMatrix) -> DVector<f64>;

    /// Covariance between every row of `a` and every row of `b`.
    fn cross_cov(&self, a: &DesignMatrix, b: &DesignMatrix) -> DMatrix<f64>;

    /// Pointwise variance at every row of `x` (no jitter).
    fn var_diag(&self, x: &DesignMatrix) -> DVector<f64>;

    /// Designs this surface has been conditioned on, outermost last.
    fn designs(&self) -> Vec<&DesignMatrix>;

    /// Signal variance of the underlying prior.
    fn base_variance(&self) -> f64;
}

/// An unconditioned GP prior with hyperparameters θ.
pub struct PriorSurface {
    mean_spec: MeanSpec,
    hp: Hyperparams,
}

impl PriorSurface {
    pub fn new(mean_spec: MeanSpec, hp: Hyperparams) -> Result<Self> {
        let q = mean_spec.basis_size(hp.input_dim());
        if hp.beta.len() != q {
            return Err(Error::DimensionMismatch {
                context: "mean coefficients",
                expected: q,
                got: hp.beta.len(),
            });
        }
        Ok(Self { mean_spec, hp })
    }
}

impl GaussianSurface for PriorSurface {
    fn input_dim(&self) -> usize {
        self.hp.input_dim()
    }

    fn mean(&self, x: &DesignMatrix) -> DVector<f64> {
        self.mean_spec.basis_matrix(x) * &self.hp.beta
    }

    fn cross_cov(&self, a: &DesignMatrix, b: &DesignMatrix) -> DMatrix<f64> {
        corr_matrix(a, b, &self.hp.lengthscales) * self.hp.sigma2
    }

    fn var_diag(&self, x: &DesignMatrix) -> DVector<f64> {
        DVector::from_element(x.nrows(), self.hp.sigma2)
    }

    fn designs(&self) -> Vec<&DesignMatrix> {
        Vec::new()
    }

    fn base_variance(&self) -> f64 {
        self.hp.sigma2
    }
}

/// A surface conditioned on one level of observations.
pub struct ConditionedSurface {
    prior: Arc<dyn GaussianSurface>,
    x: DesignMatrix,
    chol: Cholesky<f64, Dyn>,
    /// `C⁻¹ (y − m_prior(X))`.
    weights: DVector<f64>,
}

impl GaussianSurface for ConditionedSurface {
    fn input_dim(&self) -> usize {
        self.prior.input_dim()
    }

    fn mean(&self, x: &DesignMatrix) -> DVector<f64> {
        let cross = self.prior.cross_cov(x, &self.x);
        self.prior.mean(x) + cross * &self.weights
    }

    fn cross_cov(&self, a: &DesignMatrix, b: &DesignMatrix) -> DMatrix<f64> {
        let ka = self.prior.cross_cov(a, &self.x);
        let kb = self.prior.cross_cov(&self.x, b);
        self.prior.cross_cov(a, b) - &ka * self.chol.solve(&kb)
    }

    fn var_diag(&self, x: &DesignMatrix) -> DVector<f64> {
        let cross = self.prior.cross_cov(x, &self.x);
        let solved = self.chol.solve(&cross.transpose());
        let mut v = self.prior.var_diag(x);
        for i in 0..x.nrows() {
            v[i] -= cross.row(i).dot(&solved.column(i).transpose());
        }
        v
    }

    fn designs(&self) -> Vec<&DesignMatrix> {
        let mut d = self.prior.designs();
        d.push(&self.x);
        d
    }

    fn base_variance(&self) -> f64 {
        self.prior.base_variance()
    }
}

/// One recursion step: condition `prior` on a level's data.
///
/// `jitter_abs` is the absolute diagonal inflation (already multiplied by
/// the base signal variance). Conditioning on an empty level returns the
/// prior unchanged.
pub fn condition_level(
    prior: Arc<dyn GaussianSurface>,
    data: &LevelData,
    jitter_abs: f64,
) -> Result<Arc<dyn GaussianSurface>> {
    if data.is_empty() {
        return Ok(prior);
    }
    if data.input_dim() != prior.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "conditioning data",
            expected: prior.input_dim(),
            got: data.input_dim(),
        });
    }
    let mut c = prior.cross_cov(&data.x, &data.x);
    // Products of solves leave ~1e-16 asymmetry; restore exact symmetry.
    let floor = 1e-13 * prior.base_variance();
    for i in 0..c.nrows() {
        for j in (i + 1)..c.ncols() {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
        if c[(i, i)] + jitter_abs <= floor {
            return Err(singular_conditioning_error(prior.as_ref(), data));
        }
        c[(i, i)] += jitter_abs;
    }
    let chol = match Cholesky::new(c) {
        Some(ch) => ch,
        None => {
            return Err(singular_conditioning_error(prior.as_ref(), data));
        }
    };
    let resid = &data.y - prior.mean(&data.x);
    let weights = chol.solve(&resid);
    Ok(Arc::new(ConditionedSurface {
        prior,
        x: data.x.clone(),
        chol,
        weights,
    }))
}

/// Describe the closest pair of points involved in a singular
/// conditioning matrix, across the new level and all earlier designs.
fn singular_conditioning_error(prior: &dyn GaussianSurface, data: &LevelData) -> Error {
    let mut best: Option<(f64, String)> = None;
    let mut consider = |dist: f64, desc: String| {
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, desc));
        }
    };
    for i in 0..data.x.nrows() {
        for j in (i + 1)..data.x.nrows() {
            let d = euclid(data.x.row(i), data.x.row(j));
            consider(
                d,
                format!(
                    "points {i} and {j} of level {} at {:?} and {:?}",
                    data.level_index,
                    data.x.row(i),
                    data.x.row(j)
                ),
            );
        }
        for (k, earlier) in prior.designs().iter().enumerate() {
            for j in 0..earlier.nrows() {
                let d = euclid(data.x.row(i), earlier.row(j));
                consider(
                    d,
                    format!(
                        "point {i} of level {} at {:?} and point {j} of earlier design {k} at {:?}",
                        data.level_index,
                        data.x.row(i),
                        earlier.row(j)
                    ),
                );
            }
        }
    }
    let detail = best
        .map(|(d, desc)| format!("closest pair: {desc} (distance {d:.3e})"))
        .unwrap_or_else(|| "no candidate point pair found".into());
    Error::Numerical(format!(
        "conditioned covariance is singular at level {}; {detail}",
        data.level_index
    ))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
