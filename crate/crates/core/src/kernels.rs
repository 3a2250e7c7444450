//! Mean and covariance functions shared by every emulator.
//!
//! The covariance is the squared exponential
//! `k(x, x') = σ² exp{ −Σ_j ((x_j − x'_j)/δ_j)² }` with one correlation
//! length δ_j per input dimension. The mean is `m(x) = h(x)ᵀβ` with a
//! zero, constant or linear regression basis `h`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Default relative jitter added to the diagonal of self-covariance matrices.
pub const DEFAULT_JITTER: f64 = 1e-12;

/// Regression basis `h(x)` of the mean function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSpec {
    /// `h(x)` empty; the prior mean is identically zero.
    Zero,
    /// `h(x) = (1)`.
    Constant,
    /// `h(x) = (1, x_1, …, x_p)`.
    Linear,
}

impl MeanSpec {
    /// Number of regression functions for input dimension `p`.
    pub fn basis_size(self, p: usize) -> usize {
        match self {
            MeanSpec::Zero => 0,
            MeanSpec::Constant => 1,
            MeanSpec::Linear => p + 1,
        }
    }

    /// Basis matrix `H` with one row `h(x_i)ᵀ` per design point (n × q).
    pub fn basis_matrix(self, x: &DesignMatrix) -> DMatrix<f64> {
        let n = x.nrows();
        let q = self.basis_size(x.ncols());
        let mut h = DMatrix::zeros(n, q);
        for (i, row) in x.rows_iter().enumerate() {
            match self {
                MeanSpec::Zero => {}
                MeanSpec::Constant => h[(i, 0)] = 1.0,
                MeanSpec::Linear => {
                    h[(i, 0)] = 1.0;
                    for (j, &v) in row.iter().enumerate() {
                        h[(i, j + 1)] = v;
                    }
                }
            }
        }
        h
    }

    pub fn name(self) -> &'static str {
        match self {
            MeanSpec::Zero => "zero",
            MeanSpec::Constant => "constant",
            MeanSpec::Linear => "linear",
        }
    }
}

/// Covariance family plus the numerical nugget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Non-negative diagonal inflation, as a multiple of σ².
    pub jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponential,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            family: KernelFamily::SquaredExponential,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl KernelSpec {
    pub fn with_jitter(jitter: f64) -> Result<Self> {
        if jitter.is_nan() || jitter < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "jitter must be non-negative, got {jitter}"
            )));
        }
        Ok(Self {
            family: KernelFamily::SquaredExponential,
            jitter,
        })
    }
}

/// Hyperparameters θ = (β, σ², δ) of a single Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Regression coefficients of the mean basis (may be empty).
    #[serde(with = "crate::design::vec_f64")]
    pub beta: DVector<f64>,
    /// Signal variance σ² > 0.
    pub sigma2: f64,
    /// Per-dimension correlation lengths δ_j > 0.
    #[serde(with = "crate::design::vec_f64")]
    pub lengthscales: DVector<f64>,
}

impl Hyperparams {
    pub fn new(beta: Vec<f64>, sigma2: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        if lengthscales.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one lengthscale required".into(),
            ));
        }
        if let Some(bad) = lengthscales.iter().find(|&&d| !d.is_finite() || d <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lengthscales must be positive, got {bad}"
            )));
        }
        Ok(Self {
            beta: DVector::from_vec(beta),
            sigma2,
            lengthscales: DVector::from_vec(lengthscales),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.lengthscales.len()
    }
}

/// Evaluate the mean function `h(x)ᵀβ` at one point.
pub fn eval_mean(x: &[f64], spec: MeanSpec, beta: &DVector<f64>) -> Result<f64> {
    let q = spec.basis_size(x.len());
    if beta.len() != q {
        return Err(Error::DimensionMismatch {
            context: "mean coefficients",
            expected: q,
            got: beta.len(),
        });
    }
    Ok(match spec {
        MeanSpec::Zero => 0.0,
        MeanSpec::Constant => beta[0],
        MeanSpec::Linear => {
            beta[0]
                + x.iter()
                    .zip(beta.iter().skip(1))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        }
    })
}

/// Squared-exponential correlation (unit variance) between two points.
fn sq_exp_corr(a: &[f64], b: &[f64], lengthscales: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        let d = (a[j] - b[j]) / lengthscales[j];
        s += d * d;
    }
    (-s).exp()
}

/// Evaluate the covariance `k(x, x')` under `hp`.
pub fn eval_cov(x: &[f64], xp: &[f64], hp: &Hyperparams) -> Result<f64> {
    let p = hp.input_dim();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            context: "covariance input x",
            expected: p,
            got: x.len(),
        });
    }
    if xp.len() != p {
        return Err(Error::DimensionMismatch {
            context: "covariance input x'",
            expected: p,
            got: xp.len(),
        });
    }
    if let Some(bad) = hp
        .lengthscales
        .iter()
        .find(|&&d| !d.is_finite() || d <= 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "lengthscales must be positive, got {bad}"
        )));
    }
    Ok(hp.sigma2 * sq_exp_corr(x, xp, &hp.lengthscales))
}

/// Cross-correlation matrix (unit signal variance) between two designs.
pub(crate) fn corr_matrix(
    a: &DesignMatrix,
    b: &DesignMatrix,
    lengthscales: &DVector<f64>,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), b.nrows());
    for (i, ra) in a.rows_iter().enumerate() {
        for (j, rb) in b.rows_iter().enumerate() {
            m[(i, j)] = sq_exp_corr(ra, rb, lengthscales);
        }
    }
    m
}

/// Self-correlation matrix with `jitter` added to the diagonal.
///
/// Only the upper triangle is evaluated and mirrored, so the result is
/// symmetric to the bit.
pub(crate) fn corr_matrix_self(
    a: &DesignMatrix,
    lengthscales: &DVector<f64>,
    jitter: f64,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0 + jitter;
        for j in (i + 1)..n {
            let v = sq_exp_corr(a.row(i), a.row(j), lengthscales);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Self-covariance `σ²R + jitter·σ²·I`, accumulated in the same order as
/// the conditioning chain builds it, so single-level chains match plain
/// GP state to the bit.
pub(crate) fn cov_matrix_self(a: &DesignMatrix, hp: &Hyperparams, jitter: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let jitter_abs = jitter * hp.sigma2;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = hp.sigma2 + jitter_abs;
        for j in (i + 1)..n {
            let v = sq_exp_corr(a.row(i), a.row(j), &hp.lengthscales) * hp.sigma2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Covariance matrix between two designs; entry (i, j) = `eval_cov(a_i, b_j)`.
///
/// With `add_jitter` set (meaningful when `a` and `b` are the same design)
/// the diagonal receives `jitter · σ²`.
pub fn cov_matrix(
    a: &DesignMatrix,
    b: &DesignMatrix,
    hp: &Hyperparams,
    kernel_spec: &KernelSpec,
    add_jitter: bool,
) -> Result<DMatrix<f64>> {
    let p = hp.input_dim();
    if a.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "covariance design A",
            expected: p,
            got: a.ncols(),
        });
    }
    if b.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "covariance design B",
            expected: p,
            got: b.ncols(),
        });
    }
    Ok(if add_jitter && a.nrows() == b.nrows() {
        cov_matrix_self(a, hp, kernel_spec.jitter)
    } else {
        corr_matrix(a, b, &hp.lengthscales) * hp.sigma2
    })
}
