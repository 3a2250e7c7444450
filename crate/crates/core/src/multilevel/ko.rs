//! Autoregressive co-kriging: each level is a scaled copy of the level
//! below plus an independent discrepancy process.
//!
//! `f_l(x) = ρ_{l−1} · f_{l−1}(x) + δ_l(x)` with an independent GP on
//! level 1 and on every discrepancy δ_l.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, LevelData, MultiLevelData};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, FittedGP, Prediction};
use crate::kernels::{Hyperparams, KernelSpec, MeanSpec};
use crate::optim::OptimizerConfig;

/// How the level-to-level correlation scalars ρ are determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMode {
    /// Every ρ pinned to the given value.
    Fixed(f64),
    /// ρ per level by least squares of `y_l` on the lower-level values.
    Estimated,
}

/// Discrepancy observations `δ_l(x_i) = y_l,i − ρ · f_{l−1}(x_i)`.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    pub values: DVector<f64>,
    /// Whether the lower-level values were exact (nested design) or
    /// came from the lower-level emulator's posterior mean.
    pub nested: bool,
}

/// Fitted autoregressive multi-level model.
#[derive(Debug, Clone)]
pub struct KOModel {
    base: FittedGP,
    discrepancy_gps: Vec<FittedGP>,
    rho: Vec<f64>,
    rho_mode: RhoMode,
    nested: Vec<bool>,
}

impl KOModel {
    pub fn base_gp(&self) -> &FittedGP {
        &self.base
    }

    pub fn discrepancy_gps(&self) -> &[FittedGP] {
        &self.discrepancy_gps
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rho_mode(&self) -> RhoMode {
        self.rho_mode
    }

    /// Whether each discrepancy level had a nested design.
    pub fn nested_flags(&self) -> &[bool] {
        &self.nested
    }

    pub fn level_count(&self) -> usize {
        self.discrepancy_gps.len() + 1
    }

    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    /// Top-level prediction: the ρ-weighted chain of means, variances
    /// added by independence.
    pub fn predict(&self, xnew: &DesignMatrix) -> Result<Prediction> {
        let mut acc = self.base.predict(xnew, false)?;
        for (gp, rho) in self.discrepancy_gps.iter().zip(&self.rho) {
            let delta = gp.predict(xnew, false)?;
            acc.mean = acc.mean * *rho + delta.mean;
            acc.variance = acc.variance * (rho * rho) + delta.variance;
        }
        Ok(acc)
    }
}

/// Exact row lookup of `needle`'s rows inside `hay`; `None` unless every
/// row matches.
fn nested_indices(needle: &DesignMatrix, hay: &DesignMatrix) -> Option<Vec<usize>> {
    needle
        .rows_iter()
        .map(|r| (0..hay.nrows()).find(|&j| hay.row(j) == r))
        .collect()
}

/// Lower-level values at the design of level `l`: exact outputs when the
/// design is nested in the previous level, otherwise the chain emulator's
/// posterior mean.
fn lower_values(
    partial: &KOModel,
    prev: &LevelData,
    level: &LevelData,
) -> Result<(DVector<f64>, bool)> {
    if let Some(idx) = nested_indices(&level.x, &prev.x) {
        let vals = DVector::from_iterator(idx.len(), idx.iter().map(|&j| prev.y[j]));
        Ok((vals, true))
    } else {
        let pred = partial.predict(&level.x)?;
        Ok((pred.mean, false))
    }
}

/// Fit the autoregressive model level by level.
///
/// With a single level this degenerates to the plain GP on that level.
pub fn fit_ko(
    data: &MultiLevelData,
    rho_mode: RhoMode,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
    opt: &OptimizerConfig,
) -> Result<KOModel> {
    let levels = data.levels();
    let base = fit_gp(&levels[0], mean_spec, kernel_spec, opt)
        .map_err(|e| e.at_level(levels[0].level_index))?;
    let mut model = KOModel {
        base,
        discrepancy_gps: Vec::new(),
        rho: Vec::new(),
        rho_mode,
        nested: Vec::new(),
    };
    for l in 1..levels.len() {
        let level = &levels[l];
        let (lower, nested) = lower_values(&model, &levels[l - 1], level)?;
        let rho = match rho_mode {
            RhoMode::Fixed(v) => v,
            RhoMode::Estimated => {
                let denom = lower.dot(&lower);
                if denom <= 0.0 {
                    return Err(Error::Numerical(
                        "cannot estimate rho from all-zero lower-level values".into(),
                    )
                    .at_level(level.level_index));
                }
                lower.dot(&level.y) / denom
            }
        };
        let disc = Discrepancy {
            values: &level.y - &lower * rho,
            nested,
        };
        let disc_data = LevelData {
            x: level.x.clone(),
            y: disc.values.clone(),
            level_index: level.level_index,
        };
        let gp = fit_gp(&disc_data, mean_spec, kernel_spec, opt)
            .map_err(|e| e.at_level(level.level_index))?;
        model.discrepancy_gps.push(gp);
        model.rho.push(rho);
        model.nested.push(nested);
    }
    Ok(model)
}

/// Rebuild a fitted model from stored hyperparameters (no optimization).
pub fn ko_with_hyperparams(
    data: &MultiLevelData,
    base_hp: Hyperparams,
    discrepancy_hps: Vec<Hyperparams>,
    rho: Vec<f64>,
    rho_mode: RhoMode,
    mean_spec: MeanSpec,
    kernel_spec: KernelSpec,
) -> Result<KOModel> {
    let levels = data.levels();
    if discrepancy_hps.len() != levels.len() - 1 || rho.len() != levels.len() - 1 {
        return Err(Error::DimensionMismatch {
            context: "discrepancy chain",
            expected: levels.len() - 1,
            got: discrepancy_hps.len().min(rho.len()),
        });
    }
    let base = FittedGP::with_hyperparams(&levels[0], base_hp, mean_spec, kernel_spec)
        .map_err(|e| e.at_level(levels[0].level_index))?;
    let mut model = KOModel {
        base,
        discrepancy_gps: Vec::new(),
        rho: Vec::new(),
        rho_mode,
        nested: Vec::new(),
    };
    for (l, (hp, r)) in discrepancy_hps.into_iter().zip(rho).enumerate() {
        let level = &levels[l + 1];
        let (lower, nested) = lower_values(&model, &levels[l], level)?;
        let disc_data = LevelData {
            x: level.x.clone(),
            y: &level.y - &lower * r,
            level_index: level.level_index,
        };
        let gp = FittedGP::with_hyperparams(&disc_data, hp, mean_spec, kernel_spec)
            .map_err(|e| e.at_level(level.level_index))?;
        model.discrepancy_gps.push(gp);
        model.rho.push(r);
        model.nested.push(nested);
    }
    Ok(model)
}
