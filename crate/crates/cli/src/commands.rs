//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayhem::bench::{run_experiment, ExperimentConfig, Method};
use bayhem::design::MultiLevelData;
use bayhem::model_io::{FittedModel, ModelFile, ModelMeta};
use bayhem::multilevel::{fit_bayhem, fit_hk, fit_ko};
use bayhem::{fit_gp, DesignMatrix};

use crate::config::{metadata_block, RunConfig};
use crate::csvio;

fn write_out(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `fit`: read one CSV per level (cheapest first), fit, save the model.
pub fn cmd_fit(cfg: &RunConfig, level_files: &[PathBuf]) -> Result<()> {
    if level_files.is_empty() {
        bail!("fit needs at least one level CSV");
    }
    if cfg.method == Method::KennedyOHagan && level_files.len() < 2 {
        bail!("the autoregressive co-kriging method requires ≥ 2 levels");
    }
    let mut levels = Vec::with_capacity(level_files.len());
    for (i, path) in level_files.iter().enumerate() {
        levels.push(csvio::read_level(path, i + 1)?);
    }
    let data = MultiLevelData::new(levels).map_err(|e| anyhow::anyhow!("{e}"))?;
    let m = cfg.model_config()?;
    let fitted = match cfg.method {
        Method::SingleGp => {
            FittedModel::Single(fit_gp(data.top(), m.mean_spec, m.kernel_spec, &m.opt)?)
        }
        Method::BayHem => FittedModel::BayHem(fit_bayhem(
            &data,
            m.bayhem_mode,
            m.bayhem_objective,
            m.mean_spec,
            m.kernel_spec,
            &m.opt,
        )?),
        Method::KennedyOHagan => FittedModel::KennedyOHagan(fit_ko(
            &data,
            m.rho_mode,
            m.mean_spec,
            m.kernel_spec,
            &m.opt,
        )?),
        Method::HierarchicalKriging => {
            FittedModel::HierarchicalKriging(fit_hk(&data, m.mean_spec, m.kernel_spec, &m.opt)?)
        }
    };
    let meta = ModelMeta {
        tool: format!("bayhem {}", bayhem::VERSION),
        config: cfg.echo(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let model_file = fitted.to_model_file(&data, meta);
    let path = cfg.out_path("model.json");
    write_out(&path, &model_file.to_json())?;
    println!("{}", fitted.describe());
    println!("model written to {}", path.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<FittedModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let mf = ModelFile::from_json(&text)?;
    Ok(FittedModel::from_model_file(&mf)?)
}

/// `predict`: evaluate a saved model at the points of a CSV.
pub fn cmd_predict(cfg: &RunConfig, model_path: &Path, points_path: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let points = csvio::read_points(points_path, model.input_dim())?;
    let meta = metadata_block(cfg, &[("model", model_path.display().to_string())]);
    let text = if points.is_empty() {
        csvio::format_predictions(&meta, &points, None)
    } else {
        let pred = model.predict(&points)?;
        csvio::format_predictions(&meta, &points, Some(&pred))
    };
    let path = cfg.out_path("predictions.csv");
    write_out(&path, &text)?;
    println!(
        "{} predictions written to {}",
        points.nrows(),
        path.display()
    );
    Ok(())
}

/// `benchmark`: run a built-in experiment and emit the report.
pub fn cmd_benchmark(cfg: &RunConfig, experiment: &str, methods: &Option<String>) -> Result<()> {
    let mut exp = ExperimentConfig::builtin(experiment).map_err(|e| anyhow::anyhow!("{e}"))?;
    exp.replicates = cfg.replicates;
    exp.seed = cfg.seed;
    exp.rmse_variant = cfg.rmse;
    exp.model = cfg.model_config()?;
    if let Some(spec) = methods {
        exp.methods = spec
            .split(',')
            .map(|s| Method::parse(s.trim()).map_err(|e| anyhow::anyhow!("{e}")))
            .collect::<Result<Vec<_>>>()?;
    }
    let report = run_experiment(&exp)?;
    let csv_path = cfg.out_path(&format!("{experiment}.csv"));
    write_out(&csv_path, &report.to_csv())?;
    let json_path = csv_path.with_extension("json");
    write_out(&json_path, &report.to_json())?;
    print!("{}", report.to_table());
    println!(
        "report written to {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

/// `surface`: grid evaluation of a model or a built-in experiment fit,
/// with truth columns when the functions are known.
pub fn cmd_surface(
    cfg: &RunConfig,
    model_path: &Option<PathBuf>,
    experiment: &Option<String>,
    case: &Option<String>,
    resolution: usize,
) -> Result<()> {
    if resolution < 2 {
        bail!("grid resolution must be at least 2 per axis");
    }
    let (model, functions, domain, dim) = match (model_path, experiment) {
        (Some(path), None) => {
            let model = load_model(path)?;
            let dim = model.input_dim();
            let ranges: Vec<(f64, f64)> = model.training_designs()[0].column_ranges();
            (model, Vec::new(), ranges, dim)
        }
        (None, Some(name)) => {
            let mut exp = ExperimentConfig::builtin(name).map_err(|e| anyhow::anyhow!("{e}"))?;
            exp.seed = cfg.seed;
            exp.model = cfg.model_config()?;
            let case_cfg = match case {
                Some(label) => exp
                    .cases
                    .iter()
                    .find(|c| &c.label == label)
                    .with_context(|| format!("experiment {name} has no case '{label}'"))?,
                None => &exp.cases[0],
            };
            // Replicate-0 training data of the chosen case.
            let case_idx = exp
                .cases
                .iter()
                .position(|c| c.label == case_cfg.label)
                .expect("case located above");
            let dim = case_cfg.functions[0].dim();
            let (lo, hi) = case_cfg.functions[0].domain();
            let functions = case_cfg.functions.clone();
            let data = exp.draw_case_data(case_idx, 0)?;
            let m = &exp.model;
            let fitted = match cfg.method {
                Method::SingleGp => {
                    FittedModel::Single(fit_gp(data.top(), m.mean_spec, m.kernel_spec, &m.opt)?)
                }
                Method::BayHem => FittedModel::BayHem(fit_bayhem(
                    &data,
                    m.bayhem_mode,
                    m.bayhem_objective,
                    m.mean_spec,
                    m.kernel_spec,
                    &m.opt,
                )?),
                Method::KennedyOHagan => FittedModel::KennedyOHagan(fit_ko(
                    &data,
                    m.rho_mode,
                    m.mean_spec,
                    m.kernel_spec,
                    &m.opt,
                )?),
                Method::HierarchicalKriging => FittedModel::HierarchicalKriging(fit_hk(
                    &data,
                    m.mean_spec,
                    m.kernel_spec,
                    &m.opt,
                )?),
            };
            let domain = vec![(lo, hi); dim];
            (fitted, functions, domain, dim)
        }
        _ => bail!("surface needs exactly one of --model or --experiment"),
    };
    if dim > 2 {
        bail!("surface grids support 1- and 2-dimensional inputs");
    }

    // Regular grid over the domain.
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let rows: Vec<Vec<f64>> = if dim == 1 {
        axis(domain[0].0, domain[0].1)
            .into_iter()
            .map(|x| vec![x])
            .collect()
    } else {
        let a0 = axis(domain[0].0, domain[0].1);
        let a1 = axis(domain[1].0, domain[1].1);
        a0.iter()
            .flat_map(|&x0| a1.iter().map(move |&x1| vec![x0, x1]))
            .collect()
    };
    let grid = DesignMatrix::from_rows(&rows).map_err(|e| anyhow::anyhow!("{e}"))?;
    let pred = model.predict(&grid)?;

    let meta = metadata_block(cfg, &[("resolution", resolution.to_string())]);
    let mut s = meta;
    for j in 1..=dim {
        s.push_str(&format!("x{j},"));
    }
    for (l, _) in functions.iter().enumerate() {
        s.push_str(&format!("truth_l{},", l + 1));
    }
    s.push_str("mean,sd\n");
    for (i, row) in grid.rows_iter().enumerate() {
        for v in row {
            s.push_str(&format!("{v:.16e},"));
        }
        for f in &functions {
            s.push_str(&format!("{:.16e},", f.eval(row)?));
        }
        s.push_str(&format!(
            "{:.16e},{:.16e}\n",
            pred.mean[i],
            pred.variance[i].sqrt()
        ));
    }
    let path = cfg.out_path("surface.csv");
    write_out(&path, &s)?;
    println!("{} grid rows written to {}", grid.nrows(), path.display());
    Ok(())
}
