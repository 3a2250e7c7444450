//! Effective run configuration: defaults, optional TOML file, flags.
//!
//! Precedence is flags over file over defaults. The effective values are
//! echoed into every output's metadata block and hashed for provenance.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayhem::bench::{Method, ModelConfig, RmseVariant};
use bayhem::multilevel::{Objective, RhoMode, ThetaMode};
use bayhem::{KernelSpec, MeanSpec, OptimizerConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Keys accepted both as flags and in the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub method: Option<String>,
    pub mode: Option<String>,
    pub objective: Option<String>,
    pub rho: Option<String>,
    pub mean: Option<String>,
    pub jitter: Option<f64>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub rmse: Option<String>,
    pub out: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("malformed config file {}", path.display()))
    }
}

/// Flag values shared by every subcommand (all optional; merged over the
/// config file).
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Emulator: single | bayhem | ko | hk
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Hyperparameter sharing: shared | per-level
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Shared-θ fitting objective: joint | top-conditional
    #[arg(long, global = true)]
    pub objective: Option<String>,
    /// Level correlation: `fixed:<v>` | estimate
    #[arg(long, global = true)]
    pub rho: Option<String>,
    /// Mean basis: zero | constant | linear
    #[arg(long, global = true)]
    pub mean: Option<String>,
    /// Relative diagonal jitter
    #[arg(long, global = true)]
    pub jitter: Option<f64>,
    /// Optimizer restarts
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// RNG seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Benchmark replicates
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// RMSE variant: standard | paper
    #[arg(long, global = true)]
    pub rmse: Option<String>,
    /// Output path (files land in BAYHEM_OUT_DIR when relative)
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub mode: ThetaMode,
    pub objective: Objective,
    pub rho: RhoMode,
    pub mean: MeanSpec,
    pub jitter: f64,
    pub restarts: usize,
    pub seed: u64,
    pub replicates: usize,
    pub rmse: RmseVariant,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let pick = |a: &Option<String>, f: &Option<String>| -> Option<String> {
            a.clone().or_else(|| f.clone())
        };
        let method = match pick(&args.method, &file.method).as_deref() {
            None => Method::BayHem,
            Some(s) => Method::parse(s).map_err(|e| anyhow::anyhow!("{e}"))?,
        };
        let mode = match pick(&args.mode, &file.mode).as_deref() {
            None | Some("shared") => ThetaMode::SharedTheta,
            Some("per-level") => ThetaMode::PerLevelTheta,
            Some(other) => bail!("unknown mode '{other}' (expected shared | per-level)"),
        };
        let objective = match pick(&args.objective, &file.objective).as_deref() {
            None | Some("joint") => Objective::Joint,
            Some("top-conditional") => Objective::TopConditional,
            Some(other) => bail!("unknown objective '{other}' (expected joint | top-conditional)"),
        };
        let rho = match pick(&args.rho, &file.rho).as_deref() {
            None => RhoMode::Fixed(1.0),
            Some("estimate") => RhoMode::Estimated,
            Some(s) if s.starts_with("fixed:") => {
                let v: f64 = s["fixed:".len()..]
                    .parse()
                    .with_context(|| format!("bad rho value in '{s}'"))?;
                RhoMode::Fixed(v)
            }
            Some(other) => bail!("unknown rho '{other}' (expected fixed:<v> | estimate)"),
        };
        let mean = match pick(&args.mean, &file.mean).as_deref() {
            None | Some("linear") => MeanSpec::Linear,
            Some("zero") => MeanSpec::Zero,
            Some("constant") => MeanSpec::Constant,
            Some(other) => bail!("unknown mean '{other}' (expected zero | constant | linear)"),
        };
        let rmse = match pick(&args.rmse, &file.rmse).as_deref() {
            None | Some("standard") => RmseVariant::Standard,
            Some("paper") => RmseVariant::PaperLiteral,
            Some(other) => bail!("unknown rmse variant '{other}' (expected standard | paper)"),
        };
        let jitter = args
            .jitter
            .or(file.jitter)
            .unwrap_or(KernelSpec::default().jitter);
        if jitter < 0.0 {
            bail!("jitter must be non-negative");
        }
        Ok(Self {
            method,
            mode,
            objective,
            rho,
            mean,
            jitter,
            restarts: args.restarts.or(file.restarts).unwrap_or(10),
            seed: args.seed.or(file.seed).unwrap_or(1),
            replicates: args.replicates.or(file.replicates).unwrap_or(20),
            rmse,
            out: args.out.clone().or(file.out),
        })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::with_jitter(self.jitter).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            ..OptimizerConfig::default()
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        Ok(ModelConfig {
            mean_spec: self.mean,
            kernel_spec: self.kernel_spec()?,
            opt: self.optimizer(),
            bayhem_mode: self.mode,
            bayhem_objective: self.objective,
            rho_mode: self.rho,
        })
    }

    /// Canonical `key=value` rendering for metadata blocks.
    pub fn echo(&self) -> String {
        let rho = match self.rho {
            RhoMode::Fixed(v) => format!("fixed:{v}"),
            RhoMode::Estimated => "estimate".into(),
        };
        format!(
            "method={} mode={} objective={} rho={} mean={} jitter={:e} restarts={} seed={} replicates={} rmse={}",
            self.method.name(),
            self.mode.name(),
            self.objective.name(),
            rho,
            self.mean.name(),
            self.jitter,
            self.restarts,
            self.seed,
            self.replicates,
            self.rmse.name()
        )
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Resolve an output path against `BAYHEM_OUT_DIR` for relative paths.
    pub fn out_path(&self, name: &str) -> PathBuf {
        let p = PathBuf::from(self.out.as_deref().unwrap_or(name));
        if p.is_absolute() {
            return p;
        }
        match std::env::var_os("BAYHEM_OUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(p),
            None => p,
        }
    }
}

/// Standard metadata block at the top of CSV outputs.
pub fn metadata_block(cfg: &RunConfig, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    s.push_str(&format!("# tool: bayhem {}\n", bayhem::VERSION));
    s.push_str(&format!("# config: {}\n", cfg.echo()));
    s.push_str(&format!("# config_hash: {}\n", cfg.hash()));
    s.push_str(&format!("# seed: {}\n", cfg.seed));
    for (k, v) in extra {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s
}
