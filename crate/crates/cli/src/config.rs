//! Command-line options and the TOML file that mirrors them.
//!
//! Every option is optional on both sides; a flag given on the command line
//! wins over the same key in the file, and built-in defaults apply last.
//!
//! ```toml
//! [global]
//! format = "csv"
//! out = "results"
//! spacing = 1.0
//!
//! [loss]
//! loss = "tversky"
//! tversky_alpha = 0.7
//!
//! [fit]
//! shape = "ring"
//! steps = 300
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use bdou::fitter::{FitConfig, Init, TargetShape};
use bdou::losses::AlphaMode;
use bdou::metrics::EvalConfig;
use bdou::{Classes, Loss};

use crate::Usage;

/// Fills `None` fields of `self` from `other`; every field must be listed.
macro_rules! merge {
    ($self:ident, $other:ident; $($field:ident),*) => {
        Self { $($field: $self.$field.or($other.$field),)* }
    };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write result files here instead of printing to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for batch evaluation (0 picks one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Pixel spacing multiplied into Hausdorff distances.
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// Boundary width in pixels; defaults to 0.5% of the image diagonal.
    #[arg(long, global = true)]
    pub boundary_width: Option<usize>,
    /// Include class 0 in losses and metrics.
    #[arg(long, global = true)]
    pub include_background: bool,
    /// Report this percentile of boundary distances instead of the maximum.
    #[arg(long, global = true)]
    pub hd_percentile: Option<f64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl GlobalArgs {
    fn merge(self, other: Self) -> Self {
        Self {
            format: self.format.or(other.format),
            out: self.out.or(other.out),
            workers: self.workers.or(other.workers),
            spacing: self.spacing.or(other.spacing),
            boundary_width: self.boundary_width.or(other.boundary_width),
            include_background: self.include_background || other.include_background,
            hd_percentile: self.hd_percentile.or(other.hd_percentile),
            config: self.config,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn classes(&self) -> Classes {
        Classes::from_include_background(self.include_background)
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        let cfg = EvalConfig {
            spacing: self.spacing.unwrap_or(1.0),
            boundary_width: self.boundary_width,
            hd_percentile: self.hd_percentile,
            classes: self.classes(),
        };
        cfg.validate()?;
        if let Some(q) = cfg.hd_percentile {
            if !(0.0..=100.0).contains(&q) {
                return Err(Usage(format!("--hd-percentile {q} must lie in [0, 100]")).into());
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// CSV file of `prediction,ground_truth` filename pairs.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveArgs {
    /// Fixed α of the DoU curve [default: 0.8].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of evenly spaced overlap fractions in [0, 1] [default: 11].
    #[arg(long)]
    pub samples: Option<usize>,
}

impl CurveArgs {
    fn merge(self, other: Self) -> Self {
        merge!(self, other; alpha, samples)
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossArgs {
    /// dou, dice, ce, dice_ce, tversky, boundary or scheduled (`fit` also accepts `all`).
    #[arg(long)]
    pub loss: Option<String>,
    /// Fixed DoU α; adaptive per class when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Tversky false-negative weight [default: 0.7].
    #[arg(long)]
    pub tversky_alpha: Option<f64>,
    /// Tversky false-positive weight [default: 0.3].
    #[arg(long)]
    pub tversky_beta: Option<f64>,
    /// Dice weight in Dice+CE [default: 0.5].
    #[arg(long)]
    pub dice_weight: Option<f64>,
    /// Cross-entropy weight in Dice+CE [default: 0.5].
    #[arg(long)]
    pub ce_weight: Option<f64>,
    /// Epoch for the scheduled Boundary loss.
    #[arg(long)]
    pub epoch: Option<usize>,
}

impl LossArgs {
    fn merge(self, other: Self) -> Self {
        merge!(self, other; loss, alpha, tversky_alpha, tversky_beta, dice_weight, ce_weight, epoch)
    }

    pub fn name(&self) -> &str {
        self.loss.as_deref().unwrap_or("dou")
    }

    pub fn build(&self, name: &str, classes: Classes) -> Result<Loss> {
        let mut loss = Loss::from_name(name, classes)?;
        match &mut loss {
            Loss::BoundaryDou(cfg) => {
                if let Some(a) = self.alpha {
                    cfg.alpha = AlphaMode::Fixed(a);
                }
            }
            Loss::DiceCe {
                dice_weight,
                ce_weight,
                ..
            } => {
                *dice_weight = self.dice_weight.unwrap_or(*dice_weight);
                *ce_weight = self.ce_weight.unwrap_or(*ce_weight);
            }
            Loss::Tversky { alpha, beta, .. } => {
                *alpha = self.tversky_alpha.unwrap_or(*alpha);
                *beta = self.tversky_beta.unwrap_or(*beta);
            }
            Loss::Scheduled { epoch, .. } => *epoch = self.epoch.unwrap_or(0),
            _ => {}
        }
        loss.validate()?;
        Ok(loss)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Square,
    Ring,
    TwoBlobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Uniform,
    Noisy,
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Synthetic target shape.
    #[arg(long, value_enum, conflicts_with = "target")]
    pub shape: Option<ShapeKind>,
    /// Square side, or disc radius (outer radius for a ring).
    #[arg(long)]
    pub size: Option<usize>,
    /// Inner radius of a ring; half the outer radius by default.
    #[arg(long)]
    pub inner: Option<usize>,
    /// Image height of a synthetic target [default: 32].
    #[arg(long)]
    pub height: Option<usize>,
    /// Image width of a synthetic target [default: 32].
    #[arg(long)]
    pub width: Option<usize>,
    /// Label mask to fit instead of a synthetic shape.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Descent steps [default: 500].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Step size, applied to the gradient scaled by the pixel count [default: 1.0].
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Seed for noisy initialization [default: 7].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial logits [default: noisy].
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Standard deviation of noisy initial logits [default: 0.1].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Record a checkpoint every this many steps [default: 10].
    #[arg(long)]
    pub eval_every: Option<usize>,
}

impl FitArgs {
    fn merge(self, other: Self) -> Self {
        merge!(self, other; shape, size, inner, height, width, target, steps, step_size, seed, init, sigma, eval_every)
    }

    pub fn shape(&self) -> TargetShape {
        let size = self.size;
        match self.shape.unwrap_or(ShapeKind::Square) {
            ShapeKind::Circle => TargetShape::Circle {
                radius: size.unwrap_or(8),
            },
            ShapeKind::Square => TargetShape::Square {
                side: size.unwrap_or(16),
            },
            ShapeKind::Ring => {
                let outer = size.unwrap_or(10);
                TargetShape::Ring {
                    outer,
                    inner: self.inner.unwrap_or(outer / 2),
                }
            }
            ShapeKind::TwoBlobs => TargetShape::TwoBlobs {
                radius: size.unwrap_or(5),
            },
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height.unwrap_or(32), self.width.unwrap_or(32))
    }

    pub fn fit_config(&self, loss: Loss, boundary_width: Option<usize>) -> FitConfig {
        let mut cfg = FitConfig::new(loss);
        cfg.steps = self.steps.unwrap_or(cfg.steps);
        cfg.step_size = self.step_size.unwrap_or(cfg.step_size);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.eval_every = self.eval_every.unwrap_or(cfg.eval_every);
        cfg.boundary_width = boundary_width;
        cfg.init = match self.init.unwrap_or(InitKind::Noisy) {
            InitKind::Uniform => Init::Uniform,
            InitKind::Noisy => Init::Noisy {
                sigma: self.sigma.unwrap_or(0.1),
            },
        };
        cfg
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub global: GlobalArgs,
    pub eval: EvalArgs,
    pub curve: CurveArgs,
    pub loss: LossArgs,
    pub fit: FitArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Usage(format!("invalid config {}: {e}", path.display())))
            .context("loading configuration")
    }

    pub fn global(&self, flags: GlobalArgs) -> GlobalArgs {
        flags.merge(self.global.clone())
    }

    pub fn eval(&self, flags: EvalArgs) -> EvalArgs {
        EvalArgs {
            manifest: flags.manifest.or_else(|| self.eval.manifest.clone()),
        }
    }

    pub fn curve(&self, flags: CurveArgs) -> CurveArgs {
        flags.merge(self.curve.clone())
    }

    pub fn loss(&self, flags: LossArgs) -> LossArgs {
        flags.merge(self.loss.clone())
    }

    pub fn fit(&self, flags: FitArgs) -> FitArgs {
        flags.merge(self.fit.clone())
    }
}
