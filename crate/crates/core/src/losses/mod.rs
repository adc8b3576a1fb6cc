//! Differentiable segmentation losses over probability fields.
//!
//! Every loss returns its value together with the analytic gradient with
//! respect to the input probabilities. Region losses use fuzzy set sums
//! (`s_i = Σ g·p`, `s_p = Σ p`) so they reduce to the set formulas on binary
//! inputs.

mod boundary;
mod entropy;
mod gradcheck;
mod region;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{LabelMask, ProbMap};

pub use boundary::{boundary_loss, schedule_weight, scheduled_combined_loss};
pub use entropy::{cross_entropy_loss, dice_ce_loss, CE_PROB_FLOOR};
pub use gradcheck::{check_gradient, check_gradient_sampled, relative_error};
pub use region::{
    adaptive_alpha, boundary_dou_loss, class_region_sums, dice_loss, region_sums, tversky_loss,
    AlphaMode, DouConfig, RegionSums, ALPHA_UPPER_MARGIN,
};

/// Denominator smoothing shared by the region losses.
pub const EPSILON: f64 = 1e-6;

/// Which classes a region loss averages over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classes {
    /// Classes `1..K`.
    #[default]
    Foreground,
    /// Classes `0..K`.
    All,
}

impl Classes {
    pub fn from_include_background(include: bool) -> Self {
        if include {
            Classes::All
        } else {
            Classes::Foreground
        }
    }

    pub fn range(self, num_classes: usize) -> std::ops::Range<usize> {
        match self {
            Classes::Foreground => 1..num_classes,
            Classes::All => 0..num_classes,
        }
    }
}

/// Gradient of a loss with respect to the probability field; same layout as [`ProbMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub values: Vec<f64>,
}

impl GradientField {
    pub(crate) fn zeros_like(p: &ProbMap) -> Self {
        Self {
            height: p.height(),
            width: p.width(),
            classes: p.classes(),
            values: vec![0.0; p.as_slice().len()],
        }
    }

    pub fn matches(&self, p: &ProbMap) -> bool {
        self.height == p.height()
            && self.width == p.width()
            && self.classes == p.classes()
            && self.values.len() == p.as_slice().len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub gradient: Option<GradientField>,
    /// Classes left out because the loss is undefined for them.
    pub skipped_classes: Vec<usize>,
}

impl LossResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self
                .gradient
                .as_ref()
                .is_none_or(|g| g.values.iter().all(|v| v.is_finite()))
    }

    /// `Σ wᵢ·Lᵢ` for value and gradient.
    pub(crate) fn weighted_sum(parts: &[(f64, LossResult)]) -> LossResult {
        let value = parts.iter().map(|(w, r)| w * r.value).sum();
        let gradient = parts.iter().try_fold(None::<GradientField>, |acc, (w, r)| {
            let g = r.gradient.as_ref()?;
            Some(Some(match acc {
                None => GradientField {
                    values: g.values.iter().map(|v| w * v).collect(),
                    ..g.clone()
                },
                Some(mut a) => {
                    a.values.iter_mut().zip(&g.values).for_each(|(a, v)| *a += w * v);
                    a
                }
            }))
        });
        let mut skipped: Vec<usize> = parts
            .iter()
            .flat_map(|(_, r)| r.skipped_classes.iter().copied())
            .collect();
        skipped.sort_unstable();
        skipped.dedup();
        LossResult {
            value,
            gradient: gradient.flatten(),
            skipped_classes: skipped,
        }
    }
}

/// A configured loss function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    BoundaryDou(DouConfig),
    Dice {
        classes: Classes,
    },
    CrossEntropy,
    DiceCe {
        dice_weight: f64,
        ce_weight: f64,
        classes: Classes,
    },
    Tversky {
        alpha: f64,
        beta: f64,
        classes: Classes,
    },
    Boundary {
        classes: Classes,
    },
    /// `w·(Dice + CE) + (1 − w)·Boundary` with `w` decaying per epoch.
    Scheduled {
        epoch: usize,
        classes: Classes,
    },
}

impl Loss {
    /// Default configuration for each selector name.
    pub fn from_name(name: &str, classes: Classes) -> Result<Self> {
        Ok(match name {
            "dou" | "boundary_dou" => Loss::BoundaryDou(DouConfig {
                classes,
                ..DouConfig::default()
            }),
            "dice" => Loss::Dice { classes },
            "ce" | "cross_entropy" => Loss::CrossEntropy,
            "dice_ce" | "dice-ce" => Loss::DiceCe {
                dice_weight: 0.5,
                ce_weight: 0.5,
                classes,
            },
            "tversky" => Loss::Tversky {
                alpha: 0.7,
                beta: 0.3,
                classes,
            },
            "boundary" => Loss::Boundary { classes },
            "scheduled" => Loss::Scheduled { epoch: 0, classes },
            other => return Err(Error::param("loss", format!("unknown loss `{other}`"))),
        })
    }

    pub const NAMES: [&'static str; 7] =
        ["dou", "dice", "ce", "dice_ce", "tversky", "boundary", "scheduled"];

    pub fn name(&self) -> &'static str {
        match self {
            Loss::BoundaryDou(_) => "dou",
            Loss::Dice { .. } => "dice",
            Loss::CrossEntropy => "ce",
            Loss::DiceCe { .. } => "dice_ce",
            Loss::Tversky { .. } => "tversky",
            Loss::Boundary { .. } => "boundary",
            Loss::Scheduled { .. } => "scheduled",
        }
    }

    /// Same loss at a given training epoch; only the scheduled loss depends on it.
    pub fn at_epoch(&self, epoch: usize) -> Loss {
        match self {
            Loss::Scheduled { classes, .. } => Loss::Scheduled {
                epoch,
                classes: *classes,
            },
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Loss::BoundaryDou(cfg) => cfg.validate(),
            Loss::DiceCe {
                dice_weight,
                ce_weight,
                ..
            } => check_weights(&[("dice_weight", *dice_weight), ("ce_weight", *ce_weight)]),
            Loss::Tversky { alpha, beta, .. } => {
                check_weights(&[("tversky_alpha", *alpha), ("tversky_beta", *beta)])
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, p: &ProbMap, g: &LabelMask) -> Result<LossResult> {
        self.validate()?;
        match self {
            Loss::BoundaryDou(cfg) => boundary_dou_loss(p, g, cfg),
            Loss::Dice { classes } => dice_loss(p, g, *classes),
            Loss::CrossEntropy => cross_entropy_loss(p, g),
            Loss::DiceCe {
                dice_weight,
                ce_weight,
                classes,
            } => dice_ce_loss(p, g, *dice_weight, *ce_weight, *classes),
            Loss::Tversky {
                alpha,
                beta,
                classes,
            } => tversky_loss(p, g, *alpha, *beta, *classes),
            Loss::Boundary { classes } => boundary_loss(p, g, *classes),
            Loss::Scheduled { epoch, classes } => scheduled_combined_loss(p, g, *epoch, *classes),
        }
    }
}

fn check_weights(weights: &[(&'static str, f64)]) -> Result<()> {
    for &(name, w) in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::param(name, format!("{w} must be a finite non-negative weight")));
        }
    }
    Ok(())
}
