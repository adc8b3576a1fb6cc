use serde::{Deserialize, Serialize};

use super::{Classes, GradientField, LossResult, EPSILON};
use crate::error::{Error, Result};
use crate::mask::{BinaryMask, LabelMask, ProbMap};
use crate::morphology::{area, contour_length};

/// Keeps adaptive α strictly below one.
pub const ALPHA_UPPER_MARGIN: f64 = 1e-6;

/// Fuzzy-set sums for one class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RegionSums {
    /// Soft intersection `Σ g·p`.
    pub s_i: f64,
    /// Soft difference-set area `(s_g − s_i) + (s_p − s_i)`.
    pub s_d: f64,
    pub s_g: f64,
    pub s_p: f64,
}

impl RegionSums {
    fn from_pairs(pairs: impl Iterator<Item = (bool, f64)>) -> Self {
        let (mut s_i, mut s_g, mut s_p) = (0.0, 0.0, 0.0);
        for (g, p) in pairs {
            if g {
                s_i += p;
                s_g += 1.0;
            }
            s_p += p;
        }
        Self {
            s_i,
            s_d: (s_g - s_i) + (s_p - s_i),
            s_g,
            s_p,
        }
    }

    /// Soft false negatives `s_g − s_i`.
    pub fn false_negative(&self) -> f64 {
        self.s_g - self.s_i
    }

    /// Soft false positives `s_p − s_i`.
    pub fn false_positive(&self) -> f64 {
        self.s_p - self.s_i
    }

    fn both_empty(&self) -> bool {
        self.s_g == 0.0 && self.s_p == 0.0
    }
}

/// Sums for one probability channel against a binary ground truth.
pub fn region_sums(probs: &[f64], g: &BinaryMask) -> Result<RegionSums> {
    if probs.len() != g.shape().len() {
        return Err(Error::shape("region sums", g.shape().len(), probs.len()));
    }
    Ok(RegionSums::from_pairs(
        g.bits().iter().copied().zip(probs.iter().copied()),
    ))
}

pub fn class_region_sums(p: &ProbMap, g: &LabelMask, class: usize) -> Result<RegionSums> {
    p.check_matches(g)?;
    Ok(sums_for_class(p, g, class))
}

fn sums_for_class(p: &ProbMap, g: &LabelMask, class: usize) -> RegionSums {
    RegionSums::from_pairs(
        g.labels()
            .iter()
            .map(|&l| l as usize == class)
            .zip(p.channel(class)),
    )
}

/// `α = 1 − 2·C/S`, clamped to `[0, 1)`. Empty targets get `α = 0`.
pub fn adaptive_alpha(g: &BinaryMask) -> f64 {
    let s = area(g);
    if s == 0 {
        return 0.0;
    }
    let c = contour_length(g);
    (1.0 - 2.0 * c as f64 / s as f64).clamp(0.0, 1.0 - ALPHA_UPPER_MARGIN)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    Fixed(f64),
    /// Per class, per image, from the ground-truth contour-to-area ratio.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DouConfig {
    pub alpha: AlphaMode,
    pub epsilon: f64,
    pub classes: Classes,
}

impl Default for DouConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaMode::Adaptive,
            epsilon: EPSILON,
            classes: Classes::Foreground,
        }
    }
}

impl DouConfig {
    pub fn fixed(alpha: f64) -> Self {
        Self {
            alpha: AlphaMode::Fixed(alpha),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::param("alpha", format!("{a} is outside [0, 1)")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{} must be positive", self.epsilon)));
        }
        Ok(())
    }
}

/// Per-class loss value and its derivative w.r.t. a probability at a pixel
/// outside (`grad_bg`) or inside (`grad_fg`) the class's ground truth.
struct ClassTerm {
    value: f64,
    grad_bg: f64,
    grad_fg: f64,
}

/// Quotient-rule derivative of `num/den`.
#[inline]
fn quotient_grad(num: f64, den: f64, d_num: f64, d_den: f64) -> f64 {
    (d_num * den - num * d_den) / (den * den)
}

/// Averages a per-class term over the selected classes. A class absent from
/// both the ground truth and the prediction contributes zero value and zero
/// gradient.
fn region_loss(
    p: &ProbMap,
    g: &LabelMask,
    classes: Classes,
    mut term: impl FnMut(usize, &RegionSums) -> ClassTerm,
) -> Result<LossResult> {
    p.check_matches(g)?;
    let k = p.classes();
    let selected = classes.range(k);
    let n = selected.len() as f64;
    let mut grad = GradientField::zeros_like(p);
    let mut value = 0.0;
    for c in selected {
        let sums = sums_for_class(p, g, c);
        if sums.both_empty() {
            continue;
        }
        let t = term(c, &sums);
        value += t.value;
        let (bg, fg) = (t.grad_bg / n, t.grad_fg / n);
        for (px, &l) in g.labels().iter().enumerate() {
            grad.values[px * k + c] = if l as usize == c { fg } else { bg };
        }
    }
    Ok(LossResult {
        value: value / n,
        gradient: Some(grad),
        skipped_classes: Vec::new(),
    })
}

/// Boundary DoU loss `S_D / (S_D + (1 − α)·S_I + ε)`, averaged over classes.
pub fn boundary_dou_loss(p: &ProbMap, g: &LabelMask, cfg: &DouConfig) -> Result<LossResult> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    region_loss(p, g, cfg.classes, |c, s| {
        let alpha = match cfg.alpha {
            AlphaMode::Fixed(a) => a,
            AlphaMode::Adaptive => adaptive_alpha(&g.class_mask(c).expect("class in range")),
        };
        let keep = 1.0 - alpha;
        let num = s.s_d;
        let den = s.s_d + keep * s.s_i + eps;
        let grad = |gv: f64| {
            let d_num = 1.0 - 2.0 * gv;
            quotient_grad(num, den, d_num, d_num + keep * gv)
        };
        ClassTerm {
            value: num / den,
            grad_bg: grad(0.0),
            grad_fg: grad(1.0),
        }
    })
}

/// Soft Dice loss `1 − (2·S_I + ε) / (2·S_I + S_D + ε)`.
pub fn dice_loss(p: &ProbMap, g: &LabelMask, classes: Classes) -> Result<LossResult> {
    region_loss(p, g, classes, |_, s| {
        let num = 2.0 * s.s_i + EPSILON;
        let den = 2.0 * s.s_i + s.s_d + EPSILON;
        let grad = |gv: f64| -quotient_grad(num, den, 2.0 * gv, 2.0 * gv + (1.0 - 2.0 * gv));
        ClassTerm {
            value: 1.0 - num / den,
            grad_bg: grad(0.0),
            grad_fg: grad(1.0),
        }
    })
}

/// Soft Tversky loss `1 − S_I / (S_I + α·FN + β·FP)`.
///
/// Evaluated in the doubled form `(2·S_I + ε) / (2·S_I + 2α·FN + 2β·FP + ε)`
/// so that `α = β = 0.5` reproduces [`dice_loss`] bit for bit.
pub fn tversky_loss(
    p: &ProbMap,
    g: &LabelMask,
    alpha: f64,
    beta: f64,
    classes: Classes,
) -> Result<LossResult> {
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::param("tversky weights", format!("({alpha}, {beta}) must be non-negative")));
    }
    let (wa, wb) = (2.0 * alpha, 2.0 * beta);
    region_loss(p, g, classes, |_, s| {
        let num = 2.0 * s.s_i + EPSILON;
        let den = 2.0 * s.s_i + (wa * s.false_negative() + wb * s.false_positive()) + EPSILON;
        let grad = |gv: f64| -quotient_grad(num, den, 2.0 * gv, 2.0 * gv + (wa * -gv + wb * (1.0 - gv)));
        ClassTerm {
            value: 1.0 - num / den,
            grad_bg: grad(0.0),
            grad_fg: grad(1.0),
        }
    })
}
