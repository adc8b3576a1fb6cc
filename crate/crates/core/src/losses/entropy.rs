use super::{dice_loss, Classes, GradientField, LossResult};
use crate::error::{Error, Result};
use crate::mask::{LabelMask, ProbMap};

/// Probabilities are clamped to this floor before taking the logarithm.
pub const CE_PROB_FLOOR: f64 = 1e-7;

/// Mean per-pixel negative log-likelihood of the true class.
pub fn cross_entropy_loss(p: &ProbMap, g: &LabelMask) -> Result<LossResult> {
    p.check_matches(g)?;
    let n = p.num_pixels() as f64;
    let k = p.classes();
    let mut grad = GradientField::zeros_like(p);
    let mut total = 0.0;
    for (px, &l) in g.labels().iter().enumerate() {
        let idx = px * k + l as usize;
        let prob = p.as_slice()[idx];
        if prob >= CE_PROB_FLOOR {
            total -= prob.ln();
            grad.values[idx] = -1.0 / (n * prob);
        } else {
            total -= CE_PROB_FLOOR.ln();
        }
    }
    Ok(LossResult {
        value: total / n,
        gradient: Some(grad),
        skipped_classes: Vec::new(),
    })
}

/// `λ₁·Dice + λ₂·CE`.
pub fn dice_ce_loss(
    p: &ProbMap,
    g: &LabelMask,
    dice_weight: f64,
    ce_weight: f64,
    classes: Classes,
) -> Result<LossResult> {
    if !(dice_weight >= 0.0 && ce_weight >= 0.0) {
        return Err(Error::param(
            "dice_ce weights",
            format!("({dice_weight}, {ce_weight}) must be non-negative"),
        ));
    }
    Ok(LossResult::weighted_sum(&[
        (dice_weight, dice_loss(p, g, classes)?),
        (ce_weight, cross_entropy_loss(p, g)?),
    ]))
}
