use super::{cross_entropy_loss, dice_loss, Classes, GradientField, LossResult};
use crate::error::Result;
use crate::mask::{LabelMask, ProbMap};
use crate::morphology::distance_transform;

/// Signed-distance-weighted probability mass, `mean_x φ_G(x)·p(x)` per class.
///
/// Classes whose signed distance map is undefined (absent or covering the
/// whole image) are skipped and listed in the result.
pub fn boundary_loss(p: &ProbMap, g: &LabelMask, classes: Classes) -> Result<LossResult> {
    p.check_matches(g)?;
    let k = p.classes();
    let n = p.num_pixels() as f64;

    let mut maps = Vec::new();
    let mut skipped = Vec::new();
    for c in classes.range(k) {
        match distance_transform(&g.class_mask(c)?, true) {
            Ok(phi) => maps.push((c, phi.values)),
            Err(_) => skipped.push(c),
        }
    }

    let mut grad = GradientField::zeros_like(p);
    if maps.is_empty() {
        return Ok(LossResult {
            value: 0.0,
            gradient: Some(grad),
            skipped_classes: skipped,
        });
    }
    let m = maps.len() as f64;
    let mut value = 0.0;
    for (c, phi) in &maps {
        let mut sum = 0.0;
        for (px, (&d, prob)) in phi.iter().zip(p.channel(*c)).enumerate() {
            sum += d * prob;
            grad.values[px * k + c] = d / (n * m);
        }
        value += sum / n;
    }
    Ok(LossResult {
        value: value / m,
        gradient: Some(grad),
        skipped_classes: skipped,
    })
}

/// Region-loss weight at `epoch`: starts at 1, drops by 0.01 per epoch, floors at 0.01.
pub fn schedule_weight(epoch: usize) -> f64 {
    (100usize.saturating_sub(epoch)).max(1) as f64 / 100.0
}

/// `w·(Dice + CE) + (1 − w)·Boundary` with `w = schedule_weight(epoch)`.
pub fn scheduled_combined_loss(
    p: &ProbMap,
    g: &LabelMask,
    epoch: usize,
    classes: Classes,
) -> Result<LossResult> {
    let w = schedule_weight(epoch);
    Ok(LossResult::weighted_sum(&[
        (w, dice_loss(p, g, classes)?),
        (w, cross_entropy_loss(p, g)?),
        (1.0 - w, boundary_loss(p, g, classes)?),
    ]))
}
