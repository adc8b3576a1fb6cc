//! Closed-form Dice and Boundary DoU losses for two regions of unit area
//! overlapping by a fraction `t`: `S_I = t`, `S_D = 2 − 2t`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub dice: f64,
    pub dou: f64,
}

pub fn dice_at(t: f64) -> f64 {
    let (s_i, s_d) = (t, 2.0 - 2.0 * t);
    1.0 - 2.0 * s_i / (2.0 * s_i + s_d)
}

pub fn dou_at(t: f64, alpha: f64) -> f64 {
    let (s_i, s_d) = (t, 2.0 - 2.0 * t);
    s_d / (s_d + (1.0 - alpha) * s_i)
}

/// `samples` evenly spaced overlaps from 0 to 1 inclusive.
pub fn loss_curve(alpha: f64, samples: usize) -> Result<Vec<CurvePoint>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [0, 1)")));
    }
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2 samples"));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            let t = i as f64 / last;
            CurvePoint {
                t,
                dice: dice_at(t),
                dou: dou_at(t, alpha),
            }
        })
        .collect())
}
