use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Loss;
use crate::error::{Error, Result};
use crate::mask::{LabelMask, ProbMap};

/// Scale floor for relative errors of near-zero derivatives.
const SCALE_FLOOR: f64 = 1e-8;

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(SCALE_FLOOR)
}

/// Largest relative error between the analytic gradient and central
/// finite differences, over every coordinate of `p`.
pub fn check_gradient(loss: &Loss, p: &ProbMap, g: &LabelMask, h: f64) -> Result<f64> {
    let coords: Vec<usize> = (0..p.as_slice().len()).collect();
    check_coords(loss, p, g, h, &coords)
}

/// As [`check_gradient`], over `count` coordinates drawn with a seeded RNG.
pub fn check_gradient_sampled(
    loss: &Loss,
    p: &ProbMap,
    g: &LabelMask,
    h: f64,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let len = p.as_slice().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = sample(&mut rng, len, count.min(len)).into_vec();
    coords.sort_unstable();
    check_coords(loss, p, g, h, &coords)
}

fn check_coords(loss: &Loss, p: &ProbMap, g: &LabelMask, h: f64, coords: &[usize]) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("step {h} must be positive")));
    }
    let analytic = loss
        .evaluate(p, g)?
        .gradient
        .ok_or(Error::param("loss", "no analytic gradient"))?;

    let (height, width, k) = (p.height(), p.width(), p.classes());
    let mut probe = p.as_slice().to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = loss
            .evaluate(&ProbMap::from_raw(height, width, k, probe.clone())?, g)?
            .value;
        probe[i] = orig - h;
        let minus = loss
            .evaluate(&ProbMap::from_raw(height, width, k, probe.clone())?, g)?
            .value;
        probe[i] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_error(analytic.values[i], numeric));
    }
    Ok(worst)
}
