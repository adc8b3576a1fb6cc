#![allow(dead_code)]

pub mod oracles;

use bdou::{BinaryMask, LabelMask, ProbMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random labels, uniform over `k` classes.
pub fn random_labels(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> LabelMask {
    let labels = (0..h * w).map(|_| rng.random_range(0..k) as u8).collect();
    LabelMask::new(h, w, k, labels).unwrap()
}

/// Softmax of logits drawn uniformly from [-1, 1].
pub fn random_probs(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> ProbMap {
    let mut probs = Vec::with_capacity(h * w * k);
    for _ in 0..h * w {
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sum: f64 = z.iter().map(|v: &f64| v.exp()).sum();
        probs.extend(z.iter().map(|v| v.exp() / sum));
    }
    ProbMap::new(h, w, k, probs).unwrap()
}

/// Random binary mask of random size up to `max`×`max`; density varies per mask.
pub fn random_mask(rng: &mut ChaCha8Rng, max: usize) -> BinaryMask {
    let h = rng.random_range(1..=max);
    let w = rng.random_range(1..=max);
    random_mask_of(rng, h, w)
}

pub fn random_mask_of(rng: &mut ChaCha8Rng, h: usize, w: usize) -> BinaryMask {
    let density = rng.random_range(0.1..0.9);
    if rng.random_bool(0.5) {
        // Blobby: union of a few rectangles.
        let mut bits = vec![false; h * w];
        for _ in 0..rng.random_range(1..4) {
            let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
            let (r1, c1) = (rng.random_range(r0..h), rng.random_range(c0..w));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    bits[r * w + c] = true;
                }
            }
        }
        BinaryMask::new(h, w, bits).unwrap()
    } else {
        BinaryMask::from_fn(h, w, |_, _| rng.random_bool(density))
    }
}

pub fn square(h: usize, w: usize, top: usize, left: usize, side: usize) -> BinaryMask {
    BinaryMask::from_fn(h, w, |r, c| {
        (top..top + side).contains(&r) && (left..left + side).contains(&c)
    })
}
