//! Binary morphology on a 4-connected grid, contour measures, and exact
//! Euclidean distance transforms.
//!
//! Pixels outside the image are treated as background everywhere in this
//! module: a mask touching the border erodes there and has contour there.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, Shape};

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Fraction of the image diagonal used as the default boundary width.
pub const BOUNDARY_WIDTH_FRACTION: f64 = 0.005;

/// Applies `iterations` rounds of 4-neighbor erosion.
pub fn erode(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let mut current = mask.clone();
    for _ in 0..iterations {
        if current.is_empty() {
            break;
        }
        current = erode_once(&current);
    }
    current
}

fn erode_once(mask: &BinaryMask) -> BinaryMask {
    let shape = mask.shape();
    let mut bits = vec![false; shape.len()];
    for r in 0..shape.height {
        for c in 0..shape.width {
            bits[shape.index(r, c)] = mask.get(r, c) && all_neighbors_set(mask, r, c);
        }
    }
    BinaryMask::from_parts(shape, bits)
}

#[inline]
fn all_neighbors_set(mask: &BinaryMask, r: usize, c: usize) -> bool {
    NEIGHBORS_4
        .iter()
        .all(|&(dr, dc)| mask.get_or_false(r as isize + dr, c as isize + dc))
}

/// Pixels of `mask` within `d` erosion steps of its contour: `mask \ erode(mask, d)`.
pub fn inner_boundary(mask: &BinaryMask, d: usize) -> BinaryMask {
    let eroded = erode(mask, d);
    mask.and_not(&eroded).expect("erosion preserves shape")
}

/// Default boundary width: 0.5% of the image diagonal, rounded, at least one pixel.
pub fn boundary_width(height: usize, width: usize) -> usize {
    let diagonal = ((height * height + width * width) as f64).sqrt();
    ((BOUNDARY_WIDTH_FRACTION * diagonal).round() as usize).max(1)
}

/// Mask pixels with at least one 4-neighbor that is background or off-image.
pub fn contour(mask: &BinaryMask) -> BinaryMask {
    let shape = mask.shape();
    let mut bits = vec![false; shape.len()];
    for r in 0..shape.height {
        for c in 0..shape.width {
            bits[shape.index(r, c)] = mask.get(r, c) && !all_neighbors_set(mask, r, c);
        }
    }
    BinaryMask::from_parts(shape, bits)
}

/// Contour length `C` as a count of contour pixels.
pub fn contour_length(mask: &BinaryMask) -> usize {
    contour(mask).count()
}

/// Target size `S` in pixels.
pub fn area(mask: &BinaryMask) -> usize {
    mask.count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceMap {
    pub height: usize,
    pub width: usize,
    pub signed: bool,
    pub values: Vec<f64>,
}

impl DistanceMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Euclidean distance transform.
///
/// Unsigned: distance from every pixel to the nearest mask pixel (infinite
/// everywhere when the mask is empty). Signed: distance to the contour pixel
/// set, negated for mask pixels off the contour; contour pixels are zero.
pub fn distance_transform(mask: &BinaryMask, signed: bool) -> Result<DistanceMap> {
    let shape = mask.shape();
    let values = if signed {
        if mask.is_empty() {
            return Err(Error::UndefinedSign("empty"));
        }
        if mask.is_full() {
            return Err(Error::UndefinedSign("all-true"));
        }
        let edge = contour(mask);
        squared_distance_transform(&edge)
            .into_iter()
            .zip(mask.bits())
            .map(|(sq, &inside)| {
                let d = (sq as f64).sqrt();
                if inside {
                    -d
                } else {
                    d
                }
            })
            .collect()
    } else {
        squared_distance_transform(mask)
            .into_iter()
            .map(|sq| if sq == u64::MAX { f64::INFINITY } else { (sq as f64).sqrt() })
            .collect()
    };
    Ok(DistanceMap {
        height: shape.height,
        width: shape.width,
        signed,
        values,
    })
}

/// Exact squared Euclidean distance to the nearest `true` pixel, `u64::MAX`
/// when the mask is empty. Separable lower-envelope algorithm: a column pass
/// followed by a parabola envelope along each row.
pub(crate) fn squared_distance_transform(mask: &BinaryMask) -> Vec<u64> {
    let shape = mask.shape();
    let column = column_pass(mask, shape);

    let mut out = vec![u64::MAX; shape.len()];
    let mut f = vec![None; shape.width];
    let mut env = Envelope::with_capacity(shape.width);
    for r in 0..shape.height {
        for (c, slot) in f.iter_mut().enumerate() {
            *slot = column[shape.index(r, c)];
        }
        env.fill(&f, &mut out[r * shape.width..(r + 1) * shape.width]);
    }
    out
}

/// Squared vertical distance to the nearest set pixel in the same column.
fn column_pass(mask: &BinaryMask, shape: Shape) -> Vec<Option<u64>> {
    let mut col = vec![None; shape.len()];
    for c in 0..shape.width {
        let mut last: Option<usize> = None;
        for r in 0..shape.height {
            if mask.get(r, c) {
                last = Some(r);
            }
            col[shape.index(r, c)] = last.map(|l| r - l);
        }
        let mut next: Option<usize> = None;
        for r in (0..shape.height).rev() {
            if mask.get(r, c) {
                next = Some(r);
            }
            let below = next.map(|n| n - r);
            let slot = &mut col[shape.index(r, c)];
            *slot = match (*slot, below) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    col.into_iter().map(|d| d.map(|d| (d * d) as u64)).collect()
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn fill(&mut self, f: &[Option<u64>], out: &mut [u64]) {
        self.sites.clear();
        self.bounds.clear();
        let height = |q: usize| f[q].map(|v| v as f64 + (q * q) as f64);

        for q in 0..f.len() {
            let Some(hq) = height(q) else { continue };
            loop {
                let Some(&v) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let hv = height(v).expect("sites carry finite values");
                let s = (hq - hv) / (2.0 * (q - v) as f64);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }

        if self.sites.is_empty() {
            return;
        }
        let mut k = 0;
        for (q, slot) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let v = self.sites[k];
            let dq = q.abs_diff(v) as u64;
            *slot = dq * dq + f[v].unwrap();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(h: usize, w: usize, top: usize, left: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |r, c| {
            (top..top + side).contains(&r) && (left..left + side).contains(&c)
        })
    }

    fn brute_sq(mask: &BinaryMask) -> Vec<u64> {
        let (h, w) = (mask.height(), mask.width());
        let mut out = vec![u64::MAX; h * w];
        for r in 0..h {
            for c in 0..w {
                for rr in 0..h {
                    for cc in 0..w {
                        if mask.get(rr, cc) {
                            let d = (r.abs_diff(rr).pow(2) + c.abs_diff(cc).pow(2)) as u64;
                            out[r * w + c] = out[r * w + c].min(d);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn erode_examples() {
        let m = BinaryMask::full(3, 3);
        let e = erode(&m, 1);
        assert_eq!(e.count(), 1);
        assert!(e.get(1, 1));

        let m = BinaryMask::full(5, 5);
        let e = erode(&m, 2);
        assert_eq!(e.count(), 1);
        assert!(e.get(2, 2));

        let m = square(6, 7, 1, 2, 3);
        assert_eq!(erode(&m, 0), m);
    }

    #[test]
    fn inner_boundary_examples() {
        let ring = inner_boundary(&BinaryMask::full(3, 3), 1);
        assert_eq!(ring.count(), 8);
        assert!(!ring.get(1, 1));

        let empty = BinaryMask::empty(5, 5);
        assert!(inner_boundary(&empty, 3).is_empty());

        // 3-pixel-thick bar vanishes under two erosions.
        let bar = BinaryMask::from_fn(10, 10, |r, _| (4..7).contains(&r));
        assert_eq!(inner_boundary(&bar, 2), bar);
    }

    #[test]
    fn boundary_width_examples() {
        assert_eq!(boundary_width(224, 224), 2);
        assert_eq!(boundary_width(10, 10), 1);
        assert_eq!(boundary_width(512, 512), 4);
    }

    #[test]
    fn contour_and_area_examples() {
        let sq = square(20, 20, 5, 5, 10);
        assert_eq!(contour_length(&sq), 36);
        assert_eq!(area(&sq), 100);
        assert_eq!(area(&sq.complement()) + area(&sq), 400);
        assert_eq!(contour_length(&square(5, 5, 2, 2, 1)), 1);
        assert_eq!(contour_length(&square(5, 5, 1, 1, 3)), 8);
        assert_eq!(contour_length(&BinaryMask::empty(4, 4)), 0);
        // Border pixels count as contour.
        assert_eq!(contour_length(&BinaryMask::full(100, 100)), 396);
    }

    #[test]
    fn distance_examples() {
        let m = BinaryMask::from_fn(5, 5, |r, c| r == 0 && c == 0);
        let dt = distance_transform(&m, false).unwrap();
        assert_eq!(dt.get(3, 4), 5.0);
        assert_eq!(dt.get(0, 0), 0.0);

        let sq = square(8, 8, 2, 2, 4);
        let dt = distance_transform(&sq, false).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(dt.get(r, c) == 0.0, sq.get(r, c));
            }
        }
        assert!(distance_transform(&BinaryMask::empty(3, 3), false)
            .unwrap()
            .values
            .iter()
            .all(|v| v.is_infinite()));
    }

    #[test]
    fn signed_distance_sign_convention() {
        let sq = square(9, 9, 2, 2, 5);
        let dt = distance_transform(&sq, true).unwrap();
        let edge = contour(&sq);
        for r in 0..9 {
            for c in 0..9 {
                let v = dt.get(r, c);
                if edge.get(r, c) {
                    assert_eq!(v, 0.0);
                } else if sq.get(r, c) {
                    assert!(v < 0.0);
                } else {
                    assert!(v > 0.0);
                }
            }
        }
        assert_eq!(dt.get(4, 4), -2.0);
        assert_eq!(dt.get(0, 0), 8f64.sqrt());
    }

    #[test]
    fn signed_distance_undefined_cases() {
        assert!(matches!(
            distance_transform(&BinaryMask::empty(3, 3), true),
            Err(Error::UndefinedSign(_))
        ));
        assert!(matches!(
            distance_transform(&BinaryMask::full(3, 3), true),
            Err(Error::UndefinedSign(_))
        ));
    }

    fn binary_mask(max: usize) -> impl Strategy<Value = BinaryMask> {
        (1..=max, 1..=max, 0.05f64..0.95).prop_flat_map(|(h, w, density)| {
            proptest::collection::vec(proptest::bool::weighted(density), h * w)
                .prop_map(move |bits| BinaryMask::new(h, w, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn squared_edt_matches_brute_force(m in binary_mask(16)) {
            prop_assert_eq!(squared_distance_transform(&m), brute_sq(&m));
        }

        #[test]
        fn erosion_is_anti_extensive_monotone_and_additive(
            m in binary_mask(12), extra in proptest::collection::vec(any::<bool>(), 144), a in 0usize..4, b in 0usize..4
        ) {
            let bigger = BinaryMask::from_fn(m.height(), m.width(), |r, c| m.get(r, c) || extra[r * 12 + c]);
            prop_assert!(erode(&m, a).is_subset_of(&m));
            prop_assert!(erode(&m, a).is_subset_of(&erode(&bigger, a)));
            prop_assert_eq!(erode(&m, a + b), erode(&erode(&m, a), b));
        }

        #[test]
        fn inner_boundary_nested(m in binary_mask(12), d in 1usize..6) {
            let small = inner_boundary(&m, d);
            prop_assert!(small.is_subset_of(&m));
            prop_assert!(small.is_subset_of(&inner_boundary(&m, d + 1)));
        }

        #[test]
        fn contour_bounded_by_area(m in binary_mask(12)) {
            let c = contour_length(&m);
            let s = area(&m);
            prop_assert!(c <= s);
            prop_assert_eq!(c == s, erode(&m, 1).is_empty());
        }
    }
}
