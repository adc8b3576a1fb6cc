//! Exhaustive reference implementations, written directly from the set
//! definitions and sharing no code with the library.

use bdou::BinaryMask;

fn on(m: &BinaryMask, r: isize, c: isize) -> bool {
    r >= 0 && c >= 0 && (r as usize) < m.height() && (c as usize) < m.width() && m.get(r as usize, c as usize)
}

pub fn points(m: &BinaryMask) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for r in 0..m.height() {
        for c in 0..m.width() {
            if m.get(r, c) {
                v.push((r, c));
            }
        }
    }
    v
}

/// Contour pixels: set pixels with a 4-neighbor that is unset or off-image.
pub fn contour_points(m: &BinaryMask) -> Vec<(usize, usize)> {
    points(m)
        .into_iter()
        .filter(|&(r, c)| {
            let (r, c) = (r as isize, c as isize);
            !(on(m, r - 1, c) && on(m, r + 1, c) && on(m, r, c - 1) && on(m, r, c + 1))
        })
        .collect()
}

fn sq_dist(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0).pow(2) + a.1.abs_diff(b.1).pow(2)
}

fn nearest(p: (usize, usize), set: &[(usize, usize)]) -> f64 {
    let best = set.iter().map(|&q| sq_dist(p, q)).min().expect("non-empty set");
    (best as f64).sqrt()
}

/// `d` rounds of 4-neighbor erosion keep exactly the pixels whose L1 ball of
/// radius `d` lies inside the image and inside the mask.
fn survives_erosion(m: &BinaryMask, r: usize, c: usize, d: usize) -> bool {
    let d = d as isize;
    for dr in -d..=d {
        let span = d - dr.abs();
        for dc in -span..=span {
            if !on(m, r as isize + dr, c as isize + dc) {
                return false;
            }
        }
    }
    true
}

pub fn ring(m: &BinaryMask, d: usize) -> Vec<bool> {
    let mut v = Vec::with_capacity(m.height() * m.width());
    for r in 0..m.height() {
        for c in 0..m.width() {
            v.push(m.get(r, c) && !survives_erosion(m, r, c, d));
        }
    }
    v
}

fn set_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(&x, &y)| x && y).count();
    let union = a.iter().zip(b).filter(|(&x, &y)| x || y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn iou(g: &BinaryMask, p: &BinaryMask) -> f64 {
    set_iou(g.bits(), p.bits())
}

pub fn boundary_iou(g: &BinaryMask, p: &BinaryMask, d: usize) -> f64 {
    set_iou(&ring(g, d), &ring(p, d))
}

pub fn dsc(g: &BinaryMask, p: &BinaryMask) -> f64 {
    let (a, b) = (points(g), points(p));
    let inter = a.iter().filter(|x| b.contains(x)).count();
    if a.len() + b.len() == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (a.len() + b.len()) as f64
    }
}

/// Max-min over contour point pairs in both directions; `None` if either mask is empty.
pub fn hausdorff(g: &BinaryMask, p: &BinaryMask) -> Option<f64> {
    let (a, b) = (contour_points(g), contour_points(p));
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let forward = a.iter().map(|&x| nearest(x, &b)).fold(0.0, f64::max);
    let backward = b.iter().map(|&y| nearest(y, &a)).fold(0.0, f64::max);
    Some(forward.max(backward))
}

pub fn unsigned_distance(m: &BinaryMask) -> Vec<f64> {
    let set = points(m);
    let mut out = Vec::new();
    for r in 0..m.height() {
        for c in 0..m.width() {
            out.push(if set.is_empty() { f64::INFINITY } else { nearest((r, c), &set) });
        }
    }
    out
}

pub fn signed_distance(m: &BinaryMask) -> Vec<f64> {
    let edge = contour_points(m);
    let mut out = Vec::new();
    for r in 0..m.height() {
        for c in 0..m.width() {
            let d = nearest((r, c), &edge);
            out.push(if m.get(r, c) { -d } else { d });
        }
    }
    out
}

/// Hard Boundary DoU from raw counts with the adaptive rule on `g`.
pub fn hard_dou(g: &BinaryMask, p: &BinaryMask) -> f64 {
    let (a, b) = (points(g), points(p));
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let diff = a.len() + b.len() - 2 * inter;
    if a.len() + b.len() == 0 {
        return 0.0;
    }
    let alpha = if a.is_empty() {
        0.0
    } else {
        (1.0 - 2.0 * contour_points(g).len() as f64 / a.len() as f64).clamp(0.0, 1.0 - 1e-6)
    };
    diff as f64 / (diff as f64 + (1.0 - alpha) * inter as f64)
}
