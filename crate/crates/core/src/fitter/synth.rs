use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::LabelMask;

/// Synthetic single-class targets, centered at `(height/2, width/2)`.
///
/// Discs include every pixel whose squared distance to the center is at most
/// `radius²`, so a zero radius gives the single center pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum TargetShape {
    Circle { radius: usize },
    Square { side: usize },
    /// Outer disc minus inner disc.
    Ring { outer: usize, inner: usize },
    /// Two discs side by side, three background columns apart.
    TwoBlobs { radius: usize },
}

impl TargetShape {
    pub fn name(&self) -> &'static str {
        match self {
            TargetShape::Circle { .. } => "circle",
            TargetShape::Square { .. } => "square",
            TargetShape::Ring { .. } => "ring",
            TargetShape::TwoBlobs { .. } => "two_blobs",
        }
    }
}

fn in_disc(r: usize, c: usize, cy: usize, cx: usize, radius: usize) -> bool {
    let (dy, dx) = (r.abs_diff(cy), c.abs_diff(cx));
    dy * dy + dx * dx <= radius * radius
}

fn check_disc(cy: isize, cx: isize, radius: usize, height: usize, width: usize) -> Result<()> {
    let r = radius as isize;
    if cy - r < 0 || cx - r < 0 || cy + r >= height as isize || cx + r >= width as isize {
        return Err(Error::param(
            "shape",
            format!("disc of radius {radius} at ({cy}, {cx}) does not fit {height}x{width}"),
        ));
    }
    Ok(())
}

/// Rasterizes `shape` as class 1 on a background of class 0.
pub fn synthesize_target(shape: TargetShape, height: usize, width: usize) -> Result<LabelMask> {
    if height == 0 || width == 0 {
        return Err(Error::param("shape", "image dimensions must be positive"));
    }
    let (cy, cx) = (height / 2, width / 2);
    let inside: Box<dyn Fn(usize, usize) -> bool> = match shape {
        TargetShape::Circle { radius } => {
            check_disc(cy as isize, cx as isize, radius, height, width)?;
            Box::new(move |r, c| in_disc(r, c, cy, cx, radius))
        }
        TargetShape::Square { side } => {
            if side == 0 || side > height || side > width {
                return Err(Error::param("side", format!("{side} does not fit {height}x{width}")));
            }
            let (top, left) = (cy - side / 2, cx - side / 2);
            if top + side > height || left + side > width {
                return Err(Error::param("side", format!("{side} does not fit {height}x{width}")));
            }
            Box::new(move |r, c| (top..top + side).contains(&r) && (left..left + side).contains(&c))
        }
        TargetShape::Ring { outer, inner } => {
            if inner >= outer {
                return Err(Error::param(
                    "inner",
                    format!("inner radius {inner} must be smaller than outer radius {outer}"),
                ));
            }
            check_disc(cy as isize, cx as isize, outer, height, width)?;
            Box::new(move |r, c| in_disc(r, c, cy, cx, outer) && !in_disc(r, c, cy, cx, inner))
        }
        TargetShape::TwoBlobs { radius } => {
            let offset = radius + 2;
            check_disc(cy as isize, cx as isize - offset as isize, radius, height, width)?;
            check_disc(cy as isize, (cx + offset) as isize, radius, height, width)?;
            let (left, right) = (cx - offset, cx + offset);
            Box::new(move |r, c| in_disc(r, c, cy, left, radius) || in_disc(r, c, cy, right, radius))
        }
    };
    let labels = (0..height * width)
        .map(|i| inside(i / width, i % width) as u8)
        .collect();
    LabelMask::new(height, width, 2, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{area, contour_length};

    fn fg(m: &LabelMask) -> crate::mask::BinaryMask {
        m.class_mask(1).unwrap()
    }

    #[test]
    fn square_counts() {
        let m = synthesize_target(TargetShape::Square { side: 10 }, 32, 32).unwrap();
        assert_eq!(area(&fg(&m)), 100);
        assert_eq!(contour_length(&fg(&m)), 36);
    }

    #[test]
    fn zero_radius_circle_is_center_pixel() {
        let m = synthesize_target(TargetShape::Circle { radius: 0 }, 9, 8).unwrap();
        assert_eq!(area(&fg(&m)), 1);
        assert_eq!(m.get(4, 4), 1);
    }

    #[test]
    fn ring_area_is_disc_difference() {
        let disc = |r| area(&fg(&synthesize_target(TargetShape::Circle { radius: r }, 32, 32).unwrap()));
        let ring = synthesize_target(TargetShape::Ring { outer: 8, inner: 4 }, 32, 32).unwrap();
        assert_eq!(area(&fg(&ring)), disc(8) - disc(4));
    }

    #[test]
    fn degenerate_parameters_rejected() {
        assert!(synthesize_target(TargetShape::Ring { outer: 4, inner: 4 }, 32, 32).is_err());
        assert!(synthesize_target(TargetShape::Circle { radius: 20 }, 32, 32).is_err());
        assert!(synthesize_target(TargetShape::Square { side: 33 }, 32, 32).is_err());
        assert!(synthesize_target(TargetShape::TwoBlobs { radius: 7 }, 32, 32).is_err());
    }

    #[test]
    fn two_blobs_are_separate() {
        let m = synthesize_target(TargetShape::TwoBlobs { radius: 4 }, 32, 32).unwrap();
        let disc = area(&fg(&synthesize_target(TargetShape::Circle { radius: 4 }, 32, 32).unwrap()));
        assert_eq!(area(&fg(&m)), 2 * disc);
        assert_eq!(m.get(16, 16), 0);
    }
}
