//! Label masks, binary masks and per-pixel class-probability fields.
//!
//! All buffers are row-major. A [`ProbMap`] stores one `classes`-long
//! probability vector per pixel (pixel-major, class-minor).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a per-pixel probability sum from one.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    fn check_nonzero(self) -> Result<Self> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::param("shape", format!("{self} has a zero dimension")));
        }
        Ok(self)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

/// A class-label image. Every label is below `num_classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    shape: Shape,
    num_classes: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, num_classes: usize, labels: Vec<u8>) -> Result<Self> {
        let shape = Shape::new(height, width).check_nonzero()?;
        if labels.len() != shape.len() {
            return Err(Error::shape("label buffer", shape.len(), labels.len()));
        }
        if num_classes == 0 || num_classes > 256 {
            return Err(Error::param("num_classes", format!("{num_classes} not in 1..=256")));
        }
        if let Some((index, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= num_classes)
        {
            return Err(Error::LabelOutOfRange {
                index,
                label: label as usize,
                num_classes,
            });
        }
        Ok(Self {
            shape,
            num_classes,
            labels,
        })
    }

    /// Builds a mask whose class count is one past the largest label (at least 2).
    pub fn from_labels(height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(0, |m| m as usize + 1).max(2);
        Self::new(height, width, k, labels)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[self.shape.index(row, col)]
    }

    /// Same labels, declared with a larger class count.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if num_classes < self.num_classes {
            return Self::new(self.height(), self.width(), num_classes, self.labels);
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    /// Pixels carrying `class_id`.
    pub fn class_mask(&self, class_id: usize) -> Result<BinaryMask> {
        if class_id >= self.num_classes {
            return Err(Error::ClassOutOfRange {
                class_id,
                num_classes: self.num_classes,
            });
        }
        let bits = self.labels.iter().map(|&l| l as usize == class_id).collect();
        Ok(BinaryMask {
            shape: self.shape,
            bits,
        })
    }

    /// Indicator-vector probability field for these labels.
    pub fn one_hot(&self, num_classes: usize) -> Result<ProbMap> {
        one_hot(self, num_classes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    shape: Shape,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        let shape = Shape::new(height, width).check_nonzero()?;
        if bits.len() != shape.len() {
            return Err(Error::shape("binary mask buffer", shape.len(), bits.len()));
        }
        Ok(Self { shape, bits })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            shape: Shape::new(height, width),
            bits: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            shape: Shape::new(height, width),
            bits: vec![true; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            shape: Shape::new(height, width),
            bits,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[self.shape.index(row, col)]
    }

    /// Value at a signed coordinate; pixels outside the image read as `false`.
    #[inline]
    pub fn get_or_false(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.shape.height
            && (col as usize) < self.shape.width
            && self.get(row as usize, col as usize)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            shape: self.shape,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.shape == other.shape && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub(crate) fn check_same_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(context, self.shape, other.shape));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.check_same_shape(other, "binary mask operation")?;
        Ok(Self {
            shape: self.shape,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub(crate) fn from_parts(shape: Shape, bits: Vec<bool>) -> Self {
        debug_assert_eq!(shape.len(), bits.len());
        Self { shape, bits }
    }
}

/// Per-pixel class-probability field.
///
/// [`ProbMap::new`] enforces the simplex constraint. [`ProbMap::from_raw`]
/// only checks shape and finiteness; it exists so finite-difference probes
/// can evaluate losses slightly off the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    shape: Shape,
    classes: usize,
    probs: Vec<f64>,
}

impl ProbMap {
    pub fn new(height: usize, width: usize, classes: usize, probs: Vec<f64>) -> Result<Self> {
        let map = Self::from_raw(height, width, classes, probs)?;
        map.validate()?;
        Ok(map)
    }

    pub fn from_raw(height: usize, width: usize, classes: usize, probs: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(height, width).check_nonzero()?;
        if classes < 2 {
            return Err(Error::param("classes", format!("need at least 2 classes, got {classes}")));
        }
        if probs.len() != shape.len() * classes {
            return Err(Error::shape("probability buffer", shape.len() * classes, probs.len()));
        }
        if let Some(i) = probs.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProbability {
                index: i / classes,
                reason: format!("class {} entry is not finite", i % classes),
            });
        }
        Ok(Self {
            shape,
            classes,
            probs,
        })
    }

    /// Uniform distribution over all classes at every pixel.
    pub fn uniform(height: usize, width: usize, classes: usize) -> Result<Self> {
        Self::new(height, width, classes, vec![1.0 / classes as f64; height * width * classes])
    }

    fn validate(&self) -> Result<()> {
        for (index, px) in self.probs.chunks_exact(self.classes).enumerate() {
            if let Some(v) = px.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidProbability {
                    index,
                    reason: format!("entry {v} outside [0, 1]"),
                });
            }
            let sum: f64 = px.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(Error::InvalidProbability {
                    index,
                    reason: format!("entries sum to {sum}"),
                });
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_pixels(&self) -> usize {
        self.shape.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.probs[index * self.classes..(index + 1) * self.classes]
    }

    #[inline]
    pub fn prob(&self, pixel: usize, class: usize) -> f64 {
        self.probs[pixel * self.classes + class]
    }

    /// Iterator over one class channel.
    pub fn channel(&self, class: usize) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().skip(class).step_by(self.classes).copied()
    }

    pub fn argmax_labels(&self) -> LabelMask {
        argmax_labels(self)
    }

    pub(crate) fn check_matches(&self, g: &LabelMask) -> Result<()> {
        if self.shape != g.shape() {
            return Err(Error::shape("probability map vs label mask", g.shape(), self.shape));
        }
        if self.classes != g.num_classes() {
            return Err(Error::shape(
                "class count of probability map vs label mask",
                g.num_classes(),
                self.classes,
            ));
        }
        Ok(())
    }
}

pub fn one_hot(mask: &LabelMask, num_classes: usize) -> Result<ProbMap> {
    if num_classes < 2 {
        return Err(Error::param("num_classes", format!("need at least 2 classes, got {num_classes}")));
    }
    let mut probs = vec![0.0; mask.shape().len() * num_classes];
    for (i, &l) in mask.labels().iter().enumerate() {
        let l = l as usize;
        if l >= num_classes {
            return Err(Error::LabelOutOfRange {
                index: i,
                label: l,
                num_classes,
            });
        }
        probs[i * num_classes + l] = 1.0;
    }
    Ok(ProbMap {
        shape: mask.shape(),
        classes: num_classes,
        probs,
    })
}

/// Hard labels by per-pixel argmax; ties go to the lowest class index.
pub fn argmax_labels(p: &ProbMap) -> LabelMask {
    let labels = p
        .probs
        .chunks_exact(p.classes)
        .map(|px| {
            let mut best = 0;
            for (c, &v) in px.iter().enumerate().skip(1) {
                if v > px[best] {
                    best = c;
                }
            }
            best as u8
        })
        .collect();
    LabelMask {
        shape: p.shape,
        num_classes: p.classes,
        labels,
    }
}

pub fn class_mask(mask: &LabelMask, class_id: usize) -> Result<BinaryMask> {
    mask.class_mask(class_id)
}
