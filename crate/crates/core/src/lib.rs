//! Boundary Difference-over-Union (DoU) loss and boundary-quality metrics for
//! 2D segmentation.
//!
//! - [`mask`]: label masks, binary masks and probability fields
//! - [`morphology`]: erosion, inner boundaries, contour length, distance transforms
//! - [`losses`]: Boundary DoU (fixed or adaptive α), Dice, cross-entropy,
//!   Dice+CE, Tversky, Boundary loss and its epoch schedule, with analytic
//!   gradients and a finite-difference checker
//! - [`metrics`]: DSC, Hausdorff distance, Boundary IoU, size split, reports
//! - [`fitter`]: gradient-descent fitting of a logit field to a target mask
//! - [`curve`]: closed-form loss curves for unit-area regions
//! - [`io`], [`report`]: file formats and CSV rendering

pub mod curve;
pub mod error;
pub mod fitter;
pub mod io;
pub mod losses;
pub mod mask;
pub mod metrics;
pub mod morphology;
pub mod report;

pub use error::{Error, Result};
pub use losses::{Classes, DouConfig, Loss, LossResult};
pub use mask::{argmax_labels, class_mask, one_hot, BinaryMask, LabelMask, ProbMap};
