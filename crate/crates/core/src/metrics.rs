//! Hard-mask evaluation: Dice similarity, Hausdorff distance, Boundary IoU,
//! hard Boundary DoU, and the contour-to-area size split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{adaptive_alpha, Classes};
use crate::mask::{BinaryMask, LabelMask};
use crate::morphology::{
    area, boundary_width, contour, contour_length, inner_boundary, squared_distance_transform,
};

/// Targets with `C/S` below this ratio count as large.
pub const LARGE_TARGET_RATIO: f64 = 0.2;

fn overlap_counts(g: &BinaryMask, p: &BinaryMask, context: &'static str) -> Result<(usize, usize, usize)> {
    g.check_same_shape(p, context)?;
    let (mut inter, mut ng, mut np) = (0, 0, 0);
    for (&a, &b) in g.bits().iter().zip(p.bits()) {
        inter += (a && b) as usize;
        ng += a as usize;
        np += b as usize;
    }
    Ok((inter, ng, np))
}

/// `2|G∩P| / (|G| + |P|)`; two empty masks score 1.
pub fn dsc(g: &BinaryMask, p: &BinaryMask) -> Result<f64> {
    let (inter, ng, np) = overlap_counts(g, p, "dsc")?;
    if ng + np == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (ng + np) as f64)
}

/// `|G∩P| / |G∪P|`; two empty masks score 1.
pub fn iou(g: &BinaryMask, p: &BinaryMask) -> Result<f64> {
    let (inter, ng, np) = overlap_counts(g, p, "iou")?;
    let union = ng + np - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// IoU of the two inner-boundary rings of width `d`.
pub fn boundary_iou(g: &BinaryMask, p: &BinaryMask, d: usize) -> Result<f64> {
    g.check_same_shape(p, "boundary_iou")?;
    if d == 0 {
        return Err(Error::param("boundary_width", "must be at least 1"));
    }
    iou(&inner_boundary(g, d), &inner_boundary(p, d))
}

/// Hard Boundary DoU `S_D / (S_D + (1 − α)·S_I)` with `α` adaptive on `g`.
/// Zero when both masks are empty.
pub fn hard_dou(g: &BinaryMask, p: &BinaryMask) -> Result<f64> {
    let (inter, ng, np) = overlap_counts(g, p, "dou")?;
    let diff = (ng + np - 2 * inter) as f64;
    if ng + np == 0 {
        return Ok(0.0);
    }
    let keep = 1.0 - adaptive_alpha(g);
    Ok(diff / (diff + keep * inter as f64))
}

fn directed_distances(from: &BinaryMask, to: &BinaryMask) -> Vec<f64> {
    let sq = squared_distance_transform(to);
    from.bits()
        .iter()
        .zip(sq)
        .filter(|(&on, _)| on)
        .map(|(_, d)| (d as f64).sqrt())
        .collect()
}

fn contour_pair(g: &BinaryMask, p: &BinaryMask) -> Result<(BinaryMask, BinaryMask)> {
    g.check_same_shape(p, "hausdorff")?;
    if g.is_empty() || p.is_empty() {
        return Err(Error::UndefinedMetric("hausdorff distance needs two non-empty masks"));
    }
    Ok((contour(g), contour(p)))
}

/// Symmetric Hausdorff distance between the contour pixel sets, scaled by `spacing`.
pub fn hausdorff(g: &BinaryMask, p: &BinaryMask, spacing: f64) -> Result<f64> {
    let (cg, cp) = contour_pair(g, p)?;
    let forward = directed_distances(&cg, &cp).into_iter().fold(0.0, f64::max);
    let backward = directed_distances(&cp, &cg).into_iter().fold(0.0, f64::max);
    Ok(forward.max(backward) * spacing)
}

/// Percentile (linear interpolation) of the pooled directed contour
/// distances in both directions, scaled by `spacing`.
pub fn hausdorff_percentile(g: &BinaryMask, p: &BinaryMask, spacing: f64, percentile: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::param("hd_percentile", format!("{percentile} not in [0, 100]")));
    }
    let (cg, cp) = contour_pair(g, p)?;
    let mut all = directed_distances(&cg, &cp);
    all.extend(directed_distances(&cp, &cg));
    all.sort_by(f64::total_cmp);
    let pos = percentile / 100.0 * (all.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let v = all[lo] + (all[hi] - all[lo]) * (pos - lo as f64);
    Ok(v * spacing)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Small,
    Empty,
}

impl SizeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Large => "large",
            SizeClass::Small => "small",
            SizeClass::Empty => "empty",
        }
    }
}

/// Large when `C/S < 0.2`.
pub fn classify_size(g: &BinaryMask) -> SizeClass {
    let s = area(g);
    if s == 0 {
        return SizeClass::Empty;
    }
    // C/S < 1/5 without rounding.
    if 5 * contour_length(g) < s {
        SizeClass::Large
    } else {
        SizeClass::Small
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Multiplier converting pixel distances to physical units.
    pub spacing: f64,
    /// Boundary width override; defaults to 0.5% of the image diagonal.
    pub boundary_width: Option<usize>,
    /// Report this percentile of contour distances instead of the maximum.
    pub hd_percentile: Option<f64>,
    pub classes: Classes,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            spacing: 1.0,
            boundary_width: None,
            hd_percentile: None,
            classes: Classes::Foreground,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::param("spacing", format!("{} must be positive", self.spacing)));
        }
        if self.boundary_width == Some(0) {
            return Err(Error::param("boundary_width", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: usize,
    pub dsc: f64,
    /// `None` when either mask is empty.
    pub hd: Option<f64>,
    pub boundary_iou: f64,
    pub dou: f64,
    pub size_class: SizeClass,
    /// Absent from both ground truth and prediction; left out of the means.
    pub skipped: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_dsc: Option<f64>,
    pub mean_hd: Option<f64>,
    pub mean_boundary_iou: Option<f64>,
    pub mean_dou: Option<f64>,
    pub large_dsc: Option<f64>,
    pub small_dsc: Option<f64>,
    pub evaluated_classes: usize,
    pub skipped_classes: usize,
    pub hd_undefined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub image_id: String,
    pub boundary_width: usize,
    pub per_class: Vec<ClassMetrics>,
    pub aggregates: Aggregates,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let Some(m) = mean(values.iter().copied()) else {
        return (None, None);
    };
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    (Some(m), Some(var.sqrt()))
}

/// Per-class metrics for one ground-truth/prediction pair.
pub fn evaluate_pair(g: &LabelMask, p: &LabelMask, cfg: &EvalConfig) -> Result<MetricReport> {
    cfg.validate()?;
    if g.shape() != p.shape() {
        return Err(Error::shape("evaluate_pair", g.shape(), p.shape()));
    }
    if g.num_classes() != p.num_classes() {
        return Err(Error::shape("evaluate_pair class count", g.num_classes(), p.num_classes()));
    }
    let d = cfg
        .boundary_width
        .unwrap_or_else(|| boundary_width(g.height(), g.width()));

    let mut per_class = Vec::new();
    for c in cfg.classes.range(g.num_classes()) {
        let gm = g.class_mask(c)?;
        let pm = p.class_mask(c)?;
        let hd = if gm.is_empty() || pm.is_empty() {
            None
        } else {
            Some(match cfg.hd_percentile {
                Some(q) => hausdorff_percentile(&gm, &pm, cfg.spacing, q)?,
                None => hausdorff(&gm, &pm, cfg.spacing)?,
            })
        };
        per_class.push(ClassMetrics {
            class_id: c,
            dsc: dsc(&gm, &pm)?,
            hd,
            boundary_iou: boundary_iou(&gm, &pm, d)?,
            dou: hard_dou(&gm, &pm)?,
            size_class: classify_size(&gm),
            skipped: gm.is_empty() && pm.is_empty(),
        });
    }
    let aggregates = aggregate(&per_class);
    Ok(MetricReport {
        image_id: String::new(),
        boundary_width: d,
        per_class,
        aggregates,
    })
}

fn aggregate(per_class: &[ClassMetrics]) -> Aggregates {
    let live: Vec<&ClassMetrics> = per_class.iter().filter(|m| !m.skipped).collect();
    let by_size = |size: SizeClass| mean(live.iter().filter(|m| m.size_class == size).map(|m| m.dsc));
    Aggregates {
        mean_dsc: mean(live.iter().map(|m| m.dsc)),
        mean_hd: mean(live.iter().filter_map(|m| m.hd)),
        mean_boundary_iou: mean(live.iter().map(|m| m.boundary_iou)),
        mean_dou: mean(live.iter().map(|m| m.dou)),
        large_dsc: by_size(SizeClass::Large),
        small_dsc: by_size(SizeClass::Small),
        evaluated_classes: live.len(),
        skipped_classes: per_class.len() - live.len(),
        hd_undefined: live.iter().filter(|m| m.hd.is_none()).count(),
    }
}

/// Mean and population standard deviation of a per-image aggregate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

impl Spread {
    fn of(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Self {
            mean,
            std,
            count: values.len(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub images: usize,
    pub dsc: Spread,
    pub hd: Spread,
    pub boundary_iou: Spread,
    pub dou: Spread,
    /// DSC over every large / small class instance in the dataset.
    pub large_dsc: Spread,
    pub small_dsc: Spread,
    pub skipped_classes: usize,
    pub hd_undefined: usize,
}

/// Dataset-level summary: per-image means averaged across images, plus the
/// large/small split pooled over class instances.
pub fn summarize(reports: &[MetricReport]) -> DatasetSummary {
    let pick = |f: fn(&Aggregates) -> Option<f64>| {
        Spread::of(reports.iter().filter_map(|r| f(&r.aggregates)).collect())
    };
    let sized = |size: SizeClass| {
        Spread::of(
            reports
                .iter()
                .flat_map(|r| &r.per_class)
                .filter(|m| !m.skipped && m.size_class == size)
                .map(|m| m.dsc)
                .collect(),
        )
    };
    DatasetSummary {
        images: reports.len(),
        dsc: pick(|a| a.mean_dsc),
        hd: pick(|a| a.mean_hd),
        boundary_iou: pick(|a| a.mean_boundary_iou),
        dou: pick(|a| a.mean_dou),
        large_dsc: sized(SizeClass::Large),
        small_dsc: sized(SizeClass::Small),
        skipped_classes: reports.iter().map(|r| r.aggregates.skipped_classes).sum(),
        hd_undefined: reports.iter().map(|r| r.aggregates.hd_undefined).sum(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub class_id: usize,
    pub contour: usize,
    pub area: usize,
    /// `1 − 2C/S` before clamping; undefined for an absent class.
    pub raw_alpha: Option<f64>,
    pub alpha: f64,
    pub size_class: SizeClass,
}

/// Contour, area and adaptive α for each selected class of a label mask.
pub fn alpha_table(g: &LabelMask, classes: Classes) -> Vec<AlphaRow> {
    classes
        .range(g.num_classes())
        .map(|c| {
            let m = g.class_mask(c).expect("class in range");
            let (cl, s) = (contour_length(&m), area(&m));
            AlphaRow {
                class_id: c,
                contour: cl,
                area: s,
                raw_alpha: (s > 0).then(|| 1.0 - 2.0 * cl as f64 / s as f64),
                alpha: adaptive_alpha(&m),
                size_class: classify_size(&m),
            }
        })
        .collect()
}
