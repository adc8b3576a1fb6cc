//! Gradient-descent mask fitting.
//!
//! A per-pixel logit field is pushed through a softmax, scored by a
//! configured loss, and updated by fixed-step descent. The update is
//! `z ← z − step_size · N · ∂L/∂z` with `N` the pixel count, so that the step
//! size acts per pixel rather than being diluted by the image-mean losses.

mod synth;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::mask::{argmax_labels, LabelMask, ProbMap};
use crate::metrics::{boundary_iou, dsc, hard_dou};
use crate::morphology::boundary_width;

pub use synth::{synthesize_target, TargetShape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Init {
    /// All logits zero.
    Uniform,
    /// Independent Gaussian logits.
    Noisy { sigma: f64 },
}

impl Default for Init {
    fn default() -> Self {
        Init::Noisy { sigma: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub loss: Loss,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub init: Init,
    pub eval_every: usize,
    /// Boundary width for the Boundary IoU readout; defaults to 0.5% of the diagonal.
    pub boundary_width: Option<usize>,
}

impl FitConfig {
    pub fn new(loss: Loss) -> Self {
        Self {
            loss,
            steps: 500,
            step_size: 1.0,
            seed: 7,
            init: Init::default(),
            eval_every: 10,
            boundary_width: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::param("step_size", format!("{} must be positive", self.step_size)));
        }
        if self.eval_every == 0 {
            return Err(Error::param("eval_every", "must be at least 1"));
        }
        if let Init::Noisy { sigma } = self.init {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::param("sigma", format!("{sigma} must be non-negative")));
            }
        }
        if self.boundary_width == Some(0) {
            return Err(Error::param("boundary_width", "must be at least 1"));
        }
        self.loss.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub loss: f64,
    pub dsc: f64,
    pub boundary_iou: f64,
    pub dou: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitTrace {
    pub loss_name: String,
    pub records: Vec<Checkpoint>,
    #[serde(skip)]
    pub final_mask: LabelMask,
}

impl FitTrace {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.records.last()
    }
}

/// Row-wise softmax of a pixel-major logit field.
pub fn softmax(logits: &[f64], classes: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for px in logits.chunks_exact(classes) {
        let max = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut sum = 0.0;
        for &z in px {
            let e = (z - max).exp();
            sum += e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Loss value and `∂L/∂z` for a logit field.
pub fn logit_gradient(loss: &Loss, logits: &[f64], target: &LabelMask) -> Result<(f64, Vec<f64>)> {
    let k = target.num_classes();
    let probs = softmax(logits, k);
    let p = ProbMap::from_raw(target.height(), target.width(), k, probs)?;
    let res = loss.evaluate(&p, target)?;
    let dp = res
        .gradient
        .ok_or(Error::param("loss", "no analytic gradient"))?;
    let mut dz = vec![0.0; logits.len()];
    for ((pz, pp), gp) in dz
        .chunks_exact_mut(k)
        .zip(p.as_slice().chunks_exact(k))
        .zip(dp.values.chunks_exact(k))
    {
        let inner: f64 = pp.iter().zip(gp).map(|(a, b)| a * b).sum();
        for ((z, &pj), &gj) in pz.iter_mut().zip(pp).zip(gp) {
            *z = pj * (gj - inner);
        }
    }
    Ok((res.value, dz))
}

fn initial_logits(cfg: &FitConfig, len: usize) -> Result<Vec<f64>> {
    Ok(match cfg.init {
        Init::Uniform => vec![0.0; len],
        Init::Noisy { sigma } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("sigma", e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..len).map(|_| normal.sample(&mut rng)).collect()
        }
    })
}

fn readout(target: &LabelMask, pred: &LabelMask, d: usize) -> (f64, f64, f64) {
    let classes = 1..target.num_classes();
    let n = classes.len() as f64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for class in classes {
        let g = target.class_mask(class).expect("class in range");
        let p = pred.class_mask(class).expect("class in range");
        a += dsc(&g, &p).expect("same shape");
        b += boundary_iou(&g, &p, d).expect("same shape");
        c += hard_dou(&g, &p).expect("same shape");
    }
    (a / n, b / n, c / n)
}

/// Fits a logit field to `target` under `cfg.loss`. The scheduled loss uses
/// the step index as its epoch.
pub fn fit(target: &LabelMask, cfg: &FitConfig) -> Result<FitTrace> {
    cfg.validate()?;
    let k = target.num_classes();
    let n = target.shape().len() as f64;
    let d = cfg
        .boundary_width
        .unwrap_or_else(|| boundary_width(target.height(), target.width()));

    let mut logits = initial_logits(cfg, target.shape().len() * k)?;
    let mut records = Vec::with_capacity(cfg.steps / cfg.eval_every);
    let mut step = 0;
    loop {
        let (value, grad) = logit_gradient(&cfg.loss.at_epoch(step), &logits, target)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { step, quantity: "loss" });
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step, quantity: "gradient" });
        }
        if step > 0 && step % cfg.eval_every == 0 {
            let pred = hard_labels(&logits, target)?;
            let (dsc, boundary_iou, dou) = readout(target, &pred, d);
            records.push(Checkpoint {
                step,
                loss: value,
                dsc,
                boundary_iou,
                dou,
            });
        }
        if step == cfg.steps {
            break;
        }
        let scale = cfg.step_size * n;
        logits.iter_mut().zip(&grad).for_each(|(z, g)| *z -= scale * g);
        step += 1;
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { step, quantity: "logits" });
        }
    }

    Ok(FitTrace {
        loss_name: cfg.loss.name().to_string(),
        records,
        final_mask: hard_labels(&logits, target)?,
    })
}

fn hard_labels(logits: &[f64], target: &LabelMask) -> Result<LabelMask> {
    let k = target.num_classes();
    let p = ProbMap::from_raw(target.height(), target.width(), k, softmax(logits, k))?;
    Ok(argmax_labels(&p))
}

/// Side-by-side fits of several losses on one target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub traces: Vec<FitTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub step: usize,
    /// One entry per trace, in trace order.
    pub entries: Vec<Checkpoint>,
}

impl Comparison {
    /// Checkpoints aligned by step.
    pub fn rows(&self) -> Vec<ComparisonRow> {
        let Some(first) = self.traces.first() else {
            return Vec::new();
        };
        (0..first.records.len())
            .map(|i| ComparisonRow {
                step: first.records[i].step,
                entries: self.traces.iter().map(|t| t.records[i].clone()).collect(),
            })
            .collect()
    }
}

/// Runs every configuration on the same target. All configurations must
/// share steps, seed, checkpoint interval and initialization.
pub fn compare_losses(target: &LabelMask, cfgs: &[FitConfig]) -> Result<Comparison> {
    let Some(first) = cfgs.first() else {
        return Err(Error::param("configs", "at least one fit configuration is required"));
    };
    for cfg in cfgs {
        if cfg.steps != first.steps
            || cfg.seed != first.seed
            || cfg.eval_every != first.eval_every
            || cfg.init != first.init
        {
            return Err(Error::param(
                "configs",
                "all fits must share steps, seed, eval_every and init",
            ));
        }
    }
    let traces = cfgs
        .par_iter()
        .map(|cfg| fit(target, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { traces })
}
