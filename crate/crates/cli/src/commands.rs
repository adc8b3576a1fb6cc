use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use bdou::curve::loss_curve;
use bdou::fitter::{compare_losses, fit, synthesize_target, Comparison, FitTrace};
use bdou::io::{read_label_mask, read_prob_map, write_label_mask, write_tensor, TensorHeader};
use bdou::metrics::{alpha_table, evaluate_pair, summarize, DatasetSummary, EvalConfig, MetricReport};
use bdou::report::{alpha_csv, comparison_csv, curve_csv, metrics_csv, summary_csv, trace_csv};
use bdou::{LabelMask, Loss};

use crate::config::{CurveArgs, EvalArgs, FitArgs, Format, GlobalArgs, LossArgs};
use crate::output::{print, to_json, Output};
use crate::{EvalFailed, Usage};

fn require_dir(path: &Path) -> Result<()> {
    if !path.is_dir() {
        return Err(Usage(format!("{} is not a directory", path.display())).into());
    }
    Ok(())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Usage(format!("{} does not exist", path.display())).into());
    }
    Ok(())
}

struct Pair {
    id: String,
    pred: PathBuf,
    gt: PathBuf,
}

#[derive(Serialize)]
struct Failure {
    image_id: String,
    error: String,
}

fn is_mask_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "pnm"))
}

fn mask_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if is_mask_file(&path) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(name.to_owned());
            }
        }
    }
    Ok(names)
}

/// Pairs by identical filename; files present on one side only are failures.
fn match_by_name(pred_dir: &Path, gt_dir: &Path) -> Result<(Vec<Pair>, Vec<Failure>)> {
    let preds = mask_names(pred_dir)?;
    let gts = mask_names(gt_dir)?;
    let pairs = gts
        .intersection(&preds)
        .map(|name| Pair {
            id: name.clone(),
            pred: pred_dir.join(name),
            gt: gt_dir.join(name),
        })
        .collect();
    let failures = gts
        .difference(&preds)
        .map(|n| Failure {
            image_id: n.clone(),
            error: format!("no prediction in {}", pred_dir.display()),
        })
        .chain(preds.difference(&gts).map(|n| Failure {
            image_id: n.clone(),
            error: format!("no ground truth in {}", gt_dir.display()),
        }))
        .collect();
    Ok((pairs, failures))
}

/// Reads `prediction,ground_truth` lines; blank lines and `#` comments are skipped.
fn match_by_manifest(manifest: &Path, pred_dir: &Path, gt_dir: &Path) -> Result<Vec<Pair>> {
    let text = fs::read_to_string(manifest)
        .map_err(|e| Usage(format!("cannot read manifest {}: {e}", manifest.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((pred, gt)) = line.split_once(',') else {
            return Err(Usage(format!(
                "{}:{}: expected `prediction,ground_truth`",
                manifest.display(),
                i + 1
            ))
            .into());
        };
        let (pred, gt) = (pred.trim(), gt.trim());
        pairs.push(Pair {
            id: gt.to_owned(),
            pred: pred_dir.join(pred),
            gt: gt_dir.join(gt),
        });
    }
    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(pairs)
}

fn evaluate_files(pair: &Pair, cfg: &EvalConfig) -> bdou::Result<MetricReport> {
    let g = read_label_mask(&pair.gt, None)?;
    let p = read_label_mask(&pair.pred, None)?;
    let k = g.num_classes().max(p.num_classes());
    let mut report = evaluate_pair(&g.with_num_classes(k)?, &p.with_num_classes(k)?, cfg)?;
    report.image_id = pair.id.clone();
    Ok(report)
}

#[derive(Serialize)]
struct EvalSummary<'a> {
    summary: &'a DatasetSummary,
    failures: &'a [Failure],
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    reports: &'a [MetricReport],
    summary: &'a DatasetSummary,
    failures: &'a [Failure],
}

pub fn eval(pred_dir: &Path, gt_dir: &Path, args: EvalArgs, global: &GlobalArgs) -> Result<()> {
    require_dir(pred_dir)?;
    require_dir(gt_dir)?;
    let cfg = global.eval_config()?;
    let (pairs, mut failures) = match &args.manifest {
        Some(m) => (match_by_manifest(m, pred_dir, gt_dir)?, Vec::new()),
        None => match_by_name(pred_dir, gt_dir)?,
    };
    if pairs.is_empty() {
        return Err(Usage(format!(
            "no pairs found between {} and {}",
            pred_dir.display(),
            gt_dir.display()
        ))
        .into());
    }
    let out = Output::prepare(global.out.clone(), global.format())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.workers.unwrap_or(0))
        .build()
        .context("starting worker pool")?;
    let results: Vec<bdou::Result<MetricReport>> =
        pool.install(|| pairs.par_iter().map(|p| evaluate_files(p, &cfg)).collect());

    let mut runtime_failure = false;
    let mut reports = Vec::with_capacity(results.len());
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => {
                runtime_failure |= !e.is_validation();
                failures.push(Failure {
                    image_id: pair.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    failures.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    for f in &failures {
        eprintln!("error: {}: {}", f.image_id, f.error);
    }

    let summary = summarize(&reports);
    match out.dir() {
        Some(_) => {
            out.emit("metrics", || metrics_csv(&reports), &reports)?;
            out.emit(
                "summary",
                || summary_csv(&summary),
                &EvalSummary {
                    summary: &summary,
                    failures: &failures,
                },
            )?;
        }
        None => match out.format() {
            Format::Csv => print(&format!("{}\n{}", metrics_csv(&reports), summary_csv(&summary)))?,
            Format::Json => print(&to_json(&EvalOutput {
                reports: &reports,
                summary: &summary,
                failures: &failures,
            }))?,
        },
    }
    eprintln!("evaluated {} pairs, {} failed", reports.len(), failures.len());

    if failures.is_empty() {
        Ok(())
    } else {
        Err(EvalFailed {
            count: failures.len(),
            runtime: runtime_failure,
        }
        .into())
    }
}

pub fn curve(args: CurveArgs, global: &GlobalArgs) -> Result<()> {
    let points = loss_curve(args.alpha.unwrap_or(0.8), args.samples.unwrap_or(11))?;
    let out = Output::prepare(global.out.clone(), global.format())?;
    out.emit("curve", || curve_csv(&points), &points)
}

pub fn alpha(gt: &Path, global: &GlobalArgs) -> Result<()> {
    require_file(gt)?;
    let g = read_label_mask(gt, None)?;
    let out = Output::prepare(global.out.clone(), global.format())?;
    let rows = alpha_table(&g, global.classes());
    out.emit("alpha", || alpha_csv(&rows), &rows)
}

#[derive(Serialize)]
struct LossOutput<'a> {
    loss: &'a Loss,
    value: f64,
    skipped_classes: &'a [usize],
}

pub fn loss(tensor: &Path, gt: &Path, grad: Option<&Path>, args: LossArgs, global: &GlobalArgs) -> Result<()> {
    require_file(tensor)?;
    require_file(gt)?;
    let loss = args.build(args.name(), global.classes())?;
    let p = read_prob_map(tensor)?;
    let g = read_label_mask(gt, Some(p.classes()))?;
    let out = Output::prepare(global.out.clone(), global.format())?;
    let result = loss.evaluate(&p, &g)?;
    if !result.value.is_finite() {
        return Err(bdou::Error::NonFinite {
            step: 0,
            quantity: "loss",
        }
        .into());
    }
    if let Some(path) = grad {
        let field = result
            .gradient
            .as_ref()
            .ok_or_else(|| anyhow!("{} does not provide a gradient", loss.name()))?;
        let header = TensorHeader {
            height: field.height,
            width: field.width,
            classes: field.classes,
        };
        write_tensor(path, header, &field.values)?;
    }
    let skipped = result
        .skipped_classes
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    out.emit(
        "loss",
        || {
            format!(
                "loss,value,skipped_classes\n{},{},{skipped}\n",
                loss.name(),
                bdou::report::fmt_num(result.value)
            )
        },
        &LossOutput {
            loss: &loss,
            value: result.value,
            skipped_classes: &result.skipped_classes,
        },
    )
}

fn fit_target(args: &FitArgs) -> Result<LabelMask> {
    match &args.target {
        Some(path) => {
            require_file(path)?;
            Ok(read_label_mask(path, None)?)
        }
        None => {
            let (h, w) = args.dims();
            Ok(synthesize_target(args.shape(), h, w)?)
        }
    }
}

fn report_trace(trace: &FitTrace) {
    if let Some(last) = trace.last() {
        eprintln!(
            "{}: step {} loss {} dsc {} biou {}",
            trace.loss_name,
            last.step,
            bdou::report::fmt_num(last.loss),
            bdou::report::fmt_num(last.dsc),
            bdou::report::fmt_num(last.boundary_iou)
        );
    }
}

pub fn fit_cmd(fit_args: FitArgs, loss_args: LossArgs, global: &GlobalArgs) -> Result<()> {
    let target = fit_target(&fit_args)?;
    let names: Vec<&str> = match loss_args.name() {
        "all" => Loss::NAMES.to_vec(),
        name => vec![name],
    };
    let cfgs = names
        .iter()
        .map(|n| {
            let cfg = fit_args.fit_config(loss_args.build(n, global.classes())?, global.boundary_width);
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = Output::prepare(global.out.clone(), global.format())?;

    let traces = if cfgs.len() == 1 {
        vec![fit(&target, &cfgs[0])?]
    } else {
        compare_losses(&target, &cfgs)?.traces
    };
    traces.iter().for_each(report_trace);

    if let Some(dir) = out.dir() {
        for t in &traces {
            out.emit(&format!("trace_{}", t.loss_name), || trace_csv(t), t)?;
            write_label_mask(&dir.join(format!("mask_{}.png", t.loss_name)), &t.final_mask)?;
        }
    }
    if traces.len() == 1 {
        if out.dir().is_none() {
            out.emit("trace", || trace_csv(&traces[0]), &traces[0])?;
        }
    } else {
        let cmp = Comparison { traces };
        out.emit("comparison", || comparison_csv(&cmp), &cmp)?;
    }
    Ok(())
}
