//! CSV rendering with fixed column order and `%g`-style numbers.

use std::fmt::Write;

use crate::curve::CurvePoint;
use crate::fitter::{Comparison, FitTrace};
use crate::metrics::{AlphaRow, DatasetSummary, MetricReport, Spread};

pub const METRICS_HEADER: &str = "image_id,class_id,dsc,hd,biou,dou,size_class";
pub const CURVE_HEADER: &str = "t,dice,dou";
pub const TRACE_HEADER: &str = "step,loss,dsc,biou,dou";
pub const ALPHA_HEADER: &str = "class_id,contour,area,raw_alpha,alpha,size_class";
pub const SUMMARY_HEADER: &str = "metric,mean,std,count";

/// Formats with six significant digits like C's `%g`: no thousands
/// separators, exponent form only for very large or small magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn metrics_csv(reports: &[MetricReport]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in reports {
        for m in &r.per_class {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.image_id,
                m.class_id,
                fmt_num(m.dsc),
                opt(m.hd),
                fmt_num(m.boundary_iou),
                fmt_num(m.dou),
                m.size_class.as_str()
            )
            .unwrap();
        }
    }
    out
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        writeln!(out, "{},{},{}", fmt_num(p.t), fmt_num(p.dice), fmt_num(p.dou)).unwrap();
    }
    out
}

pub fn trace_csv(trace: &FitTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            fmt_num(r.loss),
            fmt_num(r.dsc),
            fmt_num(r.boundary_iou),
            fmt_num(r.dou)
        )
        .unwrap();
    }
    out
}

/// One row per checkpoint, `dsc`/`biou` columns per loss.
pub fn comparison_csv(cmp: &Comparison) -> String {
    let mut out = String::from("step");
    for t in &cmp.traces {
        write!(out, ",{0}_loss,{0}_dsc,{0}_biou", t.loss_name).unwrap();
    }
    out.push('\n');
    for row in cmp.rows() {
        write!(out, "{}", row.step).unwrap();
        for e in &row.entries {
            write!(out, ",{},{},{}", fmt_num(e.loss), fmt_num(e.dsc), fmt_num(e.boundary_iou)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn alpha_csv(rows: &[AlphaRow]) -> String {
    let mut out = String::from(ALPHA_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.class_id,
            r.contour,
            r.area,
            opt(r.raw_alpha),
            fmt_num(r.alpha),
            r.size_class.as_str()
        )
        .unwrap();
    }
    out
}

/// Dataset means and standard deviations, one metric per row.
pub fn summary_csv(s: &DatasetSummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    let rows: [(&str, &Spread); 6] = [
        ("dsc", &s.dsc),
        ("hd", &s.hd),
        ("biou", &s.boundary_iou),
        ("dou", &s.dou),
        ("large_dsc", &s.large_dsc),
        ("small_dsc", &s.small_dsc),
    ];
    for (name, spread) in rows {
        writeln!(out, "{name},{},{},{}", opt(spread.mean), opt(spread.std), spread.count).unwrap();
    }
    out
}
