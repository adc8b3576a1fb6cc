use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bdou::io::{read_tensor, write_label_mask, write_prob_map};
use bdou::{one_hot, LabelMask, ProbMap};
use serde_json::Value;
use tempfile::TempDir;

fn bdou(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdou"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn square_mask(h: usize, w: usize, top: usize, left: usize, side: usize) -> LabelMask {
    let labels = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            u8::from((top..top + side).contains(&r) && (left..left + side).contains(&c))
        })
        .collect();
    LabelMask::new(h, w, 2, labels).unwrap()
}

#[test]
fn curve_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = bdou(&["curve", "--alpha", "0.8", "--samples", "11"], tmp.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,dice,dou");
    assert_eq!(lines.len(), 12);
    assert!(lines.contains(&"0.5,0.5,0.909091"));
    assert!(lines.contains(&"1,0,0"));
}

#[test]
fn curve_rejects_alpha_of_one() {
    let tmp = TempDir::new().unwrap();
    let o = bdou(&["curve", "--alpha", "1"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_of_identical_directories_is_perfect() {
    let tmp = TempDir::new().unwrap();
    for dir in ["gt", "pred"] {
        fs::create_dir(tmp.path().join(dir)).unwrap();
        for i in 0..3 {
            let m = square_mask(24, 24, 3 + i, 4, 10);
            write_label_mask(&tmp.path().join(dir).join(format!("img{i}.png")), &m).unwrap();
        }
    }
    let o = bdou(&["eval", "pred", "gt", "--format", "json", "--workers", "2"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["dsc"]["mean"], 1.0);
    assert_eq!(v["summary"]["hd"]["mean"], 0.0);
    assert_eq!(v["summary"]["boundary_iou"]["mean"], 1.0);
    let ids: Vec<&str> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["image_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["img0.png", "img1.png", "img2.png"]);
}

#[test]
fn eval_means_match_shifted_square_overlaps() {
    // A side-s square shifted k columns overlaps its original in s(s-k) pixels.
    let tmp = TempDir::new().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    fs::create_dir(&gt).unwrap();
    fs::create_dir(&pred).unwrap();
    let side = 12;
    let mut expected = 0.0;
    for k in 0..10 {
        let name = format!("p{k:02}.png");
        write_label_mask(&gt.join(&name), &square_mask(32, 32, 8, 4, side)).unwrap();
        write_label_mask(&pred.join(&name), &square_mask(32, 32, 8, 4 + k, side)).unwrap();
        expected += (side - k) as f64 / side as f64;
    }
    expected /= 10.0;
    let out = tmp.path().join("out");
    let o = bdou(
        &["eval", "pred", "gt", "--format", "json", "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let mean = v["summary"]["dsc"]["mean"].as_f64().unwrap();
    assert!((mean - expected).abs() < 1e-12, "{mean} vs {expected}");
    let reports: Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 10);
}

#[test]
fn eval_of_empty_directories_fails() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir(tmp.path().join("a")).unwrap();
    fs::create_dir(tmp.path().join("b")).unwrap();
    let o = bdou(&["eval", "a", "b"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no pairs found"));
}

#[test]
fn eval_continues_past_bad_pairs() {
    let tmp = TempDir::new().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    fs::create_dir(&gt).unwrap();
    fs::create_dir(&pred).unwrap();
    write_label_mask(&gt.join("ok.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();
    write_label_mask(&pred.join("ok.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();
    write_label_mask(&gt.join("shape.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();
    write_label_mask(&pred.join("shape.png"), &square_mask(20, 16, 2, 2, 6)).unwrap();
    write_label_mask(&gt.join("orphan.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();

    let o = bdou(&["eval", "pred", "gt"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("shape.png") && err.contains("orphan.png"), "{err}");
    let text = stdout(&o);
    assert!(text.contains("ok.png,1,1,0,1,0,"), "{text}");
}

#[test]
fn eval_manifest_pairs_renamed_files() {
    let tmp = TempDir::new().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    fs::create_dir(&gt).unwrap();
    fs::create_dir(&pred).unwrap();
    write_label_mask(&gt.join("case1.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();
    write_label_mask(&pred.join("case1_pred.png"), &square_mask(16, 16, 2, 2, 6)).unwrap();
    fs::write(tmp.path().join("pairs.csv"), "# prediction,ground truth\ncase1_pred.png,case1.png\n").unwrap();
    let o = bdou(&["eval", "pred", "gt", "--manifest", "pairs.csv"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("case1.png,1,1,0,1,0,"));
}

#[test]
fn alpha_table_for_ten_pixel_square() {
    let tmp = TempDir::new().unwrap();
    write_label_mask(&tmp.path().join("g.png"), &square_mask(20, 20, 5, 5, 10)).unwrap();
    let o = bdou(&["alpha", "g.png"], tmp.path());
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "class_id,contour,area,raw_alpha,alpha,size_class\n1,36,100,0.28,0.28,small\n"
    );
}

fn write_case(dir: &Path, p: &ProbMap, g: &LabelMask) {
    write_prob_map(&dir.join("p.bin"), p).unwrap();
    write_label_mask(&dir.join("g.png"), g).unwrap();
}

#[test]
fn loss_of_one_hot_prediction_is_zero() {
    let tmp = TempDir::new().unwrap();
    let g = square_mask(12, 12, 3, 3, 5);
    write_case(tmp.path(), &one_hot(&g, 2).unwrap(), &g);
    let o = bdou(&["loss", "p.bin", "g.png", "--loss", "dou"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "loss,value,skipped_classes\ndou,0,\n");
}

#[test]
fn cross_entropy_of_uniform_prediction() {
    let tmp = TempDir::new().unwrap();
    let g = square_mask(8, 8, 2, 2, 3);
    write_case(tmp.path(), &ProbMap::uniform(8, 8, 2).unwrap(), &g);
    let o = bdou(&["loss", "p.bin", "g.png", "--loss", "ce", "--format", "json"], tmp.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-7);
}

#[test]
fn gradient_file_has_tensor_shape() {
    let tmp = TempDir::new().unwrap();
    let g = square_mask(8, 6, 1, 1, 4);
    write_case(tmp.path(), &ProbMap::uniform(8, 6, 2).unwrap(), &g);
    let o = bdou(&["loss", "p.bin", "g.png", "--loss", "tversky", "--grad", "grad.bin"], tmp.path());
    assert!(o.status.success());
    let (header, values) = read_tensor(&tmp.path().join("grad.bin")).unwrap();
    assert_eq!((header.height, header.width, header.classes), (8, 6, 2));
    assert_eq!(values.len(), 8 * 6 * 2);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn loss_reports_class_mismatch() {
    let tmp = TempDir::new().unwrap();
    let labels = (0..64).map(|i| (i % 3) as u8).collect();
    let g = LabelMask::new(8, 8, 3, labels).unwrap();
    write_case(tmp.path(), &ProbMap::uniform(8, 8, 2).unwrap(), &g);
    let o = bdou(&["loss", "p.bin", "g.png"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_writes_checkpoints_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let args = |out: &str| {
        [
            "fit", "--shape", "square", "--loss", "dou", "--steps", "500", "--seed", "7", "--out", out,
        ]
        .map(String::from)
    };
    for out in ["a", "b"] {
        let a = args(out);
        let o = bdou(&a.iter().map(String::as_str).collect::<Vec<_>>(), tmp.path());
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("dou: step 500"));
    }
    let a = fs::read(tmp.path().join("a/trace_dou.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trace_dou.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 500 / 10);
    assert_eq!(
        fs::read(tmp.path().join("a/mask_dou.png")).unwrap(),
        fs::read(tmp.path().join("b/mask_dou.png")).unwrap()
    );
}

#[test]
fn fit_all_emits_one_trace_per_loss() {
    let tmp = TempDir::new().unwrap();
    let o = bdou(
        &["fit", "--loss", "all", "--steps", "40", "--eval-every", "20", "--format", "json", "--out", "o"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in bdou::Loss::NAMES {
        assert!(tmp.path().join(format!("o/trace_{name}.json")).exists());
    }
    let cmp: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["traces"].as_array().unwrap().len(), bdou::Loss::NAMES.len());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "[global]\nformat = \"json\"\n\n[curve]\nalpha = 0.5\nsamples = 3\n",
    )
    .unwrap();
    let o = bdou(&["curve", "--config", "run.toml"], tmp.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);

    let o = bdou(&["curve", "--config", "run.toml", "--samples", "5", "--format", "csv"], tmp.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);

    fs::write(tmp.path().join("bad.toml"), "[curve]\nalpah = 0.5\n").unwrap();
    let o = bdou(&["curve", "--config", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_finite_fit_exits_with_runtime_status() {
    let tmp = TempDir::new().unwrap();
    let o = bdou(&["fit", "--loss", "ce", "--steps", "5", "--step-size", "1e308"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
