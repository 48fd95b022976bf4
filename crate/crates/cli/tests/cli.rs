use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infestscope"))
        .args(args)
        .env("INFESTSCOPE_THREADS", "1")
        .output()
        .expect("spawn binary")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_line(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).expect("json error line")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ANNOTATIONS: &str = "\
image_id,class,x_min,y_min,x_max,y_max
a,infected,10,10,30,30
a,infected,40,40,60,62
a,healthy,100,100,120,118
b,healthy,5,5,25,25
";

const DETECTIONS: &str = "\
image_id,class,score,x_min,y_min,x_max,y_max
a,infected,0.9,10,10,30,30
a,infected,0.8,40,40,60,62
a,healthy,0.7,100,100,120,118
b,healthy,0.6,5,5,25,25
";

/// Writes a small RGB PPM with a green square on brown soil.
fn write_ppm(path: &Path, w: usize, h: usize) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            let inside = (w / 4..3 * w / 4).contains(&x) && (h / 4..3 * h / 4).contains(&y);
            bytes.extend_from_slice(if inside { &[40, 150, 50] } else { &[120, 90, 60] });
        }
    }
    fs::write(path, bytes).unwrap();
}

fn setup() -> TempDir {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("gts.csv"), ANNOTATIONS).unwrap();
    fs::write(d.path().join("dets.csv"), DETECTIONS).unwrap();
    d
}

#[test]
fn evaluate_identical_boxes_is_perfect() {
    let d = setup();
    let out = d.path().join("out");
    ok(&[
        "evaluate",
        "--dets",
        s(&d.path().join("dets.csv")),
        "--gts",
        s(&d.path().join("gts.csv")),
        "--out",
        s(&out),
    ]);
    let e = json(&out.join("evaluate.json"));
    assert_eq!(e["map50"], 1.0);
    assert_eq!(e["map5095"], 1.0);
    assert!(e.get("ap_per_class_per_threshold").is_none());

    let m = json(&out.join("evaluate.manifest.json"));
    assert_eq!(m["subcommand"], "evaluate");
    assert_eq!(m["outputs"], serde_json::json!(["evaluate.json"]));
    let names: Vec<&str> = m["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["dets.csv", "gts.csv"]);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn evaluate_per_class_keeps_table() {
    let d = setup();
    let out = d.path().join("out");
    ok(&[
        "evaluate",
        "--dets",
        s(&d.path().join("dets.csv")),
        "--gts",
        s(&d.path().join("gts.csv")),
        "--per-class",
        "--out",
        s(&out),
    ]);
    let e = json(&out.join("evaluate.json"));
    assert_eq!(e["ap_per_class_per_threshold"]["infected"]["0.50"], 1.0);
}

#[test]
fn density_without_infected_trees_fails_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("healthy.csv");
    fs::write(
        &csv,
        "image_id,class,x_min,y_min,x_max,y_max\na,healthy,0,0,10,10\na,healthy,20,20,30,30\n",
    )
    .unwrap();
    let out = run(&["density", "--input", s(&csv), "--out", s(&d.path().join("o"))]);
    let err = error_line(&out);
    assert_eq!(err["subcommand"], "density");
    assert!(err["error"].as_str().unwrap().contains("empty infected set"), "{err}");
}

#[test]
fn missing_input_reports_json_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&[
        "sizeclass",
        "--input",
        s(&d.path().join("nope.csv")),
        "--out",
        s(d.path()),
    ]);
    let err = error_line(&out);
    assert_eq!(err["subcommand"], "sizeclass");
    assert!(err["error"].as_str().unwrap().contains("nope.csv"));
}

#[test]
fn report_with_only_evaluate() {
    let d = setup();
    let out = d.path().join("out");
    ok(&[
        "evaluate",
        "--dets",
        s(&d.path().join("dets.csv")),
        "--gts",
        s(&d.path().join("gts.csv")),
        "--out",
        s(&out),
    ]);
    ok(&["report", "--dir", s(&out)]);
    let r = json(&out.join("report.json"));
    assert_eq!(r["sections"], serde_json::json!(["evaluate"]));
    assert_eq!(r["evaluate"]["map50"], 1.0);
}

#[test]
fn report_collects_every_section() {
    let d = setup();
    let out = d.path().join("out");
    let (dets, gts) = (d.path().join("dets.csv"), d.path().join("gts.csv"));
    ok(&["evaluate", "--dets", s(&dets), "--gts", s(&gts), "--out", s(&out)]);
    ok(&[
        "density",
        "--input",
        s(&dets),
        "--extent",
        "0,0,200,200",
        "--grid-w",
        "32",
        "--grid-h",
        "32",
        "--out",
        s(&out),
    ]);
    ok(&[
        "risk",
        "--input",
        s(&dets),
        "--density",
        s(&out.join("density.json")),
        "--out",
        s(&out),
    ]);
    ok(&["protect", "--input", s(&gts), "--eps", "200", "--out", s(&out)]);
    ok(&["sizeclass", "--input", s(&gts), "--out", s(&out)]);
    let target = d.path().join("bundle.json");
    ok(&["report", "--dir", s(&out), "--output", s(&target)]);
    let r = json(&target);
    assert_eq!(
        r["sections"],
        serde_json::json!(["density", "evaluate", "protect", "risk", "sizeclass"])
    );
    assert!(r["density"].get("values").is_none());
    assert_eq!(r["risk"]["n_trees"], 2);
    assert_eq!(r["protect"]["areas"].as_array().unwrap().len(), 0);
    assert_eq!(
        r["sizeclass"]["small"]["total"].as_u64().unwrap()
            + r["sizeclass"]["medium"]["total"].as_u64().unwrap()
            + r["sizeclass"]["large"]["total"].as_u64().unwrap(),
        4
    );
    assert!(d.path().join("report.manifest.json").exists());
    assert_eq!(fs::read(&target).unwrap().last(), Some(&b'\n'));
}

#[test]
fn report_requires_evaluate() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["report", "--dir", s(d.path())]);
    let err = error_line(&out);
    assert!(
        err["error"].as_str().unwrap().contains("missing mandatory section"),
        "{err}"
    );
}

#[test]
fn report_names_corrupt_file() {
    let d = setup();
    let out = d.path().join("out");
    ok(&[
        "evaluate",
        "--dets",
        s(&d.path().join("dets.csv")),
        "--gts",
        s(&d.path().join("gts.csv")),
        "--out",
        s(&out),
    ]);
    fs::write(out.join("risk.json"), "{ not json").unwrap();
    let err = error_line(&run(&["report", "--dir", s(&out)]));
    assert!(err["error"].as_str().unwrap().contains("risk.json"), "{err}");
}

#[test]
fn protect_fails_on_unfittable_cluster() {
    let d = setup();
    let err = error_line(&run(&[
        "protect",
        "--input",
        s(&d.path().join("gts.csv")),
        "--eps",
        "200",
        "--min-pts",
        "2",
        "--out",
        s(d.path()),
    ]));
    assert_eq!(err["subcommand"], "protect");
    assert!(err["error"].as_str().unwrap().contains("at least 3 points"), "{err}");
}

#[test]
fn tile_verify_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("ortho.ppm");
    write_ppm(&img, 70, 45);
    let out = d.path().join("tiles");
    ok(&[
        "tile",
        "--input",
        s(&img),
        "--tile-size",
        "32",
        "--verify",
        "--out",
        s(&out),
    ]);
    let g = json(&out.join("grid.json"));
    assert_eq!((g["cols"].as_u64(), g["rows"].as_u64()), (Some(3), Some(2)));
    assert_eq!(
        (g["pad_right"].as_u64(), g["pad_bottom"].as_u64()),
        (Some(26), Some(19))
    );
    assert_eq!(g["roundtrip_exact"], true);
    assert!(out.join("tile_r001_c002.ppm").exists());
}

#[test]
fn tile_png_output() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("ortho.ppm");
    write_ppm(&img, 20, 20);
    let out = d.path().join("tiles");
    ok(&[
        "tile",
        "--input",
        s(&img),
        "--tile-size",
        "16",
        "--format",
        "png",
        "--verify",
        "--out",
        s(&out),
    ]);
    assert!(out.join("tile_r000_c000.png").exists());
}

#[test]
fn fem_then_blocks_demo() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("ortho.ppm");
    write_ppm(&img, 24, 16);
    let out = d.path().join("fem");
    ok(&["fem", "--input", s(&img), "--out", s(&out)]);
    for f in [
        "vdvi.pgm",
        "texture.pgm",
        "ngbdi.pgm",
        "tofi.ppm",
        "fem.json",
        "fem.manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let bout = d.path().join("blocks");
    let res = run(&[
        "blocks",
        "demo",
        "--rgb",
        s(&img),
        "--tofi",
        s(&out.join("tofi.ppm")),
        "--channels-out",
        "64",
        "--out",
        s(&bout),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("zero_weights_halve_input: pass"));
    assert!(!stdout.contains("FAIL"));
    let b = json(&bout.join("blocks.json"));
    assert_eq!(b["eca"]["kernel_size"], 3);
}

#[test]
fn blocks_demo_rejects_bad_logits_file() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("ortho.ppm");
    write_ppm(&img, 8, 8);
    let logits = d.path().join("logits.json");
    fs::write(&logits, "[1.0, 2.0, 3.0]").unwrap();
    let err = error_line(&run(&[
        "blocks",
        "demo",
        "--rgb",
        s(&img),
        "--tofi",
        s(&img),
        "--logits",
        s(&logits),
        "--out",
        s(d.path()),
    ]));
    assert_eq!(err["subcommand"], "blocks");
    assert!(err["error"].as_str().unwrap().contains("logits.json"));
}

#[test]
fn synth_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let spec = d.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 3, "extent": {"x_min": 0, "y_min": 0, "x_max": 500, "y_max": 500},
            "clusters": [{"centroid": [250, 250], "std": 40, "count": 30}],
            "healthy": {"uniform": 40, "blobs": []},
            "crown_area_range": [25, 100]}"#,
    )
    .unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&["synth", "--spec", s(&spec), "--render", "--out", s(&a)]);
    ok(&["synth", "--spec", s(&spec), "--render", "--out", s(&b)]);
    for f in [
        "annotations.csv",
        "detections.csv",
        "truth.json",
        "scene.ppm",
        "synth.manifest.json",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let truth = json(&a.join("truth.json"));
    assert_eq!(truth["expected"]["n_infected"], 30);
    assert_eq!(truth["expected"]["n_healthy"], 40);
}

#[test]
fn synth_rejects_infeasible_scene() {
    let d = tempfile::tempdir().unwrap();
    let spec = d.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 1, "extent": {"x_min": 0, "y_min": 0, "x_max": 20, "y_max": 20},
            "clusters": [], "healthy": {"uniform": 500, "blobs": []},
            "crown_area_range": [50, 100]}"#,
    )
    .unwrap();
    let err = error_line(&run(&["synth", "--spec", s(&spec), "--out", s(d.path())]));
    assert_eq!(err["subcommand"], "synth");
}

#[test]
fn default_extent_covers_edge_trees_after_serialization() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("trees.csv");
    fs::write(
        &csv,
        "image_id,class,x_min,y_min,x_max,y_max\n\
         a,infected,10.123456789,10,20,20\n\
         a,infected,40,40,50,50.987654321\n\
         a,healthy,90.111111111,90,100.222222221,100.333333333\n",
    )
    .unwrap();
    let out = d.path().join("o");
    ok(&[
        "density",
        "--input",
        s(&csv),
        "--grid-w",
        "16",
        "--grid-h",
        "16",
        "--out",
        s(&out),
    ]);
    ok(&[
        "risk",
        "--input",
        s(&csv),
        "--density",
        s(&out.join("density.json")),
        "--out",
        s(&out),
    ]);
}
