use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use infestscope_core::blocks::{amfm_fuse, eca_forward, eca_gains, eca_kernel_size, AmfmParams, EcaConfig, FeatureMap};
use infestscope_core::canon;
use infestscope_core::detections::{
    annotations_to_csv, detections_to_csv, load_csv, load_csv_auto, load_voc_dir, points_of_class, Records, TreeClass,
};
use infestscope_core::fem::build_tofi;
use infestscope_core::metrics::{evaluate_with, EvalOptions};
use infestscope_core::raster::{encode_pnm, load_image, tile_with_overlap, untile, Raster};
use infestscope_core::situation::{
    default_eps, kde_with, protection_areas, risk_scores, size_class_stats, BandwidthRule, KdeOptions, PlotExtent,
    SizeClassMode,
};
use infestscope_core::synth::{generate, render, SceneSpec};

use crate::artifacts::*;
use crate::{
    draw, BlocksArgs, DensityArgs, EvaluateArgs, FemArgs, ProtectArgs, ReportArgs, RiskArgs, SizeclassArgs, SynthArgs,
    TileArgs,
};

fn save_raster(run: &mut Run, name: &str, r: &Raster) -> Result<()> {
    let path = run.path(name);
    infestscope_core::raster::save_image(r, &path)?;
    run.record(name);
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn tile(a: TileArgs) -> Result<()> {
    let src = load_image(&a.input)?;
    let grid = tile_with_overlap(&src, a.tile_size, a.overlap)?;
    let mut run = Run::new("tile", &a.out)?;
    run.input(&a.input)?;
    run.param("tile_size", a.tile_size)
        .param("overlap", a.overlap)
        .param("format", a.format.extension(src.channels()));

    let ext = a.format.extension(src.channels());
    let mut files = Vec::with_capacity(grid.tiles.len());
    for t in &grid.tiles {
        let name = format!("tile_r{:03}_c{:03}.{ext}", t.row, t.col);
        save_raster(&mut run, &name, &t.raster)?;
        files.push(json!({"row": t.row, "col": t.col, "file": name}));
    }
    let mut meta = json!({
        "source": file_name(&a.input),
        "source_width": grid.source_width(),
        "source_height": grid.source_height(),
        "channels": grid.channels,
        "tile_size": grid.tile_size,
        "overlap": grid.overlap,
        "cols": grid.cols,
        "rows": grid.rows,
        "pad_right": grid.pad_right,
        "pad_bottom": grid.pad_bottom,
        "tiles": files,
    });
    if a.verify {
        let mut reread = grid.clone();
        for (t, f) in reread
            .tiles
            .iter_mut()
            .zip(meta["tiles"].as_array().into_iter().flatten())
        {
            t.raster = load_image(run.path(f["file"].as_str().unwrap_or_default()))?;
        }
        let exact = untile(&reread)? == src;
        meta["roundtrip_exact"] = json!(exact);
        ensure!(exact, "reassembled tiles differ from the source image");
    }
    run.write_json("grid.json", &meta)?;
    run.finish()
}

pub fn fem(a: FemArgs) -> Result<()> {
    let rgb = load_image(&a.input)?;
    let tofi = build_tofi(&rgb)?;
    let mut run = Run::new("fem", &a.out)?;
    run.input(&a.input)?;
    run.param("format", a.format.extension(3));
    let one = a.format.extension(1);
    for (c, name) in ["vdvi", "texture", "ngbdi"].iter().enumerate() {
        save_raster(&mut run, &format!("{name}.{one}"), &tofi.base.channel(c))?;
    }
    save_raster(&mut run, &format!("tofi.{}", a.format.extension(3)), &tofi.base)?;
    run.write_json(
        "fem.json",
        &json!({
            "source": file_name(&a.input),
            "width": rgb.width(),
            "height": rgb.height(),
            "channels": ["vdvi", "texture", "ngbdi"],
            "norm_meta": tofi.norm_meta,
        }),
    )?;
    run.finish()
}

fn read_array(path: &Path) -> Result<Vec<f64>> {
    let v: Vec<f64> = canon::read_json(path)?;
    ensure!(
        v.iter().all(|x| x.is_finite()),
        "{}: non-finite parameter",
        path.display()
    );
    Ok(v)
}

#[derive(Serialize)]
struct ChannelStats {
    mean: f64,
    min: f64,
    max: f64,
}

fn channel_stats(m: &FeatureMap) -> Vec<ChannelStats> {
    (0..m.channels())
        .map(|c| {
            let p = m.plane(c);
            ChannelStats {
                mean: p.iter().sum::<f64>() / p.len() as f64,
                min: p.iter().copied().fold(f64::INFINITY, f64::min),
                max: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

fn reverse_pixels(m: &FeatureMap) -> FeatureMap {
    let mut data = Vec::with_capacity(m.data().len());
    for c in 0..m.channels() {
        data.extend(m.plane(c).iter().rev());
    }
    FeatureMap::new(m.channels(), m.height(), m.width(), data).expect("same shape")
}

pub fn blocks_demo(a: BlocksArgs) -> Result<()> {
    let rgb = load_image(&a.rgb)?;
    let tofi = load_image(&a.tofi)?;
    rgb.require_channels(3)?;
    tofi.require_channels(3)?;
    let (x_rgb, x_fem) = (FeatureMap::from_raster(&rgb), FeatureMap::from_raster(&tofi));
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut params = AmfmParams::random(a.channels_out, 3, 3, &mut rng);
    if let Some(p) = &a.proj_rgb {
        params.proj_rgb = read_array(p)?;
    }
    if let Some(p) = &a.proj_fem {
        params.proj_fem = read_array(p)?;
    }
    if let Some(p) = &a.logits {
        let l = read_array(p)?;
        ensure!(l.len() == 2, "{}: expected 2 logits, got {}", p.display(), l.len());
        params.logits = [l[0], l[1]];
    }
    let params = AmfmParams::new(
        params.c_out,
        params.c_rgb,
        params.c_fem,
        params.proj_rgb,
        params.proj_fem,
        params.logits,
    )?;
    ensure!(a.gamma >= 1, "gamma must be >= 1");
    let cfg = EcaConfig { gamma: a.gamma, b: a.b };
    let k = eca_kernel_size(params.c_out, cfg);
    let weights = match &a.eca_weights {
        Some(p) => read_array(p)?,
        None => (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };

    let fused = amfm_fuse(&x_rgb, &x_fem, &params)?;
    let gains = eca_gains(&fused, &weights, cfg)?;
    let out = eca_forward(&fused, &weights, cfg)?;

    let w = params.branch_weights();
    let halved = eca_forward(&fused, &vec![0.0; k], cfg)?;
    let permuted = eca_forward(&reverse_pixels(&fused), &weights, cfg)?;
    let mut checks = BTreeMap::new();
    checks.insert(
        "branch_weights_sum_to_one",
        (w[0] + w[1] - 1.0).abs() <= 1e-12 && w[0] > 0.0 && w[1] > 0.0,
    );
    checks.insert("gains_in_open_unit_interval", gains.iter().all(|&g| g > 0.0 && g < 1.0));
    checks.insert(
        "attention_never_amplifies",
        out.data().iter().zip(fused.data()).all(|(o, f)| o.abs() <= f.abs()),
    );
    checks.insert(
        "zero_weights_halve_input",
        halved
            .data()
            .iter()
            .zip(fused.data())
            .all(|(h, f)| (h - f / 2.0).abs() <= 1e-12),
    );
    checks.insert("commutes_with_pixel_permutation", reverse_pixels(&out) == permuted);
    checks.insert(
        "deterministic",
        eca_forward(&amfm_fuse(&x_rgb, &x_fem, &params)?, &weights, cfg)? == out,
    );

    let mut run = Run::new("blocks", &a.out)?;
    run.input(&a.rgb)?;
    run.input(&a.tofi)?;
    for p in [&a.proj_rgb, &a.proj_fem, &a.logits, &a.eca_weights]
        .into_iter()
        .flatten()
    {
        run.input(p)?;
    }
    run.param("seed", a.seed)
        .param("channels_out", a.channels_out)
        .param("gamma", a.gamma)
        .param("b", a.b);
    for (name, ok) in &checks {
        println!("{name}: {}", if *ok { "pass" } else { "FAIL" });
    }
    run.write_json(
        "blocks.json",
        &json!({
            "amfm": {"params": params, "branch_weights": w, "output": channel_stats(&fused)},
            "eca": {"kernel_size": k, "weights": weights, "gains": gains, "output": channel_stats(&out)},
            "checks": checks,
        }),
    )?;
    run.finish()?;
    let failed: Vec<_> = checks.iter().filter(|(_, ok)| !**ok).map(|(n, _)| *n).collect();
    ensure!(failed.is_empty(), "invariant checks failed: {}", failed.join(", "));
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let dets = match load_csv(&a.dets, true)? {
        Records::Detections(d) => d,
        Records::Annotations(_) => bail!("{}: detections need a score column", a.dets.display()),
    };
    let (gts, gt_path) = match (&a.gts, &a.voc) {
        (Some(p), _) => (load_csv_auto(p)?.into_annotations(), p),
        (None, Some(dir)) => (load_voc_dir(dir)?, dir),
        (None, None) => bail!("either --gts or --voc is required"),
    };
    ensure!(
        (0.0..=1.0).contains(&a.score_thr),
        "score threshold {} must lie in [0, 1]",
        a.score_thr
    );
    let report = evaluate_with(&dets, &gts, EvalOptions { score_thr: a.score_thr });
    let mut value = serde_json::to_value(&report)?;
    if !a.per_class {
        if let Some(obj) = value.as_object_mut() {
            obj.remove("ap_per_class_per_threshold");
        }
    }
    let mut run = Run::new("evaluate", &a.out)?;
    run.input(&a.dets)?;
    run.input(gt_path)?;
    run.param("score_thr", a.score_thr).param("per_class", a.per_class);
    run.write_json(EVALUATE_JSON, &value)?;
    run.finish()
}

pub fn density(a: DensityArgs) -> Result<()> {
    let trees = load_trees(&a.input, a.score_thr)?;
    let infected = points_of_class(&trees, TreeClass::Infected);
    let extent = match &a.extent {
        Some(s) => parse_extent(s)?,
        None if trees.is_empty() => bail!("{}: no trees", a.input.display()),
        None => PlotExtent::bounding(&trees)?,
    };
    let rule = match (a.bandwidth, a.scott_bandwidth) {
        (Some(h), _) => BandwidthRule::Fixed(h),
        (None, true) => BandwidthRule::Scott,
        (None, false) => BandwidthRule::Standard,
    };
    let field = kde_with(
        &infected,
        extent,
        KdeOptions {
            grid_w: a.grid_w,
            grid_h: a.grid_h,
            rule,
        },
    )?;
    let (img, heatmap) = draw::heatmap(&field)?;
    let artifact = DensityArtifact {
        mass: field.mass(),
        peaks: field.local_maxima(a.peaks),
        heatmap,
        field,
    };
    let mut run = Run::new("density", &a.out)?;
    run.input(&a.input)?;
    run.param("grid_w", a.grid_w)
        .param("grid_h", a.grid_h)
        .param("rule", rule)
        .param("extent", extent)
        .param("peaks", a.peaks)
        .param("score_thr", a.score_thr);
    run.write_json(DENSITY_JSON, &artifact)?;
    run.write_bytes(DENSITY_IMAGE, &encode_pnm(&img))?;
    run.finish()
}

pub fn risk(a: RiskArgs) -> Result<()> {
    let trees = load_trees(&a.input, a.score_thr)?;
    let healthy = points_of_class(&trees, TreeClass::Healthy);
    let density: DensityArtifact = canon::read_json(&a.density)?;
    density
        .field
        .validate()
        .with_context(|| a.density.display().to_string())?;
    let table = risk_scores(&healthy, &density.field, a.radius)?;

    let mut risks: Vec<f64> = table.entries.iter().map(|e| e.risk).collect();
    risks.sort_by(f64::total_cmp);
    let n = risks.len();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => risks[n / 2],
        _ => (risks[n / 2 - 1] + risks[n / 2]) / 2.0,
    };
    let mut ranked: Vec<_> = table.entries.iter().collect();
    ranked.sort_by(|x, y| y.risk.total_cmp(&x.risk));
    let summary = RiskSummary {
        radius: a.radius,
        n_trees: n,
        mean: if n == 0 {
            0.0
        } else {
            risks.iter().sum::<f64>() / n as f64
        },
        min: risks.first().copied().unwrap_or(0.0),
        max: risks.last().copied().unwrap_or(0.0),
        median,
        interpolated: table.entries.iter().filter(|e| e.cells == 0).count(),
        top: ranked
            .iter()
            .take(a.top)
            .map(|e| RiskTop {
                x: e.tree.x,
                y: e.tree.y,
                risk: e.risk,
            })
            .collect(),
    };
    let mut run = Run::new("risk", &a.out)?;
    run.input(&a.input)?;
    run.input(&a.density)?;
    run.param("radius", a.radius)
        .param("top", a.top)
        .param("score_thr", a.score_thr);
    run.write_bytes(RISK_CSV, table.to_csv().as_bytes())?;
    run.write_json(RISK_JSON, &summary)?;
    run.finish()
}

/// Neighbour rank used by the default eps heuristic.
const EPS_NEIGHBOUR: usize = 4;

pub fn protect(a: ProtectArgs) -> Result<()> {
    let trees = load_trees(&a.input, a.score_thr)?;
    let healthy = points_of_class(&trees, TreeClass::Healthy);
    let (eps, eps_source) = match a.eps {
        Some(e) => (e, "user".to_string()),
        None => (
            default_eps(&healthy, EPS_NEIGHBOUR)?,
            format!("median {EPS_NEIGHBOUR}th-nearest-neighbour distance"),
        ),
    };
    let areas = protection_areas(&healthy, eps, a.min_pts)?;
    let clustered: usize = areas.iter().map(|p| p.members.len()).sum();
    let background = a.background.as_ref().map(load_image).transpose()?;
    let overlay = draw::protect_overlay(&healthy, &areas, background, a.max_side)?;

    let artifact = ProtectArtifact {
        eps,
        eps_source,
        min_pts: a.min_pts,
        n_healthy: healthy.len(),
        n_noise: healthy.len() - clustered,
        areas,
    };
    let mut run = Run::new("protect", &a.out)?;
    run.input(&a.input)?;
    if let Some(bg) = &a.background {
        run.input(bg)?;
    }
    run.param("eps", a.eps)
        .param("min_pts", a.min_pts)
        .param("max_side", a.max_side)
        .param("score_thr", a.score_thr);
    run.write_json(PROTECT_JSON, &artifact)?;
    run.write_bytes(PROTECT_IMAGE, &encode_pnm(&overlay))?;
    run.finish()
}

pub fn sizeclass(a: SizeclassArgs) -> Result<()> {
    let trees = load_trees(&a.input, a.score_thr)?;
    let mode = if a.tertiles {
        SizeClassMode::Tertiles
    } else {
        SizeClassMode::EqualWidth
    };
    let stats = size_class_stats(&trees, mode)?;
    let mut run = Run::new("sizeclass", &a.out)?;
    run.input(&a.input)?;
    run.param("tertiles", a.tertiles).param("score_thr", a.score_thr);
    run.write_json(SIZECLASS_JSON, &stats)?;
    run.finish()
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let spec: SceneSpec = canon::read_json(&a.spec)?;
    let truth = generate(&spec)?;
    let mut run = Run::new("synth", &a.out)?;
    run.input(&a.spec)?;
    run.param("render", a.render).param("ppm", a.ppm);
    run.write_bytes("annotations.csv", annotations_to_csv(&truth.annotations).as_bytes())?;
    run.write_bytes("detections.csv", detections_to_csv(&truth.detections).as_bytes())?;
    run.write_json("truth.json", &truth)?;
    if a.render {
        let img = render(&truth, a.ppm)?;
        run.write_bytes("scene.ppm", &encode_pnm(&img))?;
    }
    run.finish()
}

fn optional_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>> {
    let p = dir.join(name);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(canon::read_json(&p)?))
}

pub fn report(a: ReportArgs) -> Result<()> {
    let dir = &a.dir;
    let eval_path = dir.join(EVALUATE_JSON);
    ensure!(
        eval_path.exists(),
        "missing mandatory section: {} not found in {}",
        EVALUATE_JSON,
        dir.display()
    );
    let evaluate: Value = canon::read_json(&eval_path)?;

    let mut report = serde_json::Map::new();
    let mut sections = vec!["evaluate"];
    report.insert("evaluate".into(), evaluate);
    if let Some(d) = optional_json::<DensityArtifact>(dir, DENSITY_JSON)? {
        report.insert("density".into(), serde_json::to_value(DensitySummary::from(&d))?);
        sections.push("density");
    }
    if let Some(r) = optional_json::<RiskSummary>(dir, RISK_JSON)? {
        report.insert("risk".into(), serde_json::to_value(r)?);
        sections.push("risk");
    }
    if let Some(p) = optional_json::<ProtectArtifact>(dir, PROTECT_JSON)? {
        let areas: Vec<AreaSummary> = p.areas.iter().map(AreaSummary::from).collect();
        report.insert(
            "protect".into(),
            json!({
                "eps": p.eps,
                "min_pts": p.min_pts,
                "n_healthy": p.n_healthy,
                "n_noise": p.n_noise,
                "areas": areas,
            }),
        );
        sections.push("protect");
    }
    if let Some(s) = optional_json::<Value>(dir, SIZECLASS_JSON)? {
        report.insert("sizeclass".into(), s);
        sections.push("sizeclass");
    }
    sections.sort_unstable();
    report.insert("sections".into(), json!(sections));

    let output = a.output.clone().unwrap_or_else(|| dir.join(REPORT_JSON));
    let out_dir = match output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut run = Run::new("report", &out_dir)?;
    for name in [EVALUATE_JSON, DENSITY_JSON, RISK_JSON, PROTECT_JSON, SIZECLASS_JSON] {
        let p = dir.join(name);
        if p.exists() {
            run.input(&p)?;
        }
    }
    let text = canon::to_canonical_string(&Value::Object(report))?;
    run.write_bytes(&file_name(&output), text.as_bytes())?;
    run.finish()
}
