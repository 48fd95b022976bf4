//! Synthetic forest scenes with known ground truth.
//!
//! A scene plants Gaussian clusters of infected trees, Gaussian blobs and a
//! uniform background of healthy trees, then derives a detection set through a
//! seeded noise model (misses, false boxes, corner jitter, scores). Every
//! realized draw is recorded so evaluation has an exact oracle.
//!
//! Crowns are axis-aligned squares that never overlap; false boxes never touch
//! an annotation. Jitter is capped so each surviving box keeps IoU > 0.5 with
//! its source, which makes the recorded confusion counts exact at IoU 0.5.
//!
//! Randomness comes from ChaCha8 seeded with [`SceneSpec::seed`]; draws happen
//! in a fixed order, so a spec always yields bit-identical output.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detections::{Annotation, BBox, Detection, TreeClass};
use crate::error::{Error, Result};
use crate::fem::{ngbdi_pixel, vdvi_pixel};
use crate::metrics::ConfusionCounts;
use crate::raster::Raster;
use crate::situation::PlotExtent;

/// Jitter on each box edge must stay below this fraction of the smallest crown side.
///
/// Moving all four edges of a square by at most `(1 - 1/sqrt 2) / 2` of its side
/// keeps IoU with the original above 0.5.
pub const JITTER_LIMIT: f64 = 0.146;

const MAX_ATTEMPTS: usize = 10_000;
const RENDER_MAX_SAMPLES: usize = 1 << 30;

pub const HEALTHY_COLOR: [f64; 3] = [0.15, 0.55, 0.2];
pub const INFECTED_COLOR: [f64; 3] = [0.6, 0.35, 0.2];
pub const BACKGROUND_COLOR: [f64; 3] = [0.32, 0.3, 0.26];

/// A Gaussian group of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub centroid: [f64; 2],
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HealthySpec {
    /// Trees spread uniformly over the plot.
    pub uniform: usize,
    pub blobs: Vec<ClusterSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreModel {
    /// Every detection scores 1.
    One,
    /// True positives uniform in `tp`, false boxes uniform in `fp`.
    Uniform { tp: [f64; 2], fp: [f64; 2] },
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel::Uniform {
            tp: [0.6, 1.0],
            fp: [0.1, 0.7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorNoise {
    pub miss_rate: f64,
    /// Expected false boxes per annotation.
    pub false_rate: f64,
    /// Max shift of each box edge, pixels.
    pub box_jitter: f64,
    pub scores: ScoreModel,
}

impl DetectorNoise {
    pub fn none() -> Self {
        Self {
            miss_rate: 0.0,
            false_rate: 0.0,
            box_jitter: 0.0,
            scores: ScoreModel::One,
        }
    }
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub extent: PlotExtent,
    #[serde(default = "default_image_id")]
    pub image_id: String,
    /// Infected-tree clusters.
    #[serde(default)]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub healthy: HealthySpec,
    /// Crown (box) area bounds, pixels squared.
    pub crown_area_range: [f64; 2],
    /// Infected crown areas are `min + (max - min) * u^k`; `k > 1` skews them small.
    #[serde(default = "one")]
    pub infected_size_bias: f64,
    #[serde(default)]
    pub detector_noise: DetectorNoise,
}

fn default_image_id() -> String {
    "scene".into()
}

fn one() -> f64 {
    1.0
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.extent.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let [amin, amax] = self.crown_area_range;
        if !(amin.is_finite() && amax.is_finite() && amin > 0.0 && amin <= amax) {
            return bad(format!("crown_area_range [{amin}, {amax}] must satisfy 0 < min <= max"));
        }
        for c in self.clusters.iter().chain(&self.healthy.blobs) {
            if !(c.std.is_finite() && c.std > 0.0) {
                return bad(format!("cluster std {} must be > 0", c.std));
            }
            if !c.centroid.iter().all(|v| v.is_finite()) {
                return bad("cluster centroid must be finite".into());
            }
        }
        if !(self.infected_size_bias.is_finite() && self.infected_size_bias > 0.0) {
            return bad(format!("infected_size_bias {} must be > 0", self.infected_size_bias));
        }
        let n = &self.detector_noise;
        for (name, r) in [("miss_rate", n.miss_rate), ("false_rate", n.false_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} {r} must lie in [0, 1]"));
            }
        }
        if !(n.box_jitter.is_finite() && n.box_jitter >= 0.0) {
            return bad(format!("box_jitter {} must be >= 0", n.box_jitter));
        }
        if let ScoreModel::Uniform { tp, fp } = n.scores {
            for r in [tp, fp] {
                if !(0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0) {
                    return bad(format!("score range {r:?} must satisfy 0 <= lo <= hi <= 1"));
                }
            }
        }
        let limit = JITTER_LIMIT * amin.sqrt();
        if n.box_jitter >= limit {
            return Err(Error::Infeasible(format!(
                "box_jitter {} must stay below {limit} for IoU > 0.5 with the source box",
                n.box_jitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    /// Pooled counts at IoU 0.5 with no score threshold.
    pub counts: ConfusionCounts,
    pub cluster_centroids: Vec<[f64; 2]>,
    /// Mean position of the trees actually placed in each infected cluster.
    pub realized_cluster_centroids: Vec<[f64; 2]>,
    pub blob_centroids: Vec<[f64; 2]>,
    pub realized_blob_centroids: Vec<[f64; 2]>,
    pub n_infected: usize,
    pub n_healthy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub image_id: String,
    pub extent: PlotExtent,
    pub annotations: Vec<Annotation>,
    pub detections: Vec<Detection>,
    pub expected: Expected,
}

/// Spatial hash of placed squares; cell size bounds any two half-side sums.
struct Occupancy {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<BBox>>,
}

impl Occupancy {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, x: f64, y: f64) -> (i64, i64) {
        ((x / self.cell).floor() as i64, (y / self.cell).floor() as i64)
    }

    fn overlaps(&self, b: &BBox) -> bool {
        let (cx, cy) = b.center();
        let (kx, ky) = self.key(cx, cy);
        (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                self.cells.get(&(kx + dx, ky + dy)).is_some_and(|v| {
                    v.iter()
                        .any(|o| b.x_min < o.x_max && o.x_min < b.x_max && b.y_min < o.y_max && o.y_min < b.y_max)
                })
            })
        })
    }

    fn insert(&mut self, b: BBox) {
        let (cx, cy) = b.center();
        let k = self.key(cx, cy);
        self.cells.entry(k).or_default().push(b);
    }
}

struct Placer<'a> {
    spec: &'a SceneSpec,
    /// Keeps every box, jitter included, inside the extent.
    margin: f64,
    occupied: Occupancy,
}

impl Placer<'_> {
    fn fits(&self, b: &BBox) -> bool {
        let e = &self.spec.extent;
        b.x_min - self.margin >= e.x_min
            && b.y_min - self.margin >= e.y_min
            && b.x_max + self.margin <= e.x_max
            && b.y_max + self.margin <= e.y_max
            && !self.occupied.overlaps(b)
    }

    fn place(
        &mut self,
        rng: &mut ChaCha8Rng,
        area: f64,
        mut center: impl FnMut(&mut ChaCha8Rng) -> [f64; 2],
    ) -> Result<BBox> {
        for _ in 0..MAX_ATTEMPTS {
            let [x, y] = center(rng);
            let b = BBox::centered_square(x, y, area);
            if self.fits(&b) {
                self.occupied.insert(b);
                return Ok(b);
            }
        }
        Err(Error::Infeasible(format!(
            "could not place a crown of area {area} without overlap after {MAX_ATTEMPTS} attempts"
        )))
    }
}

fn draw_area(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2], bias: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>().powf(bias)
}

fn mean_center(boxes: &[BBox]) -> [f64; 2] {
    let n = boxes.len().max(1) as f64;
    let (sx, sy) = boxes.iter().fold((0.0, 0.0), |(sx, sy), b| {
        let (x, y) = b.center();
        (sx + x, sy + y)
    });
    [sx / n, sy / n]
}

pub fn generate(spec: &SceneSpec) -> Result<SceneTruth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = spec.detector_noise;
    let e = spec.extent;
    let mut placer = Placer {
        spec,
        margin: noise.box_jitter,
        occupied: Occupancy::new(spec.crown_area_range[1].sqrt()),
    };

    let mut annotations = Vec::new();
    let push = |anns: &mut Vec<Annotation>, bbox: BBox, cls| {
        anns.push(Annotation {
            image_id: spec.image_id.clone(),
            bbox,
            cls,
        })
    };

    let mut realized_clusters = Vec::new();
    for c in &spec.clusters {
        let normal = Normal::new(0.0, c.std).map_err(|err| Error::InvalidParameter(err.to_string()))?;
        let mut boxes = Vec::with_capacity(c.count);
        for _ in 0..c.count {
            let area = draw_area(&mut rng, spec.crown_area_range, spec.infected_size_bias);
            let b = placer.place(&mut rng, area, |r| {
                [c.centroid[0] + normal.sample(r), c.centroid[1] + normal.sample(r)]
            })?;
            boxes.push(b);
            push(&mut annotations, b, TreeClass::Infected);
        }
        realized_clusters.push(mean_center(&boxes));
    }

    let mut realized_blobs = Vec::new();
    for c in &spec.healthy.blobs {
        let normal = Normal::new(0.0, c.std).map_err(|err| Error::InvalidParameter(err.to_string()))?;
        let mut boxes = Vec::with_capacity(c.count);
        for _ in 0..c.count {
            let area = draw_area(&mut rng, spec.crown_area_range, 1.0);
            let b = placer.place(&mut rng, area, |r| {
                [c.centroid[0] + normal.sample(r), c.centroid[1] + normal.sample(r)]
            })?;
            boxes.push(b);
            push(&mut annotations, b, TreeClass::Healthy);
        }
        realized_blobs.push(mean_center(&boxes));
    }

    for _ in 0..spec.healthy.uniform {
        let area = draw_area(&mut rng, spec.crown_area_range, 1.0);
        let b = placer.place(&mut rng, area, |r| {
            [r.random_range(e.x_min..=e.x_max), r.random_range(e.y_min..=e.y_max)]
        })?;
        push(&mut annotations, b, TreeClass::Healthy);
    }

    // detector
    let score = |rng: &mut ChaCha8Rng, tp: bool| match noise.scores {
        ScoreModel::One => 1.0,
        ScoreModel::Uniform { tp: t, fp: f } => {
            let [lo, hi] = if tp { t } else { f };
            lo + (hi - lo) * rng.random::<f64>()
        }
    };
    let j = noise.box_jitter;
    let mut detections = Vec::new();
    let mut missed = 0;
    let mut n_false = 0;
    for a in &annotations {
        if noise.false_rate > 0.0 && rng.random::<f64>() < noise.false_rate {
            n_false += 1;
        }
        if noise.miss_rate > 0.0 && rng.random::<f64>() < noise.miss_rate {
            missed += 1;
            continue;
        }
        let mut bbox = a.bbox;
        if j > 0.0 {
            bbox.x_min += rng.random_range(-j..=j);
            bbox.y_min += rng.random_range(-j..=j);
            bbox.x_max += rng.random_range(-j..=j);
            bbox.y_max += rng.random_range(-j..=j);
        }
        detections.push(Detection {
            image_id: a.image_id.clone(),
            bbox,
            cls: a.cls,
            score: score(&mut rng, true),
        });
    }
    // false boxes avoid annotations but may overlap each other
    let gt_only = placer.occupied;
    for _ in 0..n_false {
        let area = draw_area(&mut rng, spec.crown_area_range, 1.0);
        let cls = if rng.random::<bool>() {
            TreeClass::Infected
        } else {
            TreeClass::Healthy
        };
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let b = BBox::centered_square(
                rng.random_range(e.x_min..=e.x_max),
                rng.random_range(e.y_min..=e.y_max),
                area,
            );
            let inside = b.x_min >= e.x_min && b.y_min >= e.y_min && b.x_max <= e.x_max && b.y_max <= e.y_max;
            if inside && !gt_only.overlaps(&b) {
                placed = Some(b);
                break;
            }
        }
        let bbox = placed.ok_or_else(|| Error::Infeasible("no free space left for a false box".into()))?;
        detections.push(Detection {
            image_id: spec.image_id.clone(),
            bbox,
            cls,
            score: score(&mut rng, false),
        });
    }

    let n_infected = annotations.iter().filter(|a| a.cls == TreeClass::Infected).count();
    Ok(SceneTruth {
        image_id: spec.image_id.clone(),
        extent: e,
        expected: Expected {
            counts: ConfusionCounts {
                tp: annotations.len() - missed,
                fp: n_false,
                fn_: missed,
            },
            cluster_centroids: spec.clusters.iter().map(|c| c.centroid).collect(),
            realized_cluster_centroids: realized_clusters,
            blob_centroids: spec.healthy.blobs.iter().map(|c| c.centroid).collect(),
            realized_blob_centroids: realized_blobs,
            n_infected,
            n_healthy: annotations.len() - n_infected,
        },
        annotations,
        detections,
    })
}

/// Draws annotated crowns as shaded discs; `ppm` is output pixels per plot pixel.
///
/// Healthy crowns are green-dominant and infected crowns red-brown, which
/// fixes the sign of the vegetation indices at every crown centre.
pub fn render(truth: &SceneTruth, ppm: f64) -> Result<Raster> {
    if !(ppm.is_finite() && ppm > 0.0) {
        return Err(Error::InvalidParameter(format!("resolution {ppm} must be > 0")));
    }
    let e = truth.extent;
    let w = (e.width() * ppm).ceil();
    let h = (e.height() * ppm).ceil();
    if w.is_nan() || h.is_nan() || w * h * 3.0 > RENDER_MAX_SAMPLES as f64 {
        return Err(Error::InvalidParameter(format!(
            "rendered raster {w}x{h} exceeds {RENDER_MAX_SAMPLES} samples"
        )));
    }
    let (w, h) = (w as usize, h as usize);
    let mut data: Vec<f64> = BACKGROUND_COLOR.iter().copied().cycle().take(w * h * 3).collect();

    let to_px = |x: f64, y: f64| ((x - e.x_min) * ppm, (y - e.y_min) * ppm);
    for a in &truth.annotations {
        let color = match a.cls {
            TreeClass::Healthy => HEALTHY_COLOR,
            TreeClass::Infected => INFECTED_COLOR,
        };
        let (cx, cy) = a.bbox.center();
        let (px, py) = to_px(cx, cy);
        let radius = (a.bbox.width().min(a.bbox.height()) / 2.0 * ppm).max(0.5);
        let x0 = (px - radius).floor().max(0.0) as usize;
        let y0 = (py - radius).floor().max(0.0) as usize;
        let x1 = ((px + radius).ceil() as usize).min(w);
        let y1 = ((py + radius).ceil() as usize).min(h);
        let centre_px = ((px.floor() as usize).min(w - 1), (py.floor() as usize).min(h - 1));
        for y in y0..y1 {
            for x in x0..x1 {
                let d2 = ((x as f64 + 0.5 - px).powi(2) + (y as f64 + 0.5 - py).powi(2)) / (radius * radius);
                if d2 > 1.0 && (x, y) != centre_px {
                    continue;
                }
                // shading scales all channels alike, so index signs are kept
                let shade = 1.0 - 0.35 * d2.min(1.0);
                let i = (y * w + x) * 3;
                for c in 0..3 {
                    data[i + c] = color[c] * shade;
                }
            }
        }
    }
    let raster = Raster::new(w, h, 3, data)?;

    for a in &truth.annotations {
        let (cx, cy) = a.bbox.center();
        let (px, py) = to_px(cx, cy);
        let p = raster.rgb((px.floor() as usize).min(w - 1), (py.floor() as usize).min(h - 1));
        let ok = match a.cls {
            TreeClass::Healthy => vdvi_pixel(p) > 0.0 && ngbdi_pixel(p) > 0.0,
            TreeClass::Infected => vdvi_pixel(p) < 0.0,
        };
        if !ok {
            return Err(Error::Infeasible(format!(
                "crown at ({cx}, {cy}) is hidden by an overlapping crown in the render"
            )));
        }
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{evaluate, match_detections};

    fn base_spec() -> SceneSpec {
        SceneSpec {
            seed: 11,
            extent: PlotExtent::new(0.0, 0.0, 1000.0, 800.0).unwrap(),
            image_id: "scene".into(),
            clusters: vec![
                ClusterSpec {
                    centroid: [250.0, 250.0],
                    std: 40.0,
                    count: 30,
                },
                ClusterSpec {
                    centroid: [700.0, 500.0],
                    std: 50.0,
                    count: 25,
                },
            ],
            healthy: HealthySpec {
                uniform: 40,
                blobs: vec![ClusterSpec {
                    centroid: [300.0, 600.0],
                    std: 40.0,
                    count: 30,
                }],
            },
            crown_area_range: [64.0, 256.0],
            infected_size_bias: 1.0,
            detector_noise: DetectorNoise::none(),
        }
    }

    fn noisy_spec() -> SceneSpec {
        let mut s = base_spec();
        s.detector_noise = DetectorNoise {
            miss_rate: 0.2,
            false_rate: 0.15,
            box_jitter: 1.1,
            scores: ScoreModel::default(),
        };
        s
    }

    #[test]
    fn zero_noise_is_identity() {
        let t = generate(&base_spec()).unwrap();
        assert_eq!(t.annotations.len(), 125);
        assert_eq!(t.detections.len(), t.annotations.len());
        for (d, a) in t.detections.iter().zip(&t.annotations) {
            assert_eq!((d.bbox, d.cls, d.score), (a.bbox, a.cls, 1.0));
        }
        assert_eq!(t.expected.counts, ConfusionCounts { tp: 125, fp: 0, fn_: 0 });
        assert_eq!((t.expected.n_infected, t.expected.n_healthy), (55, 70));
        assert_eq!(evaluate(&t.detections, &t.annotations).map5095, 1.0);
    }

    #[test]
    fn crowns_do_not_overlap_and_stay_inside() {
        let t = generate(&noisy_spec()).unwrap();
        let e = t.extent;
        for (i, a) in t.annotations.iter().enumerate() {
            let b = a.bbox;
            assert!(b.x_min >= e.x_min && b.x_max <= e.x_max && b.y_min >= e.y_min && b.y_max <= e.y_max);
            assert!((64.0..=256.0).contains(&b.area()));
            for o in &t.annotations[i + 1..] {
                assert_eq!(crate::detections::iou(&b, &o.bbox), 0.0);
            }
        }
    }

    #[test]
    fn noisy_counts_match_greedy_matching() {
        for seed in 0..5 {
            let mut s = noisy_spec();
            s.seed = seed;
            let t = generate(&s).unwrap();
            let m = match_detections(&t.detections, &t.annotations, 0.5);
            assert_eq!(m.counts(), t.expected.counts, "seed {seed}");
            assert!(t.expected.counts.fn_ > 0 && t.expected.counts.fp > 0);
        }
    }

    #[test]
    fn full_miss_rate_drops_everything() {
        let mut s = base_spec();
        s.detector_noise.miss_rate = 1.0;
        let t = generate(&s).unwrap();
        assert!(t.detections.is_empty());
        assert_eq!(t.expected.counts.fn_, t.annotations.len());
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate(&noisy_spec()).unwrap();
        let b = generate(&noisy_spec()).unwrap();
        assert_eq!(a, b);
        let mut s = noisy_spec();
        s.seed += 1;
        assert_ne!(generate(&s).unwrap(), a);
    }

    #[test]
    fn tp_scores_dominate_fp_scores() {
        let t = generate(&noisy_spec()).unwrap();
        let m = match_detections(&t.detections, &t.annotations, 0.5);
        let mean = |tp: bool| {
            let v: Vec<f64> = t
                .detections
                .iter()
                .zip(&m.det_tp)
                .filter(|(_, &is_tp)| is_tp == tp)
                .map(|(d, _)| d.score)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) > mean(false));
    }

    #[test]
    fn infeasible_specs() {
        let mut s = base_spec();
        s.detector_noise.box_jitter = 0.146 * 8.0;
        assert!(matches!(generate(&s), Err(Error::Infeasible(_))));

        let mut s = base_spec();
        s.extent = PlotExtent::new(0.0, 0.0, 50.0, 50.0).unwrap();
        s.clusters = vec![ClusterSpec {
            centroid: [25.0, 25.0],
            std: 5.0,
            count: 100,
        }];
        assert!(matches!(generate(&s), Err(Error::Infeasible(_))));

        let mut s = base_spec();
        s.detector_noise.miss_rate = 1.5;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn size_bias_skews_infected_small() {
        let mut s = base_spec();
        s.infected_size_bias = 4.0;
        let t = generate(&s).unwrap();
        let mean_area = |cls| {
            let v: Vec<f64> = t
                .annotations
                .iter()
                .filter(|a| a.cls == cls)
                .map(|a| a.bbox.area())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_area(TreeClass::Infected) < mean_area(TreeClass::Healthy));
    }

    #[test]
    fn render_palette_signs() {
        let t = generate(&base_spec()).unwrap();
        let r = render(&t, 0.5).unwrap();
        assert_eq!((r.width(), r.height()), (500, 400));
        for a in &t.annotations {
            let (cx, cy) = a.bbox.center();
            let p = r.rgb((cx * 0.5) as usize, (cy * 0.5) as usize);
            match a.cls {
                TreeClass::Healthy => assert!(vdvi_pixel(p) > 0.0 && ngbdi_pixel(p) > 0.0),
                TreeClass::Infected => assert!(vdvi_pixel(p) < 0.0),
            }
        }
    }

    #[test]
    fn empty_scene_renders_background() {
        let mut s = base_spec();
        s.clusters.clear();
        s.healthy = HealthySpec::default();
        let t = generate(&s).unwrap();
        let r = render(&t, 0.1).unwrap();
        assert!(r.data().chunks(3).all(|p| p == BACKGROUND_COLOR));
        assert!(render(&t, 0.0).is_err());
        assert!(render(&t, 1e6).is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let s: SceneSpec = serde_json::from_str(
            r#"{"seed": 3, "extent": {"x_min": 0, "y_min": 0, "x_max": 100, "y_max": 100},
                "crown_area_range": [4, 9]}"#,
        )
        .unwrap();
        assert_eq!(s.image_id, "scene");
        assert_eq!(s.detector_noise, DetectorNoise::none());
        assert_eq!(s.infected_size_bias, 1.0);
        assert!(generate(&s).unwrap().annotations.is_empty());
    }
}
