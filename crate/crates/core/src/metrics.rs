//! Detection evaluation: precision, recall and COCO-style average precision.
//!
//! Matching is greedy, one-to-one and class-segregated, run independently per
//! image: detections are visited by descending score (ties keep input order)
//! and each takes the unmatched ground truth of its class with the highest IoU
//! at or above the threshold (ties go to the lowest ground-truth index).
//!
//! AP is the mean of max-interpolated precision sampled at the 101 recall
//! levels `0.00, 0.01, ..., 1.00`. mAP averages over the classes that have at
//! least one ground truth.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::detections::{iou, Annotation, Detection, TreeClass};

/// The ten IoU thresholds `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// Number of recall sample points used for interpolated AP.
pub const RECALL_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn precision_recall(&self) -> (f64, f64) {
        precision_recall(*self)
    }
}

/// `P = TP / (TP + FP)` and `R = TP / (TP + FN)`, with `0/0` read as 0.
pub fn precision_recall(c: ConfusionCounts) -> (f64, f64) {
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    (ratio(c.tp, c.fp), ratio(c.tp, c.fn_))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// Per detection, in input order: matched to a ground truth.
    pub det_tp: Vec<bool>,
    /// Per detection, the index of the matched ground truth.
    pub det_gt: Vec<Option<usize>>,
    /// Per ground truth, in input order: claimed by some detection.
    pub gt_matched: Vec<bool>,
}

impl MatchResult {
    pub fn counts(&self) -> ConfusionCounts {
        let tp = self.det_tp.iter().filter(|&&t| t).count();
        ConfusionCounts {
            tp,
            fp: self.det_tp.len() - tp,
            fn_: self.gt_matched.iter().filter(|&&m| !m).count(),
        }
    }
}

/// Indices sorted by descending score; the sort is stable so ties keep input order.
fn score_order(dets: &[Detection], idx: &mut [usize]) {
    idx.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
}

/// Detection and ground-truth indices of one (image, class) group.
type DetGtIndices = (Vec<usize>, Vec<usize>);

/// Greedy one-to-one matching of detections to ground truths.
pub fn match_detections(dets: &[Detection], gts: &[Annotation], iou_thr: f64) -> MatchResult {
    let mut groups: HashMap<(&str, TreeClass), DetGtIndices> = HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry((&d.image_id, d.cls)).or_default().0.push(i);
    }
    for (j, g) in gts.iter().enumerate() {
        groups.entry((&g.image_id, g.cls)).or_default().1.push(j);
    }

    let mut det_gt = vec![None; dets.len()];
    let mut gt_matched = vec![false; gts.len()];
    for (mut di, gi) in groups.into_values() {
        score_order(dets, &mut di);
        for d in di {
            let mut best: Option<(usize, f64)> = None;
            for &g in &gi {
                if gt_matched[g] {
                    continue;
                }
                let v = iou(&dets[d].bbox, &gts[g].bbox);
                if v >= iou_thr && best.is_none_or(|(bg, bv)| v > bv || (v == bv && g < bg)) {
                    best = Some((g, v));
                }
            }
            if let Some((g, _)) = best {
                gt_matched[g] = true;
                det_gt[d] = Some(g);
            }
        }
    }
    MatchResult {
        det_tp: det_gt.iter().map(Option::is_some).collect(),
        det_gt,
        gt_matched,
    }
}

/// 101-point interpolated AP from detections already in ranking order.
///
/// `ranked_tp[i]` tells whether the i-th ranked detection is a true positive.
pub fn interpolated_ap(ranked_tp: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 || ranked_tp.is_empty() {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(ranked_tp.len());
    let mut precision = Vec::with_capacity(ranked_tp.len());
    let mut tp = 0usize;
    for (i, &t) in ranked_tp.iter().enumerate() {
        tp += usize::from(t);
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (i + 1) as f64);
    }
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let total: f64 = (0..RECALL_POINTS)
        .map(|k| {
            let r = k as f64 / (RECALL_POINTS - 1) as f64;
            let pos = recall.partition_point(|&x| x < r);
            precision.get(pos).copied().unwrap_or(0.0)
        })
        .sum();
    total / RECALL_POINTS as f64
}

fn class_ap(dets: &[Detection], gts: &[Annotation], m: &MatchResult, cls: TreeClass) -> f64 {
    let n_gt = gts.iter().filter(|g| g.cls == cls).count();
    let mut idx: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].cls == cls).collect();
    score_order(dets, &mut idx);
    let ranked: Vec<bool> = idx.iter().map(|&i| m.det_tp[i]).collect();
    interpolated_ap(&ranked, n_gt)
}

pub fn average_precision(dets: &[Detection], gts: &[Annotation], cls: TreeClass, iou_thr: f64) -> f64 {
    let m = match_detections(dets, gts, iou_thr);
    class_ap(dets, gts, &m, cls)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Detections scoring below this are ignored for precision/recall (not for AP).
    pub score_thr: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { score_thr: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub n_gt: usize,
    pub n_det: usize,
    pub ap50: f64,
    pub ap5095: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    /// AP per class, keyed by threshold formatted with two decimals.
    pub ap_per_class_per_threshold: BTreeMap<TreeClass, BTreeMap<String, f64>>,
    pub per_class: BTreeMap<TreeClass, ClassSummary>,
    pub map50: f64,
    pub map5095: f64,
    pub counts: ConfusionCounts,
    pub score_thr: f64,
}

pub fn threshold_key(t: f64) -> String {
    format!("{t:.2}")
}

pub fn evaluate(dets: &[Detection], gts: &[Annotation]) -> EvalReport {
    evaluate_with(dets, gts, EvalOptions::default())
}

pub fn evaluate_with(dets: &[Detection], gts: &[Annotation], opts: EvalOptions) -> EvalReport {
    let thresholds = coco_thresholds();
    let matches: Vec<MatchResult> = thresholds.iter().map(|&t| match_detections(dets, gts, t)).collect();

    let mut table = BTreeMap::new();
    let mut per_class = BTreeMap::new();
    let mut scored_classes = Vec::new();
    for cls in TreeClass::ALL {
        let aps: Vec<f64> = matches.iter().map(|m| class_ap(dets, gts, m, cls)).collect();
        let n_gt = gts.iter().filter(|g| g.cls == cls).count();
        if n_gt > 0 {
            scored_classes.push(cls);
        }
        table.insert(
            cls,
            thresholds
                .iter()
                .zip(&aps)
                .map(|(&t, &ap)| (threshold_key(t), ap))
                .collect::<BTreeMap<_, _>>(),
        );
        per_class.insert(
            cls,
            ClassSummary {
                n_gt,
                n_det: dets.iter().filter(|d| d.cls == cls).count(),
                ap50: aps[0],
                ap5095: aps.iter().sum::<f64>() / aps.len() as f64,
            },
        );
    }
    let mean_over = |f: &dyn Fn(&ClassSummary) -> f64| {
        if scored_classes.is_empty() {
            0.0
        } else {
            scored_classes.iter().map(|c| f(&per_class[c])).sum::<f64>() / scored_classes.len() as f64
        }
    };
    let map50 = mean_over(&|s| s.ap50);
    let map5095 = mean_over(&|s| s.ap5095);

    let counts = if opts.score_thr > 0.0 {
        let kept: Vec<Detection> = dets.iter().filter(|d| d.score >= opts.score_thr).cloned().collect();
        match_detections(&kept, gts, 0.5).counts()
    } else {
        matches[0].counts()
    };
    let (precision, recall) = precision_recall(counts);

    EvalReport {
        precision,
        recall,
        ap_per_class_per_threshold: table,
        per_class,
        map50,
        map5095,
        counts,
        score_thr: opts.score_thr,
    }
}
