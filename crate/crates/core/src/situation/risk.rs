//! Healthy-tree infection risk: the mean infected-tree density over the grid
//! cells whose centres lie within radius `r` of the tree (normalized units).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kde::{sample_normalized, DensityField};
use crate::detections::{TreeClass, TreePoint};
use crate::error::{Error, Result};

/// Default neighbourhood radius in normalized plot units.
pub const DEFAULT_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEntry {
    pub tree: TreePoint,
    pub risk: f64,
    /// Grid cells averaged; 0 means the interpolated density at the tree was used.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub radius: f64,
    pub entries: Vec<RiskEntry>,
}

impl RiskTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,risk\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{}\n", e.tree.x, e.tree.y, e.risk));
        }
        s
    }
}

fn neighbourhood_mean(f: &DensityField, u: f64, v: f64, r: f64) -> (f64, usize) {
    // index range of cell centres within [c - r, c + r] along one axis
    let span = |c: f64, len: usize| {
        let n = len as f64;
        let lo = ((c - r) * n - 0.5).ceil().max(0.0) as isize;
        let hi = ((c + r) * n - 0.5).floor().min(n - 1.0) as isize;
        lo..=hi
    };
    let r2 = r * r;
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in span(v, f.grid_h) {
        let cy = (row as f64 + 0.5) / f.grid_h as f64;
        for col in span(u, f.grid_w) {
            let cx = (col as f64 + 0.5) / f.grid_w as f64;
            if (cx - u).powi(2) + (cy - v).powi(2) <= r2 {
                sum += f.at(col as usize, row as usize);
                count += 1;
            }
        }
    }
    (sum, count)
}

/// Risk score for every healthy tree, in input order.
pub fn risk_scores(healthy: &[TreePoint], f: &DensityField, r: f64) -> Result<RiskTable> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be > 0")));
    }
    if let Some(p) = healthy.iter().find(|p| p.cls != TreeClass::Healthy) {
        return Err(Error::InvalidParameter(format!(
            "risk scoring expects healthy trees, got {} at ({}, {})",
            p.cls, p.x, p.y
        )));
    }
    if let Some(p) = healthy.iter().find(|p| !f.extent.contains(p.x, p.y)) {
        return Err(Error::OutsideExtent { x: p.x, y: p.y });
    }
    let entries = healthy
        .par_iter()
        .map(|t| {
            let [u, v] = f.extent.normalize(t.x, t.y);
            let (sum, cells) = neighbourhood_mean(f, u, v, r);
            let risk = if cells == 0 {
                sample_normalized(f, u, v)
            } else {
                sum / cells as f64
            };
            RiskEntry { tree: *t, risk, cells }
        })
        .collect();
    Ok(RiskTable { radius: r, entries })
}
