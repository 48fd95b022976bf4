//! Infestation situation analysis over tree points.
//!
//! - [`kde`]: Gaussian kernel density of infected trees on a regular grid;
//! - [`risk`]: per-healthy-tree mean density within a search radius;
//! - [`dbscan`]: density clustering of healthy trees;
//! - [`ellipse`]: covariance ellipses around clusters;
//! - [`sizeclass`]: crown-size class statistics.
//!
//! Density and risk work in plot coordinates normalized to the unit square;
//! clustering and ellipses stay in image pixels.

pub mod dbscan;
pub mod ellipse;
pub mod kde;
pub mod risk;
pub mod sizeclass;

pub use dbscan::{dbscan, dbscan_points, default_eps};
pub use ellipse::{fit_ellipse, fit_ellipse_xy, Ellipse};
pub use kde::{bandwidth, kde, kde_with, sample_density, BandwidthRule, DensityField, KdeOptions, Peak};
pub use risk::{risk_scores, RiskEntry, RiskTable};
pub use sizeclass::{size_class_stats, ClassCount, SizeClassMode, SizeClassStats};

use serde::{Deserialize, Serialize};

use crate::detections::TreePoint;
use crate::error::{Error, Result};

/// Rectangular plot region in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotExtent {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl PlotExtent {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let e = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateExtent(format!(
                "({}, {}, {}, {})",
                self.x_min, self.y_min, self.x_max, self.y_max
            )))
        }
    }

    /// Bounding rectangle of a point set, widened to whole units.
    pub fn bounding(points: &[TreePoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateExtent("no points".into()));
        }
        let mut e = Self {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in points {
            e.x_min = e.x_min.min(p.x);
            e.y_min = e.y_min.min(p.y);
            e.x_max = e.x_max.max(p.x);
            e.y_max = e.y_max.max(p.y);
        }
        // whole-unit edges survive rounding when serialized
        e.x_min = e.x_min.floor();
        e.y_min = e.y_min.floor();
        e.x_max = e.x_max.ceil();
        e.y_max = e.y_max.ceil();
        e.validate()?;
        Ok(e)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Maps pixel coordinates into the unit square (axes scaled independently).
    pub fn normalize(&self, x: f64, y: f64) -> [f64; 2] {
        [(x - self.x_min) / self.width(), (y - self.y_min) / self.height()]
    }

    pub fn denormalize(&self, u: f64, v: f64) -> [f64; 2] {
        [self.x_min + u * self.width(), self.y_min + v * self.height()]
    }
}

/// A cluster of healthy trees outlined by its covariance ellipse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionArea {
    pub id: String,
    pub members: Vec<TreePoint>,
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis from the +x axis, radians in `(-pi/2, pi/2]`.
    pub angle: f64,
}

/// Clusters healthy trees and fits an ellipse to each cluster.
///
/// Areas are labelled `PA1, PA2, ...` by descending member count; equal
/// counts keep cluster order.
pub fn protection_areas(healthy: &[TreePoint], eps: f64, min_pts: usize) -> Result<Vec<ProtectionArea>> {
    let labels = dbscan_points(healthy, eps, min_pts)?;
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<TreePoint>> = vec![Vec::new(); n_clusters];
    for (p, l) in healthy.iter().zip(&labels) {
        if let Some(c) = l {
            groups[*c].push(*p);
        }
    }
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));
    groups
        .into_iter()
        .enumerate()
        .map(|(i, members)| {
            let e = fit_ellipse(&members)?;
            Ok(ProtectionArea {
                id: format!("PA{}", i + 1),
                members,
                center: e.center,
                semi_major: e.semi_major,
                semi_minor: e.semi_minor,
                angle: e.angle,
            })
        })
        .collect()
}
