//! Small / medium / large crown-area classes with per-class infection counts.

use serde::{Deserialize, Serialize};

use crate::detections::{TreeClass, TreePoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClassMode {
    /// Three equal-width area intervals between the smallest and largest crown.
    #[default]
    EqualWidth,
    /// Boundaries at the 1/3 and 2/3 area quantiles.
    Tertiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassCount {
    pub total: usize,
    pub infected: usize,
    pub healthy: usize,
    /// `infected / total`, 0 for an empty class.
    pub infected_fraction: f64,
}

impl ClassCount {
    fn add(&mut self, cls: TreeClass) {
        self.total += 1;
        match cls {
            TreeClass::Infected => self.infected += 1,
            TreeClass::Healthy => self.healthy += 1,
        }
    }

    fn finish(&mut self) {
        self.infected_fraction = if self.total == 0 {
            0.0
        } else {
            self.infected as f64 / self.total as f64
        };
    }
}

/// Classes are `small = [a_min, b1)`, `medium = [b1, b2)`, `large = [b2, a_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeClassStats {
    pub boundaries: [f64; 2],
    pub mode: SizeClassMode,
    /// Set when `b1 == b2`, so fewer than three classes can be populated.
    pub degenerate: bool,
    pub area_min: f64,
    pub area_max: f64,
    pub small: ClassCount,
    pub medium: ClassCount,
    pub large: ClassCount,
}

impl SizeClassStats {
    pub fn classes(&self) -> [(&'static str, &ClassCount); 3] {
        [("small", &self.small), ("medium", &self.medium), ("large", &self.large)]
    }

    pub fn total(&self) -> usize {
        self.small.total + self.medium.total + self.large.total
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn size_class_stats(trees: &[TreePoint], mode: SizeClassMode) -> Result<SizeClassStats> {
    if trees.is_empty() {
        return Err(Error::Empty("size classes need at least one tree".into()));
    }
    if let Some(t) = trees.iter().find(|t| !(t.area.is_finite() && t.area >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "crown area {} at ({}, {}) is not a finite non-negative value",
            t.area, t.x, t.y
        )));
    }
    let mut areas: Vec<f64> = trees.iter().map(|t| t.area).collect();
    areas.sort_by(f64::total_cmp);
    let area_min = areas[0];
    let area_max = areas[areas.len() - 1];
    let boundaries = match mode {
        SizeClassMode::EqualWidth => {
            let w = (area_max - area_min) / 3.0;
            [area_min + w, area_min + 2.0 * w]
        }
        SizeClassMode::Tertiles => [quantile(&areas, 1.0 / 3.0), quantile(&areas, 2.0 / 3.0)],
    };
    let [b1, b2] = boundaries;

    let mut small = ClassCount::default();
    let mut medium = ClassCount::default();
    let mut large = ClassCount::default();
    for t in trees {
        if t.area >= b2 {
            large.add(t.cls);
        } else if t.area >= b1 {
            medium.add(t.cls);
        } else {
            small.add(t.cls);
        }
    }
    for c in [&mut small, &mut medium, &mut large] {
        c.finish();
    }
    Ok(SizeClassStats {
        boundaries,
        mode,
        degenerate: b1 >= b2,
        area_min,
        area_max,
        small,
        medium,
        large,
    })
}
