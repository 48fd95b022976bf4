//! Gaussian kernel density estimation of infected-tree locations.
//!
//! Points are mapped into the unit square, then the density at each grid-cell
//! centre `z` is
//!
//! ```text
//! f(z) = 1 / (n * hx * hy) * sum_i K(d_i),   K(u) = exp(-u^2 / 2) / (2 pi)
//! d_i^2 = ((z_x - x_i) / hx)^2 + ((z_y - y_i) / hy)^2
//! ```
//!
//! With the standard rule `hx = hy = h = n^(-1/(d+4))`, `d = 2`, this is the
//! isotropic estimator `1/(n h^2) sum K(|z - z_i| / h)`. The Scott variant
//! scales `h` by the per-axis sample standard deviation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PlotExtent;
use crate::detections::TreePoint;
use crate::error::{Error, Result};

const INV_TWO_PI: f64 = 1.0 / (2.0 * std::f64::consts::PI);

/// Points processed per block when accumulating the separable kernel sums.
const BLOCK: usize = 1024;

/// Rule-of-thumb bandwidth `n^(-1/(d+4))`.
pub fn bandwidth(n: usize, d: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("bandwidth needs n >= 1".into()));
    }
    Ok((n as f64).powf(-1.0 / (d as f64 + 4.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `h = n^(-1/6)` on both normalized axes.
    Standard,
    /// `h = n^(-1/6) * sample std` per normalized axis.
    Scott,
    /// A caller-chosen bandwidth on both normalized axes.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeOptions {
    pub grid_w: usize,
    pub grid_h: usize,
    pub rule: BandwidthRule,
}

impl Default for KdeOptions {
    fn default() -> Self {
        Self {
            grid_w: 256,
            grid_h: 256,
            rule: BandwidthRule::Standard,
        }
    }
}

/// How plot coordinates were mapped before density evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub kind: String,
    /// Pixel coordinate mapped to `(0, 0)`.
    pub origin: [f64; 2],
    /// Pixel lengths mapped to 1 along x and y.
    pub scale: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub extent: PlotExtent,
    pub grid_w: usize,
    pub grid_h: usize,
    /// Row-major densities in normalized-coordinate units, row 0 at `y_min`.
    pub values: Vec<f64>,
    /// `n^(-1/6)`, or the fixed bandwidth.
    pub bandwidth: f64,
    /// Bandwidths actually applied along the normalized x and y axes.
    pub axis_bandwidth: [f64; 2],
    pub rule: BandwidthRule,
    pub n_points: usize,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub col: usize,
    pub row: usize,
    /// Cell centre in pixel coordinates.
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

impl Normalization {
    fn for_extent(e: &PlotExtent) -> Self {
        Normalization {
            kind: "unit-square".into(),
            origin: [e.x_min, e.y_min],
            scale: [e.width(), e.height()],
        }
    }
}

fn sample_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Density of `infected` on a `grid.0 x grid.1` grid with the standard bandwidth.
pub fn kde(infected: &[TreePoint], extent: PlotExtent, grid: (usize, usize)) -> Result<DensityField> {
    kde_with(
        infected,
        extent,
        KdeOptions {
            grid_w: grid.0,
            grid_h: grid.1,
            rule: BandwidthRule::Standard,
        },
    )
}

pub fn kde_with(infected: &[TreePoint], extent: PlotExtent, opts: KdeOptions) -> Result<DensityField> {
    if infected.is_empty() {
        return Err(Error::EmptyInfectedSet);
    }
    extent.validate()?;
    if opts.grid_w == 0 || opts.grid_h == 0 {
        return Err(Error::InvalidParameter("grid dimensions must be >= 1".into()));
    }
    if let Some(p) = infected.iter().find(|p| !extent.contains(p.x, p.y)) {
        return Err(Error::OutsideExtent { x: p.x, y: p.y });
    }
    let n = infected.len();
    let pts: Vec<[f64; 2]> = infected.iter().map(|p| extent.normalize(p.x, p.y)).collect();
    let h = bandwidth(n, 2)?;
    let (base, hx, hy) = match opts.rule {
        BandwidthRule::Standard => (h, h, h),
        BandwidthRule::Fixed(b) => {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!("bandwidth {b} must be > 0")));
            }
            (b, b, b)
        }
        BandwidthRule::Scott => {
            if n < 2 {
                return Err(Error::InvalidParameter("Scott bandwidth needs >= 2 points".into()));
            }
            let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
            let (sx, sy) = (sample_std(&xs), sample_std(&ys));
            if !(sx > 0.0 && sy > 0.0) {
                return Err(Error::InvalidParameter(
                    "Scott bandwidth needs spread along both axes".into(),
                ));
            }
            (h, h * sx, h * sy)
        }
    };

    let (gw, gh) = (opts.grid_w, opts.grid_h);
    let xs: Vec<f64> = (0..gw).map(|i| (i as f64 + 0.5) / gw as f64).collect();
    let ys: Vec<f64> = (0..gh).map(|j| (j as f64 + 0.5) / gh as f64).collect();
    let norm = INV_TWO_PI / (n as f64 * hx * hy);

    // exp(-(a^2 + b^2)/2) = exp(-a^2/2) * exp(-b^2/2): accumulate outer products
    // block by block; each cell still sums points in input order.
    let mut values = vec![0.0; gw * gh];
    for block in pts.chunks(BLOCK) {
        let ex: Vec<f64> = block
            .iter()
            .flat_map(|p| xs.iter().map(move |&x| (-0.5 * ((x - p[0]) / hx).powi(2)).exp()))
            .collect();
        let ey: Vec<f64> = block
            .iter()
            .flat_map(|p| ys.iter().map(move |&y| (-0.5 * ((y - p[1]) / hy).powi(2)).exp()))
            .collect();
        values.par_chunks_mut(gw).enumerate().for_each(|(j, row)| {
            for k in 0..block.len() {
                let wy = ey[k * gh + j];
                if wy == 0.0 {
                    continue;
                }
                for (v, &wx) in row.iter_mut().zip(&ex[k * gw..(k + 1) * gw]) {
                    *v += wy * wx;
                }
            }
        });
    }
    values.par_iter_mut().for_each(|v| *v *= norm);

    Ok(DensityField {
        extent,
        grid_w: gw,
        grid_h: gh,
        values,
        bandwidth: base,
        axis_bandwidth: [hx, hy],
        rule: opts.rule,
        n_points: n,
        normalization: Normalization::for_extent(&extent),
    })
}

impl DensityField {
    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid_w + col]
    }

    /// Normalized coordinates of a cell centre.
    pub fn cell_center(&self, col: usize, row: usize) -> [f64; 2] {
        [
            (col as f64 + 0.5) / self.grid_w as f64,
            (row as f64 + 0.5) / self.grid_h as f64,
        ]
    }

    /// Riemann sum of the field over the unit square.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.grid_w * self.grid_h) as f64
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Up to `k` strict local maxima over the 8-neighbourhood, by descending value.
    ///
    /// Plateaus are broken toward the lowest cell index.
    pub fn local_maxima(&self, k: usize) -> Vec<Peak> {
        let (w, h) = (self.grid_w as isize, self.grid_h as isize);
        let mut peaks = Vec::new();
        for row in 0..h {
            for col in 0..w {
                let idx = row * w + col;
                let v = self.values[idx as usize];
                let is_max = (-1..=1).all(|dy| {
                    (-1..=1).all(|dx| {
                        let (c, r) = (col + dx, row + dy);
                        if (dx, dy) == (0, 0) || c < 0 || r < 0 || c >= w || r >= h {
                            return true;
                        }
                        let ni = r * w + c;
                        let nv = self.values[ni as usize];
                        v > nv || (v == nv && idx < ni)
                    })
                });
                if is_max {
                    let [u, vv] = self.cell_center(col as usize, row as usize);
                    let [x, y] = self.extent.denormalize(u, vv);
                    peaks.push(Peak {
                        col: col as usize,
                        row: row as usize,
                        x,
                        y,
                        value: v,
                    });
                }
            }
        }
        peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
        peaks.truncate(k);
        peaks
    }

    /// Validates a field read from disk.
    pub fn validate(&self) -> Result<()> {
        self.extent.validate()?;
        if self.grid_w == 0 || self.grid_h == 0 || self.values.len() != self.grid_w * self.grid_h {
            return Err(Error::Shape(format!(
                "density grid {}x{} with {} values",
                self.grid_w,
                self.grid_h,
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Shape("density values must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Bilinear interpolation of the grid at a pixel position inside the extent.
///
/// Between the outermost cell centres and the extent border the edge value is held.
pub fn sample_density(f: &DensityField, x: f64, y: f64) -> Result<f64> {
    if !f.extent.contains(x, y) {
        return Err(Error::OutsideExtent { x, y });
    }
    let [u, v] = f.extent.normalize(x, y);
    Ok(sample_normalized(f, u, v))
}

pub(crate) fn sample_normalized(f: &DensityField, u: f64, v: f64) -> f64 {
    let axis = |t: f64, n: usize| {
        let g = (t * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (g.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, g - i0 as f64)
    };
    let (c0, c1, tx) = axis(u, f.grid_w);
    let (r0, r1, ty) = axis(v, f.grid_h);
    let top = f.at(c0, r0) * (1.0 - tx) + f.at(c1, r0) * tx;
    let bottom = f.at(c0, r1) * (1.0 - tx) + f.at(c1, r1) * tx;
    top * (1.0 - ty) + bottom * ty
}
