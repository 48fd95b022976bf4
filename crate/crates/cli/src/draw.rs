//! Raster renderings of analysis results: density heatmaps and
//! protection-area overlays.

use infestscope_core::detections::TreePoint;
use infestscope_core::raster::Raster;
use infestscope_core::situation::{DensityField, ProtectionArea};
use infestscope_core::Result;

use crate::artifacts::HeatmapScale;

/// Min-max scaled single-channel image of the grid, row 0 at the top.
pub fn heatmap(f: &DensityField) -> Result<(Raster, HeatmapScale)> {
    let scale = HeatmapScale {
        min: f.min_value(),
        max: f.max_value(),
    };
    let span = scale.max - scale.min;
    let data = f
        .values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - scale.min) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok((Raster::new(f.grid_w, f.grid_h, 1, data)?, scale))
}

const PALETTE: [[f64; 3]; 6] = [
    [0.9, 0.1, 0.1],
    [0.1, 0.4, 0.95],
    [0.95, 0.75, 0.05],
    [0.7, 0.2, 0.85],
    [0.05, 0.8, 0.8],
    [0.95, 0.5, 0.1],
];
const NOISE: [f64; 3] = [0.55, 0.55, 0.55];
const CANVAS: [f64; 3] = [0.08, 0.1, 0.08];

struct Canvas {
    w: usize,
    h: usize,
    data: Vec<f64>,
    scale: f64,
}

impl Canvas {
    fn put(&mut self, x: f64, y: f64, c: [f64; 3]) {
        let (px, py) = ((x * self.scale).floor(), (y * self.scale).floor());
        if px < 0.0 || py < 0.0 || px >= self.w as f64 || py >= self.h as f64 {
            return;
        }
        let i = (py as usize * self.w + px as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    fn dot(&mut self, x: f64, y: f64, c: [f64; 3]) {
        let d = 1.0 / self.scale;
        for dy in -1..=1 {
            for dx in -1..=1 {
                self.put(x + dx as f64 * d, y + dy as f64 * d, c);
            }
        }
    }
}

/// Draws healthy trees (grey when unclustered) and each area's ellipse.
///
/// `background`, when given, must be RGB and is drawn on directly at scale 1;
/// otherwise a blank canvas covering all points is scaled down to at most
/// `max_side` pixels.
pub fn protect_overlay(
    healthy: &[TreePoint],
    areas: &[ProtectionArea],
    background: Option<Raster>,
    max_side: usize,
) -> Result<Raster> {
    let mut canvas = match background {
        Some(bg) => {
            bg.require_channels(3)?;
            Canvas {
                w: bg.width(),
                h: bg.height(),
                data: bg.into_data(),
                scale: 1.0,
            }
        }
        None => {
            // canvas covers every point and every ellipse
            let (mx, my) = healthy
                .iter()
                .map(|p| (p.x, p.y))
                .chain(
                    areas
                        .iter()
                        .map(|a| (a.center[0] + a.semi_major, a.center[1] + a.semi_major)),
                )
                .fold((1.0f64, 1.0f64), |(mx, my), (x, y)| (mx.max(x), my.max(y)));
            let scale = (max_side as f64 / mx.max(my).ceil()).min(1.0);
            let w = ((mx * scale).ceil() as usize + 1).max(1);
            let h = ((my * scale).ceil() as usize + 1).max(1);
            Canvas {
                w,
                h,
                data: CANVAS.iter().copied().cycle().take(w * h * 3).collect(),
                scale,
            }
        }
    };
    for p in healthy {
        canvas.dot(p.x, p.y, NOISE);
    }
    for (i, a) in areas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for m in &a.members {
            canvas.dot(m.x, m.y, color);
        }
        let (s, c) = a.angle.sin_cos();
        let steps = ((a.semi_major * canvas.scale * 8.0).ceil() as usize).clamp(64, 20_000);
        for k in 0..steps {
            let t = k as f64 / steps as f64 * std::f64::consts::TAU;
            let (u, v) = (a.semi_major * t.cos(), a.semi_minor * t.sin());
            canvas.put(a.center[0] + u * c - v * s, a.center[1] + u * s + v * c, color);
        }
        canvas.dot(a.center[0], a.center[1], [1.0, 1.0, 1.0]);
    }
    Raster::new(canvas.w, canvas.h, 3, canvas.data)
}
