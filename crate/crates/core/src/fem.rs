//! Disease-sensitive feature enhancement for RGB canopy imagery.
//!
//! Produces three per-pixel feature channels from an RGB raster:
//!
//! 0. VDVI, `(2G - R - B) / (2G + R + B)`, a visible-band greenness index;
//! 1. Laplacian texture, `|∇²I|` of the luminance image `I`;
//! 2. NGBDI, `(G - B) / (G + B)`, the green/blue normalized difference.
//!
//! [`build_tofi`] maps the three channels onto `[0, 1]` and stacks them into a
//! feature raster with the same spatial resolution as the input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::Raster;

/// Denominators with magnitude below this produce an index of exactly 0.
pub const INDEX_EPSILON: f64 = 1e-8;

/// Percentile at which the texture channel is clipped before scaling.
pub const TEXTURE_CLIP_PERCENTILE: f64 = 99.0;

/// A single-channel field of reals with the raster's spatial layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

fn per_pixel(rgb: &Raster, f: impl Fn([f64; 3]) -> f64 + Sync) -> Result<ScalarField> {
    rgb.require_channels(3)?;
    let values = rgb.data().par_chunks_exact(3).map(|p| f([p[0], p[1], p[2]])).collect();
    Ok(ScalarField {
        width: rgb.width(),
        height: rgb.height(),
        values,
    })
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() < INDEX_EPSILON {
        0.0
    } else {
        num / den
    }
}

#[inline]
pub fn vdvi_pixel([r, g, b]: [f64; 3]) -> f64 {
    ratio(2.0 * g - r - b, 2.0 * g + r + b)
}

#[inline]
pub fn ngbdi_pixel([_, g, b]: [f64; 3]) -> f64 {
    ratio(g - b, g + b)
}

#[inline]
pub fn luminance([r, g, b]: [f64; 3]) -> f64 {
    // integer weights keep gray pixels exact: (299 + 587 + 114) / 1000 == 1
    (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0
}

pub fn vdvi(rgb: &Raster) -> Result<ScalarField> {
    per_pixel(rgb, vdvi_pixel)
}

pub fn ngbdi(rgb: &Raster) -> Result<ScalarField> {
    per_pixel(rgb, ngbdi_pixel)
}

/// Absolute 4-neighbour Laplacian of the luminance image, replicate-padded.
pub fn laplacian_texture(rgb: &Raster) -> Result<ScalarField> {
    let gray = per_pixel(rgb, luminance)?;
    let (w, h) = (gray.width, gray.height);
    let g = &gray.values;
    let mut values = vec![0.0; w * h];
    values.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for (x, o) in out.iter_mut().enumerate() {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let c = g[y * w + x];
            let lap = g[up * w + x] + g[down * w + x] + g[y * w + left] + g[y * w + right] - 4.0 * c;
            *o = lap.abs();
        }
    });
    Ok(ScalarField {
        width: w,
        height: h,
        values,
    })
}

/// Parameters applied to map one feature channel into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    /// Value mapped to 0.
    pub min: f64,
    /// Value mapped to 1.
    pub max: f64,
    /// Percentile used to clip the channel before scaling, if any.
    pub clip_percentile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub vdvi: ChannelNorm,
    pub texture: ChannelNorm,
    pub ngbdi: ChannelNorm,
}

/// Task-oriented feature image: VDVI, texture and NGBDI stacked as channels 0..3.
#[derive(Debug, Clone, PartialEq)]
pub struct Tofi {
    pub base: Raster,
    pub norm_meta: NormMeta,
}

/// Linear-interpolated percentile (`p` in `[0, 100]`) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub fn build_tofi(rgb: &Raster) -> Result<Tofi> {
    let v = vdvi(rgb)?;
    let t = laplacian_texture(rgb)?;
    let n = ngbdi(rgb)?;

    let t_min = t.values.iter().copied().fold(f64::INFINITY, f64::min);
    let t_clip = percentile(&t.values, TEXTURE_CLIP_PERCENTILE);
    let t_span = t_clip - t_min;

    let mut data = Vec::with_capacity(v.values.len() * 3);
    for ((&vi, &ti), &ni) in v.values.iter().zip(&t.values).zip(&n.values) {
        let tex = if t_span > 0.0 {
            ((ti.min(t_clip) - t_min) / t_span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        data.push(((vi + 1.0) / 2.0).clamp(0.0, 1.0));
        data.push(tex);
        data.push(((ni + 1.0) / 2.0).clamp(0.0, 1.0));
    }
    let index_norm = ChannelNorm {
        min: -1.0,
        max: 1.0,
        clip_percentile: None,
    };
    Ok(Tofi {
        base: Raster::new(rgb.width(), rgb.height(), 3, data)?,
        norm_meta: NormMeta {
            vdvi: index_norm,
            texture: ChannelNorm {
                min: t_min,
                max: t_clip,
                clip_percentile: Some(TEXTURE_CLIP_PERCENTILE),
            },
            ngbdi: index_norm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn px(rgb: [f64; 3]) -> Raster {
        Raster::new(1, 1, 3, rgb.to_vec()).unwrap()
    }

    fn gray_image(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Raster {
        Raster::from_rgb_fn(w, h, |x, y| {
            let v = f(x, y);
            [v, v, v]
        })
        .unwrap()
    }

    #[test]
    fn vdvi_unit_cases() {
        assert_eq!(vdvi(&px([0.0, 1.0, 0.0])).unwrap().values, [1.0]);
        assert_eq!(vdvi(&px([0.5, 0.5, 0.5])).unwrap().values, [0.0]);
        assert_eq!(vdvi(&px([1.0, 0.0, 0.0])).unwrap().values, [-1.0]);
        assert_eq!(vdvi(&px([0.0, 0.0, 0.0])).unwrap().values, [0.0]);
    }

    #[test]
    fn ngbdi_unit_cases() {
        assert_eq!(ngbdi(&px([0.3, 0.4, 0.4])).unwrap().values, [0.0]);
        assert_eq!(ngbdi(&px([0.7, 1.0, 0.0])).unwrap().values, [1.0]);
        assert_eq!(ngbdi(&px([0.1, 0.25, 0.75])).unwrap().values, [-0.5]);
        assert_eq!(ngbdi(&px([0.9, 0.0, 0.0])).unwrap().values, [0.0]);
    }

    #[test]
    fn wrong_channel_count() {
        let g = Raster::zeros(2, 2, 1).unwrap();
        assert!(vdvi(&g).is_err());
        assert!(ngbdi(&g).is_err());
        assert!(laplacian_texture(&g).is_err());
        assert!(build_tofi(&g).is_err());
    }

    #[test]
    fn laplacian_impulse() {
        let img = gray_image(3, 3, |x, y| if (x, y) == (1, 1) { 1.0 } else { 0.0 });
        let t = laplacian_texture(&img).unwrap();
        assert_eq!(t.values, [0.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn laplacian_constant_and_ramp() {
        let t = laplacian_texture(&gray_image(6, 4, |_, _| 0.37)).unwrap();
        assert!(t.values.iter().all(|&v| v < 1e-15));
        let t = laplacian_texture(&gray_image(5, 5, |x, _| x as f64 / 4.0)).unwrap();
        for y in 1..4 {
            for x in 1..4 {
                assert!(t.get(x, y) < 1e-12);
            }
        }
        // replicate padding makes the ramp's end columns non-harmonic
        assert!(t.get(0, 2) > 0.2);
    }

    #[test]
    fn tofi_pure_green_and_gray() {
        let green = Raster::from_rgb_fn(8, 6, |_, _| [0.0, 1.0, 0.0]).unwrap();
        let t = build_tofi(&green).unwrap();
        assert_eq!((t.base.width(), t.base.height()), (8, 6));
        for p in t.base.data().chunks(3) {
            assert_eq!(p, [1.0, 0.0, 1.0]);
        }
        let gray = gray_image(5, 7, |_, _| 0.42);
        let t = build_tofi(&gray).unwrap();
        for p in t.base.data().chunks(3) {
            assert_eq!(p, [0.5, 0.0, 0.5]);
        }
        assert_eq!(t.norm_meta.texture.clip_percentile, Some(99.0));
    }

    #[test]
    fn texture_hot_pixel_is_clipped() {
        let mut data = vec![0.0; 20 * 20 * 3];
        for (i, v) in data.iter_mut().enumerate() {
            *v = ((i / 3) % 7) as f64 / 10.0;
        }
        let r = Raster::new(20, 20, 3, data).unwrap();
        let t = build_tofi(&r).unwrap();
        let tex = t.base.channel(1);
        assert!(tex.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(tex.data().iter().copied().fold(0.0, f64::max), 1.0);
        assert!(t.norm_meta.texture.max >= t.norm_meta.texture.min);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 50.0), 2.0);
        assert_eq!(percentile(&[0.0, 10.0], 99.0), 9.9);
        assert_eq!(percentile(&[5.0], 99.0), 5.0);
    }

    fn pixel() -> impl Strategy<Value = [f64; 3]> {
        [0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64]
    }

    proptest! {
        #[test]
        fn indices_bounded(p in pixel()) {
            let v = vdvi_pixel(p);
            let n = ngbdi_pixel(p);
            prop_assert!((-1.0..=1.0).contains(&v));
            prop_assert!((-1.0..=1.0).contains(&n));
        }

        #[test]
        fn indices_scale_invariant(p in pixel(), k in 0.01..=1.0f64) {
            // scaling can push a denominator across the epsilon cutoff
            prop_assume!(2.0 * p[1] + p[0] + p[2] > 1e-6 && p[1] + p[2] > 1e-6);
            let q = [k * p[0], k * p[1], k * p[2]];
            prop_assert!((vdvi_pixel(p) - vdvi_pixel(q)).abs() < 1e-12);
            prop_assert!((ngbdi_pixel(p) - ngbdi_pixel(q)).abs() < 1e-12);
        }

        #[test]
        fn texture_nonnegative_and_deterministic(seed in any::<u64>()) {
            let mut s = seed;
            let img = Raster::from_rgb_fn(9, 7, |_, _| {
                let mut c = [0.0; 3];
                for v in &mut c {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *v = (s >> 11) as f64 / (1u64 << 53) as f64;
                }
                c
            }).unwrap();
            let t = laplacian_texture(&img).unwrap();
            prop_assert!(t.values.iter().all(|&v| v >= 0.0));
            prop_assert_eq!(build_tofi(&img).unwrap(), build_tofi(&img).unwrap());
        }
    }
}
