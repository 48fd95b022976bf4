//! Forward passes of the dual-branch fusion block and efficient channel
//! attention, as plain tensor arithmetic.
//!
//! * [`amfm_fuse`] projects an RGB-branch and a feature-branch map into a
//!   common channel space with per-branch 1x1 convolutions, then blends them
//!   with two softmax-normalized scalar weights.
//! * [`eca_forward`] pools each channel to its mean, runs a circular 1-D
//!   convolution across the channel means, and rescales each channel by the
//!   sigmoid of the result.
//!
//! Parameters are supplied by the caller; nothing here is trained.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `C x H x W` stack of real-valued feature planes, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels * height * width != data.len() {
            return Err(Error::Shape(format!(
                "feature map data length {} != {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("feature map contains non-finite values".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    /// Converts an interleaved raster into a channel-major feature map.
    pub fn from_raster(r: &crate::raster::Raster) -> Self {
        let (c, h, w) = (r.channels(), r.height(), r.width());
        let mut data = vec![0.0; c * h * w];
        for (i, px) in r.data().chunks_exact(c).enumerate() {
            for (k, &v) in px.iter().enumerate() {
                data[k * h * w + i] = v;
            }
        }
        Self {
            channels: c,
            height: h,
            width: w,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Parameters of the fusion block.
///
/// `proj_rgb` is `c_out x c_rgb` and `proj_fem` is `c_out x c_fem`, both
/// row-major; `logits` are the unnormalized branch weights `(rgb, fem)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmfmParams {
    pub c_out: usize,
    pub c_rgb: usize,
    pub c_fem: usize,
    pub proj_rgb: Vec<f64>,
    pub proj_fem: Vec<f64>,
    pub logits: [f64; 2],
}

impl AmfmParams {
    pub fn new(
        c_out: usize,
        c_rgb: usize,
        c_fem: usize,
        proj_rgb: Vec<f64>,
        proj_fem: Vec<f64>,
        logits: [f64; 2],
    ) -> Result<Self> {
        if proj_rgb.len() != c_out * c_rgb || proj_fem.len() != c_out * c_fem {
            return Err(Error::Shape(format!(
                "projection sizes {}/{} inconsistent with {c_out}x{c_rgb} and {c_out}x{c_fem}",
                proj_rgb.len(),
                proj_fem.len()
            )));
        }
        Ok(Self {
            c_out,
            c_rgb,
            c_fem,
            proj_rgb,
            proj_fem,
            logits,
        })
    }

    /// Identity projections (requires `c_rgb == c_fem == c_out`).
    pub fn identity(channels: usize, logits: [f64; 2]) -> Self {
        let mut eye = vec![0.0; channels * channels];
        for i in 0..channels {
            eye[i * channels + i] = 1.0;
        }
        Self {
            c_out: channels,
            c_rgb: channels,
            c_fem: channels,
            proj_rgb: eye.clone(),
            proj_fem: eye,
            logits,
        }
    }

    /// Standard-normal-ish projections scaled by `1/sqrt(fan_in)`, and logits in `[-1, 1]`.
    pub fn random(c_out: usize, c_rgb: usize, c_fem: usize, rng: &mut impl Rng) -> Self {
        let mut mat = |fan_in: usize| -> Vec<f64> {
            let s = 1.0 / (fan_in as f64).sqrt();
            (0..c_out * fan_in).map(|_| rng.random_range(-1.0..1.0) * s).collect()
        };
        let proj_rgb = mat(c_rgb);
        let proj_fem = mat(c_fem);
        let logits = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        Self {
            c_out,
            c_rgb,
            c_fem,
            proj_rgb,
            proj_fem,
            logits,
        }
    }

    /// The softmax-normalized branch weights `(w_rgb, w_fem)`.
    pub fn branch_weights(&self) -> [f64; 2] {
        softmax2(self.logits)
    }
}

/// Two-way softmax with max-subtraction.
pub fn softmax2([a, b]: [f64; 2]) -> [f64; 2] {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let s = ea + eb;
    [ea / s, eb / s]
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-pixel channel mixing: `out[o] = sum_i m[o][i] * x[i]`.
fn project(x: &FeatureMap, m: &[f64], c_out: usize) -> FeatureMap {
    let n = x.height * x.width;
    let mut out = vec![0.0; c_out * n];
    for o in 0..c_out {
        let row = &m[o * x.channels..(o + 1) * x.channels];
        let dst = &mut out[o * n..(o + 1) * n];
        for (i, &w) in row.iter().enumerate() {
            for (d, &s) in dst.iter_mut().zip(x.plane(i)) {
                *d += w * s;
            }
        }
    }
    FeatureMap {
        channels: c_out,
        height: x.height,
        width: x.width,
        data: out,
    }
}

pub fn amfm_fuse(rgb_feat: &FeatureMap, fem_feat: &FeatureMap, p: &AmfmParams) -> Result<FeatureMap> {
    if (rgb_feat.height, rgb_feat.width) != (fem_feat.height, fem_feat.width) {
        return Err(Error::Shape(format!(
            "branch spatial dims differ: {}x{} vs {}x{}",
            rgb_feat.height, rgb_feat.width, fem_feat.height, fem_feat.width
        )));
    }
    if rgb_feat.channels != p.c_rgb || fem_feat.channels != p.c_fem {
        return Err(Error::Shape(format!(
            "branch channels {}/{} do not match projections {}/{}",
            rgb_feat.channels, fem_feat.channels, p.c_rgb, p.c_fem
        )));
    }
    let [w_rgb, w_fem] = p.branch_weights();
    let a = project(rgb_feat, &p.proj_rgb, p.c_out);
    let b = project(fem_feat, &p.proj_fem, p.c_out);
    let data = a.data.iter().zip(&b.data).map(|(x, y)| w_rgb * x + w_fem * y).collect();
    Ok(FeatureMap { data, ..a })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcaConfig {
    pub gamma: u32,
    pub b: i32,
}

impl Default for EcaConfig {
    fn default() -> Self {
        Self { gamma: 2, b: 1 }
    }
}

/// Adaptive kernel size: `t = floor(|log2(C)/gamma + b/gamma|)`, rounded up to odd.
pub fn eca_kernel_size(channels: usize, cfg: EcaConfig) -> usize {
    let g = f64::from(cfg.gamma.max(1));
    let t = ((channels.max(1) as f64).log2() / g + f64::from(cfg.b) / g)
        .abs()
        .floor() as usize;
    if t % 2 == 1 {
        t
    } else {
        t + 1
    }
}

/// Channel mean with a permutation-independent summation order (ascending values).
fn channel_mean(plane: &[f64]) -> f64 {
    let mut sorted = plane.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / plane.len() as f64
}

/// Per-channel attention gains `sigmoid(conv1d_circular(mean(x)))`.
pub fn eca_gains(x: &FeatureMap, weights: &[f64], cfg: EcaConfig) -> Result<Vec<f64>> {
    let k = eca_kernel_size(x.channels, cfg);
    if weights.len() != k {
        return Err(Error::Shape(format!(
            "eca expects {k} weights for {} channels, got {}",
            x.channels,
            weights.len()
        )));
    }
    let c = x.channels;
    if c == 0 || x.height * x.width == 0 {
        return Ok(vec![0.5; c]);
    }
    let means: Vec<f64> = (0..c).map(|ch| channel_mean(x.plane(ch))).collect();
    let half = k / 2;
    Ok((0..c)
        .map(|ch| {
            let a: f64 = weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * means[(ch + c * k + j - half) % c])
                .sum();
            sigmoid(a)
        })
        .collect())
}

pub fn eca_forward(x: &FeatureMap, weights: &[f64], cfg: EcaConfig) -> Result<FeatureMap> {
    let gains = eca_gains(x, weights, cfg)?;
    let n = x.height * x.width;
    let mut data = x.data.clone();
    for (ch, g) in gains.iter().enumerate() {
        for v in &mut data[ch * n..(ch + 1) * n] {
            *v *= g;
        }
    }
    Ok(FeatureMap { data, ..x.clone() })
}
