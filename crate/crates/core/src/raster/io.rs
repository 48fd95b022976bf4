//! Raster I/O: binary PGM/PPM (P5/P6, maxval 255) and 8-bit PNG.
//!
//! Loading maps byte `v` to `v / 255`. Saving quantizes to the nearest byte,
//! with exact half-steps resolved downward (`127.5 -> 127`).

use std::fs;
use std::path::Path;

use super::Raster;
use crate::error::{Error, Result};

/// Quantizes an intensity in `[0, 1]` to a byte.
#[inline]
pub fn quantize(v: f64) -> u8 {
    // nearest integer, ties toward zero
    (v * 255.0 - 0.5).ceil().clamp(0.0, 255.0) as u8
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        load_png(path, &bytes)
    } else {
        decode_pnm(path, &bytes)
    }
}

pub fn save_image(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_png(path) {
        encode_png(raster)?
    } else {
        encode_pnm(raster)
    };
    crate::canon::write_atomic(path, &bytes)
}

/// Encodes as binary PGM (1 channel) or PPM (3 channels).
pub fn encode_pnm(raster: &Raster) -> Vec<u8> {
    let magic = if raster.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", raster.width(), raster.height()).into_bytes();
    out.reserve(raster.data().len());
    out.extend(raster.data().iter().map(|&v| quantize(v)));
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self) -> Option<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse().ok()
    }
}

pub(crate) fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<Raster> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(Error::format(
                path,
                "not a binary PGM/PPM (expected P5 or P6 magic) or PNG file",
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur
        .next_uint()
        .ok_or_else(|| Error::format(path, "bad width in header"))? as usize;
    let height = cur
        .next_uint()
        .ok_or_else(|| Error::format(path, "bad height in header"))? as usize;
    let maxval = cur
        .next_uint()
        .ok_or_else(|| Error::format(path, "bad maxval in header"))?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(path, format!("zero-dimension image {width}x{height}")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(path, "missing separator after maxval")),
    }
    let n = width * height * channels;
    let pixels = bytes
        .get(cur.pos..cur.pos + n)
        .ok_or_else(|| Error::format(path, format!("truncated pixel data: need {n} bytes")))?;
    let data = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    Raster::new(width, height, channels, data)
}

fn load_png(path: &Path, bytes: &[u8]) -> Result<Raster> {
    use image::{ColorType, DynamicImage};

    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::format(path, "zero-dimension image"));
    }
    let (channels, raw) = match img.color() {
        ColorType::L8 | ColorType::La8 => (1, DynamicImage::to_luma8(&img).into_raw()),
        ColorType::Rgb8 | ColorType::Rgba8 => (3, DynamicImage::to_rgb8(&img).into_raw()),
        _ => return Err(Error::UnsupportedDepth(65535)),
    };
    let data = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
    Raster::new(w, h, channels, data)
}

fn encode_png(raster: &Raster) -> Result<Vec<u8>> {
    use image::{ExtendedColorType, ImageEncoder};

    let bytes: Vec<u8> = raster.data().iter().map(|&v| quantize(v)).collect();
    let color = if raster.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&bytes, raster.width() as u32, raster.height() as u32, color)
        .map_err(|e| Error::InvalidRaster(e.to_string()))?;
    Ok(out)
}
