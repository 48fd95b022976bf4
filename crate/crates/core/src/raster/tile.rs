//! Splitting large orthomosaics into fixed-size tiles and reassembling them.
//!
//! Edge tiles that extend past the source are zero-padded on the right and
//! bottom; the pad amounts are kept on the grid so reassembly is lossless.

use rayon::prelude::*;

use super::Raster;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub raster: Raster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    pub tile_size: usize,
    pub overlap: usize,
    pub cols: usize,
    pub rows: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
    pub channels: usize,
    pub tiles: Vec<Tile>,
}

impl TileGrid {
    pub fn stride(&self) -> usize {
        self.tile_size - self.overlap
    }

    /// Width of the source raster the grid was cut from.
    pub fn source_width(&self) -> usize {
        (self.cols - 1) * self.stride() + self.tile_size - self.pad_right
    }

    pub fn source_height(&self) -> usize {
        (self.rows - 1) * self.stride() + self.tile_size - self.pad_bottom
    }
}

/// Number of tiles along one axis and the padding past the source edge.
fn axis_layout(len: usize, tile_size: usize, stride: usize) -> (usize, usize) {
    let count = if len <= tile_size {
        1
    } else {
        1 + (len - tile_size).div_ceil(stride)
    };
    let covered = (count - 1) * stride + tile_size;
    (count, covered - len)
}

/// Cuts `r` into non-overlapping `tile_size` squares, row-major.
pub fn tile(r: &Raster, tile_size: usize) -> Result<TileGrid> {
    tile_with_overlap(r, tile_size, 0)
}

pub fn tile_with_overlap(r: &Raster, tile_size: usize, overlap: usize) -> Result<TileGrid> {
    if tile_size == 0 {
        return Err(Error::InvalidParameter("tile_size must be >= 1".into()));
    }
    if overlap >= tile_size {
        return Err(Error::InvalidParameter(format!(
            "overlap {overlap} must be smaller than tile_size {tile_size}"
        )));
    }
    let stride = tile_size - overlap;
    let (cols, pad_right) = axis_layout(r.width(), tile_size, stride);
    let (rows, pad_bottom) = axis_layout(r.height(), tile_size, stride);
    let ch = r.channels();

    let tiles = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / cols, i % cols);
            let (x0, y0) = (col * stride, row * stride);
            let row_len = tile_size * ch;
            let mut data = Vec::with_capacity(row_len * tile_size);
            let w = tile_size.min(r.width().saturating_sub(x0));
            for ty in 0..tile_size.min(r.height().saturating_sub(y0)) {
                data.extend_from_slice(&r.row(y0 + ty)[x0 * ch..(x0 + w) * ch]);
                data.resize(data.len() + (tile_size - w) * ch, 0.0);
            }
            data.resize(row_len * tile_size, 0.0);
            Tile {
                row,
                col,
                raster: Raster::from_valid(tile_size, tile_size, ch, data),
            }
        })
        .collect();

    Ok(TileGrid {
        tile_size,
        overlap,
        cols,
        rows,
        pad_right,
        pad_bottom,
        channels: ch,
        tiles,
    })
}

/// Reassembles a grid produced by [`tile`], cropping away the padding.
pub fn untile(g: &TileGrid) -> Result<Raster> {
    if g.rows == 0 || g.cols == 0 || g.tile_size == 0 || g.overlap >= g.tile_size {
        return Err(Error::TileGrid("empty or malformed grid".into()));
    }
    if g.pad_right >= g.tile_size || g.pad_bottom >= g.tile_size {
        return Err(Error::TileGrid("padding exceeds tile size".into()));
    }
    let mut slots: Vec<Option<&Raster>> = vec![None; g.rows * g.cols];
    for t in &g.tiles {
        if t.row >= g.rows || t.col >= g.cols {
            return Err(Error::TileGrid(format!(
                "tile ({}, {}) outside {}x{} grid",
                t.row, t.col, g.rows, g.cols
            )));
        }
        let r = &t.raster;
        if r.width() != g.tile_size || r.height() != g.tile_size || r.channels() != g.channels {
            return Err(Error::TileGrid(format!(
                "tile ({}, {}) is {}x{}x{}, expected {}x{}x{}",
                t.row,
                t.col,
                r.width(),
                r.height(),
                r.channels(),
                g.tile_size,
                g.tile_size,
                g.channels
            )));
        }
        slots[t.row * g.cols + t.col] = Some(r);
    }
    if let Some(i) = slots.iter().position(Option::is_none) {
        return Err(Error::TileGrid(format!(
            "missing tile ({}, {})",
            i / g.cols,
            i % g.cols
        )));
    }

    let (w, h, ch, stride) = (g.source_width(), g.source_height(), g.channels, g.stride());
    // each pixel comes from the tile whose stride cell holds it; overlaps agree
    let mut data = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        let r = (y / stride).min(g.rows - 1);
        let ty = y - r * stride;
        for c in 0..g.cols {
            let x0 = c * stride;
            let x1 = if c + 1 == g.cols { w } else { x0 + stride };
            let src = slots[r * g.cols + c].unwrap().row(ty);
            data.extend_from_slice(&src[..(x1 - x0) * ch]);
        }
    }
    Ok(Raster::from_valid(w, h, ch, data))
}
