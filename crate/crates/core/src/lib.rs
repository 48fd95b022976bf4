//! Analytics for UAV forest-pest monitoring from RGB imagery.
//!
//! The crate covers everything around a tree detector except the network
//! itself:
//!
//! - [`raster`]: unit-interval image rasters, PGM/PPM/PNG I/O and tiling;
//! - [`fem`]: vegetation-index and texture feature channels;
//! - [`blocks`]: forward passes of the branch-fusion and channel-attention blocks;
//! - [`detections`]: boxes, annotations, CSV and VOC ingestion;
//! - [`metrics`]: precision, recall and COCO-style mAP;
//! - [`situation`]: infected-tree density, healthy-tree risk, protection areas
//!   and crown-size classes;
//! - [`synth`]: seeded synthetic scenes with known ground truth;
//! - [`canon`]: canonical JSON used for all artifacts.

pub mod blocks;
pub mod canon;
pub mod detections;
pub mod error;
pub mod fem;
pub mod metrics;
pub mod raster;
pub mod situation;
pub mod synth;

pub use error::{Error, Result};
