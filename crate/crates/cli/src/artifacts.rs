//! Output directory handling, run manifests and the JSON artifact schemas
//! shared between subcommands and `report`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use infestscope_core::canon;
use infestscope_core::detections::{load_csv_auto, to_points, Records, TreePoint};
use infestscope_core::situation::{BandwidthRule, DensityField, Peak, PlotExtent, ProtectionArea};

pub const EVALUATE_JSON: &str = "evaluate.json";
pub const DENSITY_JSON: &str = "density.json";
pub const DENSITY_IMAGE: &str = "density.pgm";
pub const RISK_CSV: &str = "risk.csv";
pub const RISK_JSON: &str = "risk.json";
pub const PROTECT_JSON: &str = "protect.json";
pub const PROTECT_IMAGE: &str = "protect.ppm";
pub const SIZECLASS_JSON: &str = "sizeclass.json";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance record written beside each subcommand's artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub parameters: Map<String, Value>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

/// Writes artifacts into one directory and records them in a manifest.
pub struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn new(subcommand: &'static str, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                subcommand,
                version: env!("CARGO_PKG_VERSION"),
                parameters: Map::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.manifest.parameters.insert(key.to_string(), v);
        self
    }

    /// Records the digest of an input file (or of every file in a directory).
    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("reading {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for f in files {
                self.input(&f)?;
            }
            return Ok(());
        }
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.manifest.inputs.push(InputDigest {
            name,
            bytes: bytes.len() as u64,
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Lists a file already written into the run directory.
    pub fn record(&mut self, name: &str) {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        canon::write_json(self.path(name), value)?;
        self.record(name);
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        canon::write_atomic(self.path(name), bytes)?;
        self.record(name);
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.outputs.sort();
        let name = format!("{}.manifest.json", self.manifest.subcommand);
        canon::write_json(self.dir.join(name), &self.manifest)?;
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tree points from a detection or annotation CSV; detections below
/// `score_thr` are dropped.
pub fn load_trees(path: &Path, score_thr: f64) -> Result<Vec<TreePoint>> {
    Ok(match load_csv_auto(path)? {
        Records::Detections(d) => {
            let kept: Vec<_> = d.into_iter().filter(|d| d.score >= score_thr).collect();
            to_points(&kept)
        }
        Records::Annotations(a) => to_points(&a),
    })
}

pub fn parse_extent(s: &str) -> Result<PlotExtent> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("extent {s:?} must be four comma-separated numbers"))?;
    anyhow::ensure!(v.len() == 4, "extent {s:?} must be x_min,y_min,x_max,y_max");
    Ok(PlotExtent::new(v[0], v[1], v[2], v[3])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapScale {
    /// Density mapped to byte 0.
    pub min: f64,
    /// Density mapped to byte 255.
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityArtifact {
    pub field: DensityField,
    pub heatmap: HeatmapScale,
    pub mass: f64,
    pub peaks: Vec<Peak>,
}

/// Density metadata without the grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub extent: PlotExtent,
    pub grid_w: usize,
    pub grid_h: usize,
    pub bandwidth: f64,
    pub axis_bandwidth: [f64; 2],
    pub rule: BandwidthRule,
    pub n_points: usize,
    pub mass: f64,
    pub max: f64,
    pub heatmap: HeatmapScale,
    pub peaks: Vec<Peak>,
}

impl From<&DensityArtifact> for DensitySummary {
    fn from(a: &DensityArtifact) -> Self {
        let f = &a.field;
        Self {
            extent: f.extent,
            grid_w: f.grid_w,
            grid_h: f.grid_h,
            bandwidth: f.bandwidth,
            axis_bandwidth: f.axis_bandwidth,
            rule: f.rule,
            n_points: f.n_points,
            mass: a.mass,
            max: f.max_value(),
            heatmap: a.heatmap,
            peaks: a.peaks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub radius: f64,
    pub n_trees: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// Trees whose neighbourhood held no cell centre.
    pub interpolated: usize,
    /// Highest-risk trees, descending.
    pub top: Vec<RiskTop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTop {
    pub x: f64,
    pub y: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectArtifact {
    pub eps: f64,
    pub eps_source: String,
    pub min_pts: usize,
    pub n_healthy: usize,
    pub n_noise: usize,
    pub areas: Vec<ProtectionArea>,
}

/// A protection area without its member list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSummary {
    pub id: String,
    pub member_count: usize,
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    pub angle: f64,
}

impl From<&ProtectionArea> for AreaSummary {
    fn from(a: &ProtectionArea) -> Self {
        Self {
            id: a.id.clone(),
            member_count: a.members.len(),
            center: a.center,
            semi_major: a.semi_major,
            semi_minor: a.semi_minor,
            angle: a.angle,
        }
    }
}
