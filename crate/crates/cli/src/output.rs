//! Run directory layout and file formats.
//!
//! Every run writes a self-describing directory with fixed filenames:
//! `positions.csv`, `loss.csv`, `attractor.json`, `meta.json`. Floats are
//! serialized as shortest round-trip decimals, so re-ingesting a positions
//! file reproduces the in-memory ensemble bitwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use polsim_core::analysis::AttractorSummary;
use polsim_core::dynamics::{LossTrace, RunConfig};
use polsim_core::geometry::PointSet;
use polsim_core::init::InitSpec;

pub const POSITIONS_FILE: &str = "positions.csv";
pub const LOSS_FILE: &str = "loss.csv";
pub const ATTRACTOR_FILE: &str = "attractor.json";
pub const META_FILE: &str = "meta.json";

/// Everything `meta.json` needs to re-create a run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_config: RunConfig,
    pub init_spec: InitSpec,
    pub merge_radius: f64,
    pub converged_at: Option<usize>,
    pub wall_seconds: f64,
    pub threads: usize,
    pub version: String,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub fn write_positions(path: &Path, ps: &PointSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..ps.dim()).map(|d| format!("x{d}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in ps.iter() {
        let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_positions(path: &Path) -> Result<PointSet> {
    let reader = BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    );
    let mut lines = reader.lines();
    let header = lines
        .next()
        .context("positions file is empty")?
        .context("cannot read header")?;
    let dim = header.split(',').count();
    let mut data = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = 0;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("bad float {field:?} on data row {}", lineno + 1))?;
            data.push(v);
            fields += 1;
        }
        if fields != dim {
            bail!(
                "row {} has {} fields, header has {}",
                lineno + 1,
                fields,
                dim
            );
        }
    }
    Ok(PointSet::from_flat(data, dim)?)
}

pub fn write_loss(path: &Path, trace: &LossTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,loss")?;
    for (epoch, v) in trace.values.iter().enumerate() {
        writeln!(w, "{epoch},{v}")?;
    }
    Ok(())
}

pub fn write_attractor(path: &Path, summary: &AttractorSummary) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, summary)?;
    Ok(())
}

pub fn write_meta(path: &Path, meta: &RunMeta) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, meta)?;
    Ok(())
}

/// Writes a rectangular CSV table (header plus rows of display-formatted
/// cells).
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(path.to_path_buf())
}
