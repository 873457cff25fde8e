//! CSV storage for scalar and flux fields.
//!
//! A field file holds one value per line, written with 17 significant
//! digits so that reading it back is bit-exact. Scalar values are in
//! row-major cell order (the last axis varies fastest). Flux values go axis
//! by axis: the interior faces of the axis in row-major order, then its
//! boundary faces, low side before high side. A JSON header with the same
//! stem describes the grid:
//!
//! ```text
//! {"dims": 2, "cells": [32, 32], "spacing": [0.03125, 0.03125], "kind": "scalar"}
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dualflow_core::{FluxField, GridSpec, ScalarField};
use serde::{Deserialize, Serialize};

use crate::report::Fixed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Flux,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldHeader {
    pub dims: usize,
    pub cells: Vec<usize>,
    pub spacing: Vec<Fixed>,
    pub kind: FieldKind,
}

impl FieldHeader {
    pub fn new(grid: &GridSpec, kind: FieldKind) -> Self {
        FieldHeader {
            dims: grid.dim(),
            cells: grid.cells().to_vec(),
            spacing: grid.spacing().iter().map(|&h| Fixed(h)).collect(),
            kind,
        }
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn header_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_values(path: &Path, values: &[f64], header: &FieldHeader) -> Result<()> {
    let mut text = String::with_capacity(values.len() * 24);
    for v in values {
        let _ = writeln!(text, "{}", format_value(*v));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    let json = serde_json::to_string(header)? + "\n";
    let hp = header_path(path);
    fs::write(&hp, json).with_context(|| format!("writing {}", hp.display()))?;
    Ok(())
}

pub fn write_scalar(path: &Path, u: &ScalarField) -> Result<()> {
    write_values(path, u.values(), &FieldHeader::new(u.grid(), FieldKind::Scalar))
}

pub fn write_flux(path: &Path, z: &FluxField) -> Result<()> {
    write_values(path, &z.to_flat(), &FieldHeader::new(z.grid(), FieldKind::Flux))
}

/// Reads one value per line; blank lines and lines starting with `#` are
/// skipped.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("{}:{}: not a number: '{line}'", path.display(), i + 1))?;
        if !v.is_finite() {
            bail!("{}:{}: value is not finite", path.display(), i + 1);
        }
        values.push(v);
    }
    Ok(values)
}

pub fn read_scalar(path: &Path, grid: GridSpec) -> Result<ScalarField> {
    let values = read_values(path)?;
    if values.len() != grid.cell_count() {
        bail!("{}: expected {} values (one per cell), found {}", path.display(), grid.cell_count(), values.len());
    }
    Ok(ScalarField::new(grid, values)?)
}

pub fn read_flux(path: &Path, grid: GridSpec) -> Result<FluxField> {
    let values = read_values(path)?;
    let expected = FluxField::flat_len(&grid);
    if values.len() != expected {
        bail!("{}: expected {expected} values (one per face), found {}", path.display(), values.len());
    }
    Ok(FluxField::from_flat(grid, &values)?)
}
