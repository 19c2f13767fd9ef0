//! CSV tables shared between commands: predictions `i,j,prob` and
//! outcomes `i,j,y`, zero-based cell indices.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub i: usize,
    pub j: usize,
    pub prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub i: usize,
    pub j: usize,
    pub y: u8,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (n, rec) in r.deserialize().enumerate() {
        rows.push(rec.with_context(|| format!("{} row {}", path.display(), n + 1))?);
    }
    Ok(rows)
}

pub fn write_predictions(path: &Path, cells: &[(usize, usize)], probs: &[f64]) -> Result<()> {
    write_rows(
        path,
        cells.iter().zip(probs).map(|(&(i, j), &prob)| PredictionRow { i, j, prob }),
    )
}

pub fn write_outcomes(path: &Path, cells: &[(usize, usize)], ys: &[u8]) -> Result<()> {
    write_rows(path, cells.iter().zip(ys).map(|(&(i, j), &y)| OutcomeRow { i, j, y }))
}

/// Probabilities of `lookup` listed in the order of `cells`. Both sides
/// must cover exactly the same cells.
pub fn align(
    what: &str,
    cells: &[(usize, usize)],
    lookup: &[PredictionRow],
) -> Result<Vec<f64>> {
    if cells.len() != lookup.len() {
        bail!(
            "protocol error: {} cells to score but {what} has {} rows",
            cells.len(),
            lookup.len()
        );
    }
    let map: HashMap<(usize, usize), f64> = lookup.iter().map(|r| ((r.i, r.j), r.prob)).collect();
    if map.len() != lookup.len() {
        bail!("protocol error: {what} lists a cell more than once");
    }
    cells
        .iter()
        .map(|c| {
            map.get(c)
                .copied()
                .with_context(|| format!("protocol error: cell ({}, {}) missing from {what}", c.0, c.1))
        })
        .collect()
}
