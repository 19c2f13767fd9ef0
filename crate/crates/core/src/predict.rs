//! Bayesian predictive probabilities from posterior draws of `M`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::gibbs::PosteriorSampleSet;
use crate::matrix::DenseMatrix;
use crate::model::probit;
use crate::observations::BinaryObservationMatrix;

/// Predictive probability of `y = 1` per queried cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionTable {
    pub cells: Vec<(usize, usize)>,
    pub probs: Vec<f64>,
}

impl PredictionTable {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.cells.iter().copied().zip(self.probs.iter().copied())
    }
}

fn check_cell(cell: (usize, usize), shape: (usize, usize)) -> Result<()> {
    if cell.0 >= shape.0 || cell.1 >= shape.1 {
        return Err(Error::Index {
            i: cell.0,
            j: cell.1,
            p: shape.0,
            q: shape.1,
        });
    }
    Ok(())
}

/// `(1/N) sum_t f(M_ij^(t))`.
pub fn predict_marginal(samples: &PosteriorSampleSet, cell: (usize, usize)) -> Result<f64> {
    check_cell(cell, samples.shape())?;
    let n = samples.len() as f64;
    Ok(samples
        .samples()
        .iter()
        .map(|m| probit(m.get(cell.0, cell.1)))
        .sum::<f64>()
        / n)
}

/// Streams draws and keeps a running sum of `f(M_c)` for each target cell.
#[derive(Clone, Debug)]
pub struct PredictionAccumulator {
    shape: (usize, usize),
    cells: Vec<(usize, usize)>,
    sums: Vec<f64>,
    n_draws: usize,
}

impl PredictionAccumulator {
    pub fn new(shape: (usize, usize), cells: Vec<(usize, usize)>) -> Result<Self> {
        for &c in &cells {
            check_cell(c, shape)?;
        }
        let sums = vec![0.0; cells.len()];
        Ok(Self {
            shape,
            cells,
            sums,
            n_draws: 0,
        })
    }

    /// Target every unobserved cell of `y`, optionally checking a supplied
    /// set against the training cells.
    pub fn for_target(
        y: &BinaryObservationMatrix,
        target: Option<&[(usize, usize)]>,
        allow_observed: bool,
    ) -> Result<Self> {
        let cells = match target {
            None => y.unobserved().collect(),
            Some(cells) => {
                for &(i, j) in cells {
                    check_cell((i, j), y.shape())?;
                    if !allow_observed && y.is_observed(i, j) {
                        return Err(Error::Protocol(format!(
                            "target cell ({i}, {j}) is part of the training set"
                        )));
                    }
                }
                cells.to_vec()
            }
        };
        Self::new(y.shape(), cells)
    }

    pub fn add(&mut self, m: &DenseMatrix) {
        assert_eq!(m.shape(), self.shape, "draw shape mismatch");
        for (s, &(i, j)) in self.sums.iter_mut().zip(&self.cells) {
            *s += probit(m.get(i, j));
        }
        self.n_draws += 1;
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn finish(self) -> Result<PredictionTable> {
        if self.n_draws == 0 && !self.cells.is_empty() {
            return Err(Error::Argument("no draws were accumulated".into()));
        }
        let n = self.n_draws as f64;
        Ok(PredictionTable {
            probs: self.sums.into_iter().map(|s| s / n).collect(),
            cells: self.cells,
        })
    }
}

/// Marginal predictions for `target`, or for every unobserved cell of `y`
/// when `target` is `None`. Cells inside the training set are refused
/// unless `allow_observed` is set.
pub fn predict_all_unobserved(
    samples: &PosteriorSampleSet,
    y: &BinaryObservationMatrix,
    target: Option<&[(usize, usize)]>,
    allow_observed: bool,
) -> Result<PredictionTable> {
    if samples.shape() != y.shape() {
        return Err(Error::Dimension {
            expected: y.shape(),
            found: samples.shape(),
        });
    }
    let mut acc = PredictionAccumulator::for_target(y, target, allow_observed)?;
    for m in samples.samples() {
        acc.add(m);
    }
    acc.finish()
}

/// `(1/N) sum_t prod_c [f(M_c) if pattern_c = 1 else 1 - f(M_c)]`.
pub fn predict_joint(
    samples: &PosteriorSampleSet,
    cells: &[(usize, usize)],
    pattern: &[u8],
) -> Result<f64> {
    if cells.len() != pattern.len() {
        return Err(Error::Argument(format!(
            "{} cells but a pattern of length {}",
            cells.len(),
            pattern.len()
        )));
    }
    if pattern.iter().any(|&b| b > 1) {
        return Err(Error::Argument("pattern entries must be 0 or 1".into()));
    }
    let mut seen = HashSet::with_capacity(cells.len());
    for &c in cells {
        check_cell(c, samples.shape())?;
        if !seen.insert(c) {
            return Err(Error::Argument(format!("duplicate cell {c:?}")));
        }
    }
    let n = samples.len() as f64;
    let total: f64 = samples
        .samples()
        .iter()
        .map(|m| {
            cells
                .iter()
                .zip(pattern)
                .map(|(&(i, j), &b)| {
                    let f = probit(m.get(i, j));
                    if b == 1 {
                        f
                    } else {
                        1.0 - f
                    }
                })
                .product::<f64>()
        })
        .sum();
    Ok(total / n)
}
