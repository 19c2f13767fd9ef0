//! Scores predictions against held-out outcomes and, for synthetic data,
//! against the true probabilities.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use ebmc_core::metrics::{
    accuracy, cross_entropy, ece, hellinger_avg, kl_divergence_avg, reliability_bins,
};
use serde::{Deserialize, Serialize};

use super::rng_mode;
use crate::config::{self, RawArgs};
use crate::tables::{align, read_rows, OutcomeRow, PredictionRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub out: PathBuf,
    /// `i,j,prob` CSV.
    pub predictions: PathBuf,
    /// `i,j,y` CSV of held-out outcomes.
    pub outcomes: Option<PathBuf>,
    /// `i,j,prob` CSV of true probabilities.
    pub truth: Option<PathBuf>,
    pub k_bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("eval-out"),
            predictions: PathBuf::from("predictions.csv"),
            outcomes: None,
            truth: None,
            k_bins: 10,
        }
    }
}

pub fn run(args: &RawArgs) -> Result<bool> {
    let cfg: EvalConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    if cfg.outcomes.is_none() && cfg.truth.is_none() {
        bail!("nothing to score against: set `outcomes`, `truth` or both");
    }
    let preds: Vec<PredictionRow> = read_rows(&cfg.predictions)?;
    let mut metrics: Vec<(&str, f64)> = Vec::new();
    let mut bins = None;
    if let Some(path) = &cfg.outcomes {
        let rows: Vec<OutcomeRow> = read_rows(path)?;
        let cells: Vec<(usize, usize)> = rows.iter().map(|r| (r.i, r.j)).collect();
        let ys: Vec<u8> = rows.iter().map(|r| r.y).collect();
        let probs = align("predictions", &cells, &preds)?;
        let b = reliability_bins(&probs, &ys, cfg.k_bins)?;
        metrics.push(("n_test", ys.len() as f64));
        metrics.push(("accuracy", accuracy(&probs, &ys)?));
        metrics.push(("cross_entropy", cross_entropy(&probs, &ys)?));
        metrics.push(("ece", ece(&b, ys.len())?));
        bins = Some(b);
    }
    if let Some(path) = &cfg.truth {
        let truth: Vec<PredictionRow> = read_rows(path)?;
        let cells: Vec<(usize, usize)> = truth.iter().map(|r| (r.i, r.j)).collect();
        let true_probs: Vec<f64> = truth.iter().map(|r| r.prob).collect();
        let probs = align("predictions", &cells, &preds)?;
        metrics.push(("n_truth", cells.len() as f64));
        metrics.push(("kl", kl_divergence_avg(&true_probs, &probs)?));
        metrics.push(("hellinger", hellinger_avg(&true_probs, &probs)?));
    }

    config::echo(&cfg.out, "eval", &cfg, rng_mode()?)?;
    let mut w = csv::Writer::from_path(cfg.out.join("metrics.csv"))?;
    w.write_record(["metric", "value"])?;
    let mut stdout = std::io::stdout().lock();
    for (name, value) in &metrics {
        w.write_record([name.to_string(), value.to_string()])?;
        writeln!(stdout, "{name:>14}  {value}")?;
    }
    w.flush()?;
    if let Some(b) = bins {
        b.write_csv(std::fs::File::create(cfg.out.join("reliability.csv"))?)?;
    }
    Ok(true)
}
