//! Runs a fresh chain at the hyperparameters of a finished fit and writes
//! marginal predictions, plus joint pattern probabilities on request.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ebmc_core::datasets::{read_cells_csv, read_observations_csv};
use ebmc_core::{
    compute_row_conditional, predict_all_unobserved, predict_joint, run_chain, run_chain_streaming,
    ChainInit, GibbsState, PredictionAccumulator,
};
use serde::{Deserialize, Serialize};

use super::fit::FitRecord;
use super::rng_mode;
use crate::config::{self, RawArgs};
use crate::tables::write_predictions;

/// Joint queries enumerate `2^k` patterns.
pub const MAX_JOINT_CELLS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub out: PathBuf,
    /// Output directory of a `fit` run.
    pub fit_dir: PathBuf,
    /// `i,j` CSV of target cells; every unobserved cell when absent.
    pub cells: Option<PathBuf>,
    /// Accept target cells that are part of the training data.
    pub allow_observed: bool,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Cells whose joint outcome distribution is reported in `joint.csv`.
    pub joint: Vec<[usize; 2]>,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("predict-out"),
            fit_dir: PathBuf::from("fit-out"),
            cells: None,
            allow_observed: false,
            n_samples: 100,
            burn_in: 50,
            seed: 0,
            joint: Vec::new(),
        }
    }
}

pub fn run(args: &RawArgs) -> Result<bool> {
    let cfg: PredictConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    if cfg.joint.len() > MAX_JOINT_CELLS {
        bail!("at most {MAX_JOINT_CELLS} joint cells are supported");
    }
    let mode = rng_mode()?;
    let record = FitRecord::read(&cfg.fit_dir)?;
    let hp = record.hyperparams()?;
    let train_path = cfg.fit_dir.join("train.csv");
    let train = read_observations_csv(
        BufReader::new(File::open(&train_path).with_context(|| format!("opening {}", train_path.display()))?),
        Some((record.p, record.q)),
    )?;
    let cells = match &cfg.cells {
        Some(path) => Some(read_cells_csv(BufReader::new(
            File::open(path).with_context(|| format!("opening {}", path.display()))?,
        ))?),
        None => None,
    };
    config::echo(&cfg.out, "predict", &cfg, mode)?;

    let table = if cfg.joint.is_empty() {
        let mut acc = PredictionAccumulator::for_target(&train, cells.as_deref(), cfg.allow_observed)?;
        let params = compute_row_conditional(&hp)?;
        let mut state = GibbsState::fresh(record.p, record.q, &hp.mu, cfg.seed, mode);
        run_chain_streaming(&train, &params, cfg.n_samples, cfg.burn_in, &mut state, |m| acc.add(m))?;
        acc.finish()?
    } else {
        let chain = run_chain(
            &train,
            &hp,
            cfg.n_samples,
            cfg.burn_in,
            ChainInit::Fresh { seed: cfg.seed, mode },
        )?;
        let joint: Vec<(usize, usize)> = cfg.joint.iter().map(|&[i, j]| (i, j)).collect();
        let mut w = csv::Writer::from_path(cfg.out.join("joint.csv"))?;
        w.write_record(["pattern", "prob"])?;
        for code in 0..1usize << joint.len() {
            let pattern: Vec<u8> = (0..joint.len()).map(|k| (code >> k & 1) as u8).collect();
            let prob = predict_joint(&chain.samples, &joint, &pattern)?;
            let label: String = pattern.iter().map(|b| char::from(b'0' + b)).collect();
            w.write_record([label, prob.to_string()])?;
        }
        w.flush()?;
        predict_all_unobserved(&chain.samples, &train, cells.as_deref(), cfg.allow_observed)?
    };
    write_predictions(&cfg.out.join("predictions.csv"), &table.cells, &table.probs)?;
    eprintln!("wrote {} predictions to {}", table.len(), cfg.out.display());
    Ok(true)
}
