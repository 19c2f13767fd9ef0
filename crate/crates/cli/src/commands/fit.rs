//! Fits the prior by Monte Carlo EM, optionally on a random training
//! subset, and writes hyperparameters, the EM trace and predictions.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ebmc_core::datasets::{
    holdout_split, load_jester, load_movielens, read_observations_csv, write_observations_csv,
};
use ebmc_core::mcem::HyperparamsRecord;
use ebmc_core::{
    fit, fit_streaming, predict_all_unobserved, BinaryObservationMatrix, FitResult, Hyperparams,
    McemConfig, PredictionAccumulator, PredictionTable, Variant,
};
use serde::{Deserialize, Serialize};

use super::rng_mode;
use crate::config::{self, RawArgs};
use crate::tables::{write_outcomes, write_predictions};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// `i,j,y` CSV with a header.
    #[default]
    Observations,
    /// MovieLens 100K `u.data`.
    Movielens,
    /// Jester ratings exported to CSV.
    Jester,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Accumulate predictions while sampling; draws are not kept.
    #[default]
    Stream,
    /// Keep every draw, write them to `samples.csv` and predict from them.
    Samples,
    /// Hyperparameters only.
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub out: PathBuf,
    pub input: PathBuf,
    pub format: InputFormat,
    /// `[p, q]` for the observations format; inferred from the largest
    /// indices when absent.
    pub shape: Option<[usize; 2]>,
    /// Share of observed cells held out for testing; 0 fits on everything.
    pub test_fraction: f64,
    pub split_seed: u64,
    pub predictions: PredictionMode,
    pub mcem: McemConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("fit-out"),
            input: PathBuf::new(),
            format: InputFormat::Observations,
            shape: None,
            test_fraction: 0.0,
            split_seed: 0,
            predictions: PredictionMode::Stream,
            mcem: McemConfig::default(),
        }
    }
}

/// What `predict` needs to resume from a fit directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub variant: Variant,
    pub p: usize,
    pub q: usize,
    pub hyperparams: HyperparamsRecord,
    /// Hyperparameters of the chain that produced the predictions.
    pub sampled_at: HyperparamsRecord,
}

impl FitRecord {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("hyperparams.json");
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Ok(Hyperparams::from_record(&self.hyperparams)?)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening input {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn load(cfg: &FitConfig) -> Result<BinaryObservationMatrix> {
    if cfg.input.as_os_str().is_empty() {
        bail!("no input file given (set `input`)");
    }
    let reader = open(&cfg.input)?;
    let ctx = || format!("reading {}", cfg.input.display());
    match cfg.format {
        InputFormat::Observations => {
            Ok(read_observations_csv(reader, cfg.shape.map(|[p, q]| (p, q))).with_context(ctx)?)
        }
        InputFormat::Jester => Ok(load_jester(reader).with_context(ctx)?),
        InputFormat::Movielens => {
            let data = load_movielens(reader).with_context(ctx)?;
            let ids = |path: PathBuf, name: &str, ids: &[u64]| -> Result<()> {
                let mut w = BufWriter::new(File::create(path)?);
                writeln!(w, "index,{name}")?;
                for (k, id) in ids.iter().enumerate() {
                    writeln!(w, "{k},{id}")?;
                }
                Ok(w.flush()?)
            };
            ids(cfg.out.join("row_ids.csv"), "movie_id", &data.movie_ids)?;
            ids(cfg.out.join("col_ids.csv"), "user_id", &data.user_ids)?;
            Ok(data.y)
        }
    }
}

fn write_trace(path: &Path, result: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "loglik_mean", "loglik_stderr", "mu_max_abs", "sigma_trace"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in &result.trace {
        let hp = &e.hyperparams;
        w.write_record([
            e.iteration.to_string(),
            opt(e.loglik_mean),
            opt(e.loglik_stderr),
            hp.mu.amax().to_string(),
            hp.sigma.trace().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_samples(path: &Path, result: &FitResult) -> Result<()> {
    let Some(samples) = &result.final_samples else {
        return Ok(());
    };
    let mut w = BufWriter::new(File::create(path)?);
    let q = samples.shape().1;
    let cols: Vec<String> = (0..q).map(|j| format!("m{j}")).collect();
    writeln!(w, "draw,row,{}", cols.join(","))?;
    for (t, m) in samples.samples().iter().enumerate() {
        for i in 0..m.rows() {
            let vals: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
            writeln!(w, "{t},{i},{}", vals.join(","))?;
        }
    }
    Ok(w.flush()?)
}

pub fn run(args: &RawArgs) -> Result<bool> {
    let mut cfg: FitConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    cfg.mcem.rng_mode = rng_mode()?;
    cfg.mcem.validate()?;
    if !(0.0..1.0).contains(&cfg.test_fraction) {
        bail!("test_fraction = {} must lie in [0, 1)", cfg.test_fraction);
    }
    config::echo(&cfg.out, "fit", &cfg, cfg.mcem.rng_mode)?;

    let t0 = Instant::now();
    let y = load(&cfg)?;
    let (train, target) = if cfg.test_fraction > 0.0 {
        let (train, split) = holdout_split(&y, cfg.test_fraction, cfg.split_seed)?;
        write_outcomes(&cfg.out.join("test.csv"), &split.test_omega, &split.test_outcomes)?;
        (train, Some(split.test_omega))
    } else {
        (y, None)
    };
    write_observations_csv(File::create(cfg.out.join("train.csv"))?, &train)?;
    let load_secs = t0.elapsed().as_secs_f64();
    eprintln!(
        "fitting {} on a {}x{} matrix with {} training cells",
        cfg.mcem.variant.as_str(),
        train.p(),
        train.q(),
        train.n_observed()
    );

    let t1 = Instant::now();
    let (result, table): (FitResult, Option<PredictionTable>) = match cfg.predictions {
        PredictionMode::Stream => {
            let mut acc = PredictionAccumulator::for_target(&train, target.as_deref(), false)?;
            let result = fit_streaming(&train, &cfg.mcem, |m| acc.add(m))?;
            (result, Some(acc.finish()?))
        }
        PredictionMode::Samples => {
            let result = fit(&train, &cfg.mcem)?;
            let samples = result.final_samples.as_ref().expect("fit keeps its draws");
            let table = predict_all_unobserved(samples, &train, target.as_deref(), false)?;
            (result, Some(table))
        }
        PredictionMode::Off => (fit_streaming(&train, &cfg.mcem, |_| {})?, None),
    };
    let fit_secs = t1.elapsed().as_secs_f64();

    let record = FitRecord {
        variant: cfg.mcem.variant,
        p: train.p(),
        q: train.q(),
        hyperparams: result.hp_hat.to_record(),
        sampled_at: result.sampled_at.to_record(),
    };
    fs::write(cfg.out.join("hyperparams.json"), serde_json::to_string_pretty(&record)?)?;
    write_trace(&cfg.out.join("trace.csv"), &result)?;
    if cfg.predictions == PredictionMode::Samples {
        write_samples(&cfg.out.join("samples.csv"), &result)?;
    }
    if let Some(table) = &table {
        write_predictions(&cfg.out.join("predictions.csv"), &table.cells, &table.probs)?;
    }
    fs::write(
        cfg.out.join("timings.csv"),
        format!("stage,seconds\nload,{load_secs}\nfit,{fit_secs}\n"),
    )?;
    eprintln!("fit finished in {fit_secs:.1}s; outputs in {}", cfg.out.display());
    Ok(true)
}
