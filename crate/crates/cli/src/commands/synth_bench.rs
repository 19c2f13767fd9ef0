//! Replicated synthetic benchmark over a parameter grid.
//!
//! Replication `k` uses data seed `mix_seed(seed, k)` and chain seed
//! `mix_seed(mcem.seed, k)` at every grid point and variant, so variants
//! are compared on identical instances.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Result};
use ebmc_core::metrics::{hellinger_avg, kl_divergence_avg};
use ebmc_core::rng::mix_seed;
use ebmc_core::synth::{generate, OffsetMode, SynthConfig};
use ebmc_core::{fit_streaming, McemConfig, PredictionAccumulator, Variant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng_mode;
use crate::config::{self, RawArgs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub r: Vec<usize>,
    pub s: Vec<f64>,
    pub omega_fraction: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            p: vec![1000],
            q: vec![100],
            r: vec![5],
            s: vec![1.0],
            omega_fraction: vec![0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthBenchConfig {
    pub out: PathBuf,
    pub replications: usize,
    /// Base seed of the synthetic instances.
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub variants: Vec<Variant>,
    pub offset: OffsetMode,
    pub grid: Grid,
    pub mcem: McemConfig,
}

impl Default for SynthBenchConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("synth-bench-out"),
            replications: 10,
            seed: 1,
            threads: 0,
            variants: vec![Variant::Eb1],
            offset: OffsetMode::Zero,
            grid: Grid::default(),
            mcem: McemConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub variant: Variant,
    pub synth: SynthConfig,
}

impl SynthBenchConfig {
    /// Cartesian product of the grid, variants varying fastest.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let g = &self.grid;
        let mut points = Vec::new();
        for &p in &g.p {
            for &q in &g.q {
                for &r in &g.r {
                    for &s in &g.s {
                        for &omega_fraction in &g.omega_fraction {
                            for &variant in &self.variants {
                                points.push(GridPoint {
                                    index: points.len(),
                                    variant,
                                    synth: SynthConfig { p, q, r, s, omega_fraction, offset: self.offset, seed: 0 },
                                });
                            }
                        }
                    }
                }
            }
        }
        points
    }
}

#[derive(Clone, Debug)]
struct Replication {
    data_seed: u64,
    outcome: std::result::Result<(f64, f64), String>,
    seconds: f64,
}

fn run_one(point: &GridPoint, rep: usize, cfg: &SynthBenchConfig) -> Replication {
    let data_seed = mix_seed(cfg.seed, rep as u64);
    let start = Instant::now();
    let outcome = (|| -> ebmc_core::Result<(f64, f64)> {
        let inst = generate(&SynthConfig { seed: data_seed, ..point.synth.clone() })?;
        let mcem = McemConfig {
            variant: point.variant,
            seed: mix_seed(cfg.mcem.seed, rep as u64),
            ..cfg.mcem.clone()
        };
        let mut acc = PredictionAccumulator::for_target(&inst.y, None, false)?;
        fit_streaming(&inst.y, &mcem, |m| acc.add(m))?;
        let pred = acc.finish()?;
        let (_, truth) = inst.unobserved_truth();
        Ok((
            kl_divergence_avg(&truth, &pred.probs)?,
            hellinger_avg(&truth, &pred.probs)?,
        ))
    })()
    .map_err(|e| e.to_string());
    Replication {
        data_seed,
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(dir: &Path, cfg: &SynthBenchConfig, points: &[GridPoint], reps: &[Replication]) -> Result<usize> {
    let n = cfg.replications;
    let mut results = csv::Writer::from_path(dir.join("results.csv"))?;
    results.write_record([
        "grid_point", "variant", "p", "q", "r", "s", "omega_fraction", "status", "metric", "mean", "stderr", "n",
    ])?;
    let mut per_rep = csv::Writer::from_path(dir.join("replications.csv"))?;
    per_rep.write_record([
        "grid_point", "variant", "replication", "data_seed", "status", "kl", "hellinger", "error",
    ])?;
    let mut timings = csv::Writer::from_path(dir.join("timings.csv"))?;
    timings.write_record(["grid_point", "variant", "replication", "fit_seconds"])?;

    let mut failed_points = 0;
    for point in points {
        let chunk = &reps[point.index * n..(point.index + 1) * n];
        let s = &point.synth;
        let head = [
            point.index.to_string(),
            point.variant.as_str().to_string(),
            s.p.to_string(),
            s.q.to_string(),
            s.r.to_string(),
            s.s.to_string(),
            s.omega_fraction.to_string(),
        ];
        for (k, rep) in chunk.iter().enumerate() {
            let (status, kl, h, err) = match &rep.outcome {
                Ok((kl, h)) => ("ok", kl.to_string(), h.to_string(), String::new()),
                Err(e) => ("failed", String::new(), String::new(), e.clone()),
            };
            per_rep.write_record([
                head[0].as_str(), head[1].as_str(), &k.to_string(), &rep.data_seed.to_string(), status, &kl, &h, &err,
            ])?;
            timings.write_record([head[0].as_str(), head[1].as_str(), &k.to_string(), &rep.seconds.to_string()])?;
        }
        let ok: Vec<(f64, f64)> = chunk.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
        let failed = ok.len() < n;
        failed_points += usize::from(failed);
        for (metric, pick) in [("kl", 0usize), ("hellinger", 1)] {
            let mut row: Vec<String> = head.to_vec();
            if failed {
                row.extend(["failed".into(), metric.into(), String::new(), String::new(), ok.len().to_string()]);
            } else {
                let xs: Vec<f64> = ok.iter().map(|v| if pick == 0 { v.0 } else { v.1 }).collect();
                let (mean, se) = mean_stderr(&xs);
                row.extend(["ok".into(), metric.into(), mean.to_string(), fmt_opt(se), n.to_string()]);
            }
            results.write_record(&row)?;
        }
    }
    results.flush()?;
    per_rep.flush()?;
    timings.flush()?;
    Ok(failed_points)
}

/// Returns whether every grid point succeeded.
pub fn run(args: &RawArgs) -> Result<bool> {
    let mut cfg: SynthBenchConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    if cfg.replications == 0 {
        bail!("replications must be at least 1");
    }
    if cfg.variants.is_empty() {
        bail!("variants must not be empty");
    }
    cfg.mcem.rng_mode = rng_mode()?;
    cfg.mcem.validate()?;
    let points = cfg.grid_points();
    if points.is_empty() {
        bail!("the grid is empty");
    }
    config::echo(&cfg.out, "synth-bench", &cfg, cfg.mcem.rng_mode)?;

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..cfg.replications).map(move |k| (g, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    let total = tasks.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let reps: Vec<Replication> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, k)| {
                let rep = run_one(&points[g], k, &cfg);
                let d = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                let status = match &rep.outcome {
                    Ok((kl, h)) => format!("kl {kl:.4} hellinger {h:.4}"),
                    Err(e) => format!("failed: {e}"),
                };
                eprintln!(
                    "[{d}/{total}] grid point {g} ({}) replication {k}: {status} in {:.1}s",
                    points[g].variant.as_str(),
                    rep.seconds
                );
                rep
            })
            .collect()
    });
    let failed = write_outputs(&cfg.out, &cfg, &points, &reps)?;
    if failed > 0 {
        eprintln!("{failed} grid point(s) failed; see replications.csv");
    }
    Ok(failed == 0)
}
