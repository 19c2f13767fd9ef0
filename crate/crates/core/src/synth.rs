//! Synthetic low-rank benchmark data.
//!
//! `M = M0 + s U V` with `U` (`p x r`) and `V` (`r x q`) i.i.d. Unif[-1, 1],
//! `M0` either zero or a per-column offset `a_j ~ Unif[lo, hi]`. A uniform
//! subset of cells of fixed size is observed and each observed `Y_ij` is
//! Bernoulli(`Phi(M_ij)`). Everything is determined by the seed.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{read_observations_csv, write_observations_csv};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::probit;
use crate::observations::{BinaryObservationMatrix, Entry};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetMode {
    #[default]
    Zero,
    UniformColumns { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: f64,
    pub omega_fraction: f64,
    pub offset: OffsetMode,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::benchmark(0)
    }
}

impl SynthConfig {
    /// `p = 1000, q = 100, r = 5, s = 1`, half the cells observed.
    pub fn benchmark(seed: u64) -> Self {
        Self {
            p: 1000,
            q: 100,
            r: 5,
            s: 1.0,
            omega_fraction: 0.5,
            offset: OffsetMode::Zero,
            seed,
        }
    }

    pub fn n_observed(&self) -> usize {
        (self.omega_fraction * (self.p * self.q) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::Argument("p and q must be positive".into()));
        }
        if self.r == 0 || self.r > self.p.min(self.q) {
            return Err(Error::Argument(format!(
                "rank {} must lie in [1, min(p, q) = {}]",
                self.r,
                self.p.min(self.q)
            )));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::Argument(format!("scale s = {} must be >= 0", self.s)));
        }
        if !(self.omega_fraction > 0.0 && self.omega_fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "omega_fraction = {} must lie in (0, 1]",
                self.omega_fraction
            )));
        }
        if self.n_observed() == 0 {
            return Err(Error::Argument("omega_fraction rounds to zero cells".into()));
        }
        if let OffsetMode::UniformColumns { lo, hi } = self.offset {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Argument(format!("bad offset range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthInstance {
    pub config: SynthConfig,
    pub m_true: DenseMatrix,
    /// `Phi(M_ij)` for every cell.
    pub true_probs: DenseMatrix,
    pub y: BinaryObservationMatrix,
}

impl SynthInstance {
    /// `true_probs` over every unobserved cell, in the row-major order of
    /// `BinaryObservationMatrix::unobserved`.
    pub fn unobserved_truth(&self) -> (Vec<(usize, usize)>, Vec<f64>) {
        let cells: Vec<_> = self.y.unobserved().collect();
        let probs = cells.iter().map(|&(i, j)| self.true_probs.get(i, j)).collect();
        (cells, probs)
    }

    /// Writes `meta.json`, `m_true.csv` (one matrix row per line) and
    /// `observations.csv` (`i,j,y`, zero-based).
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = serde_json::json!({
            "config": self.config,
            "seed": self.config.seed,
            "p": self.config.p,
            "q": self.config.q,
            "n_observed": self.y.n_observed(),
        });
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        let mut w = BufWriter::new(File::create(dir.join("m_true.csv"))?);
        for i in 0..self.m_true.rows() {
            let line: Vec<String> = self.m_true.row(i).iter().map(f64::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        write_observations_csv(File::create(dir.join("observations.csv"))?, &self.y)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta: serde_json::Value = serde_json::from_reader(File::open(dir.join("meta.json"))?)?;
        let config: SynthConfig = serde_json::from_value(meta["config"].clone())?;
        let mut rows = Vec::with_capacity(config.p);
        for (n, line) in BufReader::new(File::open(dir.join("m_true.csv"))?).lines().enumerate() {
            let line = line?;
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            rows.push(row);
        }
        let m_true = DenseMatrix::from_rows(&rows)?;
        if m_true.shape() != (config.p, config.q) {
            return Err(Error::Dimension {
                expected: (config.p, config.q),
                found: m_true.shape(),
            });
        }
        let y = read_observations_csv(
            BufReader::new(File::open(dir.join("observations.csv"))?),
            Some((config.p, config.q)),
        )?;
        let true_probs = DenseMatrix::from_fn(config.p, config.q, |i, j| probit(m_true.get(i, j)));
        Ok(Self {
            config,
            m_true,
            true_probs,
            y,
        })
    }
}

/// Uniform sample of `size` distinct cells, by a partial Fisher–Yates
/// shuffle of the row-major cell indices. Returned sorted.
pub fn sample_omega<R: Rng + ?Sized>(
    p: usize,
    q: usize,
    size: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = p * q;
    if size == 0 || size > n {
        return Err(Error::Argument(format!(
            "sample size {size} outside [1, {n}]"
        )));
    }
    let mut cells: Vec<usize> = (0..n).collect();
    for k in 0..size {
        let pick = rng.random_range(k..n);
        cells.swap(k, pick);
    }
    let mut chosen: Vec<usize> = cells[..size].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|c| (c / q, c % q)).collect())
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthInstance> {
    cfg.validate()?;
    let (p, q, r) = (cfg.p, cfg.q, cfg.r);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let u: Vec<f64> = (0..p * r).map(|_| unit.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..r * q).map(|_| unit.sample(&mut rng)).collect();
    let offsets: Vec<f64> = match cfg.offset {
        OffsetMode::Zero => vec![0.0; q],
        OffsetMode::UniformColumns { lo, hi } => {
            let dist = Uniform::new_inclusive(lo, hi).expect("validated range");
            (0..q).map(|_| dist.sample(&mut rng)).collect()
        }
    };
    let m_true = DenseMatrix::from_fn(p, q, |i, j| {
        let low_rank: f64 = (0..r).map(|k| u[i * r + k] * v[k * q + j]).sum();
        offsets[j] + cfg.s * low_rank
    });
    let true_probs = DenseMatrix::from_fn(p, q, |i, j| probit(m_true.get(i, j)));
    let omega = sample_omega(p, q, cfg.n_observed(), &mut rng)?;
    let entries: Vec<Entry> = omega
        .into_iter()
        .map(|(i, j)| Entry {
            i,
            j,
            y: u8::from(rng.random::<f64>() < true_probs.get(i, j)),
        })
        .collect();
    let y = BinaryObservationMatrix::new(p, q, entries)?;
    Ok(SynthInstance {
        config: cfg.clone(),
        m_true,
        true_probs,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            p: 30,
            q: 12,
            r: 3,
            s: 1.5,
            omega_fraction: 0.4,
            offset: OffsetMode::Zero,
            seed,
        }
    }

    #[test]
    fn entries_bounded_by_scale_times_rank() {
        let inst = generate(&small(1)).unwrap();
        assert!(inst.m_true.as_slice().iter().all(|v| v.abs() <= 1.5 * 3.0));
        assert_eq!(inst.y.n_observed(), 144);
    }

    #[test]
    fn zero_scale_gives_coin_flips() {
        let cfg = SynthConfig { s: 0.0, ..small(2) };
        let inst = generate(&cfg).unwrap();
        assert!(inst.true_probs.as_slice().iter().all(|&f| f == 0.5));
    }

    #[test]
    fn deterministic_by_seed() {
        let a = generate(&small(5)).unwrap();
        let b = generate(&small(5)).unwrap();
        let c = generate(&small(6)).unwrap();
        assert_eq!(a.m_true, b.m_true);
        assert_eq!(a.y, b.y);
        assert_ne!(a.m_true, c.m_true);
    }

    #[test]
    fn omega_edge_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_omega(3, 4, 12, &mut rng).unwrap().len(), 12);
        let one = sample_omega(3, 4, 1, &mut rng).unwrap();
        assert!(one[0].0 < 3 && one[0].1 < 4);
        assert!(sample_omega(3, 4, 0, &mut rng).is_err());
        assert!(sample_omega(3, 4, 13, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig { r: 13, ..small(0) }.validate().is_err());
        assert!(SynthConfig { omega_fraction: 0.0, ..small(0) }.validate().is_err());
        assert!(SynthConfig { omega_fraction: 1e-6, ..small(0) }.validate().is_err());
        assert!(SynthConfig { s: -1.0, ..small(0) }.validate().is_err());
    }

    #[test]
    fn directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            offset: OffsetMode::UniformColumns { lo: -3.0, hi: 3.0 },
            ..small(9)
        };
        let inst = generate(&cfg).unwrap();
        inst.write_dir(dir.path()).unwrap();
        let back = SynthInstance::read_dir(dir.path()).unwrap();
        assert_eq!(back.config, inst.config);
        assert_eq!(back.m_true, inst.m_true);
        assert_eq!(back.y, inst.y);
    }
}
