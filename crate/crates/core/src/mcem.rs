//! Monte Carlo EM for the row-wise Gaussian prior.
//!
//! EB1 uses `m_i ~ N(0, Sigma)` and updates only `Sigma`; EB2 uses
//! `m_i ~ N(mu, Sigma)` and updates both. Each iteration runs a Gibbs chain
//! at the current hyperparameters (the E-step, warm-started after the first
//! iteration) and replaces them with the pooled moments of the retained
//! draws (the M-step). The number of iterations is fixed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{compute_row_conditional, run_chain_streaming, GibbsState, PosteriorSampleSet};
use crate::matrix::{accumulate_gram, symmetrize, DenseMatrix};
use crate::model::observed_log_likelihood;
use crate::normal::quantile;
use crate::observations::BinaryObservationMatrix;
use crate::rng::RngMode;

/// Prior mean and covariance of each row of `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl Hyperparams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let hp = Self { mu, sigma };
        hp.validate()?;
        Ok(hp)
    }

    /// `mu = 0`, `Sigma = I_q`.
    pub fn standard(q: usize) -> Self {
        Self {
            mu: DVector::zeros(q),
            sigma: DMatrix::identity(q, q),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Shapes agree, entries are finite and `Sigma` is symmetric to 1e-12
    /// relative asymmetry.
    pub fn validate(&self) -> Result<()> {
        let q = self.mu.len();
        if self.sigma.shape() != (q, q) {
            return Err(Error::Dimension {
                expected: (q, q),
                found: self.sigma.shape(),
            });
        }
        if let Some(bad) = self
            .mu
            .iter()
            .chain(self.sigma.iter())
            .find(|v| !v.is_finite())
        {
            return Err(Error::Domain(*bad));
        }
        let scale = self.sigma.abs().max().max(f64::MIN_POSITIVE);
        let asym = (&self.sigma - self.sigma.transpose()).abs().max();
        if asym > 1e-12 * scale {
            return Err(Error::Covariance(format!(
                "relative asymmetry {:.3e} exceeds 1e-12",
                asym / scale
            )));
        }
        Ok(())
    }

    pub fn to_record(&self) -> HyperparamsRecord {
        HyperparamsRecord {
            mu: self.mu.iter().copied().collect(),
            sigma: self
                .sigma
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }

    pub fn from_record(record: &HyperparamsRecord) -> Result<Self> {
        let q = record.mu.len();
        if record.sigma.len() != q || record.sigma.iter().any(|r| r.len() != q) {
            return Err(Error::Argument(format!("sigma must be {q}x{q}")));
        }
        Self::new(
            DVector::from_vec(record.mu.clone()),
            DMatrix::from_row_slice(q, q, &record.sigma.concat()),
        )
    }
}

/// Plain serializable form of [`Hyperparams`] (`sigma` row by row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparamsRecord {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Zero-mean prior, estimate `Sigma`.
    #[default]
    Eb1,
    /// General-mean prior, estimate `mu` and `Sigma`.
    Eb2,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Eb1 => "eb1",
            Variant::Eb2 => "eb2",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eb1" => Ok(Variant::Eb1),
            "eb2" => Ok(Variant::Eb2),
            other => Err(Error::Argument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McemConfig {
    /// Retained draws per E-step.
    pub n_samples: usize,
    /// EM iterations.
    pub n_iters: usize,
    /// Burn-in of the first (cold) chain.
    pub burn_in_first: usize,
    /// Burn-in of every warm-started chain.
    pub burn_in_warm: usize,
    pub seed: u64,
    pub variant: Variant,
    #[serde(skip)]
    pub rng_mode: RngMode,
    /// Predict from the last E-step's draws instead of running one more
    /// chain at the final hyperparameters.
    pub reuse_last_estep: bool,
    /// Record the Monte Carlo log-likelihood in the trace.
    pub track_loglik: bool,
    /// Starting point of the EB2 mean.
    pub init: InitMode,
}

impl Default for McemConfig {
    fn default() -> Self {
        Self {
            n_samples: 100,
            n_iters: 20,
            burn_in_first: 50,
            burn_in_warm: 10,
            seed: 0,
            variant: Variant::Eb1,
            rng_mode: RngMode::Sequential,
            reuse_last_estep: false,
            track_loglik: true,
            init: InitMode::ColumnMoments,
        }
    }
}

impl McemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Argument("n_samples must be at least 1".into()));
        }
        if self.n_iters == 0 {
            return Err(Error::Argument("n_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Initial hyperparameters. Both start from `Sigma = I`; they differ in the
/// EB2 mean. EB1 always keeps `mu = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `mu = 0`.
    Zero,
    /// `mu_j` matched to the observed frequency of ones in column `j`:
    /// under `N(mu_j, 1)` rows and unit augmentation noise,
    /// `P(y = 1) = Phi(mu_j / sqrt 2)`.
    #[default]
    ColumnMoments,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Zero => "zero",
            InitMode::ColumnMoments => "column_moments",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(InitMode::Zero),
            "column_moments" | "moments" => Ok(InitMode::ColumnMoments),
            other => Err(Error::Argument(format!("unknown init mode `{other}`"))),
        }
    }
}

/// `sqrt(2) Phi^{-1}(f_j)` with `f_j = (ones_j + 1/2) / (n_j + 1)`, so empty
/// or constant columns stay finite.
pub fn column_moment_mean(y: &BinaryObservationMatrix) -> DVector<f64> {
    let q = y.q();
    let mut ones = vec![0.0; q];
    let mut counts = vec![0.0; q];
    for e in y.entries() {
        ones[e.j] += f64::from(e.y);
        counts[e.j] += 1.0;
    }
    DVector::from_iterator(
        q,
        (0..q).map(|j| std::f64::consts::SQRT_2 * quantile((ones[j] + 0.5) / (counts[j] + 1.0))),
    )
}

/// One row of the MCEM trace: the hyperparameters at iteration `t` and the
/// average observed log-likelihood over the draws of the chain run at them.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub iteration: usize,
    pub hyperparams: Hyperparams,
    pub loglik_mean: Option<f64>,
    pub loglik_stderr: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub hp_hat: Hyperparams,
    /// `n_iters + 1` entries; entry 0 is the initialization.
    pub trace: Vec<TraceEntry>,
    /// Draws used for prediction. `None` when they were streamed to a
    /// visitor instead of stored.
    pub final_samples: Option<PosteriorSampleSet>,
    /// Hyperparameters the prediction draws were generated at.
    pub sampled_at: Hyperparams,
    pub final_state: GibbsState,
}

/// Running sums for the M-step.
///
/// Rows are accumulated relative to a fixed `center` so the EB2 covariance
/// does not suffer cancellation when the rows sit far from the origin.
#[derive(Clone, Debug)]
pub struct MomentAccumulator {
    center: DVector<f64>,
    centered: bool,
    row_sum: DVector<f64>,
    gram: DMatrix<f64>,
    n_rows: usize,
    scratch: Option<DenseMatrix>,
}

impl MomentAccumulator {
    pub fn new(center: DVector<f64>) -> Self {
        let q = center.len();
        let centered = center.iter().any(|&c| c != 0.0);
        Self {
            center,
            centered,
            row_sum: DVector::zeros(q),
            gram: DMatrix::zeros(q, q),
            n_rows: 0,
            scratch: None,
        }
    }

    pub fn add(&mut self, m: &DenseMatrix) {
        assert_eq!(m.cols(), self.center.len());
        let rows = if self.centered {
            let scratch = self
                .scratch
                .get_or_insert_with(|| DenseMatrix::zeros(m.rows(), m.cols()));
            if scratch.shape() != m.shape() {
                *scratch = DenseMatrix::zeros(m.rows(), m.cols());
            }
            for i in 0..m.rows() {
                for ((d, &v), c) in scratch.row_mut(i).iter_mut().zip(m.row(i)).zip(self.center.iter()) {
                    *d = v - c;
                }
            }
            &*scratch
        } else {
            m
        };
        accumulate_gram(rows, &mut self.gram);
        for i in 0..rows.rows() {
            for (s, &v) in self.row_sum.iter_mut().zip(rows.row(i)) {
                *s += v;
            }
        }
        self.n_rows += m.rows();
    }

    /// Number of rows summed over all draws, `N * p`.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// `(1 / Np) sum_t sum_i m_i m_i^T`, symmetrized. Only meaningful when
    /// the accumulator was built with a zero center.
    pub fn second_moment(&self) -> DMatrix<f64> {
        assert!(!self.centered, "uncentered second moment needs a zero center");
        let mut s = &self.gram / self.n_rows as f64;
        symmetrize(&mut s);
        s
    }

    /// Pooled mean and the covariance around it.
    pub fn mean_and_covariance(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_rows as f64;
        let offset = &self.row_sum / n;
        let mut s = &self.gram / n - &offset * offset.transpose();
        symmetrize(&mut s);
        (&self.center + offset, s)
    }
}

/// EB1 M-step: the pooled uncentered second moment of the rows.
pub fn m_step_eb1(samples: &PosteriorSampleSet) -> DMatrix<f64> {
    let q = samples.shape().1;
    let mut acc = MomentAccumulator::new(DVector::zeros(q));
    for m in samples.samples() {
        acc.add(m);
    }
    acc.second_moment()
}

/// EB2 M-step: pooled row mean, then the pooled second moment around it.
pub fn m_step_eb2(samples: &PosteriorSampleSet) -> (DVector<f64>, DMatrix<f64>) {
    let first = &samples.samples()[0];
    let center = if first.rows() > 0 {
        DVector::from_column_slice(first.row(0))
    } else {
        DVector::zeros(first.cols())
    };
    let mut acc = MomentAccumulator::new(center);
    for m in samples.samples() {
        acc.add(m);
    }
    acc.mean_and_covariance()
}

#[derive(Default)]
struct LoglikStats {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl LoglikStats {
    fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn summary(&self) -> (Option<f64>, Option<f64>) {
        if self.n == 0 {
            return (None, None);
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let se = if self.n > 1 {
            let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            Some((var / n).sqrt())
        } else {
            None
        };
        (Some(mean), se)
    }
}

/// Fit and keep the prediction draws in memory.
pub fn fit(y: &BinaryObservationMatrix, cfg: &McemConfig) -> Result<FitResult> {
    let mut draws = Vec::with_capacity(cfg.n_samples);
    let mut result = fit_streaming(y, cfg, |m| draws.push(m.clone()))?;
    result.final_samples = Some(PosteriorSampleSet::new(
        draws,
        result.sampled_at.clone(),
        cfg.burn_in_warm,
        1,
    )?);
    Ok(result)
}

/// Fit, passing each prediction draw to `visit` rather than storing it.
pub fn fit_streaming<F: FnMut(&DenseMatrix)>(
    y: &BinaryObservationMatrix,
    cfg: &McemConfig,
    mut visit: F,
) -> Result<FitResult> {
    cfg.validate()?;
    if y.n_observed() == 0 {
        return Err(Error::EmptyObservations);
    }
    let (p, q) = y.shape();
    let mut hp = Hyperparams::standard(q);
    if cfg.variant == Variant::Eb2 && cfg.init == InitMode::ColumnMoments {
        hp.mu = column_moment_mean(y);
    }
    let mut state = GibbsState::fresh(p, q, &hp.mu, cfg.seed, cfg.rng_mode);
    let mut trace = Vec::with_capacity(cfg.n_iters + 1);
    let mut sampled_at = hp.clone();

    for t in 0..cfg.n_iters {
        let params = compute_row_conditional(&hp)?;
        let burn_in = if t == 0 {
            cfg.burn_in_first
        } else {
            cfg.burn_in_warm
        };
        let center = match cfg.variant {
            Variant::Eb1 => DVector::zeros(q),
            Variant::Eb2 => hp.mu.clone(),
        };
        let mut acc = MomentAccumulator::new(center);
        let mut ll = LoglikStats::default();
        let feed_visitor = cfg.reuse_last_estep && t + 1 == cfg.n_iters;
        let mut ll_err = None;
        run_chain_streaming(y, &params, cfg.n_samples, burn_in, &mut state, |m| {
            acc.add(m);
            if cfg.track_loglik {
                match observed_log_likelihood(m, y) {
                    Ok(v) => ll.add(v),
                    Err(e) => ll_err = Some(e),
                }
            }
            if feed_visitor {
                visit(m);
            }
        })?;
        if let Some(e) = ll_err {
            return Err(e);
        }
        let (loglik_mean, loglik_stderr) = ll.summary();
        trace.push(TraceEntry {
            iteration: t,
            hyperparams: hp.clone(),
            loglik_mean,
            loglik_stderr,
        });
        if feed_visitor {
            sampled_at = hp.clone();
        }
        hp = match cfg.variant {
            Variant::Eb1 => Hyperparams {
                mu: DVector::zeros(q),
                sigma: acc.second_moment(),
            },
            Variant::Eb2 => {
                let (mu, sigma) = acc.mean_and_covariance();
                Hyperparams { mu, sigma }
            }
        };
    }

    let (loglik_mean, loglik_stderr) = if cfg.reuse_last_estep {
        (None, None)
    } else {
        let params = compute_row_conditional(&hp)?;
        let mut ll = LoglikStats::default();
        run_chain_streaming(y, &params, cfg.n_samples, cfg.burn_in_warm, &mut state, |m| {
            if cfg.track_loglik {
                if let Ok(v) = observed_log_likelihood(m, y) {
                    ll.add(v);
                }
            }
            visit(m);
        })?;
        sampled_at = hp.clone();
        ll.summary()
    };
    trace.push(TraceEntry {
        iteration: cfg.n_iters,
        hyperparams: hp.clone(),
        loglik_mean,
        loglik_stderr,
    });

    Ok(FitResult {
        hp_hat: hp,
        trace,
        final_samples: None,
        sampled_at,
        final_state: state,
    })
}
