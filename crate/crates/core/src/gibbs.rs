//! Gibbs sampler over the latent matrix `M` and the augmented Gaussians `Z`
//! at fixed prior hyperparameters.
//!
//! One sweep is `update_z` followed by `update_m`:
//!
//! * `Z_ij | M ~ N(M_ij, 1)` for unobserved cells, truncated to `[0, inf)`
//!   when `y_ij = 1` and to `(-inf, 0)` when `y_ij = 0`.
//! * Rows of `M` are independent given `Z`:
//!   `m_i | Z ~ N(A z_i + shift, A)` with `A = (I + Sigma^{-1})^{-1}` and
//!   `shift = A Sigma^{-1} mu`.
//!
//! `A` and `shift` are formed from a Cholesky factorization of `I + Sigma`
//! (`A = (I + Sigma)^{-1} Sigma`, `shift = (I + Sigma)^{-1} mu`), which
//! never requires inverting `Sigma` itself.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{gemm_dense_nalgebra, symmetrize, DenseMatrix};
use crate::mcem::Hyperparams;
use crate::observations::{BinaryObservationMatrix, UNOBSERVED};
use crate::rng::{ChainRng, Phase, RngMode};
use crate::truncated::{sample_truncated, Side};

/// First jitter multiplier tried (times `trace(Sigma) / q`).
pub const JITTER_START: f64 = 1e-10;
/// Last jitter multiplier tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Parameters of the row-wise full conditional of `M`.
#[derive(Clone, Debug)]
pub struct RowConditionalParams {
    /// Conditional covariance `(I + Sigma^{-1})^{-1}`.
    pub a: DMatrix<f64>,
    /// Lower Cholesky factor of `a`.
    pub chol_a: DMatrix<f64>,
    /// `A Sigma^{-1} mu`; zero when `mu = 0`.
    pub shift: DVector<f64>,
    /// Absolute diagonal jitter that was added to `Sigma` (0 if none).
    pub jitter: f64,
    chol_a_t: DMatrix<f64>,
}

impl RowConditionalParams {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Build `A`, its Cholesky factor and the shift for the current prior.
///
/// If a factorization fails, `trace(Sigma)/q * 10^k` is added to the
/// diagonal for `k = -10, ..., -4` in turn.
pub fn compute_row_conditional(hp: &Hyperparams) -> Result<RowConditionalParams> {
    hp.validate()?;
    let q = hp.dim();
    let trace = hp.sigma.trace();
    let scale = if trace > 0.0 && trace.is_finite() {
        trace / q as f64
    } else {
        1.0
    };
    let mut attempted = Vec::new();
    let mut level = 0.0;
    loop {
        let jitter = level * scale;
        attempted.push(jitter);
        if let Some(params) = try_row_conditional(&hp.sigma, &hp.mu, jitter) {
            return Ok(params);
        }
        level = if level == 0.0 { JITTER_START } else { level * 10.0 };
        if level > JITTER_MAX * 1.000_001 {
            return Err(Error::IllConditionedCovariance { jitters: attempted });
        }
    }
}

fn try_row_conditional(
    sigma: &DMatrix<f64>,
    mu: &DVector<f64>,
    jitter: f64,
) -> Option<RowConditionalParams> {
    let q = sigma.nrows();
    let mut sigma = sigma.clone();
    for k in 0..q {
        sigma[(k, k)] += jitter;
    }
    let i_plus_sigma = &sigma + DMatrix::<f64>::identity(q, q);
    let chol = i_plus_sigma.cholesky()?;
    let mut a = chol.solve(&sigma);
    symmetrize(&mut a);
    let shift = chol.solve(mu);
    let chol_a = a.clone().cholesky()?.unpack();
    if !chol_a.iter().all(|v| v.is_finite()) {
        return None;
    }
    let chol_a_t = chol_a.transpose();
    Some(RowConditionalParams {
        a,
        chol_a,
        shift,
        jitter,
        chol_a_t,
    })
}

/// Current `(M, Z)` plus the chain's random stream.
#[derive(Clone, Debug)]
pub struct GibbsState {
    m: DenseMatrix,
    z: DenseMatrix,
    sweep_count: u64,
    rng: ChainRng,
    noise: DenseMatrix,
}

impl GibbsState {
    /// Start with every row of `M` at the prior mean and `Z = 0`.
    pub fn fresh(p: usize, q: usize, mu: &DVector<f64>, seed: u64, mode: RngMode) -> Self {
        assert_eq!(mu.len(), q, "prior mean length must equal q");
        let m = DenseMatrix::from_fn(p, q, |_, j| mu[j]);
        Self::from_parts(m, DenseMatrix::zeros(p, q), seed, mode)
    }

    pub fn from_parts(m: DenseMatrix, z: DenseMatrix, seed: u64, mode: RngMode) -> Self {
        assert_eq!(m.shape(), z.shape());
        let (p, q) = m.shape();
        assert!(p < (1 << 24), "at most 2^24 rows are supported");
        Self {
            m,
            z,
            sweep_count: 0,
            rng: ChainRng::new(seed, mode),
            noise: DenseMatrix::zeros(p, q),
        }
    }

    pub fn m(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn z_mut(&mut self) -> &mut DenseMatrix {
        &mut self.z
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweep_count
    }

    pub fn rng_mode(&self) -> RngMode {
        self.rng.mode()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.shape()
    }
}

/// Retained draws of `M` from a chain run at fixed hyperparameters.
#[derive(Clone, Debug)]
pub struct PosteriorSampleSet {
    samples: Vec<DenseMatrix>,
    pub hyperparams: Hyperparams,
    pub burn_in: usize,
    pub thinning: usize,
}

impl PosteriorSampleSet {
    pub fn new(
        samples: Vec<DenseMatrix>,
        hyperparams: Hyperparams,
        burn_in: usize,
        thinning: usize,
    ) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Argument("a sample set needs at least one draw".into()))?;
        let shape = first.shape();
        if let Some(bad) = samples.iter().find(|s| s.shape() != shape) {
            return Err(Error::Dimension {
                expected: shape,
                found: bad.shape(),
            });
        }
        Ok(Self {
            samples,
            hyperparams,
            burn_in,
            thinning,
        })
    }

    /// Wrap draws that carry no chain metadata (tests, external samplers).
    pub fn from_draws(samples: Vec<DenseMatrix>) -> Result<Self> {
        let q = samples.first().map_or(0, DenseMatrix::cols);
        Self::new(samples, Hyperparams::standard(q), 0, 1)
    }

    pub fn samples(&self) -> &[DenseMatrix] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.samples[0].shape()
    }
}

fn check_shape(state: &GibbsState, y: &BinaryObservationMatrix) -> Result<()> {
    if state.shape() != y.shape() {
        return Err(Error::Dimension {
            expected: y.shape(),
            found: state.shape(),
        });
    }
    Ok(())
}

#[inline]
fn draw_z<R: Rng + ?Sized>(code: i8, mean: f64, rng: &mut R) -> f64 {
    match code {
        UNOBSERVED => mean + rng.sample::<f64, _>(StandardNormal),
        1 => sample_truncated(mean, Side::Positive, rng),
        _ => sample_truncated(mean, Side::Negative, rng),
    }
}

/// Refresh every entry of `Z` from its full conditional.
pub fn update_z(state: &mut GibbsState, y: &BinaryObservationMatrix) -> Result<()> {
    check_shape(state, y)?;
    let codes = y.codes();
    let q = y.q().max(1);
    let GibbsState {
        m, z, rng, ..
    } = state;
    match rng.mode() {
        RngMode::Sequential => {
            let stream = rng.sequential();
            for ((zv, &mv), &code) in z
                .as_mut_slice()
                .iter_mut()
                .zip(m.as_slice())
                .zip(codes)
            {
                *zv = draw_z(code, mv, stream);
            }
        }
        RngMode::Substream => {
            let epoch = rng.next_epoch(Phase::Z);
            let rng = &*rng;
            z.as_mut_slice()
                .par_chunks_mut(q)
                .zip(m.as_slice().par_chunks(q))
                .zip(codes.par_chunks(q))
                .enumerate()
                .for_each(|(i, ((zr, mr), cr))| {
                    let mut stream = rng.substream(epoch, Phase::Z, i);
                    for ((zv, &mv), &code) in zr.iter_mut().zip(mr).zip(cr) {
                        *zv = draw_z(code, mv, &mut stream);
                    }
                });
        }
    }
    Ok(())
}

/// Redraw every row of `M` as `A z_i + shift + chol(A) eps_i`.
pub fn update_m(state: &mut GibbsState, params: &RowConditionalParams) -> Result<()> {
    let (p, q) = state.shape();
    if params.dim() != q {
        return Err(Error::Dimension {
            expected: (q, q),
            found: (params.dim(), params.dim()),
        });
    }
    let GibbsState {
        m, z, rng, noise, ..
    } = state;
    match rng.mode() {
        RngMode::Sequential => {
            let stream = rng.sequential();
            for v in noise.as_mut_slice() {
                *v = stream.sample(StandardNormal);
            }
        }
        RngMode::Substream => {
            let epoch = rng.next_epoch(Phase::M);
            let rng = &*rng;
            noise
                .as_mut_slice()
                .par_chunks_mut(q.max(1))
                .enumerate()
                .for_each(|(i, row)| {
                    let mut stream = rng.substream(epoch, Phase::M, i);
                    for v in row {
                        *v = stream.sample(StandardNormal);
                    }
                });
        }
    }
    // Rows: m_i = A z_i + L eps_i + shift, i.e. M = Z A + E L^T + 1 shift^T.
    gemm_dense_nalgebra(1.0, z, &params.a, 0.0, m);
    gemm_dense_nalgebra(1.0, noise, &params.chol_a_t, 1.0, m);
    if params.shift.iter().any(|&s| s != 0.0) {
        for i in 0..p {
            for (v, s) in m.row_mut(i).iter_mut().zip(params.shift.iter()) {
                *v += s;
            }
        }
    }
    Ok(())
}

/// One full sweep: `Z` then `M`.
pub fn sweep(
    state: &mut GibbsState,
    y: &BinaryObservationMatrix,
    params: &RowConditionalParams,
) -> Result<()> {
    update_z(state, y)?;
    update_m(state, params)?;
    state.sweep_count += 1;
    Ok(())
}

/// How a chain starts.
#[derive(Clone, Debug)]
pub enum ChainInit {
    Fresh { seed: u64, mode: RngMode },
    Warm(GibbsState),
}

/// Retained samples and the final state for warm-starting.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub samples: PosteriorSampleSet,
    pub state: GibbsState,
}

/// Run `burn_in` discarded sweeps, then `n_samples` retained sweeps
/// (every sweep is kept).
pub fn run_chain(
    y: &BinaryObservationMatrix,
    hp: &Hyperparams,
    n_samples: usize,
    burn_in: usize,
    init: ChainInit,
) -> Result<ChainOutput> {
    if hp.dim() != y.q() {
        return Err(Error::Dimension {
            expected: (y.q(), y.q()),
            found: (hp.dim(), hp.dim()),
        });
    }
    let params = compute_row_conditional(hp)?;
    let mut state = match init {
        ChainInit::Fresh { seed, mode } => GibbsState::fresh(y.p(), y.q(), &hp.mu, seed, mode),
        ChainInit::Warm(state) => state,
    };
    let mut draws = Vec::with_capacity(n_samples);
    run_chain_streaming(y, &params, n_samples, burn_in, &mut state, |m| {
        draws.push(m.clone())
    })?;
    let samples = PosteriorSampleSet::new(draws, hp.clone(), burn_in, 1)?;
    Ok(ChainOutput { samples, state })
}

/// Like [`run_chain`] but hands each retained draw to `visit` instead of
/// storing it.
pub fn run_chain_streaming<F: FnMut(&DenseMatrix)>(
    y: &BinaryObservationMatrix,
    params: &RowConditionalParams,
    n_samples: usize,
    burn_in: usize,
    state: &mut GibbsState,
    mut visit: F,
) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be at least 1".into()));
    }
    check_shape(state, y)?;
    for _ in 0..burn_in {
        sweep(state, y, params)?;
    }
    for _ in 0..n_samples {
        sweep(state, y, params)?;
        visit(&state.m);
    }
    Ok(())
}
