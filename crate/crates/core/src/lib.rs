//! Empirical Bayes matrix completion for binary matrices under a probit
//! link: Gibbs sampling of the latent matrix, Monte Carlo EM for the row
//! prior, posterior predictive probabilities and evaluation metrics.

pub mod datasets;
pub mod efron_morris;
pub mod error;
pub mod gibbs;
pub mod matrix;
pub mod mcem;
pub mod metrics;
pub mod model;
pub mod normal;
pub mod observations;
pub mod predict;
pub mod rng;
pub mod synth;
pub mod truncated;

pub use error::{Error, Result};
pub use gibbs::{
    compute_row_conditional, run_chain, run_chain_streaming, sweep, update_m, update_z, ChainInit,
    ChainOutput, GibbsState, PosteriorSampleSet, RowConditionalParams,
};
pub use matrix::DenseMatrix;
pub use mcem::{
    fit, fit_streaming, m_step_eb1, m_step_eb2, FitResult, Hyperparams, InitMode, McemConfig, TraceEntry,
    Variant,
};
pub use model::{link_eval, observed_log_likelihood, LinkFunction};
pub use observations::{BinaryObservationMatrix, Entry};
pub use predict::{
    predict_all_unobserved, predict_joint, predict_marginal, PredictionAccumulator,
    PredictionTable,
};
pub use rng::{RngMode, RNG_MODE_ENV};
