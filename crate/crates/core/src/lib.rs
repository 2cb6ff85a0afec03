//! Bayesian optimization with modulated surrogates.
//!
//! Gaussian-process surrogates whose inputs are augmented with a latent
//! coordinate per observation (the latent GP, or LGP), together with the
//! noiseless, homoscedastic and heteroscedastic GP baselines, MCMC
//! hyperparameter marginalization, δ-cover acquisition maximization, the
//! synthetic benchmark suite and the gap/regret/Wilcoxon evaluation protocol.

pub mod acq_optimizer;
pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod rng;
pub mod samplers;
pub mod surrogates;

pub use error::{Error, Result};
