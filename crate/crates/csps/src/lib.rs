//! Bayesian multinomial-probit regression with class-specific predictor
//! selection (CSPS).
//!
//! A unit's class label in {0, …, c} is driven by latent Gaussian propensities
//! Z = (Z₁, …, Z_c) with Z|X ~ N(βX, I_c): the largest positive propensity
//! wins, and class 0 is the reference when all propensities are negative.
//! Individual entries of the c×(p+1) coefficient matrix β may be exactly
//! zero, governed by a binary indicator matrix M with a hierarchical
//! column-mixture prior: a column is active with overall proportion q, and a
//! coupling parameter ρ interpolates between fully independent entries (ρ = 0,
//! CSPS) and all-or-nothing columns (ρ = 1, ordinary predictor selection).
//!
//! Inference marginalizes β analytically and runs MCMC on (Z, M, q):
//! truncated-normal latent sweeps, per-row indicator toggles accepted through
//! marginal-likelihood ratios, and a random-walk (or, at ρ = 1, conjugate
//! Beta) update for q. Model-averaged and median-probability-model summaries,
//! posterior-predictive classification, synthetic benchmark generators,
//! cross-validation splitters, and mixing diagnostics round out the pipeline.
//!
//! Cross-chain, cross-fold, and cross-predictor parallelism is provided by
//! rayon behind the default `parallel` feature; disabling it yields a fully
//! sequential build with identical outputs.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod gaussian;
pub mod math;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
