//! Generalized Bayesian inference for spatial point patterns with the Palm
//! likelihood.
//!
//! The crate covers point-process simulators ([`models`]), the log Palm
//! likelihood ([`palm`]), an adaptive Metropolis–Hastings sampler over
//! tempered Palm posteriors ([`sampler`], [`fit`]), a grid-based full
//! likelihood reference sampler for the LGCP ([`full_lgcp`]) and two
//! posterior calibration procedures ([`calibration`]).

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::manual_is_multiple_of
)]

pub mod calibration;
pub mod error;
pub mod family;
pub mod fit;
pub mod full_lgcp;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod numerics;
pub mod palm;
pub mod rng;
pub mod sampler;

pub use calibration::{
    adjustment1_from_chain, gpc_calibrate, gpc_from_chain, gpc_from_intervals, rescale_draws, run_adjustment1,
    BootInterval, BootstrapDesign,
    GodambeEstimate, GpcResult, GpcSearch,
};
pub use error::{Error, Result};
pub use family::{ModelFamily, Simulator};
pub use fit::{fit_palm, InitStrategy, PalmFitConfig, PalmProblem};
pub use full_lgcp::{run_fl_mcmc, FlConfig, FlResult, GridApprox};
pub use geometry::{cell_counts, distance, GridPartition, PairIndex, Point, PointPattern, Window};
pub use models::{CovariateField, ExponentialKernel, LgcpParams, ThomasParams};
pub use palm::{
    log_palm_likelihood, EdgePolicy, IntegralBackend, IntegralConfig, ModelSpec, ObjectiveOptions,
    PalmEvaluation, PalmObjective,
};
pub use sampler::{
    run_mcmc, Chain, PosteriorSummary, Prior, PriorSpec, PriorTemplate, SamplerConfig,
};
