//! Max-min weighted SINR optimization for IRS-assisted massive MIMO uplinks
//! under transceiver distortion and IRS phase noise.
//!
//! The pipeline runs bottom-up: [`scenario`] builds channel statistics,
//! [`deterministic`] solves the large-system SINR fixed point, [`power`]
//! equalizes the weighted SINRs under the power budget, and [`rbm`] ascends
//! the common SINR over the IRS phases. [`instantaneous`] and [`sampler`]
//! provide the Monte Carlo reference; [`harness`] drives experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod deterministic;
pub mod error;
pub mod harness;
pub mod impairments;
pub mod instantaneous;
pub mod linalg;
pub mod power;
pub mod rbm;
pub mod sampler;
pub mod scenario;

pub use config::{AscentRule, PhaseNoiseConfig, SystemConfig};
pub use error::{Error, Result};
pub use harness::{ExperimentReport, ExperimentSpec, GradcheckReport, Mode, ResultRow, SweepAxis};
pub use impairments::{DistortionCovariances, PhaseNoiseModel};
pub use linalg::{c64, CMat};
pub use rbm::{Prefactor, SolveResult};
pub use sampler::{ChannelSample, ChannelSampler};
pub use scenario::ChannelStatistics;
