//! Scoring rules, estimators, and evaluation metrics for right-censored
//! survival analysis.
//!
//! The library covers:
//!
//! * discretized distributions on time or quantile grids ([`dist`], [`grid`]);
//! * the pinball, logarithmic, Brier, and ranked probability scores together
//!   with their censored extensions ([`scoring`]);
//! * the closed-form weights under which those extensions are proper
//!   ([`weights`]);
//! * Kaplan-Meier estimation and the evaluation metrics built on it
//!   ([`km`], [`metrics`]);
//! * softmax models with gradient-descent, iterative-reweighting, and
//!   grid-search training ([`model`], [`fit`]);
//! * synthetic ground truths with exact expected scores, used to verify the
//!   properness of every censored rule empirically ([`truth`], [`oracle`]);
//! * CSV/JSON interfaces and the command-line front end ([`io`], [`report`],
//!   [`cli`]).

pub mod cli;
pub mod data;
pub mod dist;
pub mod error;
pub mod fit;
pub mod grid;
pub mod io;
pub mod km;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod scoring;
pub mod truth;
pub mod weights;

pub use data::{CensoredObservation, DatasetRow, Features, SurvivalDataset};
pub use dist::{BinMassCdf, QuantileCurve};
pub use error::{Error, Result};
pub use grid::{QuantileGrid, TimeGrid};
pub use scoring::{PortnoyConfig, ScoringRule, WeightVector};
