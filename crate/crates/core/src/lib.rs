//! Causal effect estimation in front-door, surrogate and multi-outcome
//! sequential back-door settings by composing sample-weighting operators.
//!
//! Each estimator reweights samples so that the weighted distribution
//! behaves like the interventional one, then regresses the outcome on the
//! treatment(s) with either weighted least squares ([`Backend::Cwo`]) or a
//! weighted-loss feed-forward network ([`Backend::NnCwo`]).
//!
//! The [`scm`] module provides the three benchmark models with exact and
//! Monte-Carlo ground truth; [`bench`] runs seeded replications and reports
//! median absolute errors.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod glm;
mod linalg;
pub mod math;
pub mod neural;
pub mod rng;
pub mod scm;
pub mod weights;

pub use dataset::{Column, Dataset, ValueKind};
pub use estimators::{
    estimate, estimate_frontdoor, estimate_msbd, estimate_surrogate, nn_cwo, Backend, EffectEstimate, EstimatorConfig,
};
pub use error::{Error, Result};
pub use neural::{Activation, Hyperparams, Mlp, TrainReport};
pub use weights::{SurrogateWeightMode, WeightVector, DEFAULT_CLIP_EPS};
pub use glm::{fit_logistic, fit_wls, LinearModel, LogisticModel};
pub use scm::{build_scenario, ScenarioKind, ScenarioSpec, Scm, TreatmentAssignment};
