//! The dispatching weighted-regression operator and the three scenario
//! pipelines built from it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glm::fit_wls;
use crate::neural::{build_mlp_with, train, Activation, Hyperparams};
use crate::rng::derive_seed;
use crate::scm::{ScenarioKind, TreatmentAssignment};
use crate::weights::{
    frontdoor_stage_weights, msbd_stages, msbd_weights, surrogate_weights_with, SurrogateWeightMode,
    WeightVector, DEFAULT_CLIP_EPS,
};

/// Regression used inside each weighting operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Backend {
    /// Network for multi-dimensional features, WLS for a single feature.
    #[serde(rename = "nncwo", alias = "nn-cwo")]
    NnCwo,
    /// WLS everywhere.
    #[serde(rename = "cwo")]
    Cwo,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::Cwo, Backend::NnCwo];

    pub fn name(self) -> &'static str {
        match self {
            Backend::NnCwo => "nncwo",
            Backend::Cwo => "cwo",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nncwo" | "nn-cwo" => Ok(Backend::NnCwo),
            "cwo" => Ok(Backend::Cwo),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected nncwo or cwo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub hp: Hyperparams,
    pub backend: Backend,
    pub clip_eps: f64,
    pub seed: u64,
    pub surrogate_mode: SurrogateWeightMode,
    /// Activation of the network's first layer.
    pub input_activation: Activation,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            hp: Hyperparams::default(),
            backend: Backend::NnCwo,
            clip_eps: DEFAULT_CLIP_EPS,
            seed: 0,
            surrogate_mode: SurrogateWeightMode::ZOnly,
            input_activation: Activation::Linear,
        }
    }
}

impl EstimatorConfig {
    pub fn new(backend: Backend, seed: u64) -> Self {
        Self {
            backend,
            seed,
            ..Self::default()
        }
    }
}

/// Estimated `E[Y | do(x)]` over the scenario's full treatment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimate {
    pub scenario: ScenarioKind,
    pub backend: Backend,
    pub values: Vec<(TreatmentAssignment, f64)>,
}

#[derive(Serialize, Deserialize)]
struct EstimateDoc {
    scenario: ScenarioKind,
    backend: Backend,
    mu: BTreeMap<String, f64>,
}


impl EffectEstimate {
    pub fn get(&self, a: &TreatmentAssignment) -> Option<f64> {
        self.values.iter().find(|(b, _)| b == a).map(|(_, v)| *v)
    }

    pub fn mu(&self) -> Vec<f64> {
        self.values.iter().map(|(_, v)| *v).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EstimateDoc {
            scenario: self.scenario,
            backend: self.backend,
            mu: self.values.iter().map(|(a, v)| (a.key(), *v)).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: EstimateDoc = serde_json::from_str(s)?;
        let mut values = Vec::new();
        for a in doc.scenario.grid() {
            let v = doc
                .mu
                .get(&a.key())
                .ok_or_else(|| Error::InvalidArgument(format!("estimate lacks {a}")))?;
            values.push((a, *v));
        }
        if values.len() != doc.mu.len() {
            return Err(Error::InvalidArgument("estimate has assignments outside the grid".into()));
        }
        Ok(Self {
            scenario: doc.scenario,
            backend: doc.backend,
            values,
        })
    }

    fn from_grid(scenario: ScenarioKind, backend: Backend, preds: &Array1<f64>) -> Result<Self> {
        if let Some(bad) = preds.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("estimate value {bad}")));
        }
        Ok(Self {
            scenario,
            backend,
            values: scenario.grid().into_iter().zip(preds.iter().copied()).collect(),
        })
    }
}

/// One weighted regression of `target` on `features`, evaluated at
/// `pred_points`. The network path rescales weights to mean one first; WLS
/// is invariant to that scaling and takes them as given.
pub fn nn_cwo(
    features: ArrayView2<f64>,
    target: ArrayView1<f64>,
    pred_points: ArrayView2<f64>,
    w: &WeightVector,
    hp: &Hyperparams,
    backend: Backend,
    seed: u64,
) -> Result<Array1<f64>> {
    nn_cwo_with(features, target, pred_points, w, hp, backend, seed, Activation::Linear)
}

#[allow(clippy::too_many_arguments)]
pub fn nn_cwo_with(
    features: ArrayView2<f64>,
    target: ArrayView1<f64>,
    pred_points: ArrayView2<f64>,
    w: &WeightVector,
    hp: &Hyperparams,
    backend: Backend,
    seed: u64,
    input_activation: Activation,
) -> Result<Array1<f64>> {
    let d = features.ncols();
    if d == 0 {
        return Err(Error::InvalidArgument("at least one feature is required".into()));
    }
    if pred_points.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: pred_points.ncols(),
        });
    }
    if w.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: w.len(),
        });
    }
    if d == 1 || backend == Backend::Cwo {
        let fit = fit_wls(features, target, w.values())?;
        if fit.ridge_fallback {
            log::debug!("collinear design; WLS used the ridge fallback");
        }
        return fit.model.predict(pred_points);
    }
    let weights = w.normalized();
    let mlp = build_mlp_with(d, hp, derive_seed(seed, &[0]), input_activation)?;
    let (mlp, report) = train(&mlp, features, target, &weights, hp, derive_seed(seed, &[1]))?;
    log::debug!(
        "network trained for {} epochs (best {}, val loss {:.3e})",
        report.epochs_run,
        report.best_epoch,
        report.final_val_loss
    );
    mlp.predict(pred_points)
}

fn grid_points(kind: ScenarioKind) -> Array2<f64> {
    let grid = kind.grid();
    let k = kind.treatment_names().len();
    let mut out = Array2::zeros((grid.len(), k));
    for (i, a) in grid.iter().enumerate() {
        for (j, v) in a.values().into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    out
}

/// Front-door estimate by composing two operators: stage A regresses Y on
/// Z under `p(z)/p(z|x)` weights and predicts at every observed Z; stage B
/// regresses those predictions on X with unit weights and evaluates at
/// x = 0 and x = 1.
pub fn estimate_frontdoor(data: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimate> {
    let kind = ScenarioKind::FrontDoor;
    let dim = kind.infer_dim(data)?;
    let (stage1, stage2) = frontdoor_stage_weights(data, cfg.clip_eps)?;
    let z = data.select(&kind.z_block(1, dim))?;
    let y = data.column("Y")?;
    let y2 = nn_cwo_with(
        z.view(),
        y,
        z.view(),
        &stage2,
        &cfg.hp,
        cfg.backend,
        derive_seed(cfg.seed, &[0]),
        cfg.input_activation,
    )?;
    let x = data.select(&["X"])?;
    let preds = nn_cwo_with(
        x.view(),
        y2.view(),
        grid_points(kind).view(),
        &stage1,
        &cfg.hp,
        cfg.backend,
        derive_seed(cfg.seed, &[1]),
        cfg.input_activation,
    )?;
    EffectEstimate::from_grid(kind, cfg.backend, &preds)
}

/// Surrogate estimate: one operator on features `(X, W)` evaluated at
/// `(0, 1)` and `(1, 0)`.
pub fn estimate_surrogate(data: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimate> {
    let kind = ScenarioKind::Surrogate;
    let w = surrogate_weights_with(data, cfg.clip_eps, cfg.surrogate_mode)?;
    let features = data.select(&["X", "W"])?;
    let pred = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 1.0, 0.0]).expect("static shape");
    let preds = nn_cwo_with(
        features.view(),
        data.column("Y")?,
        pred.view(),
        &w,
        &cfg.hp,
        cfg.backend,
        derive_seed(cfg.seed, &[0]),
        cfg.input_activation,
    )?;
    EffectEstimate::from_grid(kind, cfg.backend, &preds)
}

/// Sequential estimate: one operator on `(X1, X2)` with target `Y2`,
/// evaluated at all four treatment pairs.
pub fn estimate_msbd(data: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimate> {
    let kind = ScenarioKind::Msbd;
    let dim = kind.infer_dim(data)?;
    let w = msbd_weights(data, &msbd_stages(dim), cfg.clip_eps)?;
    let features = data.select(&["X1", "X2"])?;
    let preds = nn_cwo_with(
        features.view(),
        data.column("Y2")?,
        grid_points(kind).view(),
        &w,
        &cfg.hp,
        cfg.backend,
        derive_seed(cfg.seed, &[0]),
        cfg.input_activation,
    )?;
    EffectEstimate::from_grid(kind, cfg.backend, &preds)
}

pub fn estimate(kind: ScenarioKind, data: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimate> {
    match kind {
        ScenarioKind::FrontDoor => estimate_frontdoor(data, cfg),
        ScenarioKind::Surrogate => estimate_surrogate(data, cfg),
        ScenarioKind::Msbd => estimate_msbd(data, cfg),
    }
}
