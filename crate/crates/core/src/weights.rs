//! Stabilized sample weights for each weighting operator.
//!
//! Every weight is a ratio of a numerator probability (empirical frequency,
//! or a chain of logistic factors for multi-component variables) to a
//! product of clipped logistic propensities.

use std::collections::HashMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, LogisticModel, DEFAULT_LOGISTIC_RIDGE};
use crate::scm::ScenarioKind;

pub const DEFAULT_CLIP_EPS: f64 = 0.01;

/// Clamps a probability into `[eps, 1 − eps]`.
#[inline]
pub fn clip_probability(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

fn check_clip(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("clip_eps must lie in (0, 0.5), got {eps}")));
    }
    Ok(())
}

/// Positive per-sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    clip_eps: f64,
}

impl WeightVector {
    pub fn new(values: Vec<f64>, clip_eps: f64) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!("weight {bad} is not positive and finite")));
        }
        Ok(Self { values, clip_eps })
    }

    /// Unit weights; no clipping was involved.
    pub fn ones(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
            clip_eps: DEFAULT_CLIP_EPS,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clip_eps(&self) -> f64 {
        self.clip_eps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Weights rescaled to mean one.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.mean();
        self.values.iter().map(|v| v / m).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Propensity {
    /// Empirical `P(target = 1)`; used when nothing is conditioned on.
    Marginal { p1: f64 },
    Logistic(LogisticModel),
}

/// Estimated `P(target | conditioning)` for a binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub target: String,
    pub conditioning: Vec<String>,
    pub model: Propensity,
    pub clip_eps: f64,
}

impl PropensityModel {
    pub fn fit(data: &Dataset, target: &str, conditioning: &[String], clip_eps: f64) -> Result<Self> {
        check_clip(clip_eps)?;
        let y = data.column(target)?;
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!("column `{target}` is not binary")));
        }
        let first = y[0];
        if y.iter().all(|&v| v == first) {
            return Err(Error::DegenerateColumn(target.to_string()));
        }
        let model = if conditioning.is_empty() {
            Propensity::Marginal {
                p1: y.sum() / y.len() as f64,
            }
        } else {
            let x = data.select(conditioning)?;
            let fit = fit_logistic(x.view(), y, None, DEFAULT_LOGISTIC_RIDGE)?;
            if !fit.converged {
                log::warn!("propensity model for `{target}` did not converge in {} iterations", fit.iterations);
            }
            Propensity::Logistic(fit.model)
        };
        Ok(Self {
            target: target.to_string(),
            conditioning: conditioning.to_vec(),
            model,
            clip_eps,
        })
    }

    /// `P(target = 1 | conditioning)` per row. Logistic outputs are clipped
    /// into `[clip_eps, 1 − clip_eps]`; empirical marginals are not.
    pub fn prob_one(&self, data: &Dataset) -> Result<Vec<f64>> {
        match &self.model {
            Propensity::Marginal { p1 } => Ok(vec![*p1; data.n_rows()]),
            Propensity::Logistic(m) => {
                let x = data.select(&self.conditioning)?;
                Ok(m.predict_proba(x.view())?
                    .iter()
                    .map(|&p| clip_probability(p, self.clip_eps))
                    .collect())
            }
        }
    }

    /// Probability of each row's observed target value.
    pub fn observed_probability(&self, data: &Dataset) -> Result<Vec<f64>> {
        let y = data.column(&self.target)?;
        Ok(self
            .prob_one(data)?
            .into_iter()
            .zip(y.iter())
            .map(|(p, &v)| if v == 1.0 { p } else { 1.0 - p })
            .collect())
    }
}

/// Fits each `(target, conditioning)` factor and multiplies the observed
/// probabilities row-wise.
fn factor_product(data: &Dataset, factors: &[(String, Vec<String>)], clip_eps: f64) -> Result<Vec<f64>> {
    let probs: Vec<Vec<f64>> = factors
        .par_iter()
        .map(|(t, c)| PropensityModel::fit(data, t, c, clip_eps)?.observed_probability(data))
        .collect::<Result<_>>()?;
    let mut out = vec![1.0; data.n_rows()];
    for p in probs {
        out.iter_mut().zip(p).for_each(|(o, v)| *o *= v);
    }
    Ok(out)
}

/// Empirical joint frequency of each row's configuration of `columns`.
fn joint_frequency(data: &Dataset, columns: &[String]) -> Result<Vec<f64>> {
    for c in columns {
        let col = data.column(c)?;
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::DegenerateColumn(c.clone()));
        }
    }
    let x = data.select(columns)?;
    let keys: Vec<Vec<u64>> = x
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    let mut counts: HashMap<&[u64], usize> = HashMap::new();
    for k in &keys {
        *counts.entry(k.as_slice()).or_default() += 1;
    }
    let n = data.n_rows() as f64;
    Ok(keys.iter().map(|k| counts[k.as_slice()] as f64 / n).collect())
}

fn ratio(num: &[f64], den: &[f64], clip_eps: f64) -> Result<WeightVector> {
    WeightVector::new(num.iter().zip(den).map(|(a, b)| a / b).collect(), clip_eps)
}

fn nonempty(data: &Dataset) -> Result<()> {
    if data.n_rows() == 0 {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    Ok(())
}

/// Back-door weights `P̂(x) / P̂(x | z)`.
pub fn bd_weights(data: &Dataset, treatment: &str, covars: &[String], clip_eps: f64) -> Result<WeightVector> {
    nonempty(data)?;
    check_clip(clip_eps)?;
    if covars.is_empty() {
        return Err(Error::InvalidArgument("back-door weights need at least one covariate".into()));
    }
    let num = joint_frequency(data, &[treatment.to_string()])?;
    let den = factor_product(data, &[(treatment.to_string(), covars.to_vec())], clip_eps)?;
    ratio(&num, &den, clip_eps)
}

/// One stage of a sequential treatment plan.
#[derive(Debug, Clone, PartialEq)]
pub struct MsbdStage {
    pub treatment: String,
    /// Covariates first observed at this stage.
    pub covariates: Vec<String>,
    /// Outcomes observed between the previous stage and this one.
    pub prior_outcomes: Vec<String>,
}

/// The two-stage plan of the benchmark sequential model.
pub fn msbd_stages(dim: usize) -> Vec<MsbdStage> {
    let kind = ScenarioKind::Msbd;
    vec![
        MsbdStage {
            treatment: "X1".into(),
            covariates: kind.z_block(1, dim),
            prior_outcomes: vec![],
        },
        MsbdStage {
            treatment: "X2".into(),
            covariates: kind.z_block(2, dim),
            prior_outcomes: vec!["Y1".into()],
        },
    ]
}

/// Sequential back-door weights
/// `P̂(x₁,…,x_K) / ∏ₖ P̂(xₖ | x⁽ᵏ⁻¹⁾, y⁽ᵏ⁻¹⁾, z⁽ᵏ⁾)`.
pub fn msbd_weights(data: &Dataset, stages: &[MsbdStage], clip_eps: f64) -> Result<WeightVector> {
    nonempty(data)?;
    check_clip(clip_eps)?;
    if stages.is_empty() {
        return Err(Error::InvalidArgument("at least one stage is required".into()));
    }
    let mut treatments = Vec::new();
    let mut outcomes = Vec::new();
    let mut covariates = Vec::new();
    let mut factors = Vec::new();
    for s in stages {
        outcomes.extend(s.prior_outcomes.iter().cloned());
        covariates.extend(s.covariates.iter().cloned());
        let conditioning: Vec<String> = treatments
            .iter()
            .chain(&outcomes)
            .chain(&covariates)
            .cloned()
            .collect();
        factors.push((s.treatment.clone(), conditioning));
        treatments.push(s.treatment.clone());
    }
    let num = joint_frequency(data, &treatments)?;
    let den = factor_product(data, &factors, clip_eps)?;
    ratio(&num, &den, clip_eps)
}

/// What the surrogate weight's denominator conditions on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateWeightMode {
    /// `P̂(w) / P̂(w | z)`.
    #[default]
    ZOnly,
    /// `P̂(w) / P̂(w | x, z)`.
    ConditionalOnXz,
}

impl FromStr for SurrogateWeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z-only" => Ok(Self::ZOnly),
            "conditional-on-xz" => Ok(Self::ConditionalOnXz),
            other => Err(Error::InvalidArgument(format!(
                "unknown surrogate weight mode `{other}` (expected z-only or conditional-on-xz)"
            ))),
        }
    }
}

pub fn surrogate_weights(data: &Dataset, clip_eps: f64) -> Result<WeightVector> {
    surrogate_weights_with(data, clip_eps, SurrogateWeightMode::ZOnly)
}

/// Surrogate weights `P̂(w) / P̂(w | z)`, or `P̂(w) / P̂(w | x, z)` in
/// [`SurrogateWeightMode::ConditionalOnXz`].
pub fn surrogate_weights_with(data: &Dataset, clip_eps: f64, mode: SurrogateWeightMode) -> Result<WeightVector> {
    nonempty(data)?;
    check_clip(clip_eps)?;
    let kind = ScenarioKind::Surrogate;
    let dim = kind.infer_dim(data)?;
    let mut conditioning = kind.z_block(1, dim);
    if mode == SurrogateWeightMode::ConditionalOnXz {
        conditioning.insert(0, "X".into());
    }
    let num = joint_frequency(data, &["W".to_string()])?;
    let den = factor_product(data, &[("W".to_string(), conditioning)], clip_eps)?;
    ratio(&num, &den, clip_eps)
}

/// Front-door stage weights. Stage 1 (the `X → Z` operator) has nothing to
/// adjust for and is all ones. Stage 2 (the `Z → Y` operator, with `X` as
/// the back-door set) is `P̂(z) / P̂(z | x)`, both factored over the
/// components of `z` by the chain rule.
pub fn frontdoor_stage_weights(data: &Dataset, clip_eps: f64) -> Result<(WeightVector, WeightVector)> {
    nonempty(data)?;
    check_clip(clip_eps)?;
    let kind = ScenarioKind::FrontDoor;
    let dim = kind.infer_dim(data)?;
    let z = kind.z_block(1, dim);
    data.column("X")?;
    let mut num_factors = Vec::with_capacity(dim);
    let mut den_factors = Vec::with_capacity(dim);
    for j in 0..dim {
        let prev: Vec<String> = z[..j].to_vec();
        num_factors.push((z[j].clone(), prev.clone()));
        let mut with_x = vec!["X".to_string()];
        with_x.extend(prev);
        den_factors.push((z[j].clone(), with_x));
    }
    let num = factor_product(data, &num_factors, clip_eps)?;
    let den = factor_product(data, &den_factors, clip_eps)?;
    let stage1 = WeightVector {
        values: vec![1.0; data.n_rows()],
        clip_eps,
    };
    Ok((stage1, ratio(&num, &den, clip_eps)?))
}
