//! Benchmark structural causal models: construction, observational and
//! interventional sampling, and ground-truth oracles.
//!
//! Binary variables follow `V ~ Bernoulli(σ(c₀ + cᵀ pa(V)))`. The outcome is
//! `Y = σ(c₀ + cᵀ pa(Y) + ε)` with `ε ~ N(0, noise_sd²)`. In the surrogate
//! model `W = 1 − X` exactly.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset, ValueKind};
use crate::error::{Error, Result};
use crate::math::{expected_sigmoid, sigmoid};
use crate::rng::{seeded, CounterStream};

pub const DEFAULT_NOISE_SD: f64 = 0.1;

/// Largest number of binary variables `exact_truth` will enumerate.
pub const ENUMERATION_LIMIT: usize = 24;

/// Rows per work unit when streaming Monte-Carlo truth.
const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "frontdoor")]
    FrontDoor,
    #[serde(rename = "surrogate")]
    Surrogate,
    #[serde(rename = "msbd")]
    Msbd,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [Self::FrontDoor, Self::Surrogate, Self::Msbd];

    pub fn name(self) -> &'static str {
        match self {
            Self::FrontDoor => "frontdoor",
            Self::Surrogate => "surrogate",
            Self::Msbd => "msbd",
        }
    }

    pub fn treatment_names(self) -> &'static [&'static str] {
        match self {
            Self::FrontDoor | Self::Surrogate => &["X"],
            Self::Msbd => &["X1", "X2"],
        }
    }

    pub fn outcome_name(self) -> &'static str {
        match self {
            Self::FrontDoor | Self::Surrogate => "Y",
            Self::Msbd => "Y2",
        }
    }

    /// All treatment assignments, in the order estimates are reported.
    pub fn grid(self) -> Vec<TreatmentAssignment> {
        match self {
            Self::FrontDoor | Self::Surrogate => (0..2)
                .map(|x| TreatmentAssignment::new(vec![("X".into(), x)]))
                .collect(),
            Self::Msbd => [(0, 0), (0, 1), (1, 0), (1, 1)]
                .into_iter()
                .map(|(a, b)| TreatmentAssignment::new(vec![("X1".into(), a), ("X2".into(), b)]))
                .collect(),
        }
    }

    /// Names of the covariate block(s) for a given dimension.
    pub fn z_block(self, block: usize, dim: usize) -> Vec<String> {
        match self {
            Self::FrontDoor | Self::Surrogate => (1..=dim).map(|j| format!("Z{j}")).collect(),
            Self::Msbd => (1..=dim).map(|j| format!("Z{block}_{j}")).collect(),
        }
    }

    /// Observed column names, in dataset order.
    pub fn observed_columns(self, dim: usize) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        match self {
            Self::FrontDoor => {
                cols.push("X".into());
                cols.extend(self.z_block(1, dim));
                cols.push("Y".into());
            }
            Self::Surrogate => {
                cols.push("X".into());
                cols.push("W".into());
                cols.extend(self.z_block(1, dim));
                cols.push("Y".into());
            }
            Self::Msbd => {
                cols.extend(self.z_block(1, dim));
                cols.push("X1".into());
                cols.push("Y1".into());
                cols.extend(self.z_block(2, dim));
                cols.push("X2".into());
                cols.push("Y2".into());
            }
        }
        cols
    }

    /// Recovers the covariate dimension from a dataset's columns and checks
    /// that every required column is present.
    pub fn infer_dim(self, data: &Dataset) -> Result<usize> {
        let first = match self {
            Self::FrontDoor | Self::Surrogate => "Z1",
            Self::Msbd => "Z1_1",
        };
        if !data.has_column(first) {
            return Err(Error::MissingColumn(first.into()));
        }
        let mut dim = 1;
        while data.has_column(&self.z_block(1, dim + 1)[dim]) {
            dim += 1;
        }
        for c in self.observed_columns(dim) {
            data.column_index(&c)?;
        }
        Ok(dim)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frontdoor" | "front-door" => Ok(Self::FrontDoor),
            "surrogate" => Ok(Self::Surrogate),
            "msbd" => Ok(Self::Msbd),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario `{other}` (expected frontdoor, surrogate or msbd)"
            ))),
        }
    }
}

/// A `do(...)` assignment of binary values to the scenario's treatments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreatmentAssignment {
    entries: Vec<(String, u8)>,
}

impl TreatmentAssignment {
    pub fn new(entries: Vec<(String, u8)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, u8)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<u8> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Treatment values concatenated in order, e.g. `"01"`.
    pub fn key(&self) -> String {
        self.entries.iter().map(|(_, v)| char::from(b'0' + v)).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v as f64).collect()
    }
}

impl fmt::Display for TreatmentAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(n, v)| format!("{n}={v}")).collect();
        write!(f, "do({})", parts.join(", "))
    }
}

/// Declarative description of one benchmark model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub dim: usize,
    pub coeff_seed: u64,
    pub noise_sd: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, dim: usize, coeff_seed: u64) -> Self {
        Self {
            kind,
            dim,
            coeff_seed,
            noise_sd: DEFAULT_NOISE_SD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument("noise_sd must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// Bernoulli draw with logit `c₀ + cᵀ pa`.
    Logistic,
    /// Deterministic `c₀ + cᵀ pa`; used for `W = 1 − X`.
    Affine,
    /// `σ(c₀ + cᵀ pa + ε)`, the continuous outcome.
    SquashedGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: ValueKind,
    pub latent: bool,
    pub mechanism: Mechanism,
    /// Indices into [`Scm::variables`].
    pub parents: Vec<usize>,
    /// Intercept followed by one coefficient per parent.
    pub coefficients: Vec<f64>,
}

impl Variable {
    #[inline]
    fn linear_predictor(&self, row_value: impl Fn(usize) -> f64) -> f64 {
        self.parents
            .iter()
            .zip(&self.coefficients[1..])
            .fold(self.coefficients[0], |acc, (&p, &c)| acc + c * row_value(p))
    }
}

/// An instantiated structural causal model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    kind: ScenarioKind,
    dim: usize,
    noise_sd: f64,
    variables: Vec<Variable>,
    topo: Vec<usize>,
    treatments: Vec<usize>,
    outcome: usize,
}

struct VarDef {
    name: String,
    kind: ValueKind,
    latent: bool,
    mechanism: Mechanism,
    parents: Vec<String>,
}

fn binary(name: impl Into<String>, parents: Vec<String>) -> VarDef {
    VarDef {
        name: name.into(),
        kind: ValueKind::Binary,
        latent: false,
        mechanism: Mechanism::Logistic,
        parents,
    }
}

fn scenario_defs(kind: ScenarioKind, dim: usize) -> Vec<VarDef> {
    let z1 = kind.z_block(1, dim);
    match kind {
        ScenarioKind::FrontDoor => {
            let mut defs = vec![
                VarDef {
                    latent: true,
                    ..binary("U", vec![])
                },
                binary("X", vec!["U".into()]),
            ];
            defs.extend(z1.iter().map(|z| binary(z.clone(), vec!["X".into()])));
            let mut y_parents = z1.clone();
            y_parents.push("U".into());
            defs.push(VarDef {
                kind: ValueKind::Unit,
                mechanism: Mechanism::SquashedGaussian,
                ..binary("Y", y_parents)
            });
            defs
        }
        ScenarioKind::Surrogate => {
            let mut defs = vec![
                binary("X", z1.clone()),
                VarDef {
                    mechanism: Mechanism::Affine,
                    ..binary("W", vec!["X".into()])
                },
            ];
            defs.extend(z1.iter().map(|z| binary(z.clone(), vec![])));
            let mut y_parents = z1.clone();
            y_parents.push("W".into());
            defs.push(VarDef {
                kind: ValueKind::Unit,
                mechanism: Mechanism::SquashedGaussian,
                ..binary("Y", y_parents)
            });
            defs
        }
        ScenarioKind::Msbd => {
            let z2 = kind.z_block(2, dim);
            let mut defs: Vec<VarDef> = z1.iter().map(|z| binary(z.clone(), vec![])).collect();
            defs.push(binary("X1", z1.clone()));
            let mut y1_parents = z1.clone();
            y1_parents.push("X1".into());
            defs.push(binary("Y1", y1_parents));
            let mut z2_parents = z1.clone();
            z2_parents.extend(["X1".to_string(), "Y1".to_string()]);
            defs.extend(z2.iter().map(|z| binary(z.clone(), z2_parents.clone())));
            let mut x2_parents = vec!["X1".to_string(), "Y1".to_string()];
            x2_parents.extend(z2.iter().cloned());
            defs.push(binary("X2", x2_parents));
            let mut y2_parents = z1.clone();
            y2_parents.extend(z2.iter().cloned());
            y2_parents.extend(["X1".to_string(), "Y1".to_string(), "X2".to_string()]);
            defs.push(VarDef {
                kind: ValueKind::Unit,
                mechanism: Mechanism::SquashedGaussian,
                ..binary("Y2", y2_parents)
            });
            defs
        }
    }
}

fn topological_order(vars: &[Variable]) -> Result<Vec<usize>> {
    let n = vars.len();
    let mut indegree: Vec<usize> = vars.iter().map(|v| v.parents.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (i, v) in vars.iter().enumerate() {
        for &p in &v.parents {
            children[p].push(i);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in children[i].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
        ready.sort_unstable_by(|a, b| b.cmp(a));
    }
    if order.len() != n {
        return Err(Error::InvalidArgument("parent relation has a cycle".into()));
    }
    Ok(order)
}

/// Instantiates the structural equations for `spec`.
///
/// Coefficients are drawn i.i.d. `Uniform(-1, 1)` from `coeff_seed`, except
/// that a latent parent enters with a coefficient from `Uniform(0.5, 1.5)`.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<Scm> {
    spec.validate()?;
    let defs = scenario_defs(spec.kind, spec.dim);
    let index = |name: &str| defs.iter().position(|d| d.name == name).expect("known name");
    let latent: Vec<bool> = defs.iter().map(|d| d.latent).collect();
    let mut rng = seeded(spec.coeff_seed);
    let mut variables = Vec::with_capacity(defs.len());
    for d in &defs {
        let parents: Vec<usize> = d.parents.iter().map(|p| index(p)).collect();
        let coefficients = if d.mechanism == Mechanism::Affine {
            // W = 1 - X
            vec![1.0, -1.0]
        } else {
            let mut c = vec![rng.random_range(-1.0..1.0)];
            for &p in &parents {
                c.push(if latent[p] {
                    rng.random_range(0.5..1.5)
                } else {
                    rng.random_range(-1.0..1.0)
                });
            }
            c
        };
        variables.push(Variable {
            name: d.name.clone(),
            kind: d.kind,
            latent: d.latent,
            mechanism: d.mechanism,
            parents,
            coefficients,
        });
    }
    let topo = topological_order(&variables)?;
    let treatments = spec.kind.treatment_names().iter().map(|t| index(t)).collect();
    let outcome = index(spec.kind.outcome_name());
    Ok(Scm {
        kind: spec.kind,
        dim: spec.dim,
        noise_sd: spec.noise_sd,
        variables,
        topo,
        treatments,
        outcome,
    })
}

impl Scm {
    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no variable named `{name}`")))
    }

    pub fn parent_names(&self, name: &str) -> Result<Vec<&str>> {
        let v = &self.variables[self.index_of(name)?];
        Ok(v.parents.iter().map(|&p| self.variables[p].name.as_str()).collect())
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == ValueKind::Binary)
            .count()
    }

    /// Replaces one structural coefficient. `parent = None` addresses the
    /// intercept.
    pub fn with_coefficient(mut self, child: &str, parent: Option<&str>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("coefficient of `{child}`")));
        }
        let ci = self.index_of(child)?;
        let slot = match parent {
            None => 0,
            Some(p) => {
                let pi = self.index_of(p)?;
                1 + self.variables[ci]
                    .parents
                    .iter()
                    .position(|&q| q == pi)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("`{p}` is not a parent of `{child}`"))
                    })?
            }
        };
        self.variables[ci].coefficients[slot] = value;
        Ok(self)
    }

    /// Zeroes the edge `parent → child`.
    pub fn sever(self, parent: &str, child: &str) -> Result<Self> {
        self.with_coefficient(child, Some(parent), 0.0)
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::InvalidArgument("noise_sd must be finite and >= 0".into()));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    fn intervention(&self, a: &TreatmentAssignment) -> Result<Vec<Option<f64>>> {
        let names = self.kind.treatment_names();
        if a.entries().len() != names.len()
            || a.entries().iter().zip(names).any(|((n, _), t)| n != t)
        {
            return Err(Error::AssignmentMismatch(format!(
                "{a} for scenario {} expects treatments {names:?}",
                self.kind
            )));
        }
        let mut fixed = vec![None; self.variables.len()];
        for ((_, v), &idx) in a.entries().iter().zip(&self.treatments) {
            if *v > 1 {
                return Err(Error::AssignmentMismatch(format!("{a}: values must be 0 or 1")));
            }
            fixed[idx] = Some(*v as f64);
        }
        Ok(fixed)
    }

    /// Simulates rows `start..start+len`, column-major, for every variable.
    fn simulate_block(&self, start: usize, len: usize, seed: u64, fixed: &[Option<f64>]) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); self.variables.len()];
        for &vi in &self.topo {
            let var = &self.variables[vi];
            let col = if let Some(value) = fixed[vi] {
                vec![value; len]
            } else {
                let mut stream = CounterStream::new(seed, vi as u64, start as u64);
                (0..len)
                    .map(|r| {
                        let m = var.linear_predictor(|p| cols[p][r]);
                        let draw = stream.next_row();
                        match var.mechanism {
                            Mechanism::Logistic => {
                                if draw.u1 < sigmoid(m) {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            Mechanism::Affine => m,
                            Mechanism::SquashedGaussian => sigmoid(m + self.noise_sd * draw.normal()),
                        }
                    })
                    .collect()
            };
            cols[vi] = col;
        }
        cols
    }

    fn assemble(&self, cols: Vec<Vec<f64>>, n: usize, keep_latent: bool) -> Dataset {
        let order: Vec<usize> = if keep_latent {
            (0..self.variables.len()).collect()
        } else {
            (0..self.variables.len()).filter(|&i| !self.variables[i].latent).collect()
        };
        let mut values = Array2::zeros((n, order.len()));
        for (j, &vi) in order.iter().enumerate() {
            for (r, v) in cols[vi].iter().enumerate() {
                values[[r, j]] = *v;
            }
        }
        let columns = order
            .iter()
            .map(|&vi| Column::new(self.variables[vi].name.clone(), self.variables[vi].kind))
            .collect();
        Dataset::new(columns, values).expect("simulated values respect column kinds")
    }

    /// Draws `n` observational rows by ancestral sampling. Latent
    /// confounders are simulated but not returned.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_inner(n, seed, None, false)
    }

    /// As [`Scm::sample`], but keeps latent columns (for diagnostics).
    pub fn sample_with_latents(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_inner(n, seed, None, true)
    }

    /// Ancestral sampling on the mutilated model where each treatment is
    /// held at its assigned value. Uses the same random streams as
    /// [`Scm::sample`], so non-descendants are reproduced row for row.
    pub fn sample_do(&self, a: &TreatmentAssignment, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_inner(n, seed, Some(a), false)
    }

    pub fn sample_do_with_latents(&self, a: &TreatmentAssignment, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_inner(n, seed, Some(a), true)
    }

    fn sample_inner(
        &self,
        n: usize,
        seed: u64,
        a: Option<&TreatmentAssignment>,
        keep_latent: bool,
    ) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let fixed = match a {
            Some(a) => self.intervention(a)?,
            None => vec![None; self.variables.len()],
        };
        let cols = self.simulate_block(0, n, seed, &fixed);
        Ok(self.assemble(cols, n, keep_latent))
    }

    /// Monte-Carlo `E[Y | do(a)]`: the outcome mean over `n` interventional
    /// draws. Streams in chunks; the result does not depend on thread count.
    pub fn mc_truth(&self, a: &TreatmentAssignment, n: usize, seed: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let fixed = self.intervention(a)?;
        let chunks: Vec<usize> = (0..n.div_ceil(MC_CHUNK)).collect();
        let sums: Vec<f64> = chunks
            .par_iter()
            .map(|&c| {
                let start = c * MC_CHUNK;
                let len = MC_CHUNK.min(n - start);
                let cols = self.simulate_block(start, len, seed, &fixed);
                cols[self.outcome].iter().sum::<f64>()
            })
            .collect();
        Ok(sums.iter().sum::<f64>() / n as f64)
    }

    /// Exact `E[Y | do(a)]` by enumerating every configuration of the binary
    /// variables in the mutilated model. Outcome noise is integrated with a
    /// 21-point Gauss-Hermite rule (exact when `noise_sd == 0`).
    pub fn exact_truth(&self, a: &TreatmentAssignment) -> Result<f64> {
        let binary = self.binary_count();
        if binary > ENUMERATION_LIMIT {
            return Err(Error::EnumerationBound {
                binary,
                limit: ENUMERATION_LIMIT,
            });
        }
        let fixed = self.intervention(a)?;
        let order: Vec<usize> = self.topo.iter().copied().filter(|&i| i != self.outcome).collect();
        let mut values = vec![0.0; self.variables.len()];
        Ok(self.enumerate(&order, &fixed, &mut values))
    }

    fn enumerate(&self, order: &[usize], fixed: &[Option<f64>], values: &mut [f64]) -> f64 {
        let Some((&vi, rest)) = order.split_first() else {
            let y = &self.variables[self.outcome];
            let m = y.linear_predictor(|p| values[p]);
            return expected_sigmoid(m, self.noise_sd);
        };
        let var = &self.variables[vi];
        if let Some(v) = fixed[vi] {
            values[vi] = v;
            return self.enumerate(rest, fixed, values);
        }
        let m = var.linear_predictor(|p| values[p]);
        match var.mechanism {
            Mechanism::Affine => {
                values[vi] = m;
                self.enumerate(rest, fixed, values)
            }
            Mechanism::Logistic => {
                let p1 = sigmoid(m);
                let mut total = 0.0;
                if p1 > 0.0 {
                    values[vi] = 1.0;
                    total += p1 * self.enumerate(rest, fixed, values);
                }
                if p1 < 1.0 {
                    values[vi] = 0.0;
                    total += (1.0 - p1) * self.enumerate(rest, fixed, values);
                }
                total
            }
            Mechanism::SquashedGaussian => {
                unreachable!("only the outcome is continuous")
            }
        }
    }

    /// Exact truth over the whole assignment grid.
    pub fn exact_truth_grid(&self) -> Result<Vec<(TreatmentAssignment, f64)>> {
        self.kind
            .grid()
            .into_iter()
            .map(|a| self.exact_truth(&a).map(|t| (a, t)))
            .collect()
    }

    pub fn mc_truth_grid(&self, n: usize, seed: u64) -> Result<Vec<(TreatmentAssignment, f64)>> {
        self.kind
            .grid()
            .into_iter()
            .map(|a| self.mc_truth(&a, n, seed).map(|t| (a, t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd(dim: usize, seed: u64) -> Scm {
        build_scenario(&ScenarioSpec::new(ScenarioKind::FrontDoor, dim, seed)).unwrap()
    }

    fn do_x(x: u8) -> TreatmentAssignment {
        TreatmentAssignment::new(vec![("X".into(), x)])
    }

    #[test]
    fn frontdoor_shape() {
        let scm = fd(1, 7);
        assert_eq!(scm.variable("Y").unwrap().coefficients.len(), 3);
        assert_eq!(scm.parent_names("Y").unwrap(), vec!["Z1", "U"]);
        assert!(scm.variable("U").unwrap().latent);
        let d = scm.sample(10, 1).unwrap();
        let names: Vec<_> = d.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["X", "Z1", "Y"]);
    }

    #[test]
    fn surrogate_shape() {
        let scm = build_scenario(&ScenarioSpec::new(ScenarioKind::Surrogate, 3, 1)).unwrap();
        assert_eq!(scm.parent_names("W").unwrap(), vec!["X"]);
        let d = scm.sample(500, 3).unwrap();
        assert_eq!(d.n_rows(), 500);
        let w = d.column("W").unwrap();
        let x = d.column("X").unwrap();
        assert!(w.iter().zip(x.iter()).all(|(w, x)| *w == 1.0 - *x));
        let d4 = build_scenario(&ScenarioSpec::new(ScenarioKind::Surrogate, 4, 1))
            .unwrap()
            .sample(500, 0)
            .unwrap();
        assert_eq!(d4.n_cols(), 7);
    }

    #[test]
    fn msbd_shape() {
        let scm = build_scenario(&ScenarioSpec::new(ScenarioKind::Msbd, 2, 0)).unwrap();
        assert_eq!(scm.parent_names("Y2").unwrap().len(), 7);
        for v in scm.variables() {
            assert_eq!(v.coefficients.len(), 1 + v.parents.len());
        }
    }

    #[test]
    fn latent_confounder_coefficients_in_range() {
        for seed in 0..20 {
            let scm = fd(3, seed);
            let u = scm.variables().iter().position(|v| v.name == "U").unwrap();
            for name in ["X", "Y"] {
                let v = scm.variable(name).unwrap();
                let k = v.parents.iter().position(|&p| p == u).unwrap();
                let c = v.coefficients[k + 1];
                assert!((0.5..1.5).contains(&c));
            }
        }
    }

    #[test]
    fn deterministic_sampling() {
        let scm = fd(4, 3);
        assert_eq!(scm.sample(500, 9).unwrap(), scm.sample(500, 9).unwrap());
        assert_ne!(scm.sample(500, 9).unwrap(), scm.sample(500, 10).unwrap());
        assert_eq!(fd(4, 3), fd(4, 3));
    }

    #[test]
    fn do_fixes_treatment() {
        let scm = fd(2, 1);
        let d = scm.sample_do(&do_x(1), 200, 4).unwrap();
        assert!(d.column("X").unwrap().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn wrong_assignment_rejected() {
        let scm = fd(2, 1);
        let bad = TreatmentAssignment::new(vec![("X1".into(), 0), ("X2".into(), 1)]);
        assert!(matches!(scm.sample_do(&bad, 10, 0), Err(Error::AssignmentMismatch(_))));
        assert!(matches!(scm.exact_truth(&do_x(2)), Err(Error::AssignmentMismatch(_))));
    }

    #[test]
    fn constant_outcome_truth() {
        let mut scm = fd(2, 5).with_noise_sd(0.0).unwrap();
        for p in ["Z1", "Z2", "U"] {
            scm = scm.with_coefficient("Y", Some(p), 0.0).unwrap();
        }
        scm = scm.with_coefficient("Y", None, 0.3).unwrap();
        for x in 0..2 {
            assert_abs_diff_eq!(scm.exact_truth(&do_x(x)).unwrap(), sigmoid(0.3), epsilon = 1e-15);
        }
        let half = scm.with_coefficient("Y", None, 0.0).unwrap();
        assert_eq!(half.mc_truth(&do_x(1), 1000, 3).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated_frontdoor() {
        // P(U=1) = 0.5, P(Z1=1) = 0.5 regardless of X, Y = σ(Z1 + U).
        let scm = fd(1, 0)
            .with_noise_sd(0.0)
            .unwrap()
            .with_coefficient("U", None, 0.0)
            .unwrap()
            .with_coefficient("Z1", None, 0.0)
            .unwrap()
            .sever("X", "Z1")
            .unwrap()
            .with_coefficient("Y", None, 0.0)
            .unwrap()
            .with_coefficient("Y", Some("Z1"), 1.0)
            .unwrap()
            .with_coefficient("Y", Some("U"), 1.0)
            .unwrap();
        let expected = 0.25 * (sigmoid(0.0) + 2.0 * sigmoid(1.0) + sigmoid(2.0));
        assert_abs_diff_eq!(expected, 0.710_728_558_809_473, epsilon = 1e-12);
        for x in 0..2 {
            assert_abs_diff_eq!(scm.exact_truth(&do_x(x)).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn enumeration_bound() {
        let ok = fd(22, 0);
        assert_eq!(ok.binary_count(), 24);
        let big = fd(23, 0);
        assert!(matches!(
            big.exact_truth(&do_x(0)),
            Err(Error::EnumerationBound { binary: 25, .. })
        ));
    }

    #[test]
    fn severed_mediator_gives_null_effect() {
        let mut scm = fd(3, 11);
        for z in ["Z1", "Z2", "Z3"] {
            scm = scm.sever("X", z).unwrap();
        }
        let t0 = scm.exact_truth(&do_x(0)).unwrap();
        let t1 = scm.exact_truth(&do_x(1)).unwrap();
        assert_abs_diff_eq!(t0, t1, epsilon = 1e-14);
    }

    #[test]
    fn mc_truth_is_chunk_invariant() {
        let scm = fd(2, 2);
        let a = scm.mc_truth(&do_x(1), 3 * MC_CHUNK + 17, 5).unwrap();
        let cols = scm.simulate_block(0, 3 * MC_CHUNK + 17, 5, &scm.intervention(&do_x(1)).unwrap());
        let b = cols[scm.outcome].iter().sum::<f64>() / (3 * MC_CHUNK + 17) as f64;
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn infer_dim_and_missing_columns() {
        let scm = build_scenario(&ScenarioSpec::new(ScenarioKind::Msbd, 3, 0)).unwrap();
        let d = scm.sample(20, 0).unwrap();
        assert_eq!(ScenarioKind::Msbd.infer_dim(&d).unwrap(), 3);
        assert!(matches!(
            ScenarioKind::FrontDoor.infer_dim(&d),
            Err(Error::MissingColumn(c)) if c == "Z1"
        ));
    }
}
