//! Shared fixtures for the criterion benchmarks.

use nncwo_core::{build_scenario, Dataset, ScenarioKind, ScenarioSpec};

/// Observational sample from a benchmark model with fixed seeds.
pub fn fixture(kind: ScenarioKind, dim: usize, n: usize) -> Dataset {
    build_scenario(&ScenarioSpec::new(kind, dim, 7))
        .and_then(|scm| scm.sample(n, 11))
        .expect("fixture scenario is valid")
}
