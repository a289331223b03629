//! Seeded replication harness: absolute-error records per replication,
//! median aggregation per cell, CSV tables and SVG line charts.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::format_sig17;
use crate::error::{Error, Result};
use crate::estimators::{estimate, Backend, EffectEstimate, EstimatorConfig};
use crate::math::median;
use crate::neural::{Activation, Hyperparams};
use crate::rng::derive_seed;
use crate::scm::{build_scenario, ScenarioKind, ScenarioSpec, Scm, TreatmentAssignment, ENUMERATION_LIMIT};
use crate::weights::{SurrogateWeightMode, DEFAULT_CLIP_EPS};

/// How ground truth is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthMode {
    Exact,
    Mc,
}

pub const DESK_SIZES: [usize; 7] = [500, 1000, 2000, 4000, 6000, 8000, 10_000];
pub const DESK_REPS: usize = 20;
pub const DESK_TRUTH_SAMPLES: usize = 1_000_000;

const TRUTH_STREAM: u64 = 0x7472_7574;
const ESTIMATOR_STREAM: u64 = 0x6573_7469;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: ScenarioKind,
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub methods: Vec<Backend>,
    pub truth_mode: TruthMode,
    pub truth_samples: usize,
    pub base_seed: u64,
    pub hp: Hyperparams,
    pub clip_eps: f64,
    #[serde(default)]
    pub surrogate_mode: SurrogateWeightMode,
    #[serde(default = "default_activation")]
    pub input_activation: Activation,
    /// Thread count; `None` uses every available core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Record measured wall time. Off by default so output bytes do not
    /// depend on machine load.
    #[serde(default)]
    pub timings: bool,
}

fn default_activation() -> Activation {
    Activation::Linear
}

/// Dimensions benchmarked by default.
pub fn default_dims(kind: ScenarioKind) -> Vec<usize> {
    match kind {
        ScenarioKind::Msbd => vec![1, 8],
        _ => vec![1, 16],
    }
}

impl BenchConfig {
    /// Desk-scale defaults: 20 replications over seven sample sizes.
    pub fn desk(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            dims: default_dims(scenario),
            sizes: DESK_SIZES.to_vec(),
            reps: DESK_REPS,
            methods: vec![Backend::Cwo, Backend::NnCwo],
            truth_mode: TruthMode::Exact,
            truth_samples: DESK_TRUTH_SAMPLES,
            base_seed: 0,
            hp: Hyperparams::default(),
            clip_eps: DEFAULT_CLIP_EPS,
            surrogate_mode: SurrogateWeightMode::ZOnly,
            input_activation: Activation::Linear,
            workers: None,
            timings: false,
        }
    }

    /// 100 replications, sizes 500 to 10000 in steps of 500, Monte-Carlo
    /// truth from 10⁷ draws.
    pub fn paper_scale(scenario: ScenarioKind) -> Self {
        Self {
            sizes: (1..=20).map(|k| 500 * k).collect(),
            reps: 100,
            truth_mode: TruthMode::Mc,
            truth_samples: 10_000_000,
            ..Self::desk(scenario)
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a nonempty list of positive integers".into());
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be nonempty and strictly increasing".into());
        }
        if self.sizes[0] < 10 {
            return bad(format!("sample size {} is too small", self.sizes[0]));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return bad("methods must not repeat".into());
        }
        if self.truth_samples == 0 {
            return bad("truth_samples must be positive".into());
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 0.5) {
            return bad(format!("clip_eps must lie in (0, 0.5), got {}", self.clip_eps));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        self.hp.validate()?;
        for &dim in &self.dims {
            let scm = build_scenario(&ScenarioSpec::new(self.scenario, dim, 0))?;
            if self.truth_mode == TruthMode::Exact && scm.binary_count() > ENUMERATION_LIMIT {
                return Err(Error::EnumerationBound {
                    binary: scm.binary_count(),
                    limit: ENUMERATION_LIMIT,
                });
            }
        }
        Ok(())
    }

    fn scenario_tag(&self) -> u64 {
        ScenarioKind::ALL.iter().position(|k| *k == self.scenario).expect("known scenario") as u64
    }

    pub fn coeff_seed(&self, dim: usize) -> u64 {
        derive_seed(self.base_seed, &[self.scenario_tag(), dim as u64])
    }

    pub fn sample_seed(&self, dim: usize, size: usize, rep: usize) -> u64 {
        derive_seed(self.base_seed, &[self.scenario_tag(), dim as u64, size as u64, rep as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: ScenarioKind,
    pub method: Backend,
    pub dim: usize,
    pub size: usize,
    pub rep: usize,
    pub aae: f64,
    /// Seconds; zero unless timings were requested.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaaeRow {
    pub scenario: ScenarioKind,
    pub method: Backend,
    pub dim: usize,
    pub size: usize,
    pub maae: f64,
    pub reps: usize,
}

/// A replication that produced no estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchFailure {
    pub scenario: ScenarioKind,
    pub method: Backend,
    pub dim: usize,
    pub size: usize,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub maae: Vec<MaaeRow>,
    pub failures: Vec<BenchFailure>,
}

/// Passed to the progress callback after each `(dim, size)` cell.
#[derive(Debug)]
pub struct CellSummary<'a> {
    pub scenario: ScenarioKind,
    pub dim: usize,
    pub size: usize,
    pub rows: &'a [MaaeRow],
    pub failures: usize,
}

/// Mean absolute difference over matching assignment grids.
pub fn aae_values(est: &[(TreatmentAssignment, f64)], truth: &[(TreatmentAssignment, f64)]) -> Result<f64> {
    if est.len() != truth.len() || est.is_empty() {
        return Err(Error::AssignmentMismatch(format!(
            "{} estimated assignments vs {} true",
            est.len(),
            truth.len()
        )));
    }
    let mut total = 0.0;
    for ((a, e), (b, t)) in est.iter().zip(truth) {
        if a != b {
            return Err(Error::AssignmentMismatch(format!("{a} vs {b}")));
        }
        total += (e - t).abs();
    }
    Ok(total / est.len() as f64)
}

pub fn aae(est: &EffectEstimate, truth: &EffectEstimate) -> Result<f64> {
    if est.scenario != truth.scenario {
        return Err(Error::AssignmentMismatch(format!(
            "{} estimate vs {} truth",
            est.scenario, truth.scenario
        )));
    }
    aae_values(&est.values, &truth.values)
}

struct RepOutcome {
    results: Vec<(Backend, std::result::Result<(f64, f64), String>)>,
}

/// Every method runs on the same dataset; the checksum guards that.
fn run_rep(
    cfg: &BenchConfig,
    scm: &Scm,
    truth: &[(TreatmentAssignment, f64)],
    dim: usize,
    size: usize,
    rep: usize,
) -> Result<RepOutcome> {
    let seed = cfg.sample_seed(dim, size, rep);
    let data = scm.sample(size, seed)?;
    let checksum = data.checksum();
    let mut results = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        if data.checksum() != checksum {
            return Err(Error::InvalidArgument("dataset changed between methods".into()));
        }
        let ecfg = EstimatorConfig {
            hp: cfg.hp.clone(),
            backend: method,
            clip_eps: cfg.clip_eps,
            seed: derive_seed(seed, &[ESTIMATOR_STREAM]),
            surrogate_mode: cfg.surrogate_mode,
            input_activation: cfg.input_activation,
        };
        let start = Instant::now();
        let outcome = estimate(cfg.scenario, &data, &ecfg)
            .and_then(|est| aae_values(&est.values, truth))
            .map(|a| (a, if cfg.timings { start.elapsed().as_secs_f64() } else { 0.0 }))
            .map_err(|e| e.to_string());
        results.push((method, outcome));
    }
    Ok(RepOutcome { results })
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput> {
    run_benchmark_with(cfg, |_| {})
}

/// Runs every `(dim, size, rep)` replication, calling `on_cell` as each
/// `(dim, size)` cell completes. Replications within a cell run in parallel
/// on `cfg.workers` threads; the output does not depend on thread count.
pub fn run_benchmark_with(cfg: &BenchConfig, mut on_cell: impl FnMut(&CellSummary<'_>)) -> Result<BenchOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let mut out = BenchOutput::default();
    for &dim in &cfg.dims {
        let scm = build_scenario(&ScenarioSpec::new(cfg.scenario, dim, cfg.coeff_seed(dim)))?;
        let truth = pool.install(|| match cfg.truth_mode {
            TruthMode::Exact => scm.exact_truth_grid(),
            TruthMode::Mc => scm.mc_truth_grid(cfg.truth_samples, derive_seed(cfg.coeff_seed(dim), &[TRUTH_STREAM])),
        })?;
        for &size in &cfg.sizes {
            let reps: Vec<RepOutcome> = pool.install(|| {
                (0..cfg.reps)
                    .into_par_iter()
                    .map(|rep| run_rep(cfg, &scm, &truth, dim, size, rep))
                    .collect::<Result<_>>()
            })?;
            let first = out.maae.len();
            let mut cell_failures = 0;
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let mut aaes = Vec::with_capacity(cfg.reps);
                for (rep, r) in reps.iter().enumerate() {
                    match &r.results[mi].1 {
                        Ok((a, t)) => {
                            aaes.push(*a);
                            out.records.push(BenchRecord {
                                scenario: cfg.scenario,
                                method,
                                dim,
                                size,
                                rep,
                                aae: *a,
                                wall_time: *t,
                            });
                        }
                        Err(message) => {
                            log::warn!(
                                "{} {method} dim={dim} n={size} rep={rep} failed and is excluded: {message}",
                                cfg.scenario
                            );
                            cell_failures += 1;
                            out.failures.push(BenchFailure {
                                scenario: cfg.scenario,
                                method,
                                dim,
                                size,
                                rep,
                                message: message.clone(),
                            });
                        }
                    }
                }
                match median(&aaes) {
                    Some(m) => out.maae.push(MaaeRow {
                        scenario: cfg.scenario,
                        method,
                        dim,
                        size,
                        maae: m,
                        reps: aaes.len(),
                    }),
                    None => log::warn!("{} {method} dim={dim} n={size}: every replication failed", cfg.scenario),
                }
            }
            on_cell(&CellSummary {
                scenario: cfg.scenario,
                dim,
                size,
                rows: &out.maae[first..],
                failures: cell_failures,
            });
        }
    }
    Ok(out)
}

pub const RECORDS_HEADER: [&str; 7] = ["scenario", "method", "dim", "size", "rep", "aae", "wall_time"];
pub const MAAE_HEADER: [&str; 6] = ["scenario", "method", "dim", "size", "maae", "reps"];

pub fn records_path(prefix: &Path) -> PathBuf {
    suffixed(prefix, "_records.csv")
}

pub fn maae_path(prefix: &Path) -> PathBuf {
    suffixed(prefix, "_maae.csv")
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn sort_records(records: &[BenchRecord]) -> Vec<&BenchRecord> {
    let mut v: Vec<&BenchRecord> = records.iter().collect();
    v.sort_by(|a, b| {
        (a.scenario.name(), a.method.name(), a.dim, a.size, a.rep).cmp(&(
            b.scenario.name(),
            b.method.name(),
            b.dim,
            b.size,
            b.rep,
        ))
    });
    v
}

fn sort_maae(rows: &[MaaeRow]) -> Vec<&MaaeRow> {
    let mut v: Vec<&MaaeRow> = rows.iter().collect();
    v.sort_by(|a, b| {
        (a.scenario.name(), a.method.name(), a.dim, a.size).cmp(&(b.scenario.name(), b.method.name(), b.dim, b.size))
    });
    v
}

/// Writes via a temporary sibling and renames, so a failure never leaves a
/// partial file behind.
fn write_atomically(path: &Path, body: impl FnOnce(&mut csv::Writer<BufWriter<File>>) -> Result<()>) -> Result<()> {
    let tmp = suffixed(path, ".partial");
    let result = (|| {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&tmp)?));
        body(&mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Writes `<prefix>_records.csv` and `<prefix>_maae.csv`.
pub fn emit_csv(records: &[BenchRecord], maae: &[MaaeRow], prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    if records.is_empty() || maae.is_empty() {
        return Err(Error::InvalidArgument("no benchmark results to write".into()));
    }
    let rp = records_path(prefix);
    let mp = maae_path(prefix);
    write_atomically(&rp, |w| {
        w.write_record(RECORDS_HEADER)?;
        for r in sort_records(records) {
            w.write_record([
                r.scenario.name().to_string(),
                r.method.name().to_string(),
                r.dim.to_string(),
                r.size.to_string(),
                r.rep.to_string(),
                format_sig17(r.aae),
                format_sig17(r.wall_time),
            ])?;
        }
        Ok(())
    })?;
    let written = write_atomically(&mp, |w| {
        w.write_record(MAAE_HEADER)?;
        for r in sort_maae(maae) {
            w.write_record([
                r.scenario.name().to_string(),
                r.method.name().to_string(),
                r.dim.to_string(),
                r.size.to_string(),
                format_sig17(r.maae),
                r.reps.to_string(),
            ])?;
        }
        Ok(())
    });
    if let Err(e) = written {
        let _ = fs::remove_file(&rp);
        return Err(e);
    }
    Ok((rp, mp))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::MalformedCsv {
            line: 1,
            detail: format!("expected header {}", expected.join(",")),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).ok_or_else(|| Error::MalformedCsv {
        line,
        detail: format!("missing field {}", i + 1),
    })?;
    raw.parse().map_err(|_| Error::MalformedCsv {
        line,
        detail: format!("cannot parse `{raw}`"),
    })
}

fn scenario_field(rec: &csv::StringRecord) -> Result<ScenarioKind> {
    let raw: String = field(rec, 0)?;
    raw.parse().map_err(|_| Error::MalformedCsv {
        line: rec.position().map_or(0, |p| p.line()),
        detail: format!("unknown scenario `{raw}`"),
    })
}

fn method_field(rec: &csv::StringRecord) -> Result<Backend> {
    let raw: String = field(rec, 1)?;
    raw.parse().map_err(|_| Error::MalformedCsv {
        line: rec.position().map_or(0, |p| p.line()),
        detail: format!("unknown method `{raw}`"),
    })
}

pub fn read_records_csv(path: &Path) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &RECORDS_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(BenchRecord {
            scenario: scenario_field(&rec)?,
            method: method_field(&rec)?,
            dim: field(&rec, 2)?,
            size: field(&rec, 3)?,
            rep: field(&rec, 4)?,
            aae: field(&rec, 5)?,
            wall_time: field(&rec, 6)?,
        });
    }
    Ok(out)
}

pub fn read_maae_csv(path: &Path) -> Result<Vec<MaaeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &MAAE_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(MaaeRow {
            scenario: scenario_field(&rec)?,
            method: method_field(&rec)?,
            dim: field(&rec, 2)?,
            size: field(&rec, 3)?,
            maae: field(&rec, 4)?,
            reps: field(&rec, 5)?,
        });
    }
    Ok(out)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn method_style(m: Backend) -> (&'static str, Option<&'static str>, &'static str) {
    match m {
        Backend::Cwo => ("#1f77b4", Some("6 4"), "CWO"),
        Backend::NnCwo => ("#d62728", None, "NN-CWO"),
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.into()
    }
}

/// MAAE-versus-sample-size line chart for one dimension: one polyline per
/// method, CWO dashed and NN-CWO solid.
pub fn emit_svg(rows: &[MaaeRow], dim: usize, path: &Path) -> Result<()> {
    let sel: Vec<&MaaeRow> = sort_maae(rows).into_iter().filter(|r| r.dim == dim).collect();
    let Some(first) = sel.first() else {
        return Err(Error::InvalidArgument(format!("no MAAE rows for dim {dim}")));
    };
    let scenario = first.scenario;
    if sel.iter().any(|r| r.scenario != scenario) {
        return Err(Error::InvalidArgument("rows span several scenarios".into()));
    }
    let (xmin, xmax) = sel
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.size as f64), hi.max(r.size as f64)));
    let ymax = sel.iter().map(|r| r.maae).fold(0.0, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let plot_w = SVG_W - LEFT - RIGHT;
    let plot_h = SVG_H - TOP - BOTTOM;
    let px = |x: f64| {
        if xmax > xmin {
            LEFT + (x - xmin) / (xmax - xmin) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let py = |y: f64| TOP + (1.0 - y / ymax) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">MAAE, {} (dim {dim})</text>"#,
        LEFT + plot_w / 2.0,
        scenario
    );
    // axes
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}"/>"#);
    let _ = writeln!(s, "</g>");
    let mut sizes: Vec<usize> = sel.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let step = sizes.len().div_ceil(10).max(1);
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
    for &n in sizes.iter().step_by(step) {
        let x = px(n as f64);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#, y0 + 18.0);
    }
    for k in 0..=5 {
        let v = ymax * k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(v));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">Sample size N</text>"#,
        LEFT + plot_w / 2.0,
        SVG_H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.1})">MAAE</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "</g>");

    let mut methods: Vec<Backend> = sel.iter().map(|r| r.method).collect();
    methods.dedup();
    for (i, &m) in methods.iter().enumerate() {
        let (color, dash, label) = method_style(m);
        let dash_attr = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let points: Vec<String> = sel
            .iter()
            .filter(|r| r.method == m)
            .map(|r| format!("{:.2},{:.2}", px(r.size as f64), py(r.maae)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-method="{}" fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{}"/>"#,
            m.name(),
            points.join(" ")
        );
        let ly = TOP + 20.0 + 22.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            lx + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{label}</text>"#,
            lx + 36.0,
            ly + 4.0
        );
    }
    let _ = writeln!(s, "</svg>");

    let tmp = suffixed(path, ".partial");
    let result = fs::write(&tmp, s.as_bytes()).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Path of the chart for one `(scenario, dim)`.
pub fn svg_path(prefix: &Path, scenario: ScenarioKind, dim: usize) -> PathBuf {
    suffixed(prefix, &format!("_{}_dim{dim}.svg", scenario.name()))
}
