//! `nncwo`: simulate benchmark data, compute ground truth, estimate
//! interventional means and run the replication benchmark.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nncwo_core::bench::{self, BenchConfig, BenchOutput, TruthMode};
use nncwo_core::rng::derive_seed;
use nncwo_core::{
    build_scenario, estimate, Activation, Backend, Dataset, Error, EstimatorConfig, Hyperparams, ScenarioKind,
    ScenarioSpec, SurrogateWeightMode, DEFAULT_CLIP_EPS,
};

/// Stream tag separating the sample seed from the coefficient seed.
const SAMPLE_STREAM: u64 = 1;
const TRUTH_STREAM: u64 = 2;

#[derive(Parser)]
#[command(name = "nncwo", version, about = "Causal effect estimation by composed weighting operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an observational dataset from a benchmark model and write it as CSV.
    Simulate(SimulateArgs),
    /// Print E[Y | do(x)] for every treatment assignment as JSON.
    Truth(TruthArgs),
    /// Estimate E[Y | do(x)] from a dataset and print it as JSON.
    Estimate(EstimateArgs),
    /// Run seeded replications and write MAAE tables (and optional charts).
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Frontdoor,
    Surrogate,
    Msbd,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Frontdoor => ScenarioKind::FrontDoor,
            ScenarioArg::Surrogate => ScenarioKind::Surrogate,
            ScenarioArg::Msbd => ScenarioKind::Msbd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Nncwo,
    Cwo,
}

impl From<MethodArg> for Backend {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nncwo => Backend::NnCwo,
            MethodArg::Cwo => Backend::Cwo,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SurrogateWeightArg {
    ZOnly,
    ConditionalOnXz,
}

impl From<SurrogateWeightArg> for SurrogateWeightMode {
    fn from(m: SurrogateWeightArg) -> Self {
        match m {
            SurrogateWeightArg::ZOnly => SurrogateWeightMode::ZOnly,
            SurrogateWeightArg::ConditionalOnXz => SurrogateWeightMode::ConditionalOnXz,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Linear,
    Relu,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Linear => Activation::Linear,
            ActivationArg::Relu => Activation::Relu,
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn clip(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err("must lie in (0, 0.5)".into())
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Covariate block dimension.
    #[arg(long, value_parser = positive)]
    dim: usize,
    /// Number of rows.
    #[arg(long, value_parser = positive)]
    n: usize,
    /// Seed for the model coefficients; the sampling seed is derived from it
    /// unless --sample-seed is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Standard deviation of the outcome noise.
    #[arg(long, default_value_t = nncwo_core::scm::DEFAULT_NOISE_SD)]
    noise_sd: f64,
    /// Output CSV path, or `-` for standard output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TruthArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, value_parser = positive)]
    dim: usize,
    /// Seed for the model coefficients (matches `simulate --seed`).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, value_parser = positive, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = nncwo_core::scm::DEFAULT_NOISE_SD)]
    noise_sd: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Dataset CSV path, or `-` for standard input.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "nncwo")]
    method: MethodArg,
    /// Network settings as inline JSON or a path to a JSON file; missing
    /// fields take their defaults.
    #[arg(long)]
    hp: Option<String>,
    #[arg(long, value_parser = clip, default_value_t = DEFAULT_CLIP_EPS)]
    clip_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "z-only")]
    surrogate_weight: SurrogateWeightArg,
    /// Activation of the network's first layer.
    #[arg(long, value_enum, default_value = "linear")]
    input_activation: ActivationArg,
}

#[derive(Args)]
struct BenchArgs {
    /// BenchConfig JSON file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario to run; all three when omitted (and no --config).
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Comma-separated covariate dimensions [default: 1,16; msbd 1,8]
    #[arg(long, value_parser = positive, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Comma-separated, strictly increasing sample sizes
    /// [default: 500,1000,2000,4000,6000,8000,10000]
    #[arg(long, value_parser = positive, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Replications per cell [default: 20]
    #[arg(long, value_parser = positive)]
    reps: Option<usize>,
    /// Comma-separated methods [default: cwo,nncwo]
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    /// Ground truth by enumeration or Monte Carlo [default: exact]
    #[arg(long, value_enum)]
    truth_mode: Option<ModeArg>,
    /// Monte-Carlo draws per assignment [default: 1000000]
    #[arg(long, value_parser = positive)]
    truth_samples: Option<usize>,
    /// Base seed from which every model and sample seed is derived [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Network settings as inline JSON or a JSON file path
    #[arg(long)]
    hp: Option<String>,
    /// Propensity clipping bound [default: 0.01]
    #[arg(long, value_parser = clip)]
    clip_eps: Option<f64>,
    #[arg(long, value_enum)]
    surrogate_weight: Option<SurrogateWeightArg>,
    #[arg(long, value_enum)]
    input_activation: Option<ActivationArg>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = positive)]
    workers: Option<usize>,
    /// Record wall time per replication (makes output machine dependent).
    #[arg(long)]
    timings: bool,
    /// 100 replications, sizes 500..10000 step 500, Monte-Carlo truth from 10⁷ draws.
    #[arg(long, conflicts_with = "config")]
    paper_scale: bool,
    /// Output prefix: writes <prefix>_records.csv and <prefix>_maae.csv.
    #[arg(long)]
    out: PathBuf,
    /// Also write <prefix>_<scenario>_dim<d>.svg per dimension.
    #[arg(long)]
    plot: bool,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::MissingColumn(_)
            | Error::DimensionMismatch { .. }
            | Error::MalformedCsv { .. }
            | Error::AssignmentMismatch(_)
            | Error::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Truth(a) => truth(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn check_noise(sd: f64) -> CliResult<()> {
    if sd.is_finite() && sd >= 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--noise-sd must be finite and nonnegative, got {sd}")))
    }
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    check_noise(a.noise_sd)?;
    let kind: ScenarioKind = a.scenario.into();
    let sample_seed = a.sample_seed.unwrap_or_else(|| derive_seed(a.seed, &[SAMPLE_STREAM]));
    eprintln!("seed: coefficients={} sample={sample_seed}", a.seed);
    let spec = ScenarioSpec {
        noise_sd: a.noise_sd,
        ..ScenarioSpec::new(kind, a.dim, a.seed)
    };
    let data = build_scenario(&spec)?.sample(a.n, sample_seed)?;
    if a.out.as_os_str() == "-" {
        let stdout = io::stdout();
        data.write_csv(BufWriter::new(stdout.lock()))?;
        return Ok(());
    }
    let tmp = partial_path(&a.out);
    let written = File::create(&tmp)
        .map_err(Error::from)
        .and_then(|f| data.write_csv(BufWriter::new(f)))
        .and_then(|_| fs::rename(&tmp, &a.out).map_err(Error::from));
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Runtime(format!("cannot write {}: {e}", a.out.display())));
    }
    Ok(())
}

fn partial_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn mu_json(values: &[(nncwo_core::TreatmentAssignment, f64)]) -> CliResult<String> {
    let map: BTreeMap<String, f64> = values.iter().map(|(a, v)| (a.key(), *v)).collect();
    serde_json::to_string_pretty(&map).map_err(|e| CliError::Runtime(e.to_string()))
}

fn truth(a: TruthArgs) -> CliResult<()> {
    check_noise(a.noise_sd)?;
    let kind: ScenarioKind = a.scenario.into();
    let spec = ScenarioSpec {
        noise_sd: a.noise_sd,
        ..ScenarioSpec::new(kind, a.dim, a.seed)
    };
    let scm = build_scenario(&spec)?;
    let values = match a.mode {
        ModeArg::Exact => {
            eprintln!("seed: coefficients={}", a.seed);
            scm.exact_truth_grid()?
        }
        ModeArg::Mc => {
            let mc_seed = derive_seed(a.seed, &[TRUTH_STREAM]);
            eprintln!("seed: coefficients={} monte-carlo={mc_seed}", a.seed);
            scm.mc_truth_grid(a.mc_samples, mc_seed)?
        }
    };
    println!("{}", mu_json(&values)?);
    Ok(())
}

fn load_hp(raw: Option<&str>) -> CliResult<Hyperparams> {
    let Some(raw) = raw else {
        return Ok(Hyperparams::default());
    };
    let hp = if raw.trim_start().starts_with('{') {
        Hyperparams::from_json_str(raw)
    } else {
        let text = fs::read_to_string(raw).map_err(|e| usage(format!("cannot read --hp file {raw}: {e}")))?;
        Hyperparams::from_json_str(&text)
    };
    hp.map_err(|e| usage(format!("--hp: {e}")))
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    if path.as_os_str() == "-" {
        return Ok(Dataset::read_csv(io::stdin().lock())?);
    }
    let f = File::open(path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    Ok(Dataset::read_csv(io::BufReader::new(f))?)
}

fn run_estimate(a: EstimateArgs) -> CliResult<()> {
    let kind: ScenarioKind = a.scenario.into();
    let hp = load_hp(a.hp.as_deref())?;
    eprintln!("seed: estimator={}", a.seed);
    let data = read_dataset(&a.data)?;
    let cfg = EstimatorConfig {
        hp,
        backend: a.method.into(),
        clip_eps: a.clip_eps,
        seed: a.seed,
        surrogate_mode: a.surrogate_weight.into(),
        input_activation: a.input_activation.into(),
    };
    let est = estimate(kind, &data, &cfg)?;
    println!("{}", est.to_json()?);
    Ok(())
}

fn bench_configs(a: &BenchArgs) -> CliResult<Vec<BenchConfig>> {
    let mut configs = if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read --config {}: {e}", path.display())))?;
        let cfg: BenchConfig = serde_json::from_str(&text).map_err(|e| usage(format!("--config: {e}")))?;
        if let Some(s) = a.scenario {
            if ScenarioKind::from(s) != cfg.scenario {
                return Err(usage("--scenario disagrees with the scenario in --config"));
            }
        }
        vec![cfg]
    } else {
        let kinds: Vec<ScenarioKind> = match a.scenario {
            Some(s) => vec![s.into()],
            None => ScenarioKind::ALL.to_vec(),
        };
        kinds
            .into_iter()
            .map(|k| if a.paper_scale { BenchConfig::paper_scale(k) } else { BenchConfig::desk(k) })
            .collect()
    };
    let hp = match &a.hp {
        Some(raw) => Some(load_hp(Some(raw))?),
        None => None,
    };
    for cfg in &mut configs {
        if let Some(v) = &a.dims {
            cfg.dims = v.clone();
        }
        if let Some(v) = &a.sizes {
            cfg.sizes = v.clone();
        }
        if let Some(v) = a.reps {
            cfg.reps = v;
        }
        if let Some(v) = &a.methods {
            cfg.methods = v.iter().map(|&m| m.into()).collect();
        }
        if let Some(v) = a.truth_mode {
            cfg.truth_mode = match v {
                ModeArg::Exact => TruthMode::Exact,
                ModeArg::Mc => TruthMode::Mc,
            };
        }
        if let Some(v) = a.truth_samples {
            cfg.truth_samples = v;
        }
        if let Some(v) = a.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = &hp {
            cfg.hp = v.clone();
        }
        if let Some(v) = a.clip_eps {
            cfg.clip_eps = v;
        }
        if let Some(v) = a.surrogate_weight {
            cfg.surrogate_mode = v.into();
        }
        if let Some(v) = a.input_activation {
            cfg.input_activation = v.into();
        }
        if a.workers.is_some() {
            cfg.workers = a.workers;
        }
        cfg.timings |= a.timings;
        cfg.validate()?;
    }
    Ok(configs)
}

fn run_bench(a: BenchArgs) -> CliResult<()> {
    let configs = bench_configs(&a)?;
    let mut all = BenchOutput::default();
    let start = Instant::now();
    for cfg in &configs {
        let coeff: Vec<String> = cfg.dims.iter().map(|&d| format!("dim{d}={}", cfg.coeff_seed(d))).collect();
        eprintln!(
            "seed: {} base={} coefficients[{}]",
            cfg.scenario,
            cfg.base_seed,
            coeff.join(" ")
        );
        let out = bench::run_benchmark_with(cfg, |cell| {
            let parts: Vec<String> = cell
                .rows
                .iter()
                .map(|r| format!("{}={:.5} ({} reps)", r.method, r.maae, r.reps))
                .collect();
            let failed = if cell.failures > 0 {
                format!(", {} failed", cell.failures)
            } else {
                String::new()
            };
            eprintln!(
                "{} dim={} n={}: MAAE {}{failed} [{:.0}s]",
                cell.scenario,
                cell.dim,
                cell.size,
                parts.join(", "),
                start.elapsed().as_secs_f64()
            );
        })?;
        all.records.extend(out.records);
        all.maae.extend(out.maae);
        all.failures.extend(out.failures);
    }
    if !all.failures.is_empty() {
        log::warn!("{} replication(s) failed and were excluded", all.failures.len());
    }
    let (rp, mp) = bench::emit_csv(&all.records, &all.maae, &a.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut written = vec![rp, mp];
    if a.plot {
        for cfg in &configs {
            let rows: Vec<_> = all.maae.iter().filter(|r| r.scenario == cfg.scenario).cloned().collect();
            for &dim in &cfg.dims {
                let path = bench::svg_path(&a.out, cfg.scenario, dim);
                if let Err(e) = bench::emit_svg(&rows, dim, &path) {
                    for p in &written {
                        let _ = fs::remove_file(p);
                    }
                    return Err(CliError::Runtime(format!("cannot write {}: {e}", path.display())));
                }
                written.push(path);
            }
        }
    }
    let mut err = io::stderr().lock();
    for p in &written {
        let _ = writeln!(err, "wrote {}", p.display());
    }
    Ok(())
}
