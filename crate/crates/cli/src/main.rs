//! Command-line front end for the random-walk-in-random-scenery laboratory.
//!
//! Subcommands mirror the library modules: `simulate-rwrs` and
//! `simulate-limit` produce Monte Carlo batches, `local-time` and `export`
//! write plot-ready CSV, `dependence` evaluates decay-bound verdicts, and
//! `verify` runs the reproducible check suite. Every output embeds the
//! resolved configuration and master seed; identical configurations produce
//! byte-identical numeric output regardless of the thread count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rwrs_core::dependence::{dependence_bound, DecayBound, SummabilityReport};
use rwrs_core::limit::LimitConfig;
use rwrs_core::rng::{stream, STREAM_AUX};
use rwrs_core::rwrs::RwrsConfig;
use rwrs_core::scenery::{Marginal, Observable, SceneryModel};
use rwrs_core::verify;
use rwrs_core::walk::IncrementLaw;

const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rwrs-lab",
    version,
    about = "Monte Carlo laboratory for random walks in weakly dependent random scenery"
)]
struct Cli {
    /// Worker threads (default: all cores). Results never depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: $RWRS_LAB_OUT, then the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate walk-in-scenery sums at the configured times.
    SimulateRwrs(SimulateRwrsArgs),
    /// Simulate the limit process from discretized Brownian local time.
    SimulateLimit(SimulateLimitArgs),
    /// Sample one walk and export its occupation profile.
    LocalTime(LocalTimeArgs),
    /// Evaluate a dependence decay bound and its summability verdict.
    Dependence(DependenceArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Export scenery windows or Brownian local-time fields as CSV.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LawName {
    Simple,
    Lazy,
    Skewed,
}

impl LawName {
    fn build(self) -> IncrementLaw {
        match self {
            LawName::Simple => IncrementLaw::simple(),
            LawName::Lazy => IncrementLaw::lazy(),
            LawName::Skewed => IncrementLaw::skewed(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelName {
    Iid,
    Linear,
    Iterated,
    Doubling,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObservableName {
    Centered,
    Cosine,
}

impl From<ObservableName> for Observable {
    fn from(o: ObservableName) -> Self {
        match o {
            ObservableName::Centered => Observable::Centered,
            ObservableName::Cosine => Observable::Cosine,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

/// Model-shaping flags shared by several subcommands.
#[derive(Args, Clone, Debug)]
struct ModelFlags {
    /// Scenery family; overrides the config document's model.
    #[arg(long)]
    model: Option<ModelName>,
    /// Innovation / marginal standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Coefficient rate for the linear family.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Contraction factor for the iterated family.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Observable for the doubling family.
    #[arg(long, value_enum, default_value_t = ObservableName::Centered)]
    observable: ObservableName,
    /// Sliding bit-window width for the doubling family.
    #[arg(long, default_value_t = 53)]
    bit_window: u32,
}

impl ModelFlags {
    fn build(&self, name: ModelName) -> Result<SceneryModel> {
        let model = match name {
            ModelName::Iid => SceneryModel::Iid {
                marginal: Marginal::Normal { sd: self.sd },
            },
            ModelName::Linear => SceneryModel::linear_geometric(self.rho, self.sd)?,
            ModelName::Iterated => SceneryModel::iterated_function(self.kappa, self.sd)?,
            ModelName::Doubling => SceneryModel::DoublingMap {
                observable: self.observable.into(),
                bit_window: self.bit_window,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Args)]
struct SimulateRwrsArgs {
    /// JSON configuration document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step law preset.
    #[arg(long, value_enum)]
    law: Option<LawName>,
    #[command(flatten)]
    model_flags: ModelFlags,
    /// Step horizon n.
    #[arg(long)]
    n: Option<usize>,
    /// Evaluation times in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

/// Fully resolved experiment description, echoed into every output.
#[derive(Clone, Serialize, Deserialize)]
struct RwrsParams {
    seed: u64,
    law: IncrementLaw,
    model: SceneryModel,
    n: usize,
    times: Vec<f64>,
    replicates: usize,
}

impl Default for RwrsParams {
    fn default() -> Self {
        Self {
            seed: 0,
            law: IncrementLaw::simple(),
            model: SceneryModel::iid_standard_normal(),
            n: 1024,
            times: vec![0.5, 1.0],
            replicates: 100,
        }
    }
}

#[derive(Args)]
struct SimulateLimitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Time step dt.
    #[arg(long)]
    dt: Option<f64>,
    /// Spatial bin width h.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Evaluation times, comma separated.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Serialize, Deserialize)]
struct LimitParams {
    seed: u64,
    dt: f64,
    bin_width: f64,
    times: Vec<f64>,
    replicates: usize,
}

impl Default for LimitParams {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 1e-4,
            bin_width: 1e-2,
            times: vec![0.25, 0.5, 1.0],
            replicates: 1000,
        }
    }
}

#[derive(Args)]
struct LocalTimeArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = LawName::Simple)]
    law: LawName,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    /// Also export the self-intersection table.
    #[arg(long)]
    with_alpha: bool,
}

#[derive(Args)]
struct DependenceArgs {
    /// Explicit bound family (otherwise derived from --model).
    #[arg(long)]
    family: Option<String>,
    /// Bound constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Polynomial exponent.
    #[arg(long)]
    a: Option<f64>,
    /// The geometric rate is taken from --rho.
    #[command(flatten)]
    model_flags: ModelFlags,
    /// Summability evaluation point.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Weight exponent for the weighted covariance sum (model mode only).
    #[arg(long)]
    lambda: Option<f64>,
    /// Lag cap for the weighted covariance sum.
    #[arg(long, default_value_t = 100)]
    lag_cap: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only the mandatory checks at reduced sizes.
    #[arg(long)]
    quick: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportKind {
    Scenery,
    LimitField,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_enum)]
    what: ExportKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model_flags: ModelFlags,
    /// Window bounds for scenery export.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    left: i64,
    #[arg(long, default_value_t = 1023, allow_hyphen_values = true)]
    right: i64,
    /// Discretization for limit-field export.
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 1e-2)]
    bin_width: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("RWRS_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match run(cli.command, &out_dir) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(command: Command, out_dir: &Path) -> Result<u8> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    match command {
        Command::SimulateRwrs(args) => simulate_rwrs(args, out_dir),
        Command::SimulateLimit(args) => simulate_limit(args, out_dir),
        Command::LocalTime(args) => local_time(args, out_dir),
        Command::Dependence(args) => dependence(args, out_dir),
        Command::Verify(args) => verify_cmd(args, out_dir),
        Command::Export(args) => export(args, out_dir),
    }
}

/// Loads a config document; a full output summary containing a `config`
/// field is accepted as well, enabling exact re-runs.
fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).context("config is not valid JSON")?;
    let candidate = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(candidate).context("config does not match the expected schema")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    file.write_all(contents)?;
    Ok(())
}

fn simulate_rwrs(args: SimulateRwrsArgs, out_dir: &Path) -> Result<u8> {
    let mut params: RwrsParams = match &args.config {
        Some(path) => load_config(path)?,
        None => RwrsParams::default(),
    };
    params.law = params.law.validated()?;
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(law) = args.law {
        params.law = law.build();
    }
    if let Some(name) = args.model_flags.model {
        params.model = args.model_flags.build(name)?;
    }
    if let Some(n) = args.n {
        params.n = n;
    }
    if let Some(times) = args.times {
        params.times = times;
    }
    if let Some(replicates) = args.replicates {
        params.replicates = replicates;
    }

    let cfg = RwrsConfig::new(
        params.law.clone(),
        params.model.clone(),
        params.n,
        params.times.clone(),
        params.replicates,
        params.seed,
    )?;
    if !cfg.reachability.holds {
        eprintln!(
            "warning: reachability check inconclusive for the step law: {}",
            cfg.reachability.evidence
        );
    }
    let batch = cfg.simulate()?;
    let summary = batch.summary();

    match args.format {
        OutputFormat::Csv => {
            let mut csv = Vec::new();
            batch.write_csv(&mut csv)?;
            write_file(&out_dir.join("rwrs_batch.csv"), &csv)?;
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "config": params,
                "times": batch.times,
                "raw": batch.raw,
                "normalized": batch.normalized,
            });
            write_file(
                &out_dir.join("rwrs_batch.json"),
                serde_json::to_string_pretty(&doc)?.as_bytes(),
            )?;
        }
    }
    let doc = serde_json::json!({
        "config": params,
        "reachability": cfg.reachability,
        "summary": summary,
    });
    write_file(
        &out_dir.join("rwrs_summary.json"),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;

    println!(
        "simulate-rwrs: model {}, n = {}, {} replicates, seed {}",
        params.model.label(),
        params.n,
        params.replicates,
        params.seed
    );
    for ts in &summary.per_time {
        println!(
            "  t = {:<6} raw var = {:<14.6} normalized var = {:.6}",
            ts.time, ts.variance_raw, ts.variance_normalized
        );
    }
    println!("  wrote {}", out_dir.join("rwrs_summary.json").display());
    Ok(EXIT_OK)
}

fn simulate_limit(args: SimulateLimitArgs, out_dir: &Path) -> Result<u8> {
    let mut params: LimitParams = match &args.config {
        Some(path) => load_config(path)?,
        None => LimitParams::default(),
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(dt) = args.dt {
        params.dt = dt;
    }
    if let Some(h) = args.bin_width {
        params.bin_width = h;
    }
    if let Some(times) = args.times {
        params.times = times;
    }
    if let Some(replicates) = args.replicates {
        params.replicates = replicates;
    }

    let cfg = LimitConfig::new(
        params.dt,
        params.bin_width,
        params.times.clone(),
        params.replicates,
        params.seed,
    )?;
    let batch = cfg.simulate();
    let summary = batch.summary();

    match args.format {
        OutputFormat::Csv => {
            let mut csv = Vec::new();
            batch.write_csv(&mut csv)?;
            write_file(&out_dir.join("limit_batch.csv"), &csv)?;
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "config": params,
                "times": batch.times,
                "values": batch.values,
            });
            write_file(
                &out_dir.join("limit_batch.json"),
                serde_json::to_string_pretty(&doc)?.as_bytes(),
            )?;
        }
    }
    let doc = serde_json::json!({ "config": params, "summary": summary });
    write_file(
        &out_dir.join("limit_summary.json"),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;

    println!(
        "simulate-limit: dt = {}, h = {}, {} replicates, seed {}",
        params.dt, params.bin_width, params.replicates, params.seed
    );
    for ts in &summary.per_time {
        println!(
            "  t = {:<6} var = {:<12.6} var/t^1.5 = {:.6}",
            ts.time,
            ts.variance,
            ts.variance / ts.time.powf(1.5)
        );
    }
    Ok(EXIT_OK)
}

fn local_time(args: LocalTimeArgs, out_dir: &Path) -> Result<u8> {
    let law = args.law.build();
    let mut rng = stream(args.seed, 0, rwrs_core::rng::STREAM_WALK);
    let profile = law.sample_local_time(args.n, &mut rng);

    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    write_file(&out_dir.join("local_time_profile.csv"), &csv)?;

    let mut alpha_zero = profile.self_intersection(0);
    if args.with_alpha {
        let table = profile.alpha_table();
        alpha_zero = table.alpha(0);
        let mut csv = Vec::new();
        table.write_csv(&mut csv)?;
        write_file(&out_dir.join("self_intersection.csv"), &csv)?;
    }
    let doc = serde_json::json!({
        "config": { "seed": args.seed, "n": args.n },
        "hull_width": profile.width(),
        "max_count": profile.max_count(),
        "alpha_zero": alpha_zero,
        "normalized_max": profile.max_count() as f64 / (args.n as f64).powf(0.75),
    });
    write_file(
        &out_dir.join("local_time_summary.json"),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;
    println!(
        "local-time: n = {}, seed {}, hull width {}, max count {}",
        args.n,
        args.seed,
        profile.width(),
        profile.max_count()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DependenceReport {
    bound: DecayBound,
    summability: SummabilityReport,
    holds_for_some_epsilon: bool,
    witness_epsilon: Option<f64>,
    weighted_covariance: Option<rwrs_core::dependence::WeightedCovarianceSum>,
    long_run_variance: Option<f64>,
}

fn dependence(args: DependenceArgs, out_dir: &Path) -> Result<u8> {
    let (bound, model) = match args.family.as_deref() {
        Some("geometric") => (
            DecayBound::geometric(args.c, args.model_flags.rho, "command line")?,
            None,
        ),
        Some("polynomial") => {
            let a = args
                .a
                .ok_or_else(|| anyhow!("--family polynomial needs --a"))?;
            (DecayBound::polynomial(args.c, a, "command line")?, None)
        }
        Some(other) => bail!("unknown family {other:?} (use geometric or polynomial)"),
        None => {
            let name = args.model_flags.model.unwrap_or(ModelName::Iid);
            let model = args.model_flags.build(name)?;
            (dependence_bound(&model), Some(model))
        }
    };
    let summability = bound.check_summability(args.epsilon)?;
    let (holds, witness) = bound.holds_for_some_epsilon();
    let weighted = match (&model, args.lambda) {
        (Some(model), Some(lambda)) => Some(rwrs_core::dependence::weighted_covariance_sum(
            model,
            lambda,
            args.lag_cap,
        )?),
        (None, Some(_)) => bail!("--lambda needs a scenery model, not a raw family"),
        _ => None,
    };
    let report = DependenceReport {
        bound,
        summability,
        holds_for_some_epsilon: holds,
        witness_epsilon: witness,
        long_run_variance: model.as_ref().and_then(|m| m.analytic_long_run_variance()),
        weighted_covariance: weighted,
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    write_file(&out_dir.join("dependence_report.json"), json.as_bytes())?;
    Ok(EXIT_OK)
}

fn verify_cmd(args: VerifyArgs, out_dir: &Path) -> Result<u8> {
    let report = verify::run_suite(args.seed, args.quick)?;
    print!("{}", report.render_text());
    write_file(
        &out_dir.join("verify_report.json"),
        report.to_json().as_bytes(),
    )?;
    Ok(if report.overall_pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn export(args: ExportArgs, out_dir: &Path) -> Result<u8> {
    match args.what {
        ExportKind::Scenery => {
            let name = args.model_flags.model.unwrap_or(ModelName::Iid);
            let model = args.model_flags.build(name)?;
            let mut rng = stream(args.seed, 0, rwrs_core::rng::STREAM_SCENERY);
            let window = model.sample_window(args.left, args.right, &mut rng)?;
            let mut csv = Vec::new();
            window.write_csv(&mut csv)?;
            let path = out_dir.join("scenery_window.csv");
            write_file(&path, &csv)?;
            println!(
                "export: {} scenery on [{}, {}] -> {}",
                model.label(),
                args.left,
                args.right,
                path.display()
            );
        }
        ExportKind::LimitField => {
            let cfg = LimitConfig::new(args.dt, args.bin_width, vec![args.t], 1, args.seed)?;
            let mut rng = stream(args.seed, 0, STREAM_AUX);
            let field = cfg.sample_local_time(args.t, &mut rng);
            let mut csv = Vec::new();
            field.write_csv(&mut csv)?;
            let path = out_dir.join("local_time_field.csv");
            write_file(&path, &csv)?;
            println!(
                "export: local-time field at t = {} ({} bins) -> {}",
                args.t,
                field.values().len(),
                path.display()
            );
        }
    }
    Ok(EXIT_OK)
}
