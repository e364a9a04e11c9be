use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aoi_onoff::analytics::{age_metrics_with_variant, T2Variant};
use aoi_onoff::format::sig12;
use aoi_onoff::harness::{run_validation, sweep_rows, write_sweep_csv, GridConfig, HarnessError, LambdaRange};
use aoi_onoff::model::{AgeMetrics, Discipline, ParamError, RateField, SystemParams};
use aoi_onoff::simulator::{export_sample_path, simulate, write_sample_path_csv, SimConfig, SimResult};

/// Age of Information for a bufferless M/M/1/1 queue with On-Off interrupted
/// service.
///
/// `--kappa-on` and `--kappa-off` are rates: the mean On period lasts
/// 1/kappa_on and the mean Off period 1/kappa_off.
#[derive(Debug, Parser)]
#[command(name = "aoi-onoff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form age metrics (no random draws).
    Analytic(AnalyticArgs),
    /// Estimate every metric by simulation.
    Simulate(SimulateArgs),
    /// Closed forms against series sums and simulation over a grid.
    Validate(ValidateArgs),
    /// Ages versus arrival rate at mu = 1 for the four reference channel settings.
    Sweep(SweepArgs),
    /// Event log of one simulated run.
    SamplePath(SamplePathArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Update arrival rate.
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Service rate while the channel is On.
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    /// Rate of leaving the On state (mean On period 1/kappa_on).
    #[arg(long = "kappa-on", allow_negative_numbers = true)]
    kappa_on: f64,
    /// Rate of leaving the Off state (mean Off period 1/kappa_off).
    #[arg(long = "kappa-off", allow_negative_numbers = true)]
    kappa_off: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DisciplineArg {
    NonPreemptive,
    Preemptive,
}

impl From<DisciplineArg> for Discipline {
    fn from(d: DisciplineArg) -> Self {
        match d {
            DisciplineArg::NonPreemptive => Discipline::NonPreemptive,
            DisciplineArg::Preemptive => Discipline::Preemptive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum T2VariantArg {
    Printed,
    Appendix,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed; falls back to AOI_ONOFF_SEED, then 0.
    #[arg(long, env = "AOI_ONOFF_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct JobsArg {
    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "non-preemptive")]
    discipline: DisciplineArg,
    /// Second-moment expression used in the mean age.
    #[arg(long = "t2-variant", value_enum, default_value = "appendix")]
    t2_variant: T2VariantArg,
    /// Accepted for symmetry with the other subcommands; has no effect.
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "non-preemptive")]
    discipline: DisciplineArg,
    /// Measured deliveries per replication.
    #[arg(long, default_value_t = 1_000_000)]
    deliveries: u64,
    /// Deliveries discarded first (default: 1% of --deliveries).
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    jobs: JobsArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Grid file, or `default` for the built-in 3x1x3x3 grid.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Overrides the grid file; default 1000000.
    #[arg(long)]
    deliveries: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Overrides the grid file; falls back to AOI_ONOFF_SEED, then 0.
    #[arg(long, env = "AOI_ONOFF_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    jobs: JobsArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long = "lambda-min", default_value_t = 0.1)]
    lambda_min: f64,
    #[arg(long = "lambda-max", default_value_t = 10.0)]
    lambda_max: f64,
    /// Number of log-spaced arrival rates.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Add simulated columns.
    #[arg(long = "with-sim")]
    with_sim: bool,
    /// Measured deliveries per simulated point.
    #[arg(long, default_value_t = 100_000)]
    deliveries: u64,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    jobs: JobsArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SamplePathArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "non-preemptive")]
    discipline: DisciplineArg,
    #[arg(long = "max-events", default_value_t = 100)]
    max_events: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutputArgs,
}

enum Failure {
    Usage { subcommand: &'static str, message: String },
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn flag_for(field: RateField) -> &'static str {
    match field {
        RateField::Lambda => "--lambda",
        RateField::Mu => "--mu",
        RateField::KappaOn => "--kappa-on",
        RateField::KappaOff => "--kappa-off",
    }
}

fn usage_param(subcommand: &'static str, e: ParamError) -> Failure {
    Failure::Usage {
        subcommand,
        message: format!("invalid value for {}: {e}", flag_for(e.field())),
    }
}

impl ParamArgs {
    fn resolve(&self, subcommand: &'static str) -> Result<SystemParams, Failure> {
        SystemParams::new(self.lambda, self.mu, self.kappa_on, self.kappa_off).map_err(|e| usage_param(subcommand, e))
    }
}

fn emit(out: &OutputArgs, body: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Runtime(format!("cannot write stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn sim_config(subcommand: &'static str, deliveries: u64, warmup: Option<u64>, replications: u32, seed: u64) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::new(deliveries, seed).with_replications(replications);
    if let Some(w) = warmup {
        cfg.warmup_deliveries = w;
    }
    cfg.validate().map_err(|e| Failure::Usage {
        subcommand,
        message: e.to_string(),
    })?;
    Ok(cfg)
}

#[derive(Serialize)]
struct AnalyticOutput {
    params: SystemParams,
    t2_variant: T2Variant,
    peak_age: f64,
    #[serde(flatten)]
    metrics: AgeMetrics,
}

fn analytic_csv(m: &AgeMetrics) -> String {
    let t2 = m.second_moment_service_time.map(sig12).unwrap_or_default();
    format!(
        "discipline,mean_peak_age,mean_age,mean_age_correlated,mean_service_time,second_moment_service_time,p_on,effective_arrival_rate\n{},{},{},{},{},{},{},{}\n",
        m.discipline,
        sig12(m.mean_peak_age),
        sig12(m.mean_age),
        sig12(m.mean_age_correlated),
        sig12(m.mean_service_time),
        t2,
        sig12(m.p_on),
        sig12(m.effective_arrival_rate)
    )
}

fn run_analytic(args: AnalyticArgs) -> Result<ExitCode, Failure> {
    let params = args.params.resolve("analytic")?;
    let variant = match args.t2_variant {
        T2VariantArg::Printed => T2Variant::Printed,
        T2VariantArg::Appendix => T2Variant::Appendix,
    };
    let metrics = age_metrics_with_variant(&params, args.discipline.into(), variant);
    let body = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&AnalyticOutput {
            params,
            t2_variant: variant,
            peak_age: metrics.mean_peak_age,
            metrics,
        }),
        Format::Csv => analytic_csv(&metrics),
    };
    emit(&args.out, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_csv(r: &SimResult) -> String {
    let mut out = String::from("quantity,estimate,std_error\n");
    let rows = [
        ("mean_age", r.mean_age),
        ("mean_peak_age", r.mean_peak_age),
        ("mean_service_time", r.mean_service_time),
        ("second_moment_service_time", r.second_moment_service_time),
        ("p_on_empirical", r.p_on_empirical),
        ("effective_arrival_rate", r.effective_arrival_rate),
        ("mean_interdeparture", r.mean_interdeparture),
    ];
    for (name, e) in rows {
        out.push_str(&format!("{name},{},{}\n", sig12(e.estimate), sig12(e.std_error)));
    }
    out
}

fn run_simulate(args: SimulateArgs) -> Result<ExitCode, Failure> {
    let params = args.params.resolve("simulate")?;
    let cfg = sim_config("simulate", args.deliveries, args.warmup, args.replications, args.seed.seed)?;
    let discipline = args.discipline.into();
    let result = with_jobs(args.jobs.jobs, || simulate(params, discipline, &cfg))?
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let body = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&result),
        Format::Csv => simulate_csv(&result),
    };
    emit(&args.out, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs) -> Result<ExitCode, Failure> {
    let mut grid = if args.grid == "default" {
        GridConfig::default_grid(None)
    } else {
        let text = fs::read_to_string(&args.grid)
            .map_err(|e| Failure::Runtime(format!("cannot read grid {}: {e}", args.grid)))?;
        GridConfig::from_toml_str(&text).map_err(|e| Failure::Usage {
            subcommand: "validate",
            message: format!("--grid {}: {e}", args.grid),
        })?
    };
    let file_sim = grid.sim;
    let deliveries = args.deliveries.or(file_sim.map(|s| s.deliveries)).unwrap_or(1_000_000);
    let warmup = args.warmup.or(match (args.deliveries, file_sim) {
        (None, Some(s)) => Some(s.warmup_deliveries),
        _ => None,
    });
    let replications = args.replications.or(file_sim.map(|s| s.replications)).unwrap_or(1);
    let seed = args.seed.or(file_sim.map(|s| s.seed)).unwrap_or(0);
    grid.sim = Some(sim_config("validate", deliveries, warmup, replications, seed)?);

    let report = with_jobs(args.jobs.jobs, || run_validation(&grid))??;
    eprint!("{}", report.render_table());
    let body = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    };
    emit(&args.out, &body)?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode, Failure> {
    let range = LambdaRange::new(args.lambda_min, args.lambda_max, args.steps).map_err(|e| Failure::Usage {
        subcommand: "sweep",
        message: e.to_string(),
    })?;
    let sim = if args.with_sim {
        Some(sim_config("sweep", args.deliveries, args.warmup, args.replications, args.seed.seed)?)
    } else {
        None
    };
    let rows = with_jobs(args.jobs.jobs, || sweep_rows(&range, sim.as_ref()))??;
    let body = match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows).expect("in-memory write");
            String::from_utf8(buf).expect("ascii csv")
        }
        Format::Json => to_json(&rows),
    };
    emit(&args.out, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn run_sample_path(args: SamplePathArgs) -> Result<ExitCode, Failure> {
    let params = args.params.resolve("sample-path")?;
    if args.max_events == 0 {
        return Err(Failure::Usage {
            subcommand: "sample-path",
            message: "invalid value for --max-events: must be at least 1".into(),
        });
    }
    let cfg = SimConfig::new(1, args.seed.seed);
    let records = export_sample_path(params, args.discipline.into(), &cfg, args.max_events)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let body = match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sample_path_csv(&mut buf, &records).expect("in-memory write");
            String::from_utf8(buf).expect("ascii csv")
        }
        Format::Json => to_json(&records),
    };
    emit(&args.out, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match cli.command {
        Command::Analytic(a) => run_analytic(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Validate(a) => run_validate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::SamplePath(a) => run_sample_path(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage { subcommand, message }) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(subcommand)
                .map(|c| c.render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {message}\n\n{usage}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
