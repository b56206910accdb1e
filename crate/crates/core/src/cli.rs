//! Command-line front end.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{format_bench, run_bench, BenchConfig, DEFAULT_NAIVE_MAX, DEFAULT_SIZES};
use crate::dataset::{distance_matrix, load_csv, rank_table, Metric};
use crate::dcov::dcov_pvalue;
use crate::error::{Error, Result};
use crate::permutation::{permutation_pvalue, Estimator, Method, PermutationPlan, TestResult, DEFAULT_REPLICATES};
use crate::power::{
    emit_table, estimate_power_with_progress, simulation_seed, structure_seed, PowerSpec, TableFormat, DEFAULT_POWER_REPLICATES,
    DEFAULT_SIMS,
};
use crate::scenarios::{Generator, Scenario};
use crate::selftest::run_selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

/// Distance-rank test of independence.
#[derive(Debug, Parser)]
#[command(name = "hhg", version, about)]
pub struct Cli {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, env = "HHG_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Permutation test of independence between two CSV samples
    Test(TestArgs),
    /// Monte-Carlo power study on a synthetic scenario
    Power(PowerArgs),
    /// Check every fast path against its reference implementation
    Selftest(SelftestArgs),
    /// Time the fast and naive statistics over a range of sample sizes
    Bench(BenchArgs),
    /// Write one synthetic sample pair as CSV files
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV file with one X sample per row
    #[arg(long)]
    pub x: PathBuf,
    /// CSV file with one Y sample per row, paired with X by row
    #[arg(long)]
    pub y: PathBuf,
    /// Number of permutation replicates
    #[arg(long, default_value_t = DEFAULT_REPLICATES, value_parser = positive)]
    pub perms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distance: l1, l2 or linf
    #[arg(long, default_value_t = Metric::L2)]
    pub metric: Metric,
    /// Test statistic: hhg (Pearson), hhg-lr (likelihood ratio) or dcov
    #[arg(long, visible_alias = "stat", default_value_t = Method::HhgPearson)]
    pub method: Method,
    /// P-value estimator: add-one or raw
    #[arg(long, default_value_t = Estimator::AddOne)]
    pub estimator: Estimator,
    /// Level used for the reject/accept line
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Field delimiter of both files
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Include wall time in the report
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario name, e.g. circle, diamond, log_square5, mixture1000_t3
    #[arg(long)]
    pub scenario: String,
    /// Override m1 of a quadratic scenario
    #[arg(long)]
    pub m1: Option<usize>,
    /// Override beta1 of a quadratic scenario
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Override beta2 of a quadratic scenario
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Override the noise variance of a quadratic scenario
    #[arg(long)]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub n: Vec<usize>,
    /// Methods, comma separated: hhg, hhg-lr, dcov, both (hhg and dcov) or all
    #[arg(long, value_delimiter = ',', default_value = "both")]
    pub method: Vec<String>,
    /// Simulated datasets per sample size
    #[arg(long, default_value_t = DEFAULT_SIMS)]
    pub sims: usize,
    /// Permutation replicates per test
    #[arg(long, default_value_t = DEFAULT_POWER_REPLICATES)]
    pub perms: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = Metric::L2)]
    pub metric: Metric,
    #[arg(long, default_value_t = Estimator::AddOne)]
    pub estimator: Estimator,
    /// Output table: tsv, json or markdown
    #[arg(long, default_value_t = TableFormat::Tsv)]
    pub format: TableFormat,
    /// Suppress per-row progress on stderr
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sample sizes, comma separated [default: 100,200,400,800,1600]
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Largest size at which the cubic reference is timed
    #[arg(long, default_value_t = DEFAULT_NAIVE_MAX)]
    pub naive_max: usize,
    /// Timings per size; the fastest is reported
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Master seed, as in `power`
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulation index; the pair equals the one `power` draws for it
    #[arg(long, default_value_t = 0)]
    pub sim: usize,
    /// Output path of the X sample
    #[arg(long)]
    pub out_x: PathBuf,
    /// Output path of the Y sample
    #[arg(long)]
    pub out_y: PathBuf,
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.map_or(0, usize::from))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = pool.install(|| {
        let mut out = io::stdout().lock();
        match &cli.command {
            Command::Test(args) => run_test(args, &mut out),
            Command::Power(args) => run_power(args, &mut out),
            Command::Selftest(args) => run_selftest_cmd(args, &mut out),
            Command::Bench(args) => run_bench_cmd(args, &mut out),
            Command::Generate(args) => run_generate(args),
        }
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::UnknownScenario { .. } | Error::ZeroReplicates => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_stdout(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_error(Path::new("<stdout>"), e))
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::InvalidParameter(format!("delimiter must be a single ASCII character, got `{c}`")))
}

#[derive(Debug, Serialize)]
struct TestReport {
    method: Method,
    metric: Metric,
    n: usize,
    statistic: f64,
    replicates: usize,
    exceed_count: usize,
    estimator: Estimator,
    p_value: f64,
    alpha: f64,
    reject: bool,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

impl TestReport {
    fn new(res: &TestResult, args: &TestArgs) -> Self {
        Self {
            method: res.method,
            metric: args.metric,
            n: res.n,
            statistic: res.observed,
            replicates: res.plan.replicates,
            exceed_count: res.exceed_count,
            estimator: res.plan.estimator,
            p_value: res.p_value,
            alpha: args.alpha,
            reject: res.p_value <= args.alpha,
            seed: res.plan.seed,
            elapsed_seconds: args.timing.then_some(res.elapsed.as_secs_f64()),
        }
    }

    fn text(&self) -> String {
        let mut s = format!(
            "method      {}\nmetric      {}\nn           {}\nstatistic   {}\nreplicates  {}\nexceed      {}\np-value     {} ({})\nseed        {}\n",
            self.method, self.metric, self.n, self.statistic, self.replicates, self.exceed_count, self.p_value, self.estimator, self.seed
        );
        let verdict = if self.reject { "reject independence" } else { "no evidence against independence" };
        s.push_str(&format!("decision    {verdict} at level {}\n", self.alpha));
        if let Some(secs) = self.elapsed_seconds {
            s.push_str(&format!("elapsed     {secs:.3}s\n"));
        }
        s
    }
}

fn run_test(args: &TestArgs, out: &mut dyn Write) -> Result<i32> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let delimiter = delimiter_byte(args.delimiter)?;
    let x = load_csv(&args.x, delimiter)?;
    let y = load_csv(&args.y, delimiter)?;
    if x.n() != y.n() {
        return Err(Error::SampleSizeMismatch { x: x.n(), y: y.n() });
    }
    let plan = PermutationPlan::new(args.perms, args.seed).with_estimator(args.estimator);
    let (dx, dy) = (distance_matrix(&x, args.metric), distance_matrix(&y, args.metric));
    let res = match args.method.statistic_kind() {
        Some(kind) => permutation_pvalue(&rank_table(&dx), &rank_table(&dy), kind, &plan)?,
        None => dcov_pvalue(&dx, &dy, &plan)?,
    };
    let report = TestReport::new(&res, args);
    let text = match args.format {
        ReportFormat::Text => report.text(),
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    write_stdout(out, &text)?;
    Ok(EXIT_OK)
}

fn scenario_from(args: &ScenarioArgs) -> Result<Scenario> {
    let scenario = Scenario::from_name(&args.scenario)?;
    let overrides = args.m1.is_some() || args.beta1.is_some() || args.beta2.is_some() || args.sigma2.is_some();
    if !overrides {
        return Ok(scenario);
    }
    match scenario {
        Scenario::Quadratic { m1, beta1, beta2, sigma2 } => {
            let s = Scenario::Quadratic {
                m1: args.m1.unwrap_or(m1),
                beta1: args.beta1.unwrap_or(beta1),
                beta2: args.beta2.unwrap_or(beta2),
                sigma2: args.sigma2.unwrap_or(sigma2),
            };
            s.validate()?;
            Ok(s)
        }
        _ => Err(Error::InvalidParameter(format!(
            "--m1/--beta1/--beta2/--sigma2 apply only to quadratic scenarios, not `{}`",
            args.scenario
        ))),
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for name in names {
        let expanded: Vec<Method> = match name.to_ascii_lowercase().as_str() {
            "both" => vec![Method::HhgPearson, Method::Dcov],
            "all" => Method::ALL.to_vec(),
            _ => vec![name.parse()?],
        };
        for m in expanded {
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
    }
    Ok(methods)
}

fn run_power(args: &PowerArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = PowerSpec {
        methods: parse_methods(&args.method)?,
        alpha: args.alpha,
        sims: args.sims,
        replicates: args.perms,
        estimator: args.estimator,
        metric: args.metric,
        master_seed: args.seed,
        ..PowerSpec::new(scenario_from(&args.scenario)?, args.n.clone())
    };
    let rows = estimate_power_with_progress(&spec, |row| {
        if !args.quiet {
            eprintln!(
                "{} {} n={} power={:.3} ({:.1}s)",
                row.scenario, row.method, row.n, row.power, row.seconds
            );
        }
    })?;
    write_stdout(out, &emit_table(&rows, args.format)?)?;
    Ok(EXIT_OK)
}

fn run_selftest_cmd(args: &SelftestArgs, out: &mut dyn Write) -> Result<i32> {
    let reports = run_selftest(args.seed);
    let mut text: String = reports.iter().map(|r| format!("{r}\n")).collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    text.push_str(&match failed {
        0 => format!("all {} suites passed (seed {})\n", reports.len(), args.seed),
        _ => format!("{failed} of {} suites failed (seed {})\n", reports.len(), args.seed),
    });
    write_stdout(out, &text)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_SELFTEST })
}

fn run_bench_cmd(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let sizes = if args.sizes.is_empty() { DEFAULT_SIZES.to_vec() } else { args.sizes.clone() };
    if let Some(&n) = sizes.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidParameter(format!("sample size {n} is below the minimum of 3")));
    }
    let config = BenchConfig {
        repeats: args.repeats,
        naive_max: args.naive_max,
        seed: args.seed,
    };
    let rows = run_bench(&sizes, &config)?;
    let text = match args.format {
        ReportFormat::Text => format_bench(&rows),
        ReportFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    write_stdout(out, &text)?;
    Ok(EXIT_OK)
}

fn run_generate(args: &GenerateArgs) -> Result<i32> {
    let scenario = scenario_from(&args.scenario)?;
    let generator = Generator::new(scenario, structure_seed(args.seed, &scenario))?;
    let (x, y) = generator.sample(args.n, simulation_seed(args.seed, &scenario, args.n, args.sim))?;
    for (path, data) in [(&args.out_x, &x), (&args.out_y, &y)] {
        std::fs::write(path, data.to_csv()).map_err(|e| io_error(path, e))?;
    }
    Ok(EXIT_OK)
}
