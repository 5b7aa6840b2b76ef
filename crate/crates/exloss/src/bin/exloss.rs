//! Command-line surface: uniform forecast-accuracy tests, Murphy-diagram
//! data, simulation studies, VaR backtests, and the DM baseline.
//!
//! Exit codes: 0 on success, 2 on flag/validation errors, 3 on data or
//! numeric errors. Every run with the same flags, input bytes, and seed
//! produces byte-identical output regardless of `--threads`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use exloss::bootstrap::{BlockLength, BootstrapConfig};
use exloss::dm::{dm_test, DmLag, DmLoss, DmReport};
use exloss::engine::{build_default_theta_grid, build_theta_grid, murphy_curve, GridMode, ThetaGrid};
use exloss::loss::{Alpha, Functional};
use exloss::panel::{
    read_panel_csv_path, read_series_csv, report_to_json, ForecastPanel, PanelSlice,
};
use exloss::risk::{rolling_var_backtest, BacktestReport, VarMethod};
use exloss::sim::{
    run_rejection_study, Design, E2Setting, E3Setting, NoisySetting, Q2Setting, StudySpec,
};
use exloss::{recentered_bootstrap_test, Error, TestReport};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "exloss",
    version,
    about = "Forecast-accuracy tests for expectiles and quantiles, uniform over all consistent losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a benchmark forecast against competitors with the re-centered
    /// bootstrap sup test.
    Test(TestArgs),
    /// Emit Murphy-diagram data: mean extremal losses per theta.
    Murphy(MurphyArgs),
    /// Run a rejection-frequency simulation study.
    Simulate(SimulateArgs),
    /// Rolling VaR backtest on a return series.
    Var(VarArgs),
    /// Diebold-Mariano baseline with Newey-West standard errors.
    Dm(DmArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Random seed; the MT_SEED environment variable overrides the default
    /// when this flag is absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PanelOpts {
    /// CSV file with one header row.
    #[arg(long)]
    input: PathBuf,
    /// Column of realized values.
    #[arg(long)]
    realized: String,
    /// Column of the benchmark forecast.
    #[arg(long)]
    benchmark: String,
    /// Competitor forecast column; repeat for several competitors.
    #[arg(long = "competitor", required = true)]
    competitors: Vec<String>,
    /// Target functional of the forecasts.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Functional level in (0, 1).
    #[arg(long)]
    alpha: f64,
}

#[derive(Args)]
struct BlockOpts {
    /// Stationary-bootstrap block probability p in (0, 1].
    #[arg(long, conflicts_with = "mean_block_len")]
    block_p: Option<f64>,
    /// Mean block length (p = 1/length).
    #[arg(long)]
    mean_block_len: Option<f64>,
}

impl BlockOpts {
    fn resolve(&self) -> Result<BlockLength, Error> {
        match (self.block_p, self.mean_block_len) {
            (Some(p), _) => Ok(BlockLength::Probability { p }),
            (None, Some(len)) => BlockLength::from_mean_length(len),
            (None, None) => Ok(BlockLength::Auto),
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    panel: PanelOpts,
    /// Bootstrap replications M.
    #[arg(long, default_value_t = 400)]
    bootstrap_m: usize,
    #[command(flatten)]
    block: BlockOpts,
    /// Theta grid: `all`, `subsample:N`, or `linspace:lo:hi:N`.
    #[arg(long, default_value = "all")]
    grid: String,
    /// Significance levels for critical values.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05, 0.1])]
    levels: Vec<f64>,
    /// Also run the DM baseline with this loss.
    #[arg(long, value_enum)]
    with_dm: Option<DmLossArg>,
    /// Take the max over all ordered pairs instead of benchmark-vs-each.
    #[arg(long)]
    all_pairs: bool,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct MurphyArgs {
    #[command(flatten)]
    panel: PanelOpts,
    /// Theta grid: `all`, `subsample:N`, or `linspace:lo:hi:N`.
    #[arg(long, default_value = "all")]
    grid: String,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation design family.
    #[arg(long, value_enum)]
    design: DesignArg,
    /// Scenario 1-3 (mse design only).
    #[arg(long)]
    scenario: Option<u8>,
    /// Competitor setting name (all designs except mse).
    #[arg(long)]
    setting: Option<String>,
    /// Functional level for the e1/q1/q2 designs.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Number of generated forecasts per replication.
    #[arg(long = "tp")]
    t_p: usize,
    /// Replications (default 200; 1000 with --paper).
    #[arg(long)]
    reps: Option<usize>,
    /// Bootstrap replications M (default 200; 400 with --paper).
    #[arg(long)]
    bootstrap_m: Option<usize>,
    #[command(flatten)]
    block: BlockOpts,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05, 0.1])]
    levels: Vec<f64>,
    /// Also tally the DM baseline with this loss.
    #[arg(long, value_enum)]
    with_dm: Option<DmLossArg>,
    /// Swap benchmark and competitor roles.
    #[arg(long)]
    reverse: bool,
    /// Full-size study: 1000 replications with M = 400.
    #[arg(long)]
    paper: bool,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct VarArgs {
    /// CSV file with one header row.
    #[arg(long)]
    input: PathBuf,
    /// Return column name.
    #[arg(long)]
    column: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    alpha: f64,
    /// Rolling estimation window length.
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct DmArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    realized: String,
    #[arg(long)]
    benchmark: String,
    #[arg(long)]
    competitor: String,
    #[arg(long, value_enum)]
    loss: DmLossArg,
    #[arg(long)]
    alpha: f64,
    /// Newey-West lag (default: floor(4 (T/100)^(2/9))).
    #[arg(long)]
    lag: Option<usize>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Expectile,
    Quantile,
}

impl From<KindArg> for Functional {
    fn from(kind: KindArg) -> Functional {
        match kind {
            KindArg::Expectile => Functional::Expectile,
            KindArg::Quantile => Functional::Quantile,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DmLossArg {
    Squared,
    Tick,
}

impl From<DmLossArg> for DmLoss {
    fn from(loss: DmLossArg) -> DmLoss {
        match loss {
            DmLossArg::Squared => DmLoss::Squared,
            DmLossArg::Tick => DmLoss::Tick,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    SampleQuantile,
    Normal,
    CaviarSy,
    CaviarAsy,
}

impl From<MethodArg> for VarMethod {
    fn from(method: MethodArg) -> VarMethod {
        match method {
            MethodArg::SampleQuantile => VarMethod::SampleQuantile,
            MethodArg::Normal => VarMethod::NormalFit,
            MethodArg::CaviarSy => VarMethod::CaviarSy,
            MethodArg::CaviarAsy => VarMethod::CaviarAsy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    Mse,
    E1,
    E2,
    E3,
    Q1,
    Q2,
}

fn main() {
    let cli = Cli::parse();
    let exit_code = match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(exit_code);
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = match &cli.command {
        Command::Test(a) => a.common.threads,
        Command::Murphy(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::Var(a) => a.common.threads,
        Command::Dm(a) => a.common.threads,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("--threads: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Murphy(args) => cmd_murphy(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Var(args) => cmd_var(args),
        Command::Dm(args) => cmd_dm(args),
    }
}

fn resolve_seed(explicit: Option<u64>) -> Result<u64, Error> {
    if let Some(seed) = explicit {
        return Ok(seed);
    }
    match std::env::var("MT_SEED") {
        Ok(text) => text.parse::<u64>().map_err(|_| {
            Error::InvalidArgument(format!("MT_SEED must be an unsigned integer, got `{text}`"))
        }),
        Err(_) => Ok(0),
    }
}

fn emit(common: &CommonOpts, text: &str) -> Result<(), Error> {
    match &common.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parse `all`, `subsample:N`, or `linspace:lo:hi:N`. `all` falls back to a
/// seeded subsample when the full sample-point grid would be too large.
fn parse_grid(
    text: &str,
    panel: &ForecastPanel,
    pairs: &[PanelSlice],
    seed: u64,
) -> Result<ThetaGrid, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let mode = match parts.as_slice() {
        ["all"] => return build_default_theta_grid(panel, pairs, seed),
        ["subsample", n] => GridMode::Subsample {
            n: n.parse()
                .map_err(|_| Error::InvalidArgument(format!("--grid: bad count `{n}`")))?,
            seed,
        },
        ["linspace", lo, hi, n] => {
            let number = |s: &str| -> Result<f64, Error> {
                s.parse()
                    .map_err(|_| Error::InvalidArgument(format!("--grid: bad number `{s}`")))
            };
            GridMode::Linspace {
                lo: number(lo)?,
                hi: number(hi)?,
                n: n.parse()
                    .map_err(|_| Error::InvalidArgument(format!("--grid: bad count `{n}`")))?,
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "--grid must be `all`, `subsample:N`, or `linspace:lo:hi:N`, got `{text}`"
            )))
        }
    };
    build_theta_grid(panel, pairs, mode)
}

fn load_panel(opts: &PanelOpts) -> Result<(ForecastPanel, Alpha, Functional), Error> {
    let mut columns = Vec::with_capacity(1 + opts.competitors.len());
    columns.push(opts.benchmark.clone());
    columns.extend(opts.competitors.iter().cloned());
    let panel = read_panel_csv_path(&opts.input, &opts.realized, &columns)?;
    Ok((panel, Alpha::new(opts.alpha)?, opts.kind.into()))
}

#[derive(Serialize)]
struct TestOutput<'a> {
    schema: u32,
    test: &'a TestReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    dm: Option<&'a DmReport>,
}

fn cmd_test(args: TestArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.common.seed)?;
    let (panel, alpha, kind) = load_panel(&args.panel)?;
    let pairs = if args.all_pairs {
        panel.all_ordered_pairs()
    } else {
        panel.pairs_against(0)?
    };
    let grid = parse_grid(&args.grid, &panel, &pairs, seed)?;
    let config = BootstrapConfig::new(args.bootstrap_m, args.block.resolve()?, seed, args.levels)?;
    let report = recentered_bootstrap_test(&panel, &pairs, kind, alpha, &grid, &config)?;
    let dm = match args.with_dm {
        Some(loss) => Some(dm_test(&panel, pairs[0], loss.into(), alpha, DmLag::Auto)?),
        None => None,
    };
    let text = report_to_json(&TestOutput {
        schema: 1,
        test: &report,
        dm: dm.as_ref(),
    })?;
    emit(&args.common, &text)
}

fn cmd_murphy(args: MurphyArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.common.seed)?;
    let (panel, alpha, kind) = load_panel(&args.panel)?;
    let pairs = panel.pairs_against(0)?;
    let grid = parse_grid(&args.grid, &panel, &pairs, seed)?;
    let murphy = murphy_curve(&panel, kind, alpha, &grid)?;

    let mut csv = String::from("theta");
    for k in 0..panel.series_count() {
        write!(csv, ",loss_{}", panel.name(k)).expect("string write");
    }
    for k in 1..panel.series_count() {
        write!(csv, ",diff_{}", panel.name(k)).expect("string write");
    }
    csv.push('\n');
    for (j, &theta) in grid.points().iter().enumerate() {
        write!(csv, "{theta}").expect("string write");
        for column in &murphy.losses {
            write!(csv, ",{}", column[j]).expect("string write");
        }
        for column in &murphy.losses[1..] {
            write!(csv, ",{}", murphy.losses[0][j] - column[j]).expect("string write");
        }
        csv.push('\n');
    }
    emit(&args.common, &csv)
}

fn parse_design(args: &SimulateArgs) -> Result<Design, Error> {
    let setting = || -> Result<&str, Error> {
        args.setting
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("--setting is required for this design".into()))
    };
    let noisy = |name: &str| -> Result<NoisySetting, Error> {
        Ok(match name {
            "exact" => NoisySetting::Exact,
            "noise-low" => NoisySetting::Noisy { sigma2: 0.04 },
            "lfc" => NoisySetting::lfc(),
            "noise-high" => NoisySetting::Noisy { sigma2: 1.0 },
            "uncond" => NoisySetting::Unconditional { sigma2: 0.25 },
            "uncond-high" => NoisySetting::Unconditional { sigma2: 1.0 },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "--setting: unknown noisy setting `{name}` (expected exact, noise-low, \
                     lfc, noise-high, uncond, uncond-high)"
                )))
            }
        })
    };
    let design = match args.design {
        DesignArg::Mse => {
            let scenario = args.scenario.ok_or_else(|| {
                Error::InvalidArgument("--scenario is required for the mse design".into())
            })?;
            Design::MseVsBregman { scenario }
        }
        DesignArg::E1 => Design::E1 {
            setting: noisy(setting()?)?,
            alpha: args.alpha,
        },
        DesignArg::Q1 => Design::Q1 {
            setting: noisy(setting()?)?,
            alpha: args.alpha,
        },
        DesignArg::E2 => Design::E2 {
            setting: match setting()? {
                "lfc" => E2Setting::Lfc,
                "beta-low" => E2Setting::BetaLow,
                "beta-med" => E2Setting::BetaMed,
                "beta-high" => E2Setting::BetaHigh,
                "corr-low" => E2Setting::CorrLow,
                "corr-high" => E2Setting::CorrHigh,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "--setting: unknown e2 setting `{other}`"
                    )))
                }
            },
        },
        DesignArg::E3 => Design::E3 {
            setting: match setting()? {
                "lfc" => E3Setting::Lfc,
                "arch1" => E3Setting::Arch1,
                "garch11" => E3Setting::Garch11,
                "garch22" => E3Setting::Garch22,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "--setting: unknown e3 setting `{other}`"
                    )))
                }
            },
        },
        DesignArg::Q2 => Design::Q2 {
            setting: match setting()? {
                "lfc" => Q2Setting::Lfc,
                "no-noise" => Q2Setting::NoNoise,
                "correct" => Q2Setting::CorrectModel,
                "true-w2" => Q2Setting::TrueSecondSlope,
                "true-mean" => Q2Setting::TrueMean,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "--setting: unknown q2 setting `{other}`"
                    )))
                }
            },
            alpha: args.alpha,
        },
    };
    Ok(design)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.common.seed)?;
    let design = parse_design(&args)?;
    let spec = StudySpec {
        design,
        t_p: args.t_p,
        replications: args.reps.unwrap_or(if args.paper { 1000 } else { 200 }),
        bootstrap_m: args.bootstrap_m.unwrap_or(if args.paper { 400 } else { 200 }),
        block: args.block.resolve()?,
        levels: args.levels.clone(),
        seed,
        with_dm: args.with_dm.map(DmLoss::from),
        reverse_roles: args.reverse,
    };
    let result = run_rejection_study(&spec)?;

    let mut csv = String::from(
        "design,t_p,replications,bootstrap_m,level,rejection_frequency,dm_rejection_frequency\n",
    );
    for row in &result.rows {
        let dm = row
            .dm_rejection_frequency
            .map(|f| f.to_string())
            .unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            result.design_label,
            result.t_p,
            result.replications,
            result.bootstrap_m,
            row.level,
            row.rejection_frequency,
            dm
        )
        .expect("string write");
    }
    emit(&args.common, &csv)
}

#[derive(Serialize)]
struct SummaryX100 {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct VarOutput<'a> {
    schema: u32,
    report: &'a BacktestReport,
    /// Summary statistics scaled by 100, the usual presentation for daily
    /// log returns held in decimal units.
    summary_x100: SummaryX100,
}

fn cmd_var(args: VarArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.common.seed)?;
    let file = std::fs::File::open(&args.input)?;
    let returns = read_series_csv(file, &args.column)?;
    let report = rolling_var_backtest(&returns, args.method.into(), args.alpha, args.window, seed)?;
    let text = report_to_json(&VarOutput {
        schema: 1,
        report: &report,
        summary_x100: SummaryX100 {
            mean: 100.0 * report.mean,
            std: 100.0 * report.std,
            min: 100.0 * report.min,
            max: 100.0 * report.max,
        },
    })?;
    emit(&args.common, &text)
}

#[derive(Serialize)]
struct DmOutput<'a> {
    schema: u32,
    dm: &'a DmReport,
}

fn cmd_dm(args: DmArgs) -> Result<(), Error> {
    let columns = vec![args.benchmark.clone(), args.competitor.clone()];
    let panel = read_panel_csv_path(&args.input, &args.realized, &columns)?;
    let alpha = Alpha::new(args.alpha)?;
    let lag = args.lag.map_or(DmLag::Auto, DmLag::Fixed);
    let report = dm_test(&panel, PanelSlice::new(0, 1)?, args.loss.into(), alpha, lag)?;
    let text = report_to_json(&DmOutput {
        schema: 1,
        dm: &report,
    })?;
    emit(&args.common, &text)
}
