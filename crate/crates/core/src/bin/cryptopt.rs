use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cryptopt::calibration::{calibrate, filter_otm};
use cryptopt::fixture::{default_params, generate, FixtureSpec};
use cryptopt::io::{
    parse_chain_csv, read_calibration_json, write_calibration_json, write_chain_csv,
    write_error_csv, write_priced_chain_csv,
};
use cryptopt::mc::{mc_price, McConfig};
use cryptopt::metrics::{error_report, render_table};
use cryptopt::pricer::model_prices;
use cryptopt::{
    CalibrationConfig, CalibrationError, CalibrationResult, CosConfig, ErrorReport, IoError,
    MarketContext, McError, MetricsError, ModelKind, OptionChain, OptionQuote, OptionStyle,
    PricingError, Weights,
};

const SEED_ENV: &str = "CRYPTOPT_SEED";

#[derive(Parser)]
#[command(name = "cryptopt", version, about = "Price and calibrate crypto futures options")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate models per expiry and write calibration.json.
    Calibrate(CalibrateArgs),
    /// Price a chain with calibrated parameters and write priced_<model>.csv.
    Price(PriceArgs),
    /// Error tables per expiry and overall.
    Evaluate(PriceArgs),
    /// Monte Carlo price next to the analytic or Fourier price.
    McCheck(McArgs),
    /// Write a synthetic BTC-like chain generated from one model.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct CosArgs {
    /// Number of cosine terms.
    #[arg(long = "cos-n", default_value_t = 256)]
    cos_n: usize,
    /// Truncation range multiplier.
    #[arg(long = "cos-l", default_value_t = 10.0)]
    cos_l: f64,
}

impl CosArgs {
    fn config(&self) -> Result<CosConfig, CliError> {
        Ok(CosConfig::new(self.cos_n, self.cos_l)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightMode {
    Uniform,
    Invsq,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Model name or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, value_enum, default_value_t = WeightMode::Uniform)]
    weights: WeightMode,
    /// Calibrate on every quote instead of OTM quotes only.
    #[arg(long)]
    no_otm_filter: bool,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 4000)]
    max_iters: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    cos: CosArgs,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    input: PathBuf,
    /// Calibration JSON written by `calibrate`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use every quote instead of OTM quotes only.
    #[arg(long)]
    no_otm_filter: bool,
    #[command(flatten)]
    cos: CosArgs,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    params: PathBuf,
    /// Record to use when the file holds several models.
    #[arg(long)]
    model: Option<String>,
    /// Record to use when the file holds several expiries.
    #[arg(long)]
    expiry: Option<String>,
    #[arg(long)]
    spot: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    tau: f64,
    /// Defaults to the OTM side of the strike.
    #[arg(long)]
    style: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    #[arg(long, default_value_t = 512)]
    steps: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    cos: CosArgs,
}

#[derive(Args)]
struct FixtureArgs {
    /// Generating model.
    #[arg(long, default_value = "kou")]
    model: String,
    #[arg(long)]
    out: PathBuf,
    /// Standard deviation of multiplicative log noise.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 72_000.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    cos: CosArgs,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("input error: {0}")]
    Io(#[from] IoError),
    #[error("pricing error: {0}")]
    Pricing(#[from] PricingError),
    #[error("calibration error: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("monte carlo error: {0}")]
    Mc(#[from] McError),
    #[error("metrics error: {0}")]
    Metrics(#[from] MetricsError),
    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Pricing(_) => 4,
            CliError::Calibration(_) => 5,
            CliError::Mc(_) => 6,
            CliError::Metrics(_) => 7,
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(IoError::Io(e))
}

fn parse_models(name: &str) -> Result<Vec<ModelKind>, CliError> {
    if name.eq_ignore_ascii_case("all") {
        return Ok(ModelKind::ALL.to_vec());
    }
    name.split(',')
        .map(|m| m.parse().map_err(CliError::Usage))
        .collect()
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let chain = parse_chain_csv(&args.input)?;
    let models = parse_models(&args.model)?;
    let cos_cfg = args.cos.config()?;
    let cfg = CalibrationConfig {
        weights: match args.weights {
            WeightMode::Uniform => Weights::Uniform,
            WeightMode::Invsq => Weights::InverseSquaredPrice,
        },
        n_starts: args.starts,
        tol_objective: args.tol,
        max_iters: args.max_iters,
        otm_only: !args.no_otm_filter,
        seed: args.seed,
    };
    let groups = chain.expiries();
    let jobs: Vec<(ModelKind, usize)> = models
        .iter()
        .flat_map(|&m| (0..groups.len()).map(move |g| (m, g)))
        .collect();
    let results: Vec<Result<CalibrationResult, CalibrationError>> = jobs
        .par_iter()
        .map(|&(kind, g)| {
            log::info!("calibrating {kind} on {}", groups[g].label);
            calibrate(kind, &groups[g].quotes, &chain.context, &cfg, &cos_cfg)
        })
        .collect();
    let results: Vec<CalibrationResult> = results.into_iter().collect::<Result<_, _>>()?;

    fs::create_dir_all(&args.out).map_err(io_err)?;
    let path = args.out.join("calibration.json");
    write_calibration_json(&results, &path)?;
    for r in &results {
        println!(
            "{:<7}{:<8}objective {:.6e}  converged {}  iterations {}",
            r.params.kind().tag(),
            r.expiry_label,
            r.objective,
            r.converged,
            r.iterations
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// Calibrated parameters grouped by model in table order, each matched to
/// the chain's expiry groups.
struct Priced {
    kind: ModelKind,
    quotes: Vec<OptionQuote>,
    prices: Vec<f64>,
}

fn price_chain(
    chain: &OptionChain,
    params_path: &Path,
    otm_only: bool,
    cos_cfg: &CosConfig,
) -> Result<Vec<Priced>, CliError> {
    let results = read_calibration_json(params_path)?;
    if results.is_empty() {
        return Err(IoError::ParamsMismatch {
            model: "-".into(),
            reason: "params file holds no records".into(),
        }
        .into());
    }
    let groups = chain.expiries();
    let mut out = Vec::new();
    for kind in ModelKind::ALL {
        let records: Vec<&CalibrationResult> = results.iter().filter(|r| r.params.kind() == kind).collect();
        if records.is_empty() {
            continue;
        }
        let mut priced = Priced { kind, quotes: Vec::new(), prices: Vec::new() };
        for rec in records {
            let group = groups.iter().find(|g| g.label == rec.expiry_label).ok_or_else(|| IoError::ParamsMismatch {
                model: kind.tag().into(),
                reason: format!("expiry {} not in chain", rec.expiry_label),
            })?;
            let quotes = if otm_only { filter_otm(&group.quotes, &chain.context) } else { group.quotes.clone() };
            let options: Vec<(f64, OptionStyle)> = quotes.iter().map(|q| (q.strike, q.style)).collect();
            let prices = model_prices(&rec.params, &chain.context, &options, group.maturity, cos_cfg)?;
            priced.quotes.extend(quotes);
            priced.prices.extend(prices);
        }
        out.push(priced);
    }
    Ok(out)
}

fn run_price(args: &PriceArgs) -> Result<(), CliError> {
    let chain = parse_chain_csv(&args.input)?;
    let priced = price_chain(&chain, &args.params, !args.no_otm_filter, &args.cos.config()?)?;
    fs::create_dir_all(&args.out).map_err(io_err)?;
    for p in &priced {
        let path = args.out.join(format!("priced_{}.csv", p.kind.tag()));
        write_priced_chain_csv(&p.quotes, &p.prices, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_evaluate(args: &PriceArgs) -> Result<(), CliError> {
    let chain = parse_chain_csv(&args.input)?;
    let priced = price_chain(&chain, &args.params, !args.no_otm_filter, &args.cos.config()?)?;

    let mut scopes: Vec<String> = chain.expiries().into_iter().map(|g| g.label).collect();
    scopes.push("all".into());
    let mut text = String::new();
    let mut csv_rows: Vec<(ModelKind, ErrorReport)> = Vec::new();
    for scope in &scopes {
        let mut rows = Vec::new();
        for p in &priced {
            let (market, model): (Vec<f64>, Vec<f64>) = p
                .quotes
                .iter()
                .zip(&p.prices)
                .filter(|(q, _)| scope == "all" || &q.expiry_label == scope)
                .map(|(q, m)| (q.price, *m))
                .unzip();
            if market.is_empty() {
                continue;
            }
            let report = error_report(&market, &model, scope)?;
            rows.push((p.kind, report.clone()));
            csv_rows.push((p.kind, report));
        }
        if !rows.is_empty() {
            text.push_str(&render_table(scope, &rows));
            text.push('\n');
        }
    }

    fs::create_dir_all(&args.out).map_err(io_err)?;
    fs::write(args.out.join("errors.txt"), &text).map_err(io_err)?;
    let file = fs::File::create(args.out.join("errors.csv")).map_err(io_err)?;
    write_error_csv(&csv_rows, std::io::BufWriter::new(file))?;
    print!("{text}");
    Ok(())
}

fn run_mc_check(args: &McArgs) -> Result<(), CliError> {
    let results = read_calibration_json(&args.params)?;
    let model = args.model.as_deref().map(str::parse::<ModelKind>).transpose().map_err(CliError::Usage)?;
    let rec = results
        .iter()
        .find(|r| {
            model.is_none_or(|m| r.params.kind() == m)
                && args.expiry.as_ref().is_none_or(|e| &r.expiry_label == e)
        })
        .ok_or_else(|| CliError::Usage("no params record matches --model/--expiry".into()))?;
    let ctx = MarketContext::new(args.spot, args.rate)?;
    let style = match &args.style {
        Some(s) => s.parse().map_err(CliError::Usage)?,
        None if args.strike < args.spot => OptionStyle::Put,
        None => OptionStyle::Call,
    };
    let cfg = McConfig { n_paths: args.paths, n_steps: args.steps, seed: args.seed };
    let est = mc_price(&rec.params, &ctx, args.strike, args.tau, style, &cfg)?;
    let reference = model_prices(&rec.params, &ctx, &[(args.strike, style)], args.tau, &args.cos.config()?)?[0];
    let z = (reference - est.price) / est.std_error;
    println!(
        "{} {} {} K={} tau={} paths={} seed={}",
        rec.params.kind().tag(),
        rec.expiry_label,
        style,
        args.strike,
        args.tau,
        args.paths,
        args.seed
    );
    println!("mc        {:.10} +/- {:.10}", est.price, est.std_error);
    println!("reference {reference:.10}");
    println!("z         {z:.4}  within 3 s.e.: {}", z.abs() <= 3.0);
    Ok(())
}

fn run_fixture(args: &FixtureArgs) -> Result<(), CliError> {
    let kind: ModelKind = args.model.parse().map_err(CliError::Usage)?;
    let spec = FixtureSpec {
        spot: args.spot,
        rate: args.rate,
        noise: args.noise,
        seed: args.seed,
        ..FixtureSpec::btc_like(default_params(kind))
    };
    let chain = generate(&spec, &args.cos.config()?)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    write_chain_csv(&chain, &args.out)?;
    println!("wrote {} quotes to {}", chain.quotes.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Price(a) => run_price(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::McCheck(a) => run_mc_check(a),
        Command::Fixture(a) => run_fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cryptopt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
