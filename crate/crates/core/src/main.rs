use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deconwave::bench::{
    calibrate_epsilon, lower_bound_exponent, rate_sweep, run::summary, run_experiment,
    selftest::run_selftest, theoretical_exponent, write_outputs, ExperimentSpec, KernelRecipe,
    RateQuery, RateSweepSpec, SweepTarget,
};
use deconwave::estimators::{
    estimate, write_coefficients, EstimatorConfig, LevelScaling, Method, ThresholdScale,
};
use deconwave::model::io::{read_kernels, read_observations, write_kernels, write_observations};
use deconwave::model::simulate_replication;
use deconwave::signals::{psnr, test_function, write_signal};
use deconwave::{Error, Result};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

/// Multichannel wavelet deconvolution with block thresholding.
#[derive(Parser)]
#[command(name = "deconwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate blurred noisy observations of a test function.
    Simulate(SimulateArgs),
    /// Estimate a signal (or derivative) from observation and kernel files.
    Estimate(EstimateArgs),
    /// Run a replicated PSNR experiment from a JSON config.
    Bench(BenchArgs),
    /// Rate exponents, and optionally an empirical rate sweep.
    Rates(RatesArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "Wave")]
    function: String,
    /// Number of channels.
    #[arg(long)]
    n: usize,
    /// Kernel recipe as JSON, e.g. '{"kind":"index","scale":0.5}'.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    bsnr: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replication: u64,
    /// Observation file to write.
    #[arg(long)]
    out: PathBuf,
    /// Kernel file to write.
    #[arg(long)]
    kernels_out: PathBuf,
    /// Optionally write the noise-free target sampled on the grid.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    kernels: PathBuf,
    #[arg(long, default_value = "BlockJS")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    d: u32,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long)]
    j1: Option<u32>,
    #[arg(long)]
    j2: Option<u32>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    term_lambda: Option<f64>,
    #[arg(long, default_value = "nominal")]
    threshold_scale: ThresholdScale,
    /// `rho` or `noise_adjusted`.
    #[arg(long, default_value = "rho")]
    level_scaling: LevelScaling,
    /// Signal file to write; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raw and shrunk coefficients as CSV.
    #[arg(long)]
    coeffs_out: Option<PathBuf>,
    /// Test function to score the estimate against; prints a `psnr,...` row.
    #[arg(long)]
    truth: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Worker threads; overrides DECONWAVE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    d: u32,
    /// Also run an empirical sweep over these channel counts.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    /// Sweep target: a test function name or `atom:J:K`.
    #[arg(long, default_value = "atom:4:5")]
    target: String,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 20)]
    replications: usize,
    #[arg(long)]
    j1: Option<u32>,
    #[arg(long)]
    j2: Option<u32>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn open(path: &PathBuf) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let f = test_function(&a.function)?;
    let recipe = match &a.kernel {
        Some(json) => {
            serde_json::from_str(json).map_err(|e| Error::Config(format!("kernel recipe: {e}")))?
        }
        None => KernelRecipe::default(),
    };
    let channels = recipe.channels(a.n, a.seed)?;
    let band = (a.grid as i64 - 1) / 2;
    let f_hat = f.fourier(band);
    let epsilon = match (a.epsilon, a.bsnr) {
        (Some(e), _) => e,
        (None, Some(b)) => calibrate_epsilon(&f_hat, &channels, a.grid, b)?,
        (None, None) => unreachable!("clap requires one of --epsilon, --bsnr"),
    };
    let obs = simulate_replication(&f_hat, &channels, epsilon, a.seed, a.replication)?;
    write_observations(&obs, create(&a.out)?)?;
    write_kernels(&channels, band, create(&a.kernels_out)?)?;
    if let Some(path) = &a.truth_out {
        write_signal(&f.sample(a.grid, 0), create(path)?)?;
    }
    eprintln!("epsilon={epsilon} rho_n={}", channels.rho_n());
    Ok(())
}

fn estimate_cmd(a: EstimateArgs) -> Result<()> {
    let obs = read_observations(open(&a.obs)?)?;
    let channels = read_kernels(open(&a.kernels)?)?;
    let mut config = EstimatorConfig {
        j1: a.j1,
        j2: a.j2,
        block_size: a.block_size,
        term_lambda: a.term_lambda,
        threshold_scale: a.threshold_scale,
        level_scaling: a.level_scaling,
        ..EstimatorConfig::new(a.method, a.d)
    };
    if let Some(l) = a.lambda {
        config.lambda = l;
    }
    let est = estimate(&obs, &channels, &config, a.grid)?;
    match &a.out {
        Some(path) => write_signal(&est.signal, create(path)?)?,
        None => write_signal(&est.signal, std::io::stdout().lock())?,
    }
    if let Some(path) = &a.coeffs_out {
        write_coefficients(&est, create(path)?)?;
    }
    if let Some(name) = &a.truth {
        let truth = test_function(name)?.sample(a.grid, a.d);
        let p = psnr(&est.signal, &truth)?;
        // stdout carries the signal unless it went to a file
        let mut sink: Box<dyn Write> = if a.out.is_some() {
            Box::new(std::io::stdout().lock())
        } else {
            Box::new(std::io::stderr().lock())
        };
        writeln!(sink, "metric,value")?;
        writeln!(sink, "psnr,{p}")?;
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let spec = ExperimentSpec::from_file(&a.config)?;
    let result = run_experiment(&spec, a.seed, a.threads)?;
    let files = write_outputs(&result, &a.out)?;
    print!("{}", summary(&result.rows));
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn sweep_target(text: &str) -> Result<SweepTarget> {
    if let Some(rest) = text.strip_prefix("atom:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let parsed = match parts.as_slice() {
            [j, k] => j.parse().ok().zip(k.parse().ok()),
            _ => None,
        };
        let (j, k) = parsed.ok_or_else(|| {
            Error::Argument(format!("atom target must be atom:J:K, got `{text}`"))
        })?;
        return Ok(SweepTarget::Atom { j, k });
    }
    Ok(SweepTarget::Function(test_function(text)?))
}

fn rates_cmd(a: RatesArgs) -> Result<()> {
    let q = RateQuery {
        s: a.s,
        p: a.p,
        r: a.r,
        delta: a.delta,
        d: a.d,
    };
    let e = theoretical_exponent(&q)?;
    println!("{}", e.exponent);
    println!("log_factor={}", e.log_factor);
    println!("covered={}", e.covered);
    println!("lower_bound_exponent={}", lower_bound_exponent(&q)?);
    if a.sweep.is_empty() {
        return Ok(());
    }
    let mut spec = RateSweepSpec::new(
        sweep_target(&a.target)?,
        a.d,
        a.sigma,
        a.sweep.clone(),
        a.epsilon,
    );
    spec.replications = a.replications;
    spec.j1 = a.j1;
    spec.j2 = a.j2;
    spec.block_size = a.block_size;
    spec.s = a.s;
    let sweep = rate_sweep(&spec, a.seed, a.threads)?;
    println!("n,rho_n,mise");
    for p in &sweep.points {
        println!("{},{},{}", p.n, p.rho_n, p.mise);
    }
    match sweep.slope {
        Some(s) => println!("slope={s}"),
        None => println!("slope=degenerate"),
    }
    println!("theoretical_slope={}", sweep.theoretical_slope);
    Ok(())
}

fn selftest_cmd() -> ExitCode {
    let checks = run_selftest();
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_CHECK)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Rates(a) => rates_cmd(a),
        Command::Selftest => return selftest_cmd(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_IO
            })
        }
    }
}
