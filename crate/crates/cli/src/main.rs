//! `cluster-extremes`: simulate benchmark series, estimate cluster size
//! probabilities and the extremal index, and run the Monte Carlo study.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cluster_extremes::experiment::NOT_IMPLEMENTED;
use cluster_extremes::panjer::{smooth_cluster_pmf_from, smooth_theta1_from};
use cluster_extremes::{
    blocks_theta, compound_profile, count_exceedances, emit_table, empirical_compound, hsing_pi,
    make_layout, panjer_invert, run_experiment, runs_theta, simulate, two_scale_threshold,
    EstimatorFailure, ExperimentConfig, ExtremalIndexReport, Process, ProcessKind, ProcessSpec,
    TimeSeries, TwoScaleSpec,
};
use serde_json::{json, Value};

const SEED_ENV: &str = "CLUSTER_EXTREMES_SEED";

#[derive(Debug, Parser)]
#[command(name = "cluster-extremes", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a benchmark process and write it as one value per line.
    Simulate(SimulateArgs),
    /// Estimate cluster size probabilities and the extremal index of a series.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo comparison and write the ratio table as CSV.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// squared_arch1, max_ar1, ar1_uniform or iid_gaussian.
    #[arg(long)]
    kind: ProcessKind,
    /// Extremal index of max_ar1.
    #[arg(long)]
    theta: Option<f64>,
    /// Intercept of squared_arch1.
    #[arg(long)]
    eta: Option<f64>,
    /// Slope of squared_arch1.
    #[arg(long)]
    lambda: Option<f64>,
    /// Innovation grid size of ar1_uniform.
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Discarded initial steps of squared_arch1.
    #[arg(long, default_value_t = cluster_extremes::simulate::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Series file, one value per line.
    #[arg(long, short)]
    input: PathBuf,
    /// Number of blocks k_n.
    #[arg(long = "k", alias = "k-n")]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Lower end of the smoothing window.
    #[arg(long, requires = "phi")]
    sigma: Option<f64>,
    /// Upper end of the smoothing window.
    #[arg(long, requires = "sigma")]
    phi: Option<f64>,
    /// Largest cluster size estimated.
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Also run the two-scale blocks and runs estimators.
    #[arg(long)]
    comparators: bool,
    /// n / s_n for the comparators; defaults to k_n / 2.
    #[arg(long)]
    s_ratio: Option<f64>,
    /// Look-ahead of the runs estimator; defaults to floor(r_n / 6).
    #[arg(long)]
    run_length: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Key-value configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Master seed; overrides the configuration file.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

type CliResult<T> = Result<T, String>;

/// Writes to standard output; a closed pipe downstream is not an error.
fn emit_stdout(text: &str) -> CliResult<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(format!("stdout: {e}")),
        _ => Ok(()),
    }
}

fn process_from(args: &SimulateArgs) -> Process {
    let defaults = args.kind.default_process();
    match defaults {
        Process::SquaredArch1 { eta, lambda } => Process::SquaredArch1 {
            eta: args.eta.unwrap_or(eta),
            lambda: args.lambda.unwrap_or(lambda),
        },
        Process::MaxAr1 { theta } => Process::MaxAr1 {
            theta: args.theta.unwrap_or(theta),
        },
        Process::Ar1Uniform { r } => Process::Ar1Uniform {
            r: args.r.unwrap_or(r),
        },
        Process::IidGaussian => Process::IidGaussian,
    }
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let spec = ProcessSpec {
        process: process_from(&args),
        n: args.n,
        seed: args.seed,
        burn_in: args.burn_in,
    };
    let series = simulate(&spec).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => series.write(path).map_err(|e| e.to_string()),
        None => emit_stdout(&series.to_text()),
    }
}

fn failure(estimator: &str, err: &cluster_extremes::Error) -> Value {
    serde_json::to_value(EstimatorFailure::new(estimator, err)).expect("failure serializes")
}

fn smoothed_json(series: &TimeSeries<f64>, args: &EstimateArgs, sigma: f64, phi: f64) -> Value {
    let profile = match compound_profile(series, args.k, sigma, phi) {
        Ok(p) => p,
        Err(e) => {
            return json!({
                "sigma": sigma, "phi": phi, "cluster_sizes": null, "theta1": null,
                "errors": [failure("smoothed", &e)],
            })
        }
    };
    let mut errors = Vec::new();
    let pi = smooth_cluster_pmf_from(&profile, args.m)
        .map_err(|e| errors.push(failure("pi_smooth", &e)))
        .ok();
    let theta = smooth_theta1_from(&profile)
        .map_err(|e| errors.push(failure("theta1_smooth", &e)))
        .ok();
    let excluded = pi
        .as_ref()
        .map(|s| s.excluded.clone())
        .or_else(|| theta.as_ref().map(|s| s.excluded.clone()))
        .unwrap_or_default();
    let included = pi
        .as_ref()
        .map(|s| s.included_length)
        .or_else(|| theta.as_ref().map(|s| s.included_length));
    json!({
        "sigma": sigma,
        "phi": phi,
        "pieces": profile.pieces.len(),
        "cluster_sizes": pi.map(|s| s.value),
        "theta1": theta.map(|s| s.value),
        "included_length": included,
        "excluded": excluded,
        "errors": errors,
    })
}

fn comparators_json(series: &TimeSeries<f64>, args: &EstimateArgs, block_length: usize) -> CliResult<Value> {
    let bench = TwoScaleSpec::<f64>::benchmark(args.k, block_length);
    let two_scale = TwoScaleSpec::new(
        args.s_ratio.unwrap_or(bench.s_ratio),
        args.run_length.unwrap_or(bench.run_length),
    )
    .map_err(|e| e.to_string())?;
    let hsing = match hsing_pi(series, args.k, args.tau, &two_scale, args.m) {
        Ok(pi) => json!({"estimator": "hsing_pi", "cluster_sizes": pi, "error": null}),
        Err(e) => json!({"estimator": "hsing_pi", "cluster_sizes": null, "error": failure("hsing_pi", &e)}),
    };
    let blocks = match blocks_theta(series, args.k, args.tau, &two_scale) {
        Ok(t) => json!({"estimator": "blocks_theta", "theta": t, "error": null}),
        Err(e) => json!({"estimator": "blocks_theta", "theta": null, "error": failure("blocks_theta", &e)}),
    };
    let runs = two_scale_threshold(series, args.tau, two_scale.s_ratio)
        .and_then(|u| runs_theta(series, u, two_scale.run_length).map(|t| (u, t)));
    let runs = match runs {
        Ok((u, t)) => json!({
            "estimator": "runs_theta", "theta": t, "threshold": u,
            "run_length": two_scale.run_length, "window_policy": "exclude-incomplete", "error": null,
        }),
        Err(e) => json!({
            "estimator": "runs_theta", "theta": null, "run_length": two_scale.run_length,
            "window_policy": "exclude-incomplete", "error": failure("runs_theta", &e),
        }),
    };
    Ok(json!({
        "s_ratio": two_scale.s_ratio,
        "results": [hsing, blocks, runs],
        "not_implemented": NOT_IMPLEMENTED,
    }))
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    let series = TimeSeries::<f64>::read(&args.input).map_err(|e| e.to_string())?;
    if args.m == 0 {
        return Err("--m must be at least 1".into());
    }
    let layout = make_layout(series.len(), args.k).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    let mut doc = json!({
        "input": args.input,
        "n": series.len(),
        "k_n": layout.block_count,
        "r_n": layout.block_length,
        "remainder": layout.remainder,
        "tau": args.tau,
        "m": args.m,
    });

    let (threshold, compound, cluster_sizes, report) = match count_exceedances(&series, &layout, args.tau) {
        Ok(counts) => {
            let p = empirical_compound(&counts, args.k).map_err(|e| e.to_string())?;
            let pi = panjer_invert(&p, args.m);
            let report = ExtremalIndexReport::from_parts(&p, &pi, args.m);
            if let Err(e) = &pi {
                errors.push(failure("pi_hat", e));
            }
            (json!(counts.threshold), json!(p), json!(pi.ok()), json!(report))
        }
        Err(e) => {
            errors.push(failure("threshold", &e));
            (Value::Null, Value::Null, Value::Null, Value::Null)
        }
    };
    doc["threshold"] = threshold;
    doc["compound"] = compound;
    doc["cluster_sizes"] = cluster_sizes;
    doc["report"] = report;
    doc["smoothed"] = match (args.sigma, args.phi) {
        (Some(sigma), Some(phi)) => smoothed_json(&series, &args, sigma, phi),
        _ => Value::Null,
    };
    doc["comparators"] = if args.comparators {
        comparators_json(&series, &args, layout.block_length)?
    } else {
        Value::Null
    };
    doc["errors"] = Value::Array(errors);
    let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
    text.push('\n');
    emit_stdout(&text)
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::read(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let table = run_experiment(&cfg, args.workers).map_err(|e| e.to_string())?;
    emit_table(&table, &args.out).map_err(|e| e.to_string())?;
    let failures: usize = table.cells.iter().map(|c| c.failures).sum();
    eprintln!(
        "wrote {} rows to {} ({} failed estimator evaluations); not implemented: {}",
        table.cells.len(),
        args.out.display(),
        failures,
        NOT_IMPLEMENTED.join(", ")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
