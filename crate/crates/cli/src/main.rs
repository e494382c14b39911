use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regensip::bounds::evaluate_named;
use regensip::config::ExperimentConfig;
use regensip::coupling::{phi_decomposition, CouplingBundle};
use regensip::harness::{
    certify_bound, experiment_greeks, inspect, maxima_scaling_experiment, run_phi_diagnostics, run_rate_experiment,
    run_tail_experiment, Verdict,
};
use regensip::output::{fmt_float, ExperimentOutput, RunManifest, Table};
use regensip::{Error, Result};

/// Strong-approximation experiments for regenerative cumulative processes.
#[derive(Parser)]
#[command(name = "regensip", version)]
struct Cli {
    /// Worker threads for replication parallelism (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one path of the cumulative process on a uniform grid.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Horizon (default: first entry of t_grid).
        #[arg(long)]
        t: Option<f64>,
        /// Grid step (default: experiment.grid_step).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Estimate the drift/covariance parameters from simulated cycles.
    Greeks {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100_000)]
        cycles: usize,
        /// Jackknife groups for the standard errors.
        #[arg(long, default_value_t = 20)]
        groups: usize,
    },
    /// Build one coupled replication and write its decomposition.
    Couple {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Evaluate a closed-form bound; prints `name,value,region,constants`.
    Bounds {
        name: String,
        /// Parameters as `k=v` pairs.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        /// Parameters as `--key value` pairs.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        rest: Vec<String>,
    },
    /// Certify a bound against an exact or Monte Carlo oracle.
    Certify {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        rest: Vec<String>,
    },
    /// Rate experiment: log-log slope of the median sup-deviation.
    Rate(RunArgs),
    /// Tail experiment: exceedance probabilities and the fitted constant.
    Tail(RunArgs),
    /// Per-term tail diagnostics of the error decomposition.
    Phis(RunArgs),
    /// Scaling of cycle maxima.
    Maxima(RunArgs),
}

fn parse_params(pairs: &[String], rest: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let num = |k: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("parameter {k}: cannot parse '{v}' as a number")))
    };
    for p in pairs.iter().filter(|p| !p.is_empty()) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected k=v, got '{p}'")))?;
        out.insert(k.trim().to_string(), num(k, v.trim())?);
    }
    let mut it = rest.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::InvalidParameter(format!("expected --key, got '{flag}'")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.insert(k.to_string(), num(k, v)?);
            continue;
        }
        let v = it
            .next()
            .ok_or_else(|| Error::InvalidParameter(format!("missing value for --{key}")))?;
        out.insert(key.to_string(), num(key, v)?);
    }
    Ok(out)
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::from_path(path)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn finish(name: &str, run: &RunArgs, cfg: &ExperimentConfig, out: ExperimentOutput, verdict: Option<Verdict>) -> Result<Option<Verdict>> {
    out.write(&run.out)?;
    RunManifest::new(name, &run.config, &run.out, cfg.rng.root_seed).append(&run.out)?;
    if let Some(v) = verdict {
        println!("{} {name}", v.as_str());
    }
    Ok(verdict)
}

fn plain_output(cfg: &ExperimentConfig, results: Table, report: serde_json::Value) -> Result<ExperimentOutput> {
    Ok(ExperimentOutput {
        snapshot: cfg.snapshot()?,
        results,
        report,
        plots: Vec::new(),
    })
}

fn dispatch(command: Command) -> Result<Option<Verdict>> {
    match command {
        Command::Simulate { run, t, step, replication } => {
            let cfg = load(&run.config)?;
            let t = t.unwrap_or(cfg.experiment.t_grid[0]);
            let step = step.unwrap_or(cfg.experiment.grid_step);
            let table = inspect::simulate_table(&cfg.model, t, step, cfg.rng.root_seed, replication)?;
            let report = serde_json::json!({
                "experiment": "simulate", "model": cfg.model.family(), "t": t, "step": step,
                "root_seed": cfg.rng.root_seed, "replication": replication,
                "tool_version": env!("CARGO_PKG_VERSION"),
            });
            finish("simulate", &run, &cfg, plain_output(&cfg, table, report)?, None)
        }
        Command::Greeks { run, cycles, groups } => {
            let cfg = load(&run.config)?;
            let (table, report) = inspect::greeks_table(&cfg.model, cfg.experiment.p, cycles, groups, cfg.rng.root_seed)?;
            finish("greeks", &run, &cfg, plain_output(&cfg, table, report)?, None)
        }
        Command::Couple { run, t, replication } => {
            let cfg = load(&run.config)?;
            let t = t.unwrap_or(cfg.experiment.t_grid[0]);
            regensip::coupling::check_mode(&cfg.model, cfg.coupling.mode)?;
            let greeks = experiment_greeks(&cfg)?;
            let bundle = CouplingBundle::build(&cfg.model, &greeks, cfg.coupling.mode, t, cfg.rng.root_seed, replication)?;
            let dec = phi_decomposition(&bundle, t, cfg.experiment.grid_step)?;
            let table = inspect::couple_table(&bundle, t, cfg.experiment.grid_step)?;
            let report = serde_json::json!({
                "experiment": "couple", "model": cfg.model.family(), "coupling_mode": cfg.coupling.mode.as_str(),
                "t": t, "root_seed": cfg.rng.root_seed, "replication": replication,
                "residual": dec.residual, "tolerance": dec.tolerance(),
                "sup_deviation": dec.deviation.iter().fold(0.0_f64, |a, v| a.max(*v)),
                "sup_phi": (0..8).map(|q| dec.sup_phi(q)).collect::<Vec<_>>(),
                "greeks": greeks.to_report(),
                "tool_version": env!("CARGO_PKG_VERSION"),
            });
            finish("couple", &run, &cfg, plain_output(&cfg, table, report)?, None)
        }
        Command::Bounds { name, params, rest } => {
            let params = parse_params(&params, &rest)?;
            let r = evaluate_named(&name, &params)?;
            println!("{},{},{},{}", name, fmt_float(r.value), r.region.as_str(), r.constants_string());
            Ok(None)
        }
        Command::Certify { name, config, out, params, rest } => {
            let params = parse_params(&params, &rest)?;
            let cfg = config.as_deref().map(load).transpose()?;
            let seed = cfg.as_ref().map_or(0, |c| c.rng.root_seed);
            let rec = certify_bound(&name, &params, seed)?;
            if let Some(dir) = &out {
                let output = ExperimentOutput {
                    snapshot: cfg.as_ref().map(|c| c.snapshot()).transpose()?.unwrap_or_default(),
                    results: rec.to_table(),
                    report: serde_json::json!({
                        "experiment": "certify", "root_seed": seed, "record": rec,
                        "verdict": rec.verdict.as_str(), "tool_version": env!("CARGO_PKG_VERSION"),
                    }),
                    plots: Vec::new(),
                };
                output.write(dir)?;
                let cpath = config.clone().unwrap_or_default();
                RunManifest::new("certify", &cpath, dir, seed).append(dir)?;
            }
            println!("{}", rec.summary_line());
            Ok(Some(rec.verdict))
        }
        Command::Rate(run) => {
            let cfg = load(&run.config)?;
            let fit = run_rate_experiment(&cfg)?;
            eprintln!("slope {} (ci {:?}), threshold {}", fit.slope, fit.slope_ci, fit.threshold);
            finish("rate", &run, &cfg, fit.to_output(&cfg)?, Some(fit.verdict))
        }
        Command::Tail(run) => {
            let cfg = load(&run.config)?;
            let rep = run_tail_experiment(&cfg)?;
            eprintln!("a_hat {} spread {}", rep.a_hat, rep.spread);
            finish("tail", &run, &cfg, rep.to_output(&cfg)?, Some(rep.verdict))
        }
        Command::Phis(run) => {
            let cfg = load(&run.config)?;
            let rep = run_phi_diagnostics(&cfg)?;
            finish("phis", &run, &cfg, rep.to_output(&cfg)?, Some(rep.verdict))
        }
        Command::Maxima(run) => {
            let cfg = load(&run.config)?;
            let rep = maxima_scaling_experiment(&cfg)?;
            finish("maxima", &run, &cfg, rep.to_output(&cfg)?, Some(rep.verdict))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(Some(Verdict::Fail)) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
