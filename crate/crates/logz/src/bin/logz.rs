use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use logz::config::{ModelConfig, RunConfig};
use logz::error::{LogzError, Result};
use logz::{diagnostics, estimator, schedule};

#[derive(Parser)]
#[command(
    name = "logz",
    version,
    about = "Estimate log normalizing constants of log-concave densities via annealed Langevin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the annealing schedule and print it
    Schedule(CommonOpts),
    /// Run the full estimator and print an estimate record
    Estimate(CommonOpts),
    /// Run several independent pipelines and print per-phase statistics
    Replicate {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of independent pipelines
        #[arg(long, short = 'r', default_value_t = 10)]
        replicates: usize,
    },
    /// Print the reference value for models with a closed form or quadrature
    Oracle(CommonOpts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML run configuration; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Outer failure probability for the median trick
    #[arg(long)]
    mu_tilde: Option<f64>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, env = "LOGZ_WORKERS")]
    workers: Option<usize>,
    /// Write machine output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig> {
        let path = self.config.as_deref().ok_or_else(|| {
            LogzError::Config("a --config file naming the model is required".into())
        })?;
        let mut cfg = RunConfig::from_path(path)?;
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.mu_tilde {
            cfg.mu_tilde = Some(v);
        }
        if let Some(v) = &self.regime {
            cfg.regime = v.clone();
        }
        if let Some(v) = &self.preset {
            cfg.preset = v.clone();
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        Ok(cfg)
    }

    fn format(&self, cfg: &RunConfig) -> Result<OutputFormat> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match cfg.output.as_ref().and_then(|o| o.format.as_deref()) {
            None | Some("json") => Ok(OutputFormat::Json),
            Some("csv") => Ok(OutputFormat::Csv),
            Some(other) => Err(LogzError::Config(format!(
                "output format must be json or csv, got '{other}'"
            ))),
        }
    }

    fn emit(&self, cfg: &RunConfig, text: &str) -> Result<()> {
        let path = self
            .out
            .clone()
            .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
        match path {
            Some(p) => std::fs::write(p, text)?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                if !text.ends_with('\n') {
                    stdout.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }
}

fn cmd_schedule(opts: &CommonOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let p = cfg.build_potential()?;
    let sched = schedule::build_schedule(&p, &cfg.schedule_config()?)?;
    let text = match opts.format(&cfg)? {
        OutputFormat::Csv => sched.to_csv(),
        OutputFormat::Json => {
            let mut v = serde_json::to_value(&sched)?;
            v["config_digest"] = json!(cfg.digest());
            serde_json::to_string_pretty(&v)?
        }
    };
    opts.emit(&cfg, &text)?;
    eprintln!(
        "{}: {} phases, initial variance {:.6e}, total chain length {}",
        p.name,
        sched.m,
        sched.sigma2_0,
        sched.total_cost()
    );
    Ok(())
}

fn cmd_estimate(opts: &CommonOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let p = cfg.build_potential()?;
    let sc = cfg.schedule_config()?;
    let mut result = estimator::with_workers(cfg.workers, || match cfg.mu_tilde {
        Some(mt) => estimator::median_estimate(&p, &sc, mt, cfg.seed),
        None => estimator::estimate(&p, &sc, cfg.seed),
    })?;
    result.config_digest = Some(cfg.digest());
    let mut v = serde_json::to_value(&result)?;
    // posterior models report the evidence of the underlying data model
    if matches!(
        cfg.model,
        ModelConfig::RadiataPine { .. } | ModelConfig::PimaLogistic { .. }
    ) {
        v["log_evidence"] = json!(result.log_z_hat - p.log_offset);
    }
    let text = match opts.format(&cfg)? {
        OutputFormat::Json => serde_json::to_string_pretty(&v)?,
        OutputFormat::Csv => {
            let mut s = String::from("log_z_hat,cost,seed,wall_time_secs,config_digest\n");
            s.push_str(&format!(
                "{:.17e},{},{},{:.3},{}\n",
                result.log_z_hat,
                result.cost,
                result.seed,
                result.wall_time_secs,
                cfg.digest()
            ));
            s
        }
    };
    opts.emit(&cfg, &text)?;
    eprintln!(
        "{}: log Z = {:.6} (cost {}, {:.1}s)",
        p.name, result.log_z_hat, result.cost, result.wall_time_secs
    );
    Ok(())
}

fn cmd_replicate(opts: &CommonOpts, replicates: usize) -> Result<()> {
    let cfg = opts.resolve()?;
    let p = cfg.build_potential()?;
    let sc = cfg.schedule_config()?;
    let seeds: Vec<u64> = (0..replicates as u64).map(|i| cfg.seed + i).collect();
    let report = estimator::with_workers(cfg.workers, || {
        diagnostics::replicate_report(&p, &sc, &seeds)
    })?;
    let text = match opts.format(&cfg)? {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => {
            let mut v = serde_json::to_value(&report)?;
            v["config_digest"] = json!(cfg.digest());
            serde_json::to_string_pretty(&v)?
        }
    };
    opts.emit(&cfg, &text)?;
    eprintln!(
        "{}: {} pipelines over {} phases",
        p.name,
        replicates,
        report.per_phase.len()
    );
    Ok(())
}

fn cmd_oracle(opts: &CommonOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let value = cfg.oracle_value()?;
    let text = serde_json::to_string_pretty(&json!({
        "oracle_value": value,
        "config_digest": cfg.digest(),
    }))?;
    opts.emit(&cfg, &text)?;
    eprintln!("oracle value: {value:.6}");
    Ok(())
}

fn exit_code(err: &LogzError) -> u8 {
    match err {
        LogzError::Divergence { .. } => 3,
        LogzError::OracleUnavailable(_) | LogzError::UnsupportedDimension(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Schedule(opts) => cmd_schedule(opts),
        Command::Estimate(opts) => cmd_estimate(opts),
        Command::Replicate { common, replicates } => cmd_replicate(common, *replicates),
        Command::Oracle(opts) => cmd_oracle(opts),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
