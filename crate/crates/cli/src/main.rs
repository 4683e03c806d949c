mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padic_potts::gibbs::{MeasureOptions, SolvedModel, DEFAULT_BUDGET};
use padic_potts::recursion::{fixed_point_solve, log_from_hat};
use padic_potts::verify::{run_suite, CheckRecord, Suite};
use padic_potts::{ModelParams, PadicContext, Weight};
use serde::Serialize;

use config::{Cutoff, Overrides, RunConfig};

/// A configuration or precondition problem; exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl From<padic_potts::Error> for ConfigError {
    fn from(e: padic_potts::Error) -> Self {
        ConfigError(e.to_string())
    }
}

impl From<io::Error> for ConfigError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        ConfigError(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "padic-potts", version, about = "p-adic Gibbs measures of the countable-state Potts model on Cayley trees")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = "PADIC_POTTS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the translation-invariant boundary field.
    Solve(ModelArgs),
    /// Run verification suites and report pass/fail per check.
    Verify(VerifyArgs),
    /// Export the finite-volume measure table as CSV.
    Measure(ModelArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, env = "PADIC_POTTS_PRIME")]
    prime: Option<u64>,
    /// Tree order k (every vertex has k + 1 neighbours).
    #[arg(long, env = "PADIC_POTTS_ORDER")]
    order: Option<usize>,
    /// Coupling J as a rational (`5`, `10/3`) or p-adic literal.
    #[arg(long, env = "PADIC_POTTS_COUPLING", allow_hyphen_values = true)]
    coupling: Option<String>,
    /// `paper-example`, `geometric:<ratio>` or `explicit:<l0>,<l1>,...;tail=<rule>`.
    #[arg(long, env = "PADIC_POTTS_WEIGHT")]
    weight: Option<String>,
    /// Working precision N in p-adic digits.
    #[arg(long, env = "PADIC_POTTS_PRECISION")]
    precision: Option<u32>,
    #[arg(long, env = "PADIC_POTTS_DEPTH")]
    depth: Option<usize>,
    /// Alphabet cutoff q, or `auto` for the weight's working cutoff.
    #[arg(long, env = "PADIC_POTTS_CUTOFF")]
    cutoff: Option<Cutoff>,
    #[arg(long, env = "PADIC_POTTS_OUT")]
    out: Option<PathBuf>,
    /// Enumerate configurations on all cores.
    #[arg(long, env = "PADIC_POTTS_PARALLEL")]
    parallel: bool,
    /// Write JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "PADIC_POTTS_SUITE")]
    suite: Option<String>,
    /// Shift the solved field before the compatibility check (negative control).
    #[arg(long, env = "PADIC_POTTS_PERTURB")]
    perturb: bool,
    #[arg(long, env = "PADIC_POTTS_SEED")]
    seed: Option<u64>,
}

impl ModelArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            prime: self.prime,
            order: self.order,
            coupling: self.coupling.clone(),
            weight: self.weight.clone(),
            precision: self.precision,
            depth: self.depth,
            cutoff: self.cutoff,
            out: self.out.clone(),
            parallel: self.parallel,
            ..Overrides::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(&cli, a),
        Command::Verify(a) => cmd_verify(&cli, a),
        Command::Measure(a) => cmd_measure(&cli, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, ConfigError> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn model(cfg: &RunConfig) -> Result<(ModelParams, Weight), ConfigError> {
    let ctx = PadicContext::new(cfg.prime, cfg.precision)?;
    let j = match &cfg.coupling {
        Some(s) => ctx.parse(s)?,
        None => ctx.integer(cfg.prime as i64),
    };
    let params = ModelParams::new(ctx, cfg.order, j)?;
    let w = Weight::from_spec(&cfg.weight, &params)?;
    if !w.satisfies_l1() {
        return Err(padic_potts::Error::ConditionL1Violated.into());
    }
    Ok((params, w))
}

#[derive(Serialize)]
struct FieldEntry {
    i: usize,
    hat: String,
    log: String,
}

#[derive(Serialize)]
struct SolveReport {
    p: u64,
    k: usize,
    #[serde(rename = "J")]
    coupling: String,
    #[serde(rename = "N")]
    precision: u32,
    weight: String,
    iterations: usize,
    residual_norm: String,
    field: Vec<FieldEntry>,
}

fn cmd_solve(cli: &Cli, a: &ModelArgs) -> Result<bool, ConfigError> {
    let cfg = RunConfig::load(cli.config.as_deref(), a.overrides())?;
    let (params, w) = model(&cfg)?;
    let p = cfg.prime;
    let fp = fixed_point_solve(&w, &params, cfg.precision as i64)?;
    let h = log_from_hat(&fp.field, &w)?;
    let report = SolveReport {
        p,
        k: cfg.order,
        coupling: params.coupling().to_ratio().to_string(),
        precision: cfg.precision,
        weight: cfg.weight.to_string(),
        iterations: fp.iterations,
        residual_norm: fp.residual.display(p),
        field: fp
            .field
            .hat()
            .entries()
            .map(|(i, x)| FieldEntry {
                i,
                hat: x.to_string(),
                log: h.value(i).to_string(),
            })
            .collect(),
    };
    let mut out = output(&cfg.out)?;
    if a.json {
        serde_json::to_writer_pretty(&mut out, &report).map_err(|e| ConfigError(e.to_string()))?;
        writeln!(out)?;
    } else {
        writeln!(out, "# p={p} k={} J={} N={} weight={}", report.k, report.coupling, report.precision, report.weight)?;
        writeln!(out, "# iterations {} residual {}", report.iterations, report.residual_norm)?;
        for e in &report.field {
            writeln!(out, "hat[{}] = {}", e.i, e.hat)?;
            writeln!(out, "h[{}] = {}", e.i, e.log)?;
        }
    }
    Ok(true)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<bool, ConfigError> {
    let mut o = a.model.overrides();
    o.suite = a.suite.clone();
    o.perturb = a.perturb;
    o.seed = a.seed;
    let cfg = RunConfig::load(cli.config.as_deref(), o.clone())?;
    let suites: Vec<Suite> = match cfg.suite {
        Suite::All => Suite::EACH.to_vec(),
        s => vec![s],
    };
    let mut records: Vec<CheckRecord> = Vec::new();
    for s in suites {
        let v = cfg.verify_config(s, &o)?;
        let batch = run_suite(s, &v)?;
        if cfg.out.is_some() || !a.model.json {
            for r in &batch {
                println!("{r}");
            }
        }
        records.extend(batch);
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    if a.model.json || cfg.out.is_some() {
        let mut out = output(&cfg.out)?;
        serde_json::to_writer_pretty(&mut out, &records).map_err(|e| ConfigError(e.to_string()))?;
        writeln!(out)?;
    }
    eprintln!("{} checks, {} failed", records.len(), failed);
    Ok(failed == 0)
}

fn cmd_measure(cli: &Cli, a: &ModelArgs) -> Result<bool, ConfigError> {
    let cfg = RunConfig::load(cli.config.as_deref(), a.overrides())?;
    let (params, w) = model(&cfg)?;
    let p = cfg.prime;
    let n = cfg.depth.unwrap_or(1);
    let q = match cfg.cutoff {
        Cutoff::Auto => w.working_cutoff(),
        Cutoff::Fixed(q) => q,
    };
    let opts = MeasureOptions {
        budget: DEFAULT_BUDGET,
        parallel: cfg.parallel,
    };
    let solved = SolvedModel::new(&params, &w, q)?;
    let mu = solved.measure(n, opts)?;

    let mut out = output(&cfg.out)?;
    writeln!(
        out,
        "# p={p} k={} J={} N={} n={n} q={q} weight={}",
        cfg.order,
        params.coupling().to_ratio(),
        cfg.precision,
        cfg.weight
    )?;
    writeln!(out, "# Z_n = {}", mu.partition())?;
    writeln!(out, "# truncation_bound = {}", mu.truncation_bound().display(p))?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["configuration", "measure"]).map_err(|e| ConfigError(e.to_string()))?;
    for (sigma, m) in mu.iter() {
        csv.write_record([sigma.to_string(), m.to_string()])
            .map_err(|e| ConfigError(e.to_string()))?;
    }
    csv.flush()?;
    Ok(true)
}
