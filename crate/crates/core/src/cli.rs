//! Command implementations behind the `eclc` binary. Each command writes to
//! the given streams and returns an exit status instead of exiting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::calculus::{cost_ledger, prove_with_laws};
use crate::dsl::{parse_scenario, ParseError, ScenarioConfig};
use crate::metrics::fit_exponential;
use crate::sim::{self, per_world_csv, report_json, trials_csv, DEFAULT_SEED};

pub const SEED_ENV: &str = "ECLC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitStatus(u8);

impl ExitStatus {
    pub const SUCCESS: ExitStatus = ExitStatus(0);
    pub const FAILURE: ExitStatus = ExitStatus(1);
    pub const USAGE: ExitStatus = ExitStatus(2);

    pub fn code(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Parser)]
#[command(name = "eclc", version, about = "Resource-bounded inference over weighted Kripke frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a scenario file and report its size.
    Validate { path: PathBuf },
    /// Prove a named sequent under a world's inference capacity and curvature.
    Prove {
        path: PathBuf,
        #[arg(long)]
        sequent: String,
        /// Defaults to the sequent's source world.
        #[arg(long)]
        world: Option<String>,
    },
    /// Run the scenario declared in the file and write its report.
    Run {
        path: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Fit pi = exp(-rate * kappa) to a two-column kappa,pi CSV.
    Fit { csv: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<u32>,
    pub out: PathBuf,
    pub format: Format,
    /// Raw value of the fallback seed variable, if set.
    pub env_seed: Option<String>,
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match cli.command {
        Command::Validate { path } => cmd_validate(&path, out, err),
        Command::Prove { path, sequent, world } => cmd_prove(&path, &sequent, world.as_deref(), out, err),
        Command::Run {
            path,
            seed,
            trials,
            out: dir,
            format,
        } => {
            let options = RunOptions {
                seed,
                trials,
                out: dir,
                format,
                env_seed: std::env::var(SEED_ENV).ok(),
            };
            cmd_run(&path, &options, out, err)
        }
        Command::Fit { csv } => cmd_fit(&csv, out, err),
    }
}

fn diagnostic(path: &Path, e: &ParseError) -> String {
    format!("{}:{e}", path.display())
}

fn load(path: &Path, err: &mut dyn Write) -> Result<ScenarioConfig, ExitStatus> {
    let text = fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
        ExitStatus::FAILURE
    })?;
    parse_scenario(&text).map_err(|e| {
        let _ = writeln!(err, "{}", diagnostic(path, &e));
        ExitStatus::FAILURE
    })
}

fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match load(path, err) {
        Ok(cfg) => {
            let _ = writeln!(
                out,
                "OK: {}, {}, {}",
                count(cfg.frame.world_count(), "world"),
                count(cfg.frame.edge_count(), "edge"),
                count(cfg.observers.len(), "observer")
            );
            ExitStatus::SUCCESS
        }
        Err(status) => status,
    }
}

pub fn cmd_prove(
    path: &Path,
    sequent: &str,
    world: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let cfg = match load(path, err) {
        Ok(cfg) => cfg,
        Err(status) => return status,
    };
    let Some(named) = cfg.sequents.get(sequent) else {
        let known: Vec<&str> = cfg.sequents.keys().map(String::as_str).collect();
        let _ = writeln!(
            err,
            "error: no sequent named `{sequent}` (known: {})",
            if known.is_empty() { "none".to_string() } else { known.join(", ") }
        );
        return ExitStatus::USAGE;
    };
    let world_id = world.unwrap_or(&named.source);
    let Ok(w) = cfg.frame.world(world_id) else {
        let _ = writeln!(err, "error: no world named `{world_id}`");
        return ExitStatus::USAGE;
    };
    let seq = &named.sequent;
    let result = prove_with_laws(seq, w.lambda, &cfg.cost_model, w.kappa, cfg.frame.laws());
    let (lhs, rhs) = cost_ledger(seq, &cfg.cost_model, w.kappa);
    let _ = writeln!(out, "sequent {sequent}: {seq}");
    let _ = writeln!(out, "world {world_id}: lambda={} kappa={}", w.lambda, w.kappa);
    let _ = writeln!(out, "cost: gamma={lhs} delta={rhs}");
    match (&result.tree, result.failure_reason) {
        (Some(tree), _) if result.proved => {
            let _ = writeln!(out, "proved at depth {}", result.depth);
            let _ = write!(out, "{tree}");
            ExitStatus::SUCCESS
        }
        (_, reason) => {
            let reason = reason.map_or("unproved", |r| r.as_str());
            let _ = writeln!(out, "{reason}");
            ExitStatus::FAILURE
        }
    }
}

fn resolve_seed(cfg: &ScenarioConfig, options: &RunOptions) -> Result<u64, String> {
    if let Some(seed) = options.seed.or(cfg.seed) {
        return Ok(seed);
    }
    match options.env_seed.as_deref() {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV}=`{raw}` is not an unsigned integer")),
        None => Ok(DEFAULT_SEED),
    }
}

pub fn cmd_run(path: &Path, options: &RunOptions, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let mut cfg = match load(path, err) {
        Ok(cfg) => cfg,
        Err(status) => return status,
    };
    match resolve_seed(&cfg, options) {
        Ok(seed) => cfg.seed = Some(seed),
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            return ExitStatus::FAILURE;
        }
    }
    if let Some(trials) = options.trials {
        if trials == 0 {
            let _ = writeln!(err, "error: --trials must be >= 1");
            return ExitStatus::USAGE;
        }
        cfg.trials = Some(trials);
    }
    let report = match sim::run(&cfg) {
        Ok(report) => report,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::FAILURE;
        }
    };

    let mut files = Vec::new();
    if matches!(options.format, Format::Json | Format::Both) {
        files.push(("report.json", report_json(&report)));
    }
    if matches!(options.format, Format::Csv | Format::Both) {
        files.push(("per_world.csv", per_world_csv(&report)));
        files.push(("trials.csv", trials_csv(&report)));
    }
    if let Err(e) = fs::create_dir_all(&options.out) {
        let _ = writeln!(err, "error: cannot create {}: {e}", options.out.display());
        return ExitStatus::FAILURE;
    }
    for (name, text) in files {
        let target = options.out.join(name);
        if let Err(e) = fs::write(&target, text) {
            let _ = writeln!(err, "error: cannot write {}: {e}", target.display());
            return ExitStatus::FAILURE;
        }
    }
    let _ = writeln!(out, "{}", report.summary());
    ExitStatus::SUCCESS
}

/// Reads (κ, π) pairs; a non-numeric first row is taken as a header.
fn read_points(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if record.len() != 2 {
            return Err(format!("{}:{}: expected 2 columns, found {}", path.display(), i + 1, record.len()));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(k), Ok(p)) => points.push((k, p)),
            _ if i == 0 => continue,
            _ => return Err(format!("{}:{}: expected two numbers", path.display(), i + 1)),
        }
    }
    Ok(points)
}

pub fn cmd_fit(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let points = match read_points(path) {
        Ok(points) => points,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            return ExitStatus::FAILURE;
        }
    };
    match fit_exponential(&points) {
        Ok(fit) => {
            let _ = writeln!(out, "rate={} r_squared={}", fit.rate, fit.r_squared);
            ExitStatus::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::FAILURE
        }
    }
}
