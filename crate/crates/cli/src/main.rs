//! `hylleraas` command-line front end.
//!
//! Exit codes: 0 success, 1 a computation did not converge or failed,
//! 2 usage error.

mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hylleraas::precision::{PrecisionPolicy, PRECISION_ENV};
use thiserror::Error;

use config::Config;
use manifest::{OutputDigest, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Computation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Computation(_) | Self::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hylleraas", version, about = "Hylleraas variational solver with Shannon entropy diagnostics")]
pub struct Cli {
    /// Mantissa bits for extended-precision arithmetic [default: $HYLLERAAS_PRECISION_BITS or 256]
    #[arg(long, global = true, value_name = "BITS")]
    precision_bits: Option<u32>,
    /// Worker threads for parallel kernels
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// `key = value` configuration file; flags win on conflict
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Path of the run manifest [default: next to the output file]
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state of one system, optionally optimizing the exponents
    Solve(SolveArgs),
    /// Position-space Shannon entropy of an archived wavefunction
    Entropy(EntropyArgs),
    /// Radial density profile of an archived wavefunction as CSV
    Density(DensityArgs),
    /// <r1> and <r12> of an archived wavefunction
    Expect(ExpectArgs),
    /// Scan the nuclear charge across the critical value
    ScanZ(ScanArgs),
    /// Gauss-Laguerre nodes and weights as CSV
    GlNodes(GlArgs),
    /// Run the built-in oracle checks
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// hminus | he | liplus | psminus | z:<charge>
    #[arg(long)]
    pub system: Option<String>,
    /// Basis degree: all terms with k + m + n <= omega
    #[arg(long)]
    pub omega: Option<u32>,
    /// Switch off the electron-electron repulsion
    #[arg(long)]
    pub no_ee: bool,
    #[arg(long, requires = "beta", conflicts_with = "optimize")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha", conflicts_with = "optimize")]
    pub beta: Option<f64>,
    /// Minimize the energy over alpha and beta (the default without --alpha/--beta)
    #[arg(long)]
    pub optimize: bool,
    /// Starting exponent for the optimizer [default: screening estimate]
    #[arg(long)]
    pub start: Option<f64>,
    /// Energy evaluations allowed to the optimizer
    #[arg(long)]
    pub budget: Option<usize>,
    /// Wavefunction archive to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub wavefunction: Option<PathBuf>,
    /// Starting quadrature order
    #[arg(long)]
    pub order: Option<usize>,
    /// Quadrature scale s in x = s r [default: 2 min(alpha, beta)]
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub wavefunction: Option<PathBuf>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpectArgs {
    #[arg(long)]
    pub wavefunction: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub omega: Option<u32>,
    /// freeze | extrapolate
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Starting quadrature order for the entropy
    #[arg(long)]
    pub order: Option<usize>,
    /// Roots offered to state tracking below the critical charge
    #[arg(long)]
    pub roots: Option<usize>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 0 even when some rows did not converge
    #[arg(long)]
    pub keep_going: bool,
}

#[derive(Debug, Args)]
pub struct GlArgs {
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Random integral keys checked against quadrature
    #[arg(long)]
    pub integral_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Shared state handed to every command.
pub struct Context {
    pub policy: PrecisionPolicy,
    pub config: Config,
    pub manifest_path: PathBuf,
    /// Effective settings, recorded in the manifest.
    pub settings: BTreeMap<String, String>,
}

impl Context {
    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }
}

/// What a command produced; written out by `main`.
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub converged: bool,
}

const GLOBAL_KEYS: [&str; 2] = ["precision_bits", "threads"];

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Solve(_) => "solve",
            Self::Entropy(_) => "entropy",
            Self::Density(_) => "density",
            Self::Expect(_) => "expect",
            Self::ScanZ(_) => "scan-z",
            Self::GlNodes(_) => "gl-nodes",
            Self::Validate(_) => "validate",
        }
    }

    fn out(&self) -> Option<&PathBuf> {
        match self {
            Self::Solve(a) => a.out.as_ref(),
            Self::Entropy(a) => a.out.as_ref(),
            Self::Density(a) => a.out.as_ref(),
            Self::Expect(a) => a.out.as_ref(),
            Self::ScanZ(a) => a.out.as_ref(),
            Self::GlNodes(a) => a.out.as_ref(),
            Self::Validate(a) => a.out.as_ref(),
        }
    }

    fn config_keys(&self) -> &'static [&'static str] {
        match self {
            Self::Solve(_) => &["system", "omega", "no_ee", "alpha", "beta", "optimize", "start", "budget", "out"],
            Self::Entropy(_) => &["wavefunction", "order", "scale", "out"],
            Self::Density(_) => &["wavefunction", "rmax", "points", "out"],
            Self::Expect(_) => &["wavefunction", "out"],
            Self::ScanZ(_) => &[
                "from", "to", "step", "omega", "strategy", "budget", "order", "roots", "format", "out", "keep_going",
            ],
            Self::GlNodes(_) => &["order", "scale", "out"],
            Self::Validate(_) => &["integral_samples", "out"],
        }
    }
}

fn policy(cli: &Cli, config: &Config) -> Result<PrecisionPolicy, CliError> {
    let bits = config.merge(cli.precision_bits, "precision_bits")?;
    let p = match bits {
        Some(b) => PrecisionPolicy::with_bits(b),
        None => PrecisionPolicy::from_env(),
    };
    p.map_err(|e| CliError::Usage(format!("{e} (flag --precision-bits or {PRECISION_ENV})")))
}

fn write(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run(cli: Cli, argv: Vec<String>) -> Result<bool, CliError> {
    let started = Instant::now();
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut allowed: Vec<&str> = GLOBAL_KEYS.to_vec();
    allowed.extend(cli.command.config_keys());
    config.check_keys(&allowed)?;
    let policy = policy(&cli, &config)?;
    if let Some(n) = config.merge(cli.threads, "threads")? {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let name = cli.command.name();
    let out: Option<PathBuf> = match cli.command.out() {
        Some(p) => Some(p.clone()),
        None => config.get::<PathBuf>("out")?,
    };
    let manifest_path = cli
        .manifest
        .clone()
        .unwrap_or_else(|| manifest::default_path(name, out.as_deref()));
    let mut ctx = Context {
        policy,
        config,
        manifest_path,
        settings: BTreeMap::new(),
    };
    ctx.record("precision_bits", policy.effective_bits());
    if let Some(o) = &out {
        ctx.record("out", o.display());
    }
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(&mut ctx, a, out.as_ref()),
        Command::Entropy(a) => commands::entropy(&mut ctx, a, out.as_ref()),
        Command::Density(a) => commands::density(&mut ctx, a, out.as_ref()),
        Command::Expect(a) => commands::expect(&mut ctx, a, out.as_ref()),
        Command::ScanZ(a) => commands::scan(&mut ctx, a, out.as_ref()),
        Command::GlNodes(a) => commands::gl_nodes(&mut ctx, a, out.as_ref()),
        Command::Validate(a) => commands::validate(&mut ctx, a, out.as_ref()),
    }?;
    let mut outputs = Vec::new();
    for (path, bytes) in &outcome.files {
        write(path, bytes)?;
        outputs.push(OutputDigest::of(&path.display().to_string(), bytes));
    }
    if !outcome.stdout.is_empty() {
        print!("{}", outcome.stdout);
        outputs.push(OutputDigest::of("<stdout>", outcome.stdout.as_bytes()));
    }
    let manifest = RunManifest {
        command_line: argv,
        command: name.to_string(),
        config: ctx.settings.clone(),
        precision: policy,
        library_version: hylleraas::VERSION.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
        timings: BTreeMap::from([("wall_seconds".to_string(), started.elapsed().as_secs_f64())]),
        outputs,
        exit_code: if outcome.converged { 0 } else { 1 },
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(&ctx.manifest_path, text.as_bytes())?;
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli, argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: computation did not converge");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
