mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use qtakagi::derivs::{mixed_partial_oracle, theorem_rhs, DerivMode};
use qtakagi::rational::to_decimal;
use qtakagi::stepfn::MAX_CELLS;
use qtakagi::takagi::{takagi_d_recursive, takagi_t};
use qtakagi::verify::{self, Fault, Suite, VerifyOptions};
use qtakagi::{cdf, MeasureContext, QAdicPoint, Rat, SystemConfig};

use config::{parse_usize_list, split_list, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Identity(String),
    Config(String),
    Cap(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Identity(_) => 1,
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Identity(m) | CliError::Config(m) | CliError::Cap(m) | CliError::Io(m) => m,
        }
    }
}

impl From<qtakagi::Error> for CliError {
    fn from(e: qtakagi::Error) -> Self {
        if e.is_cap_violation() {
            CliError::Cap(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qtakagi",
    version,
    about = "Exact evaluation of twisted q-adic measures and their Takagi functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one function at one point; prints p/q then a decimal rendering.
    Eval {
        function: Function,
        #[command(flatten)]
        common: Common,
        /// Evaluation point, as p/q.
        #[arg(long)]
        x: Option<String>,
    },
    /// Tabulate a function on the grid m/q^G as CSV.
    Sample {
        #[arg(long)]
        function: Function,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid_level: Option<u32>,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the seeded identity suites.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inject a known defect to confirm the harness catches it.
        #[arg(long, value_enum, hide = true)]
        fault: Option<FaultArg>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q: Option<usize>,
    /// Images of 0..q-1 under sigma, comma separated.
    #[arg(long)]
    sigma: Option<String>,
    /// First-digit weights, comma separated p/q (defaults to r).
    #[arg(long)]
    d: Option<String>,
    /// Transition weights, comma separated p/q.
    #[arg(long)]
    r: Option<String>,
    /// Multi-index of length q-1, comma separated.
    #[arg(long)]
    u: Option<String>,
    /// Truncation depth; the exact limit is used when omitted.
    #[arg(long)]
    k: Option<u32>,
    /// How the derivative treats first-digit weights.
    #[arg(long, value_enum, default_value_t = ModeArg::Coupled)]
    mode: ModeArg,
    /// Report the bare mixed partial instead of dividing by q * u!.
    #[arg(long)]
    raw: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Function {
    Cdf,
    Takagi,
    Derivative,
    TheoremRhs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Coupled,
    UniformFirst,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    CorruptSigmaPower,
}

impl Common {
    fn resolve(
        &self,
        x: Option<String>,
        grid_level: Option<u32>,
        output: Option<PathBuf>,
    ) -> Result<RunConfig, CliError> {
        let flags = RunConfig {
            q: self.q,
            sigma: self
                .sigma
                .as_deref()
                .map(|s| parse_usize_list("sigma", s))
                .transpose()?,
            d: self.d.as_deref().map(split_list),
            r: self.r.as_deref().map(split_list),
            u: self
                .u
                .as_deref()
                .map(|s| {
                    parse_usize_list("u", s).map(|v| v.into_iter().map(|n| n as u32).collect())
                })
                .transpose()?,
            x,
            k: self.k,
            grid_level,
            output,
            ..RunConfig::default()
        };
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(flags))
    }
}

/// A function ready to evaluate at grid points.
struct Evaluator {
    function: Function,
    mode: ModeArg,
    raw: bool,
    cfg: SystemConfig,
    run: RunConfig,
}

impl Evaluator {
    fn new(function: Function, common: &Common, run: RunConfig) -> Result<Self, CliError> {
        let cfg = run.system()?;
        let ev = Evaluator {
            function,
            mode: common.mode,
            raw: common.raw,
            cfg,
            run,
        };
        // surface missing or malformed fields before any evaluation
        ev.context()?;
        if !matches!(function, Function::Cdf) {
            ev.run.multi_index(&ev.cfg)?;
        }
        Ok(ev)
    }

    fn context(&self) -> Result<MeasureContext, CliError> {
        let r = self.run.weights(&self.cfg, "r")?;
        let d = self.run.weights(&self.cfg, "d")?;
        Ok(MeasureContext::new(self.cfg.clone(), d, r)?)
    }

    fn eval(&self, x: &QAdicPoint) -> Result<Rat, CliError> {
        let mc = self.context()?;
        Ok(match self.function {
            Function::Cdf => cdf(&mc, x),
            Function::Takagi => {
                let u = self.run.multi_index(&self.cfg)?;
                match self.run.k {
                    Some(k) => takagi_d_recursive(&mc, &u, k, x)?,
                    None => takagi_t(&mc, &u, x)?,
                }
            }
            Function::Derivative => {
                let u = self.run.multi_index(&self.cfg)?;
                let mode = match self.mode {
                    ModeArg::Coupled => DerivMode::Coupled,
                    ModeArg::UniformFirst => DerivMode::UniformFirst,
                };
                let v = mixed_partial_oracle(&self.cfg, mode, x, &u, &mc.r)?;
                if self.raw {
                    v
                } else {
                    // same normalization as theorem-rhs, so the two columns compare directly
                    let q = BigInt::from(self.cfg.q());
                    v / Rat::from_integer(q * u.factorial())
                }
            }
            Function::TheoremRhs => {
                let u = self.run.multi_index(&self.cfg)?;
                theorem_rhs(&self.cfg, &mc.r, &u, x)?
            }
        })
    }
}

fn exact(v: &Rat) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

fn cmd_eval(function: Function, common: Common, x: Option<String>) -> Result<String, CliError> {
    let run = common.resolve(x, None, None)?;
    let ev = Evaluator::new(function, &common, run)?;
    let x = ev.run.point(&ev.cfg)?;
    let v = ev.eval(&x)?;
    Ok(format!("{}\n{}\n", exact(&v), to_decimal(&v, 15)))
}

fn cmd_sample(
    function: Function,
    common: Common,
    grid_level: Option<u32>,
    output: Option<PathBuf>,
) -> Result<String, CliError> {
    let run = common.resolve(None, grid_level, output)?;
    let ev = Evaluator::new(function, &common, run)?;
    let g = ev
        .run
        .grid_level
        .ok_or_else(|| CliError::Config("grid_level: missing (pass --grid-level)".into()))?;
    let q = ev.cfg.q();
    match qtakagi::qadic::checked_pow(q, g) {
        Some(n) if n <= MAX_CELLS => {}
        _ => {
            return Err(CliError::Cap(format!(
                "grid_level: q^{g} points exceed the cap of 2^20"
            )))
        }
    }

    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    wtr.write_record(["x_num", "x_den", "value_num", "value_den", "value_decimal"])
        .map_err(io)?;
    for x in QAdicPoint::grid(q, g) {
        let v = ev.eval(&x)?;
        let xr = x.to_rat();
        wtr.write_record([
            xr.numer().to_string(),
            xr.denom().to_string(),
            v.numer().to_string(),
            v.denom().to_string(),
            to_decimal(&v, 15),
        ])
        .map_err(io)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    match &ev.run.output {
        Some(path) => {
            std::fs::write(path, &bytes)
                .map_err(|e| CliError::Io(format!("output {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(String::from_utf8(bytes).expect("csv of ascii fields")),
    }
}

fn cmd_verify(
    suite: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
    config: Option<PathBuf>,
    fault: Option<FaultArg>,
) -> Result<String, CliError> {
    let flags = RunConfig {
        suite,
        seed,
        trials,
        ..RunConfig::default()
    };
    let run = match &config {
        Some(p) => RunConfig::from_file(p)?.overlay(flags),
        None => flags,
    };
    let name = run.suite.as_deref().unwrap_or("all");
    let suites = Suite::parse_selection(name)
        .ok_or_else(|| CliError::Config(format!("suite: unknown suite {name:?}")))?;
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        seed: run.seed.unwrap_or(defaults.seed),
        trials: run.trials.unwrap_or(defaults.trials),
        fault: fault.map(|FaultArg::CorruptSigmaPower| Fault::CorruptSigmaPower),
    };
    if opts.trials == 0 {
        return Err(CliError::Config("trials: must be at least 1".into()));
    }
    let reports = verify::run(&suites, &opts);
    let text = verify::render_report(&reports, &opts);
    if reports.iter().all(|r| r.passed()) {
        Ok(text)
    } else {
        Err(CliError::Identity(text))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval {
            function,
            common,
            x,
        } => cmd_eval(function, common, x),
        Command::Sample {
            function,
            common,
            grid_level,
            output,
        } => cmd_sample(function, common, grid_level, output),
        Command::Verify {
            suite,
            seed,
            trials,
            config,
            fault,
        } => cmd_verify(suite, seed, trials, config, fault),
    };
    let mut stdout = std::io::stdout().lock();
    match result {
        Ok(text) => {
            if stdout.write_all(text.as_bytes()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Identity(report)) => {
            let _ = stdout.write_all(report.as_bytes());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
