//! Argument parsing for the `hgm` binary.

use crate::commands::{self, oracle_report, OracleOutput, parse_scaling, parse_stepper, BasisSpec, Command, CutSpec, FitMethod, FitMode, QuadSpec, Report, RunOptions};
use crate::oracle::OracleSpec;
use crate::problem::{bundled, ProblemFile};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hgm_core::variational::ConstrainedSolver;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "hgm", version, about = "Unstable linear ODE solvers: defusing, sparse interpolation and spectral collocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Fixed-step or adaptive initial-value solve.
    SolveIvp(Common),
    /// Filtered initial-value solve through the matrix factorial.
    Defuse(Common),
    /// Finite-difference fit to scattered data.
    FitA(Common),
    /// Basis least-squares fit to scattered data.
    FitB(Common),
    /// Gram quadratic-program fit to scattered data.
    FitC(Common),
    /// Chebyshev collocation with data as boundary conditions.
    Spectral(Common),
    /// Ensemble of fits with multiplicatively perturbed data.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Method re-run per trial: fit-a, fit-b, fit-c or spectral.
        #[arg(long, default_value = "fit-b")]
        method: String,
    },
    /// Reference values of the Airy, H^k_n or exponential oracles.
    Oracle(OracleArgs),
    /// Print a bundled problem file (or list them).
    Problem { name: Option<String> },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem JSON file, or `bundled:NAME`.
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 16)]
    pub digits: u32,
    /// Step size (decimal or p/q).
    #[arg(long)]
    pub h: Option<String>,
    /// Number of steps or grid intervals.
    #[arg(long = "N")]
    pub steps: Option<usize>,
    /// euler, rk4, gaussS or rk45.
    #[arg(long, default_value = "rk4")]
    pub stepper: String,
    #[arg(long, default_value_t = 1e-3)]
    pub rtol: f64,
    #[arg(long, default_value_t = 0.0)]
    pub atol: f64,
    /// gap, threshold:TAU or fixed:M.
    #[arg(long, default_value = "gap")]
    pub cut: String,
    /// match:J or unit.
    #[arg(long, default_value = "match:0")]
    pub scaling: String,
    /// monomial:COUNT[:CENTER], chebyshev:COUNT, asymptotic:GAMMA,KAPPA,SIGMA,COUNT or expr:E1;E2;...
    #[arg(long)]
    pub basis: Option<String>,
    /// trapezoid:N or chebyshev:K.
    #[arg(long, default_value = "trapezoid:1000")]
    pub quad: String,
    /// penalized or constrained.
    #[arg(long)]
    pub mode: Option<String>,
    /// kkt or null-space (constrained method B).
    #[arg(long, default_value = "kkt")]
    pub solver: String,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Chebyshev points for the spectral method.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Move data lying between grid nodes to the nearest node (fit-a).
    #[arg(long)]
    pub snap: bool,
    /// Evaluation grid spacing for fits.
    #[arg(long)]
    pub eval_step: Option<String>,
    /// Ignore points with |reference| at or below this in error summaries.
    #[arg(long, default_value_t = 0.0)]
    pub ref_floor: f64,
    /// Keep every k-th trajectory row.
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    /// Relative-error threshold for the failure onset.
    #[arg(long, default_value_t = crate::onset::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    #[arg(long, default_value_t = crate::perturb::DEFAULT_REL)]
    pub rel: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; the diagnostics go to `<output>.diag.json`. Without it, CSV goes to stdout and diagnostics to stderr.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, group = "which")]
    pub airy: bool,
    /// H^k_n(x, ·) given as K,N,X.
    #[arg(long, group = "which")]
    pub hkn: Option<String>,
    /// exp(RATE·t).
    #[arg(long, group = "which")]
    pub exp: Option<String>,
    /// Evaluation points (repeatable or comma separated).
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Also print derivatives up to this order.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    /// Print log10 of H^k_n / (y^(1-n+k) e^y) instead (needs --hkn).
    #[arg(long, conflicts_with = "order")]
    pub log10_ratio: bool,
    #[arg(long, default_value_t = 16)]
    pub digits: u32,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn usage(msg: String) -> commands::CommandError {
    commands::CommandError::Usage(msg)
}

impl Common {
    pub fn options(&self) -> Result<RunOptions, commands::CommandError> {
        Ok(RunOptions {
            digits: self.digits,
            stepper: parse_stepper(&self.stepper, self.rtol, self.atol).map_err(usage)?,
            h: self.h.clone(),
            steps: self.steps,
            cut: self.cut.parse::<CutSpec>().map_err(usage)?,
            scaling: parse_scaling(&self.scaling).map_err(usage)?,
            basis: self.basis.as_deref().map(str::parse::<BasisSpec>).transpose().map_err(usage)?,
            quad: self.quad.parse::<QuadSpec>().map_err(usage)?,
            mode: self.mode.as_deref().map(str::parse::<FitMode>).transpose().map_err(usage)?,
            solver: match self.solver.as_str() {
                "kkt" => ConstrainedSolver::Kkt,
                "null-space" => ConstrainedSolver::NullSpace,
                s => return Err(usage(format!("unknown solver {s:?} (expected kkt or null-space)"))),
            },
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            n: self.n,
            snap: self.snap,
            eval_step: self.eval_step.clone(),
            ref_floor: self.ref_floor,
            every: self.every,
            threshold: self.threshold,
            trials: self.trials,
            rel: self.rel,
            seed: self.seed,
        })
    }

    pub fn load(&self) -> Result<ProblemFile, commands::CommandError> {
        Ok(match self.problem.strip_prefix("bundled:") {
            Some(name) => bundled(name)?,
            None => ProblemFile::load(std::path::Path::new(&self.problem))?,
        })
    }
}

impl OracleArgs {
    pub fn spec(&self) -> Result<OracleSpec, commands::CommandError> {
        let num = |s: &str| serde_json::Value::String(s.trim().to_string());
        if let Some(h) = &self.hkn {
            let parts: Vec<&str> = h.split(',').collect();
            return match parts.as_slice() {
                [k, n, x] => Ok(OracleSpec::Hkn { k: k.trim().parse().map_err(|_| usage(format!("bad k {k:?}")))?, n: num(n), x: num(x) }),
                _ => Err(usage("--hkn needs K,N,X".into())),
            };
        }
        if let Some(r) = &self.exp {
            return Ok(OracleSpec::Exp { rate: num(r) });
        }
        if self.airy {
            return Ok(OracleSpec::Airy);
        }
        Err(usage("choose one of --airy, --hkn, --exp".into()))
    }
}

fn emit(report: &Report, output: Option<&PathBuf>) -> anyhow::Result<()> {
    match output {
        Some(path) => report.write(path).with_context(|| format!("writing {}", path.display())),
        None => {
            let stdout = std::io::stdout();
            report.csv.write_to(stdout.lock())?;
            writeln!(std::io::stderr(), "{}", serde_json::to_string_pretty(&report.diag)?)?;
            Ok(())
        }
    }
}

/// Failure sidecar: the error message with the exit code.
fn emit_failure(err: &commands::CommandError, output: Option<&PathBuf>) {
    let diag = serde_json::json!({ "error": err.to_string(), "exit_code": err.exit_code() });
    if let Some(path) = output {
        let _ = std::fs::write(commands::diag_path(path), serde_json::to_string_pretty(&diag).unwrap_or_default() + "\n");
    }
}

/// Run the parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let (result, output) = match &cli.command {
        Sub::Problem { name } => {
            return match name {
                None => {
                    for (n, _) in crate::problem::BUNDLED {
                        println!("{n}");
                    }
                    0
                }
                Some(n) => match crate::problem::BUNDLED.iter().find(|(b, _)| b == n) {
                    Some((_, text)) => {
                        print!("{text}");
                        0
                    }
                    None => {
                        eprintln!("error: no bundled problem {n:?}");
                        2
                    }
                },
            }
        }
        Sub::Oracle(o) => (o.spec().and_then(|spec| oracle_report(&spec, &o.at, if o.log10_ratio { OracleOutput::DominanceLog10 } else { OracleOutput::Derivatives(o.order) }, o.digits)), o.output.as_ref()),
        Sub::Perturb { common, method } => {
            let r = method.parse::<FitMethod>().map_err(usage).and_then(|m| run_common(common, Command::Perturb(m)));
            (r, common.output.as_ref())
        }
        Sub::SolveIvp(c) => (run_common(c, Command::SolveIvp), c.output.as_ref()),
        Sub::Defuse(c) => (run_common(c, Command::Defuse), c.output.as_ref()),
        Sub::FitA(c) => (run_common(c, Command::Fit(FitMethod::A)), c.output.as_ref()),
        Sub::FitB(c) => (run_common(c, Command::Fit(FitMethod::B)), c.output.as_ref()),
        Sub::FitC(c) => (run_common(c, Command::Fit(FitMethod::C)), c.output.as_ref()),
        Sub::Spectral(c) => (run_common(c, Command::Fit(FitMethod::Spectral)), c.output.as_ref()),
    };
    match result {
        Ok(report) => match emit(&report, output) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            emit_failure(&e, output);
            e.exit_code()
        }
    }
}

fn run_common(c: &Common, command: Command) -> Result<Report, commands::CommandError> {
    let opts = c.options()?;
    let file = c.load()?;
    commands::run(command, &file, &opts)
}

pub fn main() -> i32 {
    execute(Cli::parse())
}
