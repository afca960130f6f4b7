//! The driver's commands as library functions. Each returns a [`Report`]
//! (CSV table plus JSON diagnostics) so the binary and the tests share one path.

use crate::onset::failure_onset;
use crate::oracle::{Oracle, OracleSpec};
use crate::perturb::run_ensemble;
use crate::problem::{Problem, ProblemError, ProblemFile};
use crate::table::{solution_csv, CsvTable};
use hgm_core::defusing::{defused_solve, Cut, DefusePolicy, Scaling};
use hgm_core::expr::Expr;
use hgm_core::fd::{assemble_method_a, solve_method_a, StencilPlan};
use hgm_core::linalg::Matrix;
use hgm_core::operator::{DataPoint, Grid, ScalarOperator};
use hgm_core::reference::dominance_ratio_log10;
use hgm_core::real::{with_digits, PrecisionTask};
use hgm_core::spectral::solve_spectral;
use hgm_core::steppers::{solve_ivp, Diagnostic, SolutionTable, StepperKind};
use hgm_core::variational::{
    design_matrix, fit_method_b_constrained_with, fit_method_b_penalized_with, fit_method_c, lemma2_bound, loss_of, BasisFamily, ConstrainedSolver, FitResult, MethodCMode, Penalty,
    QuadratureRule,
};
use hgm_core::Real;
use serde_json::{json, Value};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] hgm_core::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Problem(_) | CommandError::Usage(_) => 2,
            CommandError::Numerical(_) => 3,
        }
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

/// Method re-run by each perturbation trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMethod {
    A,
    B,
    C,
    Spectral,
}

impl FromStr for FitMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fit-a" => Ok(FitMethod::A),
            "fit-b" => Ok(FitMethod::B),
            "fit-c" => Ok(FitMethod::C),
            "spectral" => Ok(FitMethod::Spectral),
            _ => Err(format!("unknown method {s:?} (expected fit-a, fit-b, fit-c or spectral)")),
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::A => "fit-a",
            FitMethod::B => "fit-b",
            FitMethod::C => "fit-c",
            FitMethod::Spectral => "spectral",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveIvp,
    Defuse,
    Fit(FitMethod),
    Perturb(FitMethod),
}

/// Basis choice with its numbers still in text form, bound per precision.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisSpec {
    Monomial { count: usize, center: Option<String> },
    Chebyshev { count: usize },
    Asymptotic { gamma: String, kappa: String, sigma: String, count: usize },
    Exprs(Vec<String>),
}

impl FromStr for BasisSpec {
    type Err = String;
    /// `monomial:COUNT[:CENTER]`, `chebyshev:COUNT`, `asymptotic:GAMMA,KAPPA,SIGMA,COUNT`, `expr:E1;E2;…`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("basis {s:?} needs the form KIND:ARGS"))?;
        let count = |c: &str| c.trim().parse::<usize>().map_err(|_| format!("bad basis count {c:?}"));
        match kind {
            "monomial" => {
                let mut it = rest.splitn(2, ':');
                let n = count(it.next().unwrap_or(""))?;
                Ok(BasisSpec::Monomial { count: n, center: it.next().map(str::to_string) })
            }
            "chebyshev" => Ok(BasisSpec::Chebyshev { count: count(rest)? }),
            "asymptotic" => match rest.split(',').collect::<Vec<_>>().as_slice() {
                [g, k, s, c] => Ok(BasisSpec::Asymptotic { gamma: g.trim().into(), kappa: k.trim().into(), sigma: s.trim().into(), count: count(c)? }),
                _ => Err("asymptotic basis needs GAMMA,KAPPA,SIGMA,COUNT".into()),
            },
            "expr" => Ok(BasisSpec::Exprs(rest.split(';').map(|e| e.trim().to_string()).collect())),
            _ => Err(format!("unknown basis kind {kind:?}")),
        }
    }
}

impl BasisSpec {
    fn bind<R: Real>(&self, interval: (R, R), params: &std::collections::BTreeMap<String, R>) -> CmdResult<BasisFamily<R>> {
        Ok(match self {
            BasisSpec::Monomial { count, center } => BasisFamily::Monomial {
                center: match center {
                    Some(c) => parse_real(c)?,
                    None => (interval.0 + interval.1) * R::half(),
                },
                count: *count,
            },
            BasisSpec::Chebyshev { count } => BasisFamily::ChebyshevOn { a: interval.0, b: interval.1, count: *count },
            BasisSpec::Asymptotic { gamma, kappa, sigma, count } => {
                BasisFamily::AsymptoticPower { gamma: parse_real(gamma)?, kappa: parse_real(kappa)?, sigma: parse_real(sigma)?, count: *count }
            }
            BasisSpec::Exprs(v) => BasisFamily::UserExpr(v.iter().map(|e| Expr::parse(e, params)).collect::<hgm_core::Result<_>>()?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadSpec {
    Trapezoid(usize),
    Chebyshev(usize),
}

impl FromStr for QuadSpec {
    type Err = String;
    /// `trapezoid:N` or `chebyshev:K`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, n) = s.split_once(':').ok_or_else(|| format!("quadrature {s:?} needs the form KIND:N"))?;
        let n: usize = n.parse().map_err(|_| format!("bad quadrature size {n:?}"))?;
        match kind {
            "trapezoid" => Ok(QuadSpec::Trapezoid(n)),
            "chebyshev" => Ok(QuadSpec::Chebyshev(n)),
            _ => Err(format!("unknown quadrature {kind:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CutSpec {
    Gap,
    Threshold(String),
    Fixed(usize),
}

impl FromStr for CutSpec {
    type Err = String;
    /// `gap`, `threshold:TAU` or `fixed:M` (0-based).
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "gap" => Ok(CutSpec::Gap),
            Some(("threshold", v)) => Ok(CutSpec::Threshold(v.into())),
            Some(("fixed", v)) => v.parse().map(CutSpec::Fixed).map_err(|_| format!("bad cut index {v:?}")),
            _ => Err(format!("unknown cut {s:?} (expected gap, threshold:TAU or fixed:M)")),
        }
    }
}

/// `match:J` (0-based) or `unit`.
pub fn parse_scaling(s: &str) -> Result<Scaling, String> {
    match s.split_once(':') {
        None if s == "unit" => Ok(Scaling::UnitProjection),
        Some(("match", j)) => j.parse().map(Scaling::MatchComponent).map_err(|_| format!("bad component {j:?}")),
        _ => Err(format!("unknown scaling {s:?} (expected match:J or unit)")),
    }
}

/// `euler`, `rk4`, `gaussS` or `rk45`.
pub fn parse_stepper(s: &str, rtol: f64, atol: f64) -> Result<StepperKind, String> {
    match s {
        "euler" => Ok(StepperKind::Euler),
        "rk4" => Ok(StepperKind::Rk4),
        "rk45" => Ok(StepperKind::Rk45 { rtol, atol }),
        _ => match s.strip_prefix("gauss").map(str::parse::<usize>) {
            Some(Ok(st)) if st >= 1 => Ok(StepperKind::Gauss(st)),
            _ => Err(format!("unknown stepper {s:?} (expected euler, rk4, gaussS or rk45)")),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    Penalized,
    Constrained,
}

impl FromStr for FitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "penalized" => Ok(FitMode::Penalized),
            "constrained" => Ok(FitMode::Constrained),
            _ => Err(format!("unknown mode {s:?} (expected penalized or constrained)")),
        }
    }
}

/// Every method option; numbers that must be exact at high precision stay text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub digits: u32,
    pub stepper: StepperKind,
    pub h: Option<String>,
    pub steps: Option<usize>,
    pub cut: CutSpec,
    pub scaling: Scaling,
    pub basis: Option<BasisSpec>,
    pub quad: QuadSpec,
    pub mode: Option<FitMode>,
    pub solver: ConstrainedSolver,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub gamma: Option<String>,
    /// Chebyshev points for the spectral method.
    pub n: usize,
    pub snap: bool,
    /// Spacing of the evaluation grid for fits; default `(b − a)/200`.
    pub eval_step: Option<String>,
    /// Relative errors are only taken where `|reference| > ref_floor`.
    pub ref_floor: f64,
    /// Keep every `every`-th trajectory row in the CSV.
    pub every: usize,
    pub threshold: f64,
    pub trials: usize,
    pub rel: f64,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            digits: 16,
            stepper: StepperKind::Rk4,
            h: None,
            steps: None,
            cut: CutSpec::Gap,
            scaling: Scaling::MatchComponent(0),
            basis: None,
            quad: QuadSpec::Trapezoid(1000),
            mode: None,
            solver: ConstrainedSolver::Kkt,
            alpha: None,
            beta: None,
            gamma: None,
            n: 64,
            snap: false,
            eval_step: None,
            ref_floor: 0.0,
            every: 1,
            threshold: crate::onset::DEFAULT_THRESHOLD,
            trials: 30,
            rel: crate::perturb::DEFAULT_REL,
            seed: 0,
        }
    }
}

/// Output of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv: CsvTable,
    pub diag: Value,
}

impl Report {
    /// Write `<output>` and `<output>.diag.json`.
    pub fn write(&self, output: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(output)?;
        self.csv.write_to(std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
        std::fs::write(diag_path(output), serde_json::to_string_pretty(&self.diag)? + "\n")
    }

    pub fn diag_f64(&self, key: &str) -> Option<f64> {
        self.diag.get(key).and_then(json_f64)
    }
}

pub fn diag_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".diag.json");
    PathBuf::from(s)
}

pub fn json_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.to_string().parse().ok(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Full-precision JSON number (non-finite values become strings).
pub fn real_json<R: Real>(x: R) -> Value {
    let s = x.to_shortest_string();
    if x.is_finite() {
        serde_json::from_str(&s).unwrap_or(Value::String(s))
    } else {
        Value::String(s)
    }
}

fn reals_json<R: Real>(v: &[R]) -> Value {
    Value::Array(v.iter().map(|x| real_json(*x)).collect())
}

fn parse_real<R: Real>(s: &str) -> CmdResult<R> {
    R::parse_literal(s).ok_or_else(|| CommandError::Usage(format!("invalid number {s:?}")))
}

fn diagnostics_json(diags: &[Diagnostic]) -> Value {
    Value::Array(diags.iter().map(|d| Value::String(d.to_string())).collect())
}

/// Run `command` on `file` at `opts.digits` digits.
pub fn run(command: Command, file: &ProblemFile, opts: &RunOptions) -> CmdResult<Report> {
    if opts.every == 0 {
        return Err(CommandError::Usage("--every must be at least 1".into()));
    }
    with_digits(opts.digits, Task { command, file, opts })?
}

struct Task<'a> {
    command: Command,
    file: &'a ProblemFile,
    opts: &'a RunOptions,
}

impl PrecisionTask for Task<'_> {
    type Output = CmdResult<Report>;
    fn run<R: Real>(self) -> CmdResult<Report> {
        let problem = self.file.bind::<R>()?;
        let mut report = match self.command {
            Command::SolveIvp => solve_ivp_cmd(&problem, self.opts),
            Command::Defuse => defuse_cmd(&problem, self.opts),
            Command::Fit(m) => fit_cmd(&problem, m, self.opts),
            Command::Perturb(m) => perturb_cmd(&problem, m, self.opts),
        }?;
        report.csv.metadata.insert(0, ("command".into(), command_name(self.command)));
        if let Some(d) = &self.file.description {
            report.csv.metadata.insert(1, ("problem".into(), d.clone()));
        }
        if let Value::Object(m) = &mut report.diag {
            m.insert("command".into(), Value::String(command_name(self.command)));
            m.insert("digits".into(), json!(R::DIGITS));
            m.insert("backend".into(), json!(R::NAME));
        }
        Ok(report)
    }
}

fn command_name(c: Command) -> String {
    match c {
        Command::SolveIvp => "solve-ivp".into(),
        Command::Defuse => "defuse".into(),
        Command::Fit(m) => m.to_string(),
        Command::Perturb(m) => format!("perturb {m}"),
    }
}

fn grid_of<R: Real>(problem: &Problem<R>, opts: &RunOptions) -> CmdResult<Grid<R>> {
    let (a, b) = problem.interval;
    let h = opts.h.as_deref().map(parse_real::<R>).transpose()?;
    Ok(match (h, opts.steps) {
        (Some(h), Some(n)) => Grid::new(a, h, n)?,
        (Some(h), None) => {
            let n = ((b - a) / h).round().to_f64();
            if !(n >= 1.0) {
                return Err(CommandError::Usage("step size exceeds the interval".into()));
            }
            Grid::new(a, h, n as usize)?
        }
        (None, Some(n)) => Grid::spanning(a, b, n)?,
        (None, None) => return Err(CommandError::Usage("give --h, --N or both".into())),
    })
}

fn thin<R: Real>(table: &SolutionTable<R>, every: usize) -> SolutionTable<R> {
    if every == 1 {
        return table.clone();
    }
    let last = table.len().saturating_sub(1);
    let mut out = SolutionTable { times: Vec::new(), states: Vec::new(), meta: table.meta.clone() };
    for i in (0..table.len()).filter(|i| i % every == 0 || *i == last) {
        out.push(table.times[i], table.states[i].clone());
    }
    out
}

/// CSV of a trajectory with the state reference of the first component.
fn trajectory_report<R: Real>(problem: &Problem<R>, table: &SolutionTable<R>, opts: &RunOptions, mut diag: serde_json::Map<String, Value>) -> CmdResult<Report> {
    let reference = |t: R| problem.reference(t).ok();
    let csv = match &problem.oracle {
        Some(o) => solution_csv(&thin(table, opts.every), Some((o, &reference))),
        None => solution_csv(&thin(table, opts.every), None),
    };
    if problem.oracle.is_some() {
        let onset = failure_onset(table, 0, |t| problem.reference(t), opts.threshold)?;
        diag.insert("failure_onset".into(), if onset.is_sentinel() { Value::String("inf".into()) } else { json!(onset.t) });
        diag.insert("onset_threshold".into(), json!(opts.threshold));
        if !onset.skipped.is_empty() {
            diag.insert("onset_skipped".into(), json!(onset.skipped));
        }
    }
    diag.insert("stepper".into(), json!(table.meta.stepper));
    diag.insert("diagnostics".into(), diagnostics_json(&table.meta.diagnostics));
    let blow = table.blow_up().map(|d| match d {
        Diagnostic::BlowUp { t, .. } | Diagnostic::StepUnderflow { t } => *t,
        Diagnostic::Note(_) => f64::NAN,
    });
    diag.insert("blow_up_t".into(), blow.map_or(Value::Null, |t| json!(t)));
    if let Some((t, f)) = table.last() {
        diag.insert("final_t".into(), real_json(t));
        diag.insert("final_state".into(), reals_json(f));
    }
    Ok(Report { csv, diag: Value::Object(diag) })
}

fn solve_ivp_cmd<R: Real>(problem: &Problem<R>, opts: &RunOptions) -> CmdResult<Report> {
    let grid = grid_of(problem, opts)?;
    let table = solve_ivp(opts.stepper, &problem.system, problem.require_initial()?, &grid)?;
    let mut diag = serde_json::Map::new();
    diag.insert("h".into(), real_json(grid.h));
    diag.insert("N".into(), json!(grid.n));
    trajectory_report(problem, &table, opts, diag)
}

fn defuse_cmd<R: Real>(problem: &Problem<R>, opts: &RunOptions) -> CmdResult<Report> {
    let grid = grid_of(problem, opts)?;
    let cut = match &opts.cut {
        CutSpec::Gap => Cut::SpectralGap,
        CutSpec::Threshold(t) => Cut::Threshold(parse_real(t)?),
        CutSpec::Fixed(m) => Cut::Fixed(*m),
    };
    let sol = defused_solve(opts.stepper, &problem.system, &grid, problem.require_initial()?, DefusePolicy { cut, scaling: opts.scaling })?;
    let eig = &sol.factorial.eigen;
    let vectors: Vec<Value> = (0..eig.eigenvalues.len()).map(|i| reals_json(&eig.vector(i))).collect();
    let mut diag = serde_json::Map::new();
    diag.insert("h".into(), real_json(grid.h));
    diag.insert("N".into(), json!(grid.n));
    diag.insert("eigenvalues".into(), reals_json(&eig.eigenvalues));
    diag.insert("eigenvectors".into(), Value::Array(vectors));
    diag.insert("eigen_residual".into(), real_json(eig.residual));
    diag.insert("cut_index".into(), json!(sol.initial.m));
    diag.insert("scale".into(), real_json(sol.initial.c));
    diag.insert("initial".into(), reals_json(problem.require_initial()?));
    diag.insert("defused_initial".into(), reals_json(&sol.initial.f0));
    diag.insert("coefficients".into(), reals_json(&sol.initial.coefficients));
    trajectory_report(problem, &sol.table, opts, diag)
}

/// Everything a fit needs, bound at one precision and shared across trials.
struct FitSetup<R> {
    operator: ScalarOperator<R>,
    basis: Option<BasisFamily<R>>,
    quad: Option<QuadratureRule<R>>,
    design: Option<(Matrix<R>, Vec<R>)>,
    gram: Option<Matrix<R>>,
    grid: Option<Grid<R>>,
    eval: Vec<R>,
    reference: Option<Vec<R>>,
}

/// A fitted solution, evaluated on the shared grid.
struct FitOutcome<R> {
    values: Vec<R>,
    diag: serde_json::Map<String, Value>,
}

fn eval_grid<R: Real>(interval: (R, R), step: Option<&str>) -> CmdResult<Vec<R>> {
    let (a, b) = interval;
    let n = match step {
        Some(s) => {
            let h: R = parse_real(s)?;
            let n = ((b - a) / h).round().to_f64();
            if !(n >= 1.0) {
                return Err(CommandError::Usage("evaluation step exceeds the interval".into()));
            }
            n as usize
        }
        None => 200,
    };
    let h = (b - a) / R::from_usize(n);
    Ok((0..=n).map(|i| if i == n { b } else { a + R::from_usize(i) * h }).collect())
}

fn fit_setup<R: Real>(problem: &Problem<R>, method: FitMethod, opts: &RunOptions) -> CmdResult<FitSetup<R>> {
    let operator = problem.require_operator()?.clone();
    let interval = problem.interval;
    let (mut basis, mut quad, mut design, mut gram, mut grid) = (None, None, None, None, None);
    match method {
        FitMethod::B | FitMethod::C => {
            let spec = opts.basis.as_ref().ok_or_else(|| CommandError::Usage(format!("{method} needs --basis")))?;
            basis = Some(spec.bind(interval, &problem.params)?);
            let q = match opts.quad {
                QuadSpec::Trapezoid(n) => QuadratureRule::trapezoid(interval.0, interval.1, n)?,
                QuadSpec::Chebyshev(k) => QuadratureRule::chebyshev_weight(interval.0, interval.1, k)?,
            };
            let (g_mat, g) = design_matrix(&operator, basis.as_ref().unwrap(), &q)?;
            if method == FitMethod::C {
                gram = Some(g_mat.transpose().matmul(&g_mat));
            }
            design = Some((g_mat, g));
            quad = Some(q);
        }
        FitMethod::A => grid = Some(grid_of(problem, &RunOptions { steps: opts.steps.or(Some(100)), ..opts.clone() })?),
        FitMethod::Spectral => {}
    }
    let eval = match &grid {
        Some(g) => g.nodes(),
        None => eval_grid(interval, opts.eval_step.as_deref())?,
    };
    let reference = match &problem.oracle {
        Some(o) => Some(eval.iter().map(|&t| o.value(t)).collect::<hgm_core::Result<Vec<_>>>()?),
        None => None,
    };
    Ok(FitSetup { operator, basis, quad, design, gram, grid, eval, reference })
}

/// One fit; `detailed` adds the refined-quadrature loss check.
fn fit_once<R: Real>(setup: &FitSetup<R>, method: FitMethod, data: &[DataPoint<R>], opts: &RunOptions, detailed: bool) -> CmdResult<FitOutcome<R>> {
    let mut diag = serde_json::Map::new();
    let values = match method {
        FitMethod::A => {
            let grid = setup.grid.as_ref().expect("method A has a grid");
            let plan = StencilPlan::centered(setup.operator.rank()).with_snapping(opts.snap);
            let sys = assemble_method_a(&setup.operator, grid, data, &plan)?;
            diag.insert("condition".into(), sys.condition.map_or(Value::String("inf".into()), real_json));
            diag.insert("least_squares".into(), json!(sys.least_squares));
            let table = solve_method_a(&sys)?;
            diag.insert("diagnostics".into(), diagnostics_json(&table.meta.diagnostics));
            table.component(0)
        }
        FitMethod::B | FitMethod::C => {
            let basis = setup.basis.as_ref().expect("basis bound");
            let quad = setup.quad.as_ref().expect("quadrature bound");
            let (g_mat, g) = setup.design.as_ref().expect("design bound");
            let fit = match method {
                FitMethod::B => match opts.mode.unwrap_or(FitMode::Penalized) {
                    FitMode::Penalized => fit_method_b_penalized_with(g_mat, g, basis, data, penalty(opts)?)?,
                    FitMode::Constrained => fit_method_b_constrained_with(g_mat, g, basis, data, opts.solver)?,
                },
                _ => {
                    let mode = match opts.mode.unwrap_or(FitMode::Constrained) {
                        FitMode::Penalized => MethodCMode::Penalized,
                        FitMode::Constrained => MethodCMode::Constrained,
                    };
                    fit_method_c(setup.gram.as_ref().expect("gram bound"), basis, data, mode)?
                }
            };
            fit_diag(&mut diag, &setup.operator, basis, quad, &fit, detailed)?;
            setup.eval.iter().map(|&t| fit.evaluate(basis, t)).collect::<hgm_core::Result<Vec<_>>>()?
        }
        FitMethod::Spectral => {
            let (a, b) = (*setup.eval.first().unwrap(), *setup.eval.last().unwrap());
            let sol = solve_spectral(&setup.operator, a, b, opts.n, data)?;
            diag.insert("residual".into(), real_json(sol.residual));
            diag.insert("points".into(), json!(opts.n));
            setup.eval.iter().map(|&t| sol.eval(t)).collect()
        }
    };
    if let Some(r) = &setup.reference {
        let (rel, abs) = max_errors(&values, r, opts.ref_floor);
        diag.insert("max_rel_error".into(), real_json(rel));
        diag.insert("max_abs_error".into(), real_json(abs));
    }
    Ok(FitOutcome { values, diag })
}

fn penalty<R: Real>(opts: &RunOptions) -> CmdResult<Penalty<R>> {
    let d = Penalty::<R>::default();
    let get = |v: &Option<String>, default: R| v.as_deref().map_or(Ok(default), parse_real);
    Ok(Penalty { alpha: get(&opts.alpha, d.alpha)?, beta: get(&opts.beta, d.beta)?, gamma: get(&opts.gamma, d.gamma)? })
}

fn fit_diag<R: Real>(diag: &mut serde_json::Map<String, Value>, l: &ScalarOperator<R>, basis: &BasisFamily<R>, quad: &QuadratureRule<R>, fit: &FitResult<R>, detailed: bool) -> CmdResult<()> {
    diag.insert("loss".into(), real_json(fit.loss));
    diag.insert("objective".into(), real_json(fit.objective));
    diag.insert("max_constraint_residual".into(), real_json(fit.max_constraint_residual()));
    diag.insert("coefficients".into(), reals_json(&fit.coefficients));
    if let Some(g) = fit.gram_objective {
        diag.insert("gram_objective".into(), real_json(g));
    }
    if !detailed {
        return Ok(());
    }
    if let Ok(refined) = quad.refined(2) {
        let refined_loss = loss_of(l, basis, &refined, &fit.coefficients)?;
        diag.insert("refined_loss".into(), real_json(refined_loss));
        diag.insert("loss_bound".into(), real_json(lemma2_bound(fit, refined_loss)));
    }
    Ok(())
}

/// `(max |f − r| / |r|, max |f − r|)` over points with `|r| > floor`.
pub fn max_errors<R: Real>(values: &[R], reference: &[R], floor: f64) -> (R, R) {
    let floor = R::from_f64(floor);
    values.iter().zip(reference).filter(|(_, r)| r.abs() > floor && **r != R::zero()).fold((R::zero(), R::zero()), |(rel, abs), (&f, &r)| {
        let e = (f - r).abs();
        (rel.max(e / r.abs()), abs.max(e))
    })
}

fn fit_csv<R: Real>(setup: &FitSetup<R>, columns: &[(String, &[R])]) -> CsvTable {
    let mut header = vec!["t".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    if setup.reference.is_some() {
        header.push("reference".into());
    }
    let mut csv = CsvTable::new(header);
    for (i, &t) in setup.eval.iter().enumerate() {
        let mut row = vec![t];
        row.extend(columns.iter().map(|(_, v)| v[i]));
        if let Some(r) = &setup.reference {
            row.push(r[i]);
        }
        csv.push_reals(&row);
    }
    csv
}

fn fit_cmd<R: Real>(problem: &Problem<R>, method: FitMethod, opts: &RunOptions) -> CmdResult<Report> {
    let setup = fit_setup(problem, method, opts)?;
    let out = fit_once(&setup, method, &problem.data, opts, true)?;
    let mut csv = fit_csv(&setup, &[("f".to_string(), &out.values)]);
    if let Some(r) = &setup.reference {
        csv.header.push("rel_error".into());
        for (row, (f, r)) in csv.rows.iter_mut().zip(out.values.iter().zip(r)) {
            row.push(if *r == R::zero() { "nan".into() } else { ((*f - *r) / *r).abs().to_shortest_string() });
        }
    }
    csv.meta("method", method).meta("digits", R::DIGITS).meta("backend", R::NAME);
    if let Some(o) = &problem.oracle {
        csv.meta("oracle", o.name());
    }
    let mut diag = out.diag;
    diag.insert("data_points".into(), json!(problem.data.len()));
    Ok(Report { csv, diag: Value::Object(diag) })
}

fn perturb_cmd<R: Real>(problem: &Problem<R>, method: FitMethod, opts: &RunOptions) -> CmdResult<Report> {
    let setup = fit_setup(problem, method, opts)?;
    let outcomes = run_ensemble(&problem.data, opts.rel, opts.seed, opts.trials, |_, data| fit_once(&setup, method, data, opts, false));
    let outcomes = outcomes.into_iter().collect::<CmdResult<Vec<_>>>()?;
    let names: Vec<String> = (0..outcomes.len()).map(|i| format!("trial_{i}")).collect();
    let columns: Vec<(String, &[R])> = names.iter().cloned().zip(outcomes.iter().map(|o| o.values.as_slice())).collect();
    let mut csv = fit_csv(&setup, &columns);
    csv.meta("method", method).meta("digits", R::DIGITS).meta("backend", R::NAME).meta("trials", opts.trials).meta("rel", opts.rel).meta("seed", opts.seed).meta("prng", "splitmix64");
    let mut diag = serde_json::Map::new();
    diag.insert("trials".into(), json!(opts.trials));
    diag.insert("rel".into(), json!(opts.rel));
    diag.insert("seed".into(), json!(opts.seed));
    if setup.reference.is_some() {
        let errs: Vec<R> = outcomes.iter().map(|o| o.diag.get("max_rel_error").and_then(json_f64).map_or(R::from_f64(f64::NAN), R::from_f64)).collect();
        let worst = errs.iter().fold(R::zero(), |m, e| m.max(*e));
        let mean = errs.iter().fold(R::zero(), |s, e| s + *e) / R::from_usize(errs.len().max(1));
        diag.insert("trial_max_rel_error".into(), reals_json(&errs));
        diag.insert("max_rel_error".into(), real_json(worst));
        diag.insert("mean_max_rel_error".into(), real_json(mean));
    }
    Ok(Report { csv, diag: Value::Object(diag) })
}

/// What the `oracle` command prints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleOutput {
    /// Value and derivatives up to the given order.
    Derivatives(usize),
    /// `log10(H / (y^(1−n+k) e^y))`, for the H^k_n oracle only.
    DominanceLog10,
}

/// `oracle` command: reference values at the given points.
pub fn oracle_report(spec: &OracleSpec, at: &[String], output: OracleOutput, digits: u32) -> CmdResult<Report> {
    struct OracleTask<'a> {
        spec: &'a OracleSpec,
        at: &'a [String],
        output: OracleOutput,
    }
    impl PrecisionTask for OracleTask<'_> {
        type Output = CmdResult<Report>;
        fn run<R: Real>(self) -> CmdResult<Report> {
            let oracle: Oracle<R> = self.spec.bind()?;
            let mut header = vec!["t".to_string()];
            match self.output {
                OracleOutput::Derivatives(order) => header.extend(crate::table::state_header(order + 1)),
                OracleOutput::DominanceLog10 => header.push("log10_ratio".into()),
            }
            let mut csv = CsvTable::new(header);
            csv.meta("command", "oracle").meta("oracle", oracle.name()).meta("digits", R::DIGITS).meta("backend", R::NAME);
            let mut values = Vec::new();
            for s in self.at {
                let t: R = parse_real(s)?;
                let d = match (self.output, oracle) {
                    (OracleOutput::Derivatives(order), _) => oracle.derivatives(t, order)?,
                    (OracleOutput::DominanceLog10, Oracle::Hkn { k, n, x }) => vec![dominance_ratio_log10(k, n, x, t)?],
                    (OracleOutput::DominanceLog10, _) => return Err(CommandError::Usage("the dominance ratio needs the H^k_n oracle".into())),
                };
                values.push(real_json(d[0]));
                let mut row = vec![t];
                row.extend(d);
                csv.push_reals(&row);
            }
            Ok(Report { csv, diag: json!({ "command": "oracle", "oracle": oracle.name(), "values": values, "digits": R::DIGITS, "backend": R::NAME }) })
        }
    }
    with_digits(digits, OracleTask { spec, at, output })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::bundled;

    #[test]
    fn option_parsers() {
        assert_eq!("asymptotic:-3/4,2,1/2,4".parse::<BasisSpec>().unwrap(), BasisSpec::Asymptotic { gamma: "-3/4".into(), kappa: "2".into(), sigma: "1/2".into(), count: 4 });
        assert_eq!("monomial:5".parse::<BasisSpec>().unwrap(), BasisSpec::Monomial { count: 5, center: None });
        assert_eq!("monomial:5:-1".parse::<BasisSpec>().unwrap(), BasisSpec::Monomial { count: 5, center: Some("-1".into()) });
        assert!("spline:3".parse::<BasisSpec>().is_err());
        assert_eq!("chebyshev:40".parse::<QuadSpec>().unwrap(), QuadSpec::Chebyshev(40));
        assert_eq!("fixed:1".parse::<CutSpec>().unwrap(), CutSpec::Fixed(1));
        assert_eq!(parse_scaling("match:1").unwrap(), Scaling::MatchComponent(1));
        assert_eq!(parse_stepper("gauss3", 1e-3, 0.0).unwrap(), StepperKind::Gauss(3));
        assert!(parse_stepper("gauss0", 1e-3, 0.0).is_err());
        assert_eq!("fit-b".parse::<FitMethod>().unwrap(), FitMethod::B);
    }

    #[test]
    fn real_json_keeps_all_digits() {
        let x = hgm_core::DoubleDouble::one() / hgm_core::DoubleDouble::from_f64(3.0);
        let v = real_json(x);
        assert!(v.is_number());
        assert_eq!(v.to_string(), x.to_shortest_string());
        assert_eq!(real_json(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn easy_problem_ivp_report() {
        let file = bundled("easy").unwrap();
        let opts = RunOptions { h: Some("1/100".into()), steps: Some(100), every: 10, ..Default::default() };
        let r = run(Command::SolveIvp, &file, &opts).unwrap();
        assert_eq!(r.csv.rows.len(), 11);
        assert_eq!(r.csv.header[..4], ["t", "f", "f'", "f''"]);
        let f1: Vec<f64> = r.csv.column_values(1).unwrap();
        assert!((f1[10] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn missing_options_are_usage_errors() {
        let file = bundled("easy").unwrap();
        let e = run(Command::SolveIvp, &file, &RunOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(Command::Fit(FitMethod::B), &bundled("exp_airy_b").unwrap(), &RunOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn singular_grid_is_a_numerical_failure() {
        let file = ProblemFile::from_json(r#"{"operator": "t*d - 1", "interval": [-1, 1], "initial": [1]}"#).unwrap();
        let opts = RunOptions { h: Some("1/2".into()), ..Default::default() };
        let e = run(Command::SolveIvp, &file, &opts).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
    }

    #[test]
    fn oracle_at_five() {
        let r = oracle_report(&OracleSpec::Airy, &["5".into()], OracleOutput::Derivatives(1), 30).unwrap();
        let v = r.diag["values"][0].to_string();
        assert!(v.starts_with("1.0834442813607"), "{v}");
        assert_eq!(r.csv.header, vec!["t", "f", "f'"]);
        assert_eq!(oracle_report(&OracleSpec::Airy, &["5".into()], OracleOutput::DominanceLog10, 16).unwrap_err().exit_code(), 2);
    }
}
