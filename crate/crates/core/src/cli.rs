//! Command-line front end. `run` never exits the process; the returned code
//! is 0 on success, 1 when `check` finds a failing criterion, 2 on input
//! errors and 3 on solver failures.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::acceptance;
use crate::attitude::{classify_with, kink_slope, ClassifyConfig};
use crate::comparative::{
    check_index_dominance, check_premium_dominance_with, default_p_grid, find_counterexample, linspace,
    sample_specs, wealth_window, IndexViolation, PremiumWitness, DEFAULT_SEARCH_SAMPLES, DEFAULT_WEALTH_LIMIT,
};
use crate::lottery::{make_a_star, make_b_n, make_independent_pool, Lottery, NStateSpread, SpreadSpec};
use crate::preferences::{UtilityModel, WeightingModel};
use crate::premium::{nstate_premium_exact_with, probability_premium_exact_with, risk_premium_exact_with};
use crate::rdu::{certainty_equivalent, evaluate};
use crate::sharing::{critical_m_for_pool, render_svg, trace_indifference_with};
use crate::solve::SolverConfig;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "probprem",
    version,
    about = "Probability and risk premia under expected utility, dual theory and rank-dependent utility",
    after_help = "Utility specs: linear, quadratic:b=B, cara:a=A, crra:gamma=G, pwl:knots=X/Y;X/Y;...\n\
                  Weighting specs: identity, quadw, power:theta=T, prelec:alpha=A,beta=B, tk:gamma=G, avar:p0=P, pwl:knots=...\n\
                  Compose with OUTER@INNER."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability premium of a binary spread, exact and approximate.
    Premium(SpreadArgs),
    /// Risk premium of a binary spread, exact and approximate.
    Riskpremium(SpreadArgs),
    /// Probability premium of an n-state spread read from a JSON file.
    Nstate(NStateArgs),
    /// Order of the attitude towards probability at (w0, p0).
    Attitude(AttitudeArgs),
    /// Slope of the premium at a kink of the weighting function.
    Kink(KinkArgs),
    /// Compare two decision makers by local indexes and by premia.
    Compare(CompareArgs),
    /// Pooled loss against a partially insured single loss.
    Share(ShareArgs),
    /// Indifference curve through (0, p0) in the (q, p) triangle as CSV.
    Triangle(TriangleArgs),
    /// Moments and value of a lottery read from a JSON file.
    Moments(MomentsArgs),
    /// Run the acceptance criteria and print PASS/FAIL lines.
    Check,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Utility function.
    #[arg(long, default_value = "linear", value_name = "SPEC")]
    utility: UtilityModel,
    /// Probability weighting function.
    #[arg(long, default_value = "identity", value_name = "SPEC")]
    weighting: WeightingModel,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Absolute root tolerance; 0 bisects to machine precision.
    #[arg(long, default_value = "1e-13")]
    tol: f64,
    /// Scan points used to bracket the root.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Bisection iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Error> {
        solver_config(self.tol, self.grid, self.max_iter)
    }
}

fn solver_config(tol: f64, grid: usize, max_iter: usize) -> Result<SolverConfig, Error> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::param("tol", tol, "must be finite and non-negative"));
    }
    if grid < 2 {
        return Err(Error::param("grid", grid as f64, "needs at least 2 points"));
    }
    Ok(SolverConfig {
        tol,
        max_iter,
        scan_points: grid,
    })
}

#[derive(Debug, Args)]
struct SpreadArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial wealth, the centre of the spread.
    #[arg(long)]
    w0: f64,
    /// Probability of the low outcome.
    #[arg(long)]
    p0: f64,
    /// Probability moved onto w0 from each branch.
    #[arg(long)]
    eps1: f64,
    /// Half-width of the payoff spread.
    #[arg(long)]
    eps2: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

impl SpreadArgs {
    fn spec(&self) -> Result<SpreadSpec, Error> {
        SpreadSpec::new(self.w0, self.p0, self.eps1, self.eps2)
    }
}

#[derive(Debug, Args)]
struct NStateArgs {
    /// JSON file {"payoffs": [...], "eps1": r, "p0": r, "w0": r}.
    #[arg(value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct AttitudeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    w0: f64,
    #[arg(long)]
    p0: f64,
    /// Fixed payoff half-width while eps1 shrinks.
    #[arg(long)]
    eps2: f64,
    /// Root tolerance for each premium on the grid; 0 is machine precision.
    #[arg(long, default_value = "0")]
    tol: f64,
    /// Number of halvings of eps1 in the extrapolation grid.
    #[arg(long, default_value_t = 11)]
    grid: usize,
    /// Threshold on |first_coeff| for a first-order attitude.
    #[arg(long, default_value = "1e-6")]
    first_threshold: f64,
    /// Threshold on |second_coeff| for a second-order attitude.
    #[arg(long, default_value = "1e-6")]
    second_threshold: f64,
}

#[derive(Debug, Args)]
struct KinkArgs {
    /// Probability weighting function.
    #[arg(long, default_value = "identity", value_name = "SPEC")]
    weighting: WeightingModel,
    /// Point at which the one-sided derivatives are compared.
    #[arg(long)]
    p0: f64,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Utility of the first decision maker.
    #[arg(long, default_value = "linear", value_name = "SPEC")]
    utility1: UtilityModel,
    /// Utility of the second decision maker.
    #[arg(long, default_value = "linear", value_name = "SPEC")]
    utility2: UtilityModel,
    /// Weighting of the first decision maker.
    #[arg(long, default_value = "identity", value_name = "SPEC")]
    weighting1: WeightingModel,
    /// Weighting of the second decision maker.
    #[arg(long, default_value = "identity", value_name = "SPEC")]
    weighting2: WeightingModel,
    /// Points on each index grid (wealth and probability).
    #[arg(long, default_value_t = 257)]
    grid: usize,
    /// Random spreads checked for premium dominance.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Spreads tried near an index violation to find a premium witness.
    #[arg(long, default_value_t = DEFAULT_SEARCH_SAMPLES)]
    search: usize,
    /// Seed for the sampled spreads.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Root tolerance of the premium solves.
    #[arg(long, default_value = "1e-13")]
    tol: f64,
}

#[derive(Debug, Args)]
struct ShareArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Pool size; ignored with --independent.
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Unfairness rate of the insurance offered instead of pooling.
    #[arg(long, default_value = "0")]
    m: f64,
    /// Loss probability of each member.
    #[arg(long)]
    eps1: f64,
    /// Size of the loss.
    #[arg(long, default_value = "1")]
    loss: f64,
    #[arg(long)]
    w0: f64,
    /// Two independent members instead of mutually exclusive losses.
    #[arg(long)]
    independent: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct TriangleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Probability of the full loss at the base point.
    #[arg(long)]
    p0: f64,
    #[arg(long, default_value = "1")]
    loss: f64,
    #[arg(long)]
    w0: f64,
    /// Points on the q grid over [0, min(0.5, 1 - p0)].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Root tolerance of each point.
    #[arg(long, default_value = "1e-13")]
    tol: f64,
    /// Write the CSV here; a JSON summary then goes to stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write an SVG of the triangle, budget line and curve.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    /// JSON file {"atoms": [[payoff, prob], ...]}.
    #[arg(value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

enum Failure {
    Input(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_solver_failure() {
        EXIT_SOLVER
    } else {
        EXIT_INPUT
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Premium(a) => {
            let r = probability_premium_exact_with(&a.spec()?, &a.model.utility, &a.model.weighting, &a.solver.config()?)?;
            emit_json(out, &r)?;
        }
        Command::Riskpremium(a) => {
            let r = risk_premium_exact_with(&a.spec()?, &a.model.utility, &a.model.weighting, &a.solver.config()?)?;
            emit_json(out, &r)?;
        }
        Command::Nstate(a) => {
            let ns: NStateSpread = read_json(&a.input)?;
            let r = nstate_premium_exact_with(&ns, &a.model.utility, &a.model.weighting, &a.solver.config()?)?;
            emit_json(out, &r)?;
        }
        Command::Attitude(a) => {
            if a.grid < 3 {
                return Err(Error::param("grid", a.grid as f64, "extrapolation needs at least 3 levels").into());
            }
            let cfg = ClassifyConfig {
                first_threshold: a.first_threshold,
                second_threshold: a.second_threshold,
                levels: a.grid,
                solver: solver_config(a.tol, SolverConfig::default().scan_points, SolverConfig::default().max_iter)?,
            };
            let r = classify_with(a.w0, a.p0, a.eps2, &a.model.utility, &a.model.weighting, &cfg)?;
            emit_json(out, &r)?;
        }
        Command::Kink(a) => {
            #[derive(Serialize)]
            struct KinkReport {
                weighting: String,
                p0: f64,
                left_derivative: f64,
                right_derivative: f64,
                kink_slope: f64,
            }
            let (left, right) = a.weighting.one_sided(a.p0)?;
            let slope = kink_slope(&a.weighting, a.p0)?;
            emit_json(
                out,
                &KinkReport {
                    weighting: a.weighting.to_string(),
                    p0: a.p0,
                    left_derivative: left,
                    right_derivative: right,
                    kink_slope: slope,
                },
            )?;
        }
        Command::Compare(a) => compare(a, out)?,
        Command::Share(a) => share(a, out)?,
        Command::Triangle(a) => triangle(a, out)?,
        Command::Moments(a) => {
            #[derive(Serialize)]
            struct MomentsReport<'a> {
                atoms: &'a [(f64, f64)],
                mean: f64,
                variance: f64,
                maxiance: f64,
                miniance: f64,
                value: f64,
                certainty_equivalent: f64,
            }
            let l: Lottery = read_json(&a.input)?;
            let (u, h) = (&a.model.utility, &a.model.weighting);
            emit_json(
                out,
                &MomentsReport {
                    atoms: l.atoms(),
                    mean: l.mean(),
                    variance: l.variance(),
                    maxiance: l.maxiance(),
                    miniance: l.miniance(),
                    value: evaluate(&l, u, h)?,
                    certainty_equivalent: certainty_equivalent(&l, u, h)?,
                },
            )?;
        }
        Command::Check => {
            let results = acceptance::run_all();
            for r in &results {
                writeln!(out, "{r}")?;
            }
            let passed = results.iter().filter(|r| r.passed).count();
            writeln!(out, "{passed}/{} criteria passed", results.len())?;
            return Ok(if passed == results.len() { EXIT_OK } else { EXIT_CHECK_FAILED });
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Witnesses {
    index_violation: Option<IndexViolation>,
    premium_violation: Option<PremiumWitness>,
    /// Spread near the index violation where the premium order flips.
    counterexample: Option<PremiumWitness>,
    specs_checked: usize,
}

#[derive(Serialize)]
struct CompareReport {
    index_dominance: bool,
    premium_dominance: bool,
    witnesses: Witnesses,
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.grid < 2 {
        return Err(Error::param("grid", a.grid as f64, "needs at least 2 points").into());
    }
    let (lo, hi) = wealth_window(&a.utility1, &a.utility2, DEFAULT_WEALTH_LIMIT);
    if !(lo < hi) {
        return Err(Failure::Input("utility domains do not overlap".into()));
    }
    let x_grid = linspace(lo, hi, a.grid);
    let p_grid = if a.grid == default_p_grid().len() {
        default_p_grid()
    } else {
        linspace(0.01, 0.99, a.grid)
    };
    let (u1, u2, h1, h2) = (&a.utility1, &a.utility2, &a.weighting1, &a.weighting2);
    let index = check_index_dominance(u1, u2, h1, h2, &x_grid, &p_grid)?;
    let sample = sample_specs(u1, u2, a.samples, a.seed);
    let cfg = solver_config(a.tol, SolverConfig::default().scan_points, SolverConfig::default().max_iter)?;
    let premium = check_premium_dominance_with(u1, u2, h1, h2, &sample, &cfg)?;
    let counterexample = match &index.worst {
        Some(v) => find_counterexample(u1, u2, h1, h2, v, a.search, a.seed)?,
        None => None,
    };
    emit_json(
        out,
        &CompareReport {
            index_dominance: index.holds,
            premium_dominance: premium.holds && counterexample.is_none(),
            witnesses: Witnesses {
                index_violation: index.worst,
                premium_violation: premium.worst,
                counterexample,
                specs_checked: premium.checked,
            },
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ShareReport {
    pool: &'static str,
    n: Option<u32>,
    m: f64,
    eps1: f64,
    loss: f64,
    w0: f64,
    pool_value: f64,
    insured_value: f64,
    /// `pool_value - insured_value`.
    gap: f64,
    preferred: &'static str,
    /// Unfairness rate making the two indifferent; null if never crossed.
    critical_m: Option<f64>,
}

fn share(a: ShareArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (u, h) = (&a.model.utility, &a.model.weighting);
    let pool = if a.independent {
        make_independent_pool(a.eps1, a.loss, a.w0)?
    } else {
        make_b_n(a.n, a.eps1, a.loss, a.w0)?
    };
    let insured = make_a_star(a.eps1, a.m, a.loss, a.w0)?;
    let pool_value = evaluate(&pool, u, h)?;
    let insured_value = evaluate(&insured, u, h)?;
    let gap = pool_value - insured_value;
    let preferred = match gap.partial_cmp(&0.0) {
        Some(Ordering::Greater) => "pool",
        Some(Ordering::Less) => "insurance",
        _ => "indifferent",
    };
    let critical_m = match critical_m_for_pool(&pool, a.eps1, a.loss, a.w0, u, h, &a.solver.config()?) {
        Ok(m) => Some(m),
        Err(e) if e.is_solver_failure() => None,
        Err(e) => return Err(e.into()),
    };
    emit_json(
        out,
        &ShareReport {
            pool: if a.independent { "independent" } else { "exclusive" },
            n: (!a.independent).then_some(a.n),
            m: a.m,
            eps1: a.eps1,
            loss: a.loss,
            w0: a.w0,
            pool_value,
            insured_value,
            gap,
            preferred,
            critical_m,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct TriangleSummary {
    p0: f64,
    points: usize,
    skipped: Vec<f64>,
    slope_at_origin: Option<f64>,
}

fn triangle(a: TriangleArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.grid < 2 {
        return Err(Error::param("grid", a.grid as f64, "needs at least 2 points").into());
    }
    if !(a.p0 > 0.0 && a.p0 < 1.0) {
        return Err(Error::param("p0", a.p0, "must lie in (0, 1)").into());
    }
    let q_grid = linspace(0.0, f64::min(0.5, 1.0 - a.p0), a.grid);
    let cfg = solver_config(a.tol, SolverConfig::default().scan_points, SolverConfig::default().max_iter)?;
    let trace = trace_indifference_with(a.p0, a.loss, a.w0, &a.model.utility, &a.model.weighting, &q_grid, &cfg)?;
    let mut csv = String::from("q,p,value_residual\n");
    for t in &trace.points {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(t.q), fmt_f64(t.p), fmt_f64(t.value_residual));
    }
    if let Some(path) = &a.svg {
        write_file(path, &render_svg(a.p0, std::slice::from_ref(&trace)))?;
    }
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            emit_json(
                out,
                &TriangleSummary {
                    p0: a.p0,
                    points: trace.points.len(),
                    skipped: trace.skipped,
                    slope_at_origin: trace.slope_at_origin,
                },
            )?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// 17 significant digits in scientific notation, negative zero folded into
/// zero; non-finite values as the bare words `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x + 0.0)
    } else {
        x.to_string()
    }
}

/// Pretty JSON with every float at 17 significant digits, `null` for
/// non-finite values.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as deterministic pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    out.write_all(to_json(value).as_bytes())?;
    Ok(())
}
