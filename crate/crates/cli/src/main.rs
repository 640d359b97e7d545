//! Command-line front end: solve bound iterations from a spec file, run
//! assumption checks, compare belief/density pairs by stochastic dominance,
//! and cross-check the solver against closed-form round intervals.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pointrat::beliefs::{composite_compare, fosd_compare, pushforward, ComparisonResult};
use pointrat::game::{bertrand_game, cournot_game, GameSpec};
use pointrat::solver::{
    bertrand_round_interval, cournot_round_interval, solve, EdgePolicy, SolveOptions, Termination,
};
use pointrat::verify::{
    check_cross_partials, check_family_extremes, check_increasing_differences,
    check_mixture_continuity, AssumptionReport, CheckStatus,
};
use pointrat::{Error, Interval};

use config::{DominanceFile, SpecFile};
use output::{write_tables, Format, Table};

#[derive(Parser)]
#[command(
    name = "pointrat",
    version,
    about = "Point-rationalizable choice bounds for games with strategic complements or substitutes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate extremal-belief bounds on a game spec; emits trace, final
    /// bounds, and summary tables.
    Solve(SolveArgs),
    /// Run the assumption checks (cross partials, increasing differences,
    /// mixture continuity, family ordering) on a game spec.
    Check(CheckArgs),
    /// Compare two (choice belief, density) pairs: survival tables plus
    /// dominance classification of the densities and the composites.
    Dominance(DominanceArgs),
    /// Solve a built-in model and report gaps against its closed-form
    /// round intervals.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Game spec file (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output stem; tables are written to STEM.<table>.<ext> instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Maximum number of rounds.
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    /// Stop once per-round bound movement falls below this width tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Parameter grid points per player.
    #[arg(long, default_value_t = 65)]
    grid: usize,
    /// Unused by solve (bound iteration is deterministic); accepted for
    /// uniformity with check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    /// Game spec file (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output stem; the checks table is written to STEM.checks.<ext>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Sign tolerance for the finite-difference and sampled checks.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Grid points per axis for the cross-partial scan.
    #[arg(long, default_value_t = 7)]
    grid: usize,
    /// Seed for the sampled checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampled trials per randomized check.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args)]
struct DominanceArgs {
    /// Comparison input file (TOML) with [first]/[second] pairs.
    #[arg(long)]
    spec: PathBuf,
    /// Output stem; tables are written to STEM.<table>.<ext>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Dominance comparison tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Bertrand,
    Cournot,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Built-in model to reproduce.
    model: Model,
    /// Number of rounds to compare.
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    /// Maximum allowed gap between solver and closed form; defaults to
    /// 1e-9 for bertrand and 1e-7 for cournot.
    #[arg(long)]
    tol: Option<f64>,
    /// Parameter grid points per player.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// Output stem; tables are written to STEM.<table>.<ext>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Demand intercept.
    #[arg(long)]
    a: Option<f64>,
    /// Unit cost (cournot only).
    #[arg(long)]
    c: Option<f64>,
    /// Parameter interval width (bertrand only).
    #[arg(long)]
    phi: Option<f64>,
    /// Parameter interval lower end (cournot only).
    #[arg(long)]
    phi_lo: Option<f64>,
    /// Parameter interval upper end (cournot only).
    #[arg(long)]
    phi_hi: Option<f64>,
    /// Price cap (bertrand only).
    #[arg(long)]
    p_bar: Option<f64>,
    /// Quantity cap (cournot only).
    #[arg(long)]
    q_bar: Option<f64>,
}

/// One terminal failure: machine-parsable stderr line plus process code.
struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, code: u8, message: impl Into<String>) -> Self {
        Self { kind, code, message: message.into() }
    }

    fn io(e: std::io::Error, path: &Path) -> Self {
        Self::new("io", 2, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Domain(_) => ("domain", 2),
            Error::Argument(_) => ("argument", 2),
            Error::AssumptionViolation(_) => ("assumption", 3),
            Error::Numeric(_) => ("numeric", 4),
            Error::Resource(_) => ("resource", 5),
            Error::Internal(_) => ("internal", 4),
        };
        Self::new(kind, code, e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message.replace('\n', "; "));
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Dominance(a) => cmd_dominance(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(e, path))?;
    toml::from_str(&text)
        .map_err(|e| Failure::new("parse", 2, format!("{}: {e}", path.display())))
}

fn positive(value: f64, name: &str) -> Result<(), Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Failure::new("argument", 2, format!("--{name} must be positive, got {value}")))
    }
}

fn emit(tables: &[Table], format: Format, out: Option<&Path>) -> Result<(), Failure> {
    write_tables(tables, format, out)
        .map(|_| ())
        .map_err(|e| Failure::io(e, out.unwrap_or_else(|| Path::new("stdout"))))
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    positive(args.tol, "tol")?;
    let spec: SpecFile = read_toml(&args.spec)?;
    let game = spec.to_game()?;
    let opts = SolveOptions {
        max_rounds: args.rounds,
        width_tol: args.tol,
        grid_size: args.grid,
        ..SolveOptions::default()
    };
    let trace = solve(&game, &opts)?;

    let mut trace_t = Table::new("trace", &["round", "player", "theta", "lower", "upper"]);
    for r in trace.rows() {
        trace_t.push(vec![
            r.round.into(),
            r.player.into(),
            r.theta.into(),
            r.lower.into(),
            r.upper.into(),
        ]);
    }
    let mut final_t = Table::new("final", &["player", "theta", "lower", "upper"]);
    for (player, b) in trace.final_profile().per_player.iter().enumerate() {
        for (k, theta) in b.grid.iter().enumerate() {
            final_t.push(vec![
                player.into(),
                (*theta).into(),
                b.lower[k].into(),
                b.upper[k].into(),
            ]);
        }
    }
    let terminated = match trace.terminated_by {
        Termination::MaxRounds => "max_rounds",
        Termination::WidthTolerance => "width_tolerance",
        Termination::FixedPoint => "fixed_point",
    };
    let mut summary_t =
        Table::new("summary", &["rounds", "terminated_by", "final_movement", "clip_events"]);
    summary_t.push(vec![
        trace.n_rounds().into(),
        terminated.into(),
        trace.convergence.last().copied().unwrap_or(0.0).into(),
        trace.clipping_events.len().into(),
    ]);
    emit(&[trace_t, final_t, summary_t], args.format, args.out.as_deref())
}

fn cmd_check(args: CheckArgs) -> Result<(), Failure> {
    positive(args.tol, "tol")?;
    if args.samples == 0 {
        return Err(Failure::new("argument", 2, "--samples must be positive"));
    }
    let spec: SpecFile = read_toml(&args.spec)?;
    let game = spec.to_game()?;
    let mut report = check_cross_partials(&game, args.grid, 1e-4, args.tol)?;
    report.merge(check_increasing_differences(&game, args.samples, args.seed)?);
    report.merge(check_mixture_continuity(&game, args.samples.min(60), 21, args.seed)?);
    report.merge(check_family_extremes(&game));

    emit(&[checks_table(&report)], args.format, args.out.as_deref())?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::new("assumption", 3, format!("checks failed: {}", failed.join(", "))))
    }
}

fn checks_table(report: &AssumptionReport) -> Table {
    let mut t = Table::new("checks", &["check", "status", "tolerance", "detail", "witness"]);
    for c in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "Pass",
            CheckStatus::Fail => "Fail",
            CheckStatus::Inconclusive => "Inconclusive",
        };
        let witness = match &c.witness {
            None => String::new(),
            Some(w) => {
                let coords: Vec<String> =
                    w.location.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{} ({})", coords.join(" "), w.detail)
            }
        };
        t.push(vec![
            c.name.as_str().into(),
            status.into(),
            c.tolerance.into(),
            c.detail.as_str().into(),
            witness.into(),
        ]);
    }
    t
}

fn fmt_comparison(r: &ComparisonResult) -> String {
    match r {
        ComparisonResult::Equal => "Equal".into(),
        ComparisonResult::Dominates => "Dominates".into(),
        ComparisonResult::DominatedBy => "DominatedBy".into(),
        ComparisonResult::Incomparable { above_at, below_at } => {
            format!("Incomparable(above_at={above_at}, below_at={below_at})")
        }
    }
}

fn cmd_dominance(args: DominanceArgs) -> Result<(), Failure> {
    positive(args.tol, "tol")?;
    let file: DominanceFile = read_toml(&args.spec)?;
    let (belief_1, density_1) = file.first.build()?;
    let (belief_2, density_2) = file.second.build()?;
    let composite_1 = pushforward(&belief_1, &density_1)?;
    let composite_2 = pushforward(&belief_2, &density_2)?;

    let mut survival_t = Table::new("survival", &["pair", "threshold", "survival"]);
    for (name, comp) in [("first", &composite_1), ("second", &composite_2)] {
        for (threshold, survival) in comp.steps() {
            survival_t.push(vec![name.into(), threshold.into(), survival.into()]);
        }
    }
    let mut comparison_t = Table::new("comparison", &["subject", "result"]);
    comparison_t.push(vec![
        "densities".into(),
        fmt_comparison(&fosd_compare(&density_1, &density_2, args.tol)?).into(),
    ]);
    comparison_t.push(vec![
        "composites".into(),
        fmt_comparison(&composite_compare(&composite_1, &composite_2, args.tol)?).into(),
    ]);
    emit(&[survival_t, comparison_t], args.format, args.out.as_deref())
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(), Failure> {
    if args.rounds == 0 {
        return Err(Failure::new("argument", 2, "--rounds must be at least 1"));
    }
    let reject = |flag: Option<f64>, name: &str, model: &str| -> Result<(), Failure> {
        match flag {
            Some(_) => {
                Err(Failure::new("argument", 2, format!("--{name} does not apply to {model}")))
            }
            None => Ok(()),
        }
    };
    let (game, tol): (GameSpec, f64) = match args.model {
        Model::Bertrand => {
            reject(args.c, "c", "bertrand")?;
            reject(args.phi_lo, "phi-lo", "bertrand")?;
            reject(args.phi_hi, "phi-hi", "bertrand")?;
            reject(args.q_bar, "q-bar", "bertrand")?;
            let g = bertrand_game(
                args.a.unwrap_or(1.0),
                args.phi.unwrap_or(1.0),
                args.p_bar.unwrap_or(3.0),
            )?;
            (g, args.tol.unwrap_or(1e-9))
        }
        Model::Cournot => {
            reject(args.phi, "phi", "cournot")?;
            reject(args.p_bar, "p-bar", "cournot")?;
            let g = cournot_game(
                args.a.unwrap_or(10.0),
                args.c.unwrap_or(2.0),
                args.phi_lo.unwrap_or(1.0),
                args.phi_hi.unwrap_or(3.0),
                args.q_bar.unwrap_or(8.0),
            )?;
            (g, args.tol.unwrap_or(1e-7))
        }
    };
    positive(tol, "tol")?;

    // the closed forms are the unclipped recursion, so solve without the
    // previous-round restriction and compare raw bounds
    let opts = SolveOptions {
        max_rounds: args.rounds,
        width_tol: 0.0,
        grid_size: args.grid,
        edge_policy: EdgePolicy::Unrestricted,
        ..SolveOptions::default()
    };
    let trace = solve(&game, &opts)?;

    let closed_form = |k: u32, theta: f64| -> Result<Interval, Error> {
        match args.model {
            Model::Bertrand => bertrand_round_interval(
                k,
                args.a.unwrap_or(1.0),
                args.phi.unwrap_or(1.0),
                args.p_bar.unwrap_or(3.0),
                theta,
            ),
            Model::Cournot => cournot_round_interval(
                k,
                args.a.unwrap_or(10.0),
                args.c.unwrap_or(2.0),
                args.phi_lo.unwrap_or(1.0),
                args.phi_hi.unwrap_or(3.0),
                args.q_bar.unwrap_or(8.0),
                theta,
            ),
        }
    };

    let mut table = Table::new(
        "reproduce",
        &[
            "round",
            "player",
            "theta",
            "solver_lower",
            "solver_upper",
            "formula_lower",
            "formula_upper",
            "gap",
        ],
    );
    let mut max_gap = 0.0f64;
    for row in trace.rows() {
        if row.round == 0 {
            continue;
        }
        let want = closed_form(row.round as u32, row.theta)?;
        let gap = (row.lower - want.lo).abs().max((row.upper - want.hi).abs());
        max_gap = max_gap.max(gap);
        table.push(vec![
            row.round.into(),
            row.player.into(),
            row.theta.into(),
            row.lower.into(),
            row.upper.into(),
            want.lo.into(),
            want.hi.into(),
            gap.into(),
        ]);
    }
    emit(&[table], args.format, args.out.as_deref())?;
    if max_gap < tol {
        Ok(())
    } else {
        Err(Failure::new(
            "numeric",
            4,
            format!("max closed-form gap {max_gap} exceeds tolerance {tol}"),
        ))
    }
}
