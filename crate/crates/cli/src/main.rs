//! `kseries`: solve kernel problems from JSON files, evaluate coefficient
//! files, run parameter sweeps and check problem definitions.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure,
//! 3 I/O, schema or usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use kernelseries::assembler::{
    run_sweep, series_residuals, solve_problem, write_sweep, ConstraintResidual, SolveOptions,
    SolveReport, SweepSpec, DEFAULT_GRID_N,
};
use kernelseries::examples;
use kernelseries::export::{fmt_f64, gain_csv, parse_coeffs_csv, report_coeffs_csv, uniform_grid, NamedSeries};
use kernelseries::linsys::DEFAULT_TOL;
use kernelseries::problem::{localize_to, parse_problem, validate_problem, KernelProblem, Orders, RegionId};
use kernelseries::Error;

/// Enforced-band residuals above this multiple of the coefficient scale fail
/// `validate`.
const BAND_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "kseries", version, about = "Backstepping kernels as truncated double power series")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct OrderArgs {
    /// Truncation order for every kernel group.
    #[arg(long)]
    order: Option<usize>,
    /// Order of one kernel group, as GROUP=N. Repeatable.
    #[arg(long = "orders", value_name = "GROUP=N")]
    orders: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file; writes report.json, coeffs.csv and gain.csv.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        orders: OrderArgs,
        /// Points per axis for grid residuals and points of the gain trace.
        #[arg(long, default_value_t = DEFAULT_GRID_N)]
        grid: usize,
        /// Expansion point override.
        #[arg(long, num_args = 2, value_names = ["X0", "XI0"], allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Record the wall time in report.json (otherwise reruns are byte-identical).
        #[arg(long)]
        timing: bool,
    },
    /// Run a parameter sweep; writes dataset.jsonl and one CSV per solved sample.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        orders: OrderArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Grid residuals per sample (0 disables them).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Evaluate a coefficient file at points, on the triangle or along x = L.
    Eval {
        coeffs: PathBuf,
        /// A single point.
        #[arg(long, num_args = 2, value_names = ["X", "XI"], allow_negative_numbers = true)]
        at: Option<Vec<f64>>,
        /// Points per axis of the triangle grid (or of the gain trace with --gain).
        #[arg(long)]
        grid: Option<usize>,
        /// Evaluate K(L, xi) on a uniform xi grid.
        #[arg(long)]
        gain: bool,
        /// Domain length L.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Slope of the split line, needed for files with region a/b series.
        #[arg(long)]
        beta: Option<f64>,
        /// Expected order; a file with any other order is rejected.
        #[arg(long)]
        order: Option<usize>,
        /// Expected center; a file with any other center is rejected.
        #[arg(long, num_args = 2, value_names = ["X0", "XI0"], allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check equation and unknown counts; optionally grid residuals of a solution.
    Validate {
        input: PathBuf,
        #[command(flatten)]
        orders: OrderArgs,
        #[arg(long, num_args = 2, value_names = ["X0", "XI0"], allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        /// Solve and report grid residuals.
        #[arg(long)]
        solve: bool,
        /// Coefficient file whose grid residuals are reported.
        #[arg(long, conflicts_with = "solve")]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GRID_N)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Print (or write) the problem JSON of a reference example.
    Example {
        name: Option<String>,
        #[arg(long)]
        list: bool,
        /// Directory for NAME.json (all examples when no name is given).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) => 1,
            Error::Schema { .. } | Error::Io(_) | Error::Param(_) => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Command::Solve { input, orders, grid, center, tol, out, timing } => {
            cmd_solve(&input, &orders, grid, center.as_deref(), tol, &out, timing)
        }
        Command::Sweep { spec, seed, orders, tol, grid, out } => cmd_sweep(&spec, seed, &orders, tol, grid, &out),
        Command::Eval { coeffs, at, grid, gain, length, beta, order, center, out } => {
            let q = EvalQuery { at, grid, gain, length, beta, order, center };
            cmd_eval(&coeffs, &q, out.as_deref())
        }
        Command::Validate { input, orders, center, solve, solution, grid, tol } => {
            cmd_validate(&input, &orders, center.as_deref(), solve, solution.as_deref(), grid, tol)
        }
        Command::Example { name, list, out } => cmd_example(name.as_deref(), list, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn load_problem(path: &Path, center: Option<&[f64]>) -> Result<KernelProblem, Failure> {
    let p = parse_problem(&read(path)?)?;
    match center {
        Some(c) => Ok(localize_to(&p, c[0], c[1])?),
        None => Ok(p),
    }
}

fn resolve_orders(p: &KernelProblem, args: &OrderArgs) -> Result<Option<Orders>, Failure> {
    let uniform = args.order.map(Orders::Uniform);
    if args.orders.is_empty() {
        return Ok(uniform);
    }
    let mut orders = p.group_orders(uniform.as_ref())?;
    for spec in &args.orders {
        let bad = || usage(format!("--orders expects GROUP=N, got \"{spec}\""));
        let (g, n) = spec.split_once('=').ok_or_else(bad)?;
        let g: usize = g.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let slot = orders
            .get_mut(g)
            .ok_or_else(|| usage(format!("--orders: group {g} does not exist ({} groups)", p.kernel_groups().len())))?;
        *slot = n;
    }
    Ok(Some(Orders::PerGroup(orders)))
}

fn summary(report: &SolveReport, secs: f64) -> String {
    let orders: Vec<String> = report.orders.iter().map(|o| o.to_string()).collect();
    let mut line = format!(
        "order {} | residual {:.3e} | sparsity {:.4}",
        orders.join(","),
        report.residual_linear,
        report.sparsity
    );
    if !report.residual_grid.is_empty() {
        line += &format!(" | full residual/scale {:.3e}", report.max_full_residual_ratio());
    }
    line += &format!(" | {secs:.3} s");
    if report.divergence_flag {
        line += " | divergence flag set";
    }
    line
}

fn warn_divergence(report: &SolveReport) {
    for d in report.divergence.iter().filter(|d| d.flag) {
        eprintln!(
            "warning: kernel {} ({}) coefficients grow at rate {:.3} per order; the series likely diverges on the domain, try another center",
            d.kernel, d.region, d.growth_rate
        );
    }
}

fn cmd_solve(
    input: &Path,
    order_args: &OrderArgs,
    grid: usize,
    center: Option<&[f64]>,
    tol: f64,
    out: &Path,
    timing: bool,
) -> CliResult {
    let p = load_problem(input, center)?;
    let orders = resolve_orders(&p, order_args)?;
    let check = validate_problem(&p, orders.as_ref());
    if !check.is_ok() {
        eprint!("{}", check.render());
        return Ok(1);
    }
    let opts = SolveOptions {
        orders,
        tol,
        grid_n: grid,
    };
    let start = Instant::now();
    let mut report = solve_problem(&p, &opts)?;
    let secs = start.elapsed().as_secs_f64();
    report.wall_time = timing.then_some(secs);
    fs::create_dir_all(out).map_err(|e| usage(format!("cannot create {}: {e}", out.display())))?;
    let json = serde_json::to_string_pretty(&report.to_json()).expect("report is serializable");
    write(&out.join("report.json"), &(json + "\n"))?;
    write(&out.join("coeffs.csv"), &report_coeffs_csv(&report))?;
    write(&out.join("gain.csv"), &gain_csv(&report, &p, grid.max(2)))?;
    println!("{}", summary(&report, secs));
    warn_divergence(&report);
    Ok(0)
}

fn cmd_sweep(
    spec_path: &Path,
    seed: Option<u64>,
    order_args: &OrderArgs,
    tol: Option<f64>,
    grid: Option<usize>,
    out: &Path,
) -> CliResult {
    let v: serde_json::Value = serde_json::from_str(&read(spec_path)?)
        .map_err(|e| usage(format!("{}: invalid JSON: {e}", spec_path.display())))?;
    let mut spec = SweepSpec::from_json(&v)?;
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    if order_args.order.is_some() || !order_args.orders.is_empty() {
        let first = spec.problem_for(&spec.sample(0))?;
        spec.orders = resolve_orders(&first, order_args)?;
    }
    if let Some(t) = tol {
        spec.tol = t;
    }
    if let Some(g) = grid {
        spec.grid_n = g;
    }
    let records = run_sweep(&spec)?;
    write_sweep(&records, out)?;
    let ok = records.iter().filter(|r| r.is_ok()).count();
    println!(
        "{} samples: {ok} solved, {} failed -> {}",
        records.len(),
        records.len() - ok,
        out.display()
    );
    Ok(if ok == 0 { 2 } else { 0 })
}

struct EvalQuery {
    at: Option<Vec<f64>>,
    grid: Option<usize>,
    gain: bool,
    length: f64,
    beta: Option<f64>,
    order: Option<usize>,
    center: Option<Vec<f64>>,
}

fn eval_series(series: &[NamedSeries], kernel: usize, beta: Option<f64>, x: f64, xi: f64) -> f64 {
    let find = |r: RegionId| series.iter().find(|s| s.kernel == kernel && s.region == r.name());
    if let Some(s) = find(RegionId::Whole) {
        return s.series.eval(x, xi);
    }
    let region = if xi <= beta.unwrap_or(0.0) * x { RegionId::A } else { RegionId::B };
    find(region).map_or(f64::NAN, |s| s.series.eval(x, xi))
}

fn cmd_eval(path: &Path, q: &EvalQuery, out: Option<&Path>) -> CliResult {
    let series = parse_coeffs_csv(&read(path)?)?;
    for s in &series {
        if let Some(n) = q.order {
            if s.series.order() != n {
                return Err(usage(format!(
                    "kernel {} ({}) has order {}, expected {n}",
                    s.kernel,
                    s.region,
                    s.series.order()
                )));
            }
        }
        if let Some(c) = &q.center {
            if s.series.center() != (c[0], c[1]) {
                return Err(usage(format!(
                    "kernel {} ({}) is centered at {:?}, expected ({}, {})",
                    s.kernel,
                    s.region,
                    s.series.center(),
                    c[0],
                    c[1]
                )));
            }
        }
        if s.region != RegionId::Whole.name() && q.beta.is_none() {
            return Err(usage("file has split-region series; pass --beta"));
        }
    }
    let mut kernels: Vec<usize> = series.iter().map(|s| s.kernel).collect();
    kernels.sort_unstable();
    kernels.dedup();
    let columns: String = kernels.iter().map(|k| format!(",K{k}")).collect();

    let points: Vec<(f64, f64)> = if let Some(at) = &q.at {
        vec![(at[0], at[1])]
    } else if q.gain {
        uniform_grid(q.length, q.grid.unwrap_or(DEFAULT_GRID_N))
            .into_iter()
            .map(|xi| (q.length, xi))
            .collect()
    } else if let Some(n) = q.grid {
        let g = uniform_grid(q.length, n);
        g.iter()
            .enumerate()
            .flat_map(|(i, &x)| g[..=i].iter().map(move |&xi| (x, xi)))
            .collect()
    } else {
        return Err(usage("eval needs --at X XI, --grid N or --gain"));
    };
    let mut text = if q.gain && q.at.is_none() {
        format!("xi{columns}\n")
    } else {
        format!("x,xi{columns}\n")
    };
    for (x, xi) in points {
        if !(q.gain && q.at.is_none()) {
            text += &fmt_f64(x);
            text.push(',');
        }
        text += &fmt_f64(xi);
        for &k in &kernels {
            text.push(',');
            text += &fmt_f64(eval_series(&series, k, q.beta, x, xi));
        }
        text.push('\n');
    }
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn print_residuals(res: &[ConstraintResidual]) -> bool {
    let mut ok = true;
    println!("grid residuals (enforced band / full / coefficient scale):");
    for r in res {
        let pass = r.enforced_band <= BAND_TOL * r.scale;
        ok &= pass;
        println!(
            "  {:<18} {:.3e}  {:.3e}  {:.3e}  {}",
            r.id,
            r.enforced_band,
            r.full,
            r.scale,
            if pass { "ok" } else { "ABOVE TOLERANCE" }
        );
    }
    ok
}

fn cmd_validate(
    input: &Path,
    order_args: &OrderArgs,
    center: Option<&[f64]>,
    solve: bool,
    solution: Option<&Path>,
    grid: usize,
    tol: f64,
) -> CliResult {
    let p = load_problem(input, center)?;
    let orders = resolve_orders(&p, order_args)?;
    let report = validate_problem(&p, orders.as_ref());
    print!("{}", report.render());
    if !report.is_ok() {
        return Ok(1);
    }
    let residuals = if solve {
        let opts = SolveOptions { orders, tol, grid_n: grid };
        Some(solve_problem(&p, &opts)?.residual_grid)
    } else if let Some(path) = solution {
        let series = parse_coeffs_csv(&read(path)?)?;
        let lookup = |k: usize, r: RegionId| {
            series
                .iter()
                .find(|s| s.kernel == k && s.region == r.name())
                .map(|s| &s.series)
        };
        Some(series_residuals(&p, lookup, grid).map_err(|e| match e {
            Error::DimensionMismatch(m) => usage(format!("{}: {m}", path.display())),
            e => e.into(),
        })?)
    } else {
        None
    };
    match residuals {
        Some(r) if !print_residuals(&r) => Ok(1),
        _ => Ok(0),
    }
}

fn cmd_example(name: Option<&str>, list: bool, out: Option<&Path>) -> CliResult {
    if list {
        for n in examples::NAMES {
            println!("{n}");
        }
        return Ok(0);
    }
    let names: Vec<&str> = match (name, out) {
        (Some(n), _) => vec![n],
        (None, Some(_)) => examples::NAMES.to_vec(),
        (None, None) => return Err(usage("example needs a NAME, --list or --out DIR")),
    };
    for n in names {
        let json = examples::canonical_json(n)?;
        match out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
                write(&dir.join(format!("{n}.json")), &(json.clone() + "\n"))?;
            }
            None => println!("{json}"),
        }
    }
    Ok(0)
}
