use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use reilly_core::boundary::{self, ReillyForm, Sigma};
use reilly_core::bounds::{self, BoundOptions, Theorem};
use reilly_core::identities;
use reilly_core::spectral::{Discretization, EigenOptions};
use reilly_core::suite::{self, csv_field, fmt_f64, SuiteConfig, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use reilly_core::zoo::{self, BoundaryCondition};

#[derive(Parser)]
#[command(name = "reilly-lab", version, about = "Verify Bochner/Reilly identities and eigenvalue bounds for div(A grad u)")]
struct Cli {
    /// Seed for sampled points and solver start vectors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "REILLY_LAB_THREADS")]
    threads: Option<usize>,
    /// Output file; for `suite`, the report directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Catalog of manifolds and fields.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Pointwise identities and integrated Reilly formulas.
    Check {
        #[command(subcommand)]
        action: CheckAction,
    },
    /// Lowest eigenpairs of L_A on a catalog mesh.
    Eigen(EigenArgs),
    /// First-eigenvalue lower bound for one theorem.
    Bounds(BoundsArgs),
    /// Run a JSON-configured suite.
    Suite {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    List,
}

#[derive(Subcommand)]
enum CheckAction {
    Identities {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Overrides the per-identity tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    Reilly {
        #[arg(long)]
        case: String,
        #[arg(long)]
        u: String,
        #[arg(long, default_value_t = 12)]
        quad: usize,
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        sigma: String,
        /// parallel | codazzi (default: parallel when the field is declared parallel).
        #[arg(long)]
        form: Option<String>,
    },
}

#[derive(Args)]
struct EigenArgs {
    #[arg(long)]
    case: String,
    #[arg(long, default_value_t = 4)]
    refine: usize,
    #[arg(long, value_parser = parse_bc)]
    bc: Option<BoundaryCondition>,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long)]
    dense: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    case: String,
    #[arg(long)]
    theorem: String,
    #[arg(long, default_value_t = 4)]
    refine: usize,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, value_parser = parse_bc)]
    bc: Option<BoundaryCondition>,
    #[arg(long, default_value_t = bounds::DEFAULT_TOLERANCE)]
    tolerance: f64,
}

fn parse_bc(s: &str) -> Result<BoundaryCondition, String> {
    BoundaryCondition::parse(s).ok_or_else(|| format!("unknown boundary condition `{s}`"))
}

/// Error with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(e: impl ToString) -> Failure {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
    fn numeric(e: impl ToString) -> Failure {
        Failure { code: EXIT_FAILURE, message: e.to_string() }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::numeric(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Failure::numeric),
    }
}

fn zoo_list(out: Option<&Path>) -> Result<i32, Failure> {
    let mut text = zoo::list_lines().join("\n");
    text.push('\n');
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn check_identities(case: &str, points: usize, seed: u64, tol: Option<f64>, out: Option<&Path>) -> Result<i32, Failure> {
    let (entry, idx) = zoo::resolve_case(case).map_err(Failure::config)?;
    let records = identities::run_case(&entry, idx, points, seed, tol).map_err(Failure::numeric)?;
    let mut text = String::from("identity,function,point_index,point,relative_residual,pass\n");
    for r in &records {
        let point: Vec<String> = r.point.iter().map(|x| fmt_f64(*x)).collect();
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.identity.id(),
            csv_field(r.function.as_deref().unwrap_or("")),
            r.point_index,
            point.join(";"),
            fmt_f64(r.relative_residual),
            r.pass()
        ));
    }
    emit(out, &text)?;
    Ok(if records.iter().all(|r| r.pass()) { EXIT_OK } else { EXIT_FAILURE })
}

fn check_reilly(
    case: &str,
    u: &str,
    quad: usize,
    sigma: &str,
    form: Option<&str>,
    out: Option<&Path>,
) -> Result<i32, Failure> {
    let (entry, idx) = zoo::resolve_case(case).map_err(Failure::config)?;
    let a = &entry.fields[idx].field;
    let f = entry.function(u).map_err(Failure::config)?;
    let s = if sigma == "auto" {
        boundary::pin_sigma(quad).map_err(Failure::numeric)?.sigma
    } else {
        Sigma::parse(sigma).ok_or_else(|| Failure::config(format!("invalid sigma `{sigma}`")))?
    };
    let form = match form {
        Some(name) => suite::parse_form(name).ok_or_else(|| Failure::config(format!("unknown form `{name}`")))?,
        None if a.declared.parallel => ReillyForm::Parallel,
        None => ReillyForm::Codazzi,
    };
    let eval = match form {
        ReillyForm::Parallel => boundary::reilly_parallel(&entry.manifold, a, f, quad, s),
        ReillyForm::Codazzi => boundary::reilly_codazzi(&entry.manifold, a, f, quad, s),
    }
    .map_err(|e| match e {
        boundary::BoundaryError::NoBoundary(_) => Failure::config(e),
        _ => Failure::numeric(e),
    })?;
    let terms = eval.b_terms.iter().map(|t| ("B", t)).chain(eval.c_terms.iter().map(|t| ("C", t)));
    let mut header = String::from("case,q,sigma,B,C,defect");
    let mut row = format!(
        "{},{},{},{},{},{}",
        csv_field(case),
        quad,
        s.label(),
        fmt_f64(eval.b),
        fmt_f64(eval.c),
        fmt_f64(eval.defect)
    );
    for (side, t) in terms {
        header.push_str(&format!(",{}", csv_field(&format!("{side}:{}", t.name))));
        row.push_str(&format!(",{}", fmt_f64(t.value)));
    }
    emit(out, &format!("{header}\n{row}\n"))?;
    Ok(EXIT_OK)
}

fn eigen(args: &EigenArgs, seed: u64, out: Option<&Path>) -> Result<i32, Failure> {
    let (entry, idx) = zoo::resolve_case(&args.case).map_err(Failure::config)?;
    let bc = args.bc.unwrap_or_else(|| bounds::default_bc(&entry));
    let start = Instant::now();
    let disc = Discretization::new(&entry.manifold, entry.topology, &entry.fields[idx].field, args.refine)
        .map_err(Failure::numeric)?;
    disc.check_bc(bc).map_err(Failure::config)?;
    let res = disc
        .eigen(bc, &EigenOptions { count: args.k, dense: args.dense, seed })
        .map_err(Failure::numeric)?;
    let runtime = start.elapsed().as_secs_f64();
    let k = res.eigenvalues.len();
    let mut header = String::from("case,L,unknowns");
    (1..=k).for_each(|i| header.push_str(&format!(",lambda_{i}")));
    (1..=k).for_each(|i| header.push_str(&format!(",residual_{i}")));
    header.push_str(",runtime_s");
    let mut row = format!("{},{},{}", csv_field(&args.case), args.refine, res.unknowns);
    res.eigenvalues.iter().chain(&res.residuals).for_each(|v| row.push_str(&format!(",{}", fmt_f64(*v))));
    row.push_str(&format!(",{runtime:.3}"));
    emit(out, &format!("{header}\n{row}\n"))?;
    Ok(EXIT_OK)
}

fn bounds_cmd(args: &BoundsArgs, seed: u64, out: Option<&Path>) -> Result<i32, Failure> {
    let theorem = Theorem::parse(&args.theorem).map_err(Failure::config)?;
    zoo::resolve_case(&args.case).map_err(Failure::config)?;
    if args.points < bounds::MIN_SAMPLES {
        return Err(Failure::config(format!("--points must be at least {}", bounds::MIN_SAMPLES)));
    }
    let opts = BoundOptions { refine: args.refine, points: args.points, seed, tolerance: args.tolerance, bc: args.bc };
    let report = bounds::run_bound(&args.case, theorem, &opts).map_err(Failure::numeric)?;
    let text = serde_json::to_string_pretty(&report).map_err(Failure::numeric)? + "\n";
    emit(out, &text)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

fn run_suite(path: &Path, out: Option<&Path>) -> Result<i32, Failure> {
    let config = SuiteConfig::load(path).map_err(Failure::config)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));
    fs::create_dir_all(&dir).map_err(|e| Failure::numeric(format!("{}: {e}", dir.display())))?;
    let (report, metadata) = suite::run_suite(&config);
    let (name, body) = match config.format {
        suite::Format::Json => ("report.json", report.to_json()),
        suite::Format::Csv => ("report.csv", report.to_csv()),
    };
    emit(Some(&dir.join(name)), &body)?;
    let meta = serde_json::to_string_pretty(&metadata).map_err(Failure::numeric)? + "\n";
    emit(Some(&dir.join("metadata.json")), &meta)?;
    for r in report.runs.iter().filter(|r| matches!(r.status, suite::Status::Fail | suite::Status::Error)) {
        eprintln!("run {} ({} {}) failed: {}", r.index, r.command, r.case.as_deref().unwrap_or("-"), r.detail);
    }
    eprintln!(
        "{} passed, {} failed, {} skipped; report in {}",
        report.passed,
        report.failed,
        report.skipped,
        dir.join(name).display()
    );
    Ok(report.exit_code())
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Zoo { action: ZooAction::List } => zoo_list(out),
        Command::Check { action: CheckAction::Identities { case, points, tol } } => {
            check_identities(case, *points, cli.seed, *tol, out)
        }
        Command::Check { action: CheckAction::Reilly { case, u, quad, sigma, form } } => {
            check_reilly(case, u, *quad, sigma, form.as_deref(), out)
        }
        Command::Eigen(args) => eigen(args, cli.seed, out),
        Command::Bounds(args) => bounds_cmd(args, cli.seed, out),
        Command::Suite { config } => run_suite(config, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    let code = pool.install(|| dispatch(&cli)).unwrap_or_else(|f| {
        eprintln!("error: {}", f.message);
        f.code
    });
    ExitCode::from(code as u8)
}
