use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_maxmin::harness::{self, ExperimentReport, ExperimentSpec, Mode, SweepAxis};
use irs_maxmin::{Error, Prefactor, SystemConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "irs-maxmin", version, about = "Max-min weighted SINR optimization for IRS-assisted massive MIMO uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration.
    Run(Common),
    /// Solve along a parameter axis.
    Sweep(Common),
    /// Solve and compare against Monte Carlo.
    Validate(Common),
    /// Compare the analytic phase gradient with finite differences.
    Gradcheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV, plot-data and JSON files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo trials per point (validate).
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// irs_elements, bs_antennas, p_max_db, kappa or kappa_theta.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated, strictly increasing sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock time per row (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Use the printed gradient prefactor (negative control).
    #[arg(long, hide = true)]
    printed_prefactor: bool,
}

/// Failure reported as one JSON object on stderr.
struct Failure {
    kind: &'static str,
    message: String,
    details: serde_json::Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let details = match &e {
            Error::NonConvergence { iterations, residual, .. } => json!({ "iterations": iterations, "residual": residual }),
            _ => serde_json::Value::Null,
        };
        Failure { kind: e.kind(), message: e.to_string(), details }
    }
}

fn build_spec(mode: Mode, c: &Common) -> Result<ExperimentSpec, Failure> {
    let base = match &c.config {
        Some(p) => SystemConfig::from_file(p)?,
        None => SystemConfig::default(),
    };
    let mut spec = ExperimentSpec::new(base, mode);
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    spec.trials = c.trials;
    spec.out_dir = c.out.clone();
    spec.timing = c.timing;
    match (&c.axis, &c.values) {
        (Some(a), Some(v)) => {
            spec.axis = Some(a.parse::<SweepAxis>()?);
            spec.values = harness::parse_values(v)?;
        }
        (None, None) => {}
        _ => return Err(Error::Argument("--axis and --values go together".into()).into()),
    }
    spec.validate()?;
    Ok(spec)
}

fn experiment(spec: &ExperimentSpec) -> Result<(), Failure> {
    let report: ExperimentReport = harness::run_experiment(spec)?;
    print!("{}", harness::render_csv(&report));
    if let Some(dir) = &spec.out_dir {
        for p in harness::write_outputs(&report, dir, &spec.stem())? {
            eprintln!("wrote {}", p.display());
        }
    }
    let failures = report.failures();
    if failures.is_empty() {
        return Ok(());
    }
    let rows: Vec<_> = failures
        .iter()
        .map(|r| json!({ "sweep_value": r.sweep_value, "error": r.error }))
        .collect();
    Err(Failure {
        kind: "solver",
        message: format!("{} of {} points failed", failures.len(), report.rows.len()),
        details: json!({ "failures": rows }),
    })
}

fn gradcheck(spec: &ExperimentSpec, printed: bool) -> Result<(), Failure> {
    let mut base = spec.base.clone();
    base.seed = spec.seed;
    let form = if printed { Prefactor::AsPrinted } else { Prefactor::ChainRule };
    let report = harness::gradcheck(&base, &harness::GRADCHECK_GRID, form)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let path = dir.join("gradcheck.json");
        std::fs::write(&path, text + "\n").map_err(Error::from)?;
        eprintln!("wrote {}", path.display());
    }
    if report.pass {
        return Ok(());
    }
    let worst = report.worst_case().expect("grid is non-empty");
    Err(Failure {
        kind: "gradcheck",
        message: format!(
            "relative error {:.3e} exceeds {:e} at (M,N,K)=({},{},{})",
            worst.max_rel_error, report.tolerance, worst.bs_antennas, worst.irs_elements, worst.users
        ),
        details: json!({ "worst_k": worst.worst.0, "worst_n": worst.worst.1, "max_rel_error": worst.max_rel_error }),
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let (mode, common) = match &cli.command {
        Command::Run(c) => (Mode::Run, c),
        Command::Sweep(c) => (Mode::Sweep, c),
        Command::Validate(c) => (Mode::Validate, c),
        Command::Gradcheck(c) => (Mode::Gradcheck, c),
    };
    let spec = build_spec(mode, common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Argument("--threads must be at least 1".into()).into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure { kind: "internal", message: e.to_string(), details: serde_json::Value::Null })?;
    pool.install(|| match mode {
        Mode::Gradcheck => gradcheck(&spec, common.printed_prefactor),
        _ => experiment(&spec),
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let summary = json!({ "status": "error", "kind": f.kind, "message": f.message, "details": f.details });
            eprintln!("{summary}");
            ExitCode::FAILURE
        }
    }
}
