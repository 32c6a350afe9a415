use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use spectral_flow::gallery::{build_covering_path, build_gn_family, build_tan_wrap_loop, CoveringSpec, GnRefinement};
use spectral_flow::runspec::{execute, OutputFormat, RunOutcome, RunSpec};
use spectral_flow::selfcheck::{selfcheck, Budget};
use spectral_flow::specflow::{default_gap, sf_crossing, sf_winding, CrossingOptions};
use spectral_flow::{Error, QuadratureConfig, Result, TracialAlgebra};

#[derive(Parser)]
#[command(name = "sflow", version, about = "Spectral flow in desk-scale semifinite algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetArg {
    Small,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a JSON run specification.
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Cross-check tolerance for method disagreement.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run the seeded invariant suite.
    Selfcheck {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, value_enum, default_value = "small")]
        budget: BudgetArg,
    },
    /// Demonstration families.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Loop of tan(π(t − x − offset)) on a uniform grid over [0, 1].
    Tanwrap {
        #[arg(long, default_value_t = 7)]
        points: usize,
        /// Total grid weight.
        #[arg(long, default_value_t = 1.0)]
        total: f64,
        #[arg(long, default_value_t = 0.13, allow_hyphen_values = true)]
        offset: f64,
    },
    /// Cycle Laplacian on a k-fold covering of an m-cycle.
    Covering {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Resolvent versus functional-calculus distances of the family g_n.
    Gn {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        n: Vec<u64>,
    },
}

fn error_json(e: &Error) -> String {
    RunOutcome {
        report: None,
        error: Some(e.clone()),
    }
    .to_json()
}

fn fail(e: Error) -> ExitCode {
    println!("{}", error_json(&e));
    eprintln!("sflow: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(spec: PathBuf, out: Option<PathBuf>, format: Option<Format>, tolerance: Option<f64>) -> ExitCode {
    let text = match std::fs::read_to_string(&spec) {
        Ok(t) => t,
        Err(e) => return fail(Error::Io(format!("{}: {e}", spec.display()))),
    };
    let spec = match RunSpec::from_json(&text) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Some(t) = tolerance {
        if t.is_nan() || t <= 0.0 {
            return fail(Error::Validation {
                path: "--tolerance".into(),
                message: "must be positive".into(),
            });
        }
    }
    let outcome = execute(&spec, tolerance.unwrap_or(spec.output.tolerance));
    let format = match format {
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Json) => OutputFormat::Json,
        None => spec.output.format,
    };
    let body = match (&outcome.report, format) {
        (Some(r), OutputFormat::Csv) => match r.to_csv() {
            Ok(s) => s,
            Err(e) => return fail(e),
        },
        _ => outcome.to_json() + "\n",
    };
    let target = out.or_else(|| spec.output.file.as_ref().map(PathBuf::from));
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &body) {
                return fail(Error::Io(format!("{}: {e}", path.display())));
            }
        }
        None => print!("{body}"),
    }
    if let Some(e) = &outcome.error {
        eprintln!("sflow: {e}");
        if format == OutputFormat::Csv && outcome.report.is_none() {
            println!("{}", error_json(e));
        }
    }
    ExitCode::from(outcome.exit_code() as u8)
}

fn demo(d: Demo) -> Result<serde_json::Value> {
    let q = QuadratureConfig::default();
    match d {
        Demo::Tanwrap { points, total, offset } => {
            let g = TracialAlgebra::uniform_grid(points, 0.0, 1.0, total)?;
            let p = build_tan_wrap_loop(&g, offset)?;
            let w = sf_winding(&p, &default_gap(&p)?, &q)?;
            let c = sf_crossing(&p, &CrossingOptions::default())?;
            Ok(json!({
                "total_weight": total,
                "winding": w.value,
                "crossing": c.value,
                "telescoping": c.telescoping,
                "wraps": p.wraps().len(),
            }))
        }
        Demo::Covering { m, k } => {
            let c = build_covering_path(&CoveringSpec::standard(m, k))?;
            let g = sf_winding(&c.gamma_path, &default_gap(&c.gamma_path)?, &q)?.value;
            let f = sf_winding(&c.full_path, &default_gap(&c.full_path)?, &q)?.value;
            Ok(json!({
                "m": m,
                "k": k,
                "gamma_trace_flow": g,
                "full_trace_flow": f,
                "ratio_defect": g - f / k as f64,
                "equivariance_residual": c.equivariance_residual,
            }))
        }
        Demo::Gn { n } => {
            let r = build_gn_family(&n, &GnRefinement::default())?;
            Ok(serde_json::to_value(r).expect("report serializes"))
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { spec, out, format, tolerance } => run(spec, out, format, tolerance),
        Command::Selfcheck { seed, budget } => {
            let budget = match budget {
                BudgetArg::Small => Budget::Small,
                BudgetArg::Full => Budget::Full,
            };
            let report = selfcheck(seed, budget);
            println!("{}", report.to_json());
            for r in report.invariants.iter().filter(|r| !r.passed) {
                eprintln!("sflow: invariant {} violated", r.name);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Demo { demo: d } => match demo(d) {
            Ok(v) => {
                println!("{}", serde_json::to_string_pretty(&v).expect("json serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
