//! `finsler`: curvature reports, verification suites, classification and
//! geodesic experiments for Finsler metrics given as JSON spec files.

mod geodesic;
mod output;
mod report;
mod spec_file;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler::analysis::{classify, Thresholds};
use finsler::curvature::IDENTITY_TOL;
use serde::Serialize;

use crate::geodesic::{cmd_geodesic, parse_flows, parse_parallelogram, GeodesicArgs};
use crate::output::{emit, json_string, parse_vec, Failure, ToolInfo, EXIT_OK, TOOL};
use crate::report::{cmd_report, ReportArgs, Tolerances};
use crate::verify::{cmd_verify, Suite, VerifyArgs};

/// Default relative spread below which a fitted ratio counts as constant.
const FIT_SPREAD_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical Finsler geometry from metric spec files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArg {
    /// Metric spec JSON file.
    spec: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature tensors, identity residuals and fits at a set of points.
    Report {
        #[command(flatten)]
        spec: SpecArg,
        /// JSON array of {"x": [...], "y": [...]} points. Overrides sampling.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Number of seeded sample points.
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tolerance on identity residuals.
        #[arg(long, default_value_t = IDENTITY_TOL)]
        tol: f64,
        /// Relative spread below which the fitted ratio counts as constant.
        #[arg(long, default_value_t = FIT_SPREAD_TOL)]
        spread_tol: f64,
        /// Include every tensor component.
        #[arg(long)]
        full_tensors: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a verification suite; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Points for the pointwise suites.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = IDENTITY_TOL)]
        tol: f64,
        /// Geodesic start for theorem3 and flows (default: first seeded point).
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<String>,
        /// Geodesic length for theorem3 and flows.
        #[arg(long = "t", default_value_t = 1.0, allow_hyphen_values = true)]
        t_end: f64,
        /// Geodesic samples for theorem3 and flows.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Relative-stretch ratio (default: fitted at the start point).
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Flows to check in the flows suite.
        #[arg(long, default_value = "phi,mu")]
        flows: String,
        /// Residual table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class flags (Riemannian, Berwald, Landsberg, ...) from sampled norms.
    Classify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A single threshold for every flag, or a JSON file of per-flag thresholds.
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrates a geodesic and writes a time-series CSV plus a JSON summary.
    Geodesic {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        /// End time (negative integrates backwards).
        #[arg(long = "t", default_value_t = 1.0, allow_hyphen_values = true)]
        t_end: f64,
        /// Number of sample intervals.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Rescale y0 so that F(x0, y0) = 1.
        #[arg(long)]
        unit_speed: bool,
        /// Comma-separated scalars: phi, L_norm, mu, p, c.
        #[arg(long, default_value = "")]
        flows: String,
        /// Ratio for the phi law columns.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Holonomy experiment at x0: "u;v;w;eps-list".
        #[arg(long, allow_hyphen_values = true)]
        parallelogram: Option<String>,
        /// Carry w by nonlinear transport instead of linearly over a transported support.
        #[arg(long)]
        nonlinear: bool,
        /// Initial support vector for linear transport (default: y0).
        #[arg(long, allow_hyphen_values = true)]
        support: Option<String>,
        /// Time-series CSV (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary (default: standard output when --out is given).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Parallelogram defects as CSV.
        #[arg(long)]
        holonomy_out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ClassifyDocument {
    schema: &'static str,
    tool: ToolInfo,
    metric: finsler::metric::MetricSpec,
    samples: usize,
    thresholds: Thresholds,
    verdict: finsler::analysis::ClassificationVerdict,
}

fn thresholds(arg: Option<&str>) -> Result<Thresholds, Failure> {
    let Some(s) = arg else {
        return Ok(Thresholds::default());
    };
    if let Ok(v) = s.parse::<f64>() {
        if !(v >= 0.0) {
            return Err(Failure::usage("--thresholds must be non-negative"));
        }
        return Ok(Thresholds::uniform(v));
    }
    let text = std::fs::read_to_string(Path::new(s)).map_err(|e| Failure::usage(format!("{s}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{s}: invalid thresholds: {e}")))
}

fn opt_vec(s: &Option<String>, what: &str) -> Result<Option<Vec<f64>>, Failure> {
    s.as_deref().map(|v| parse_vec(v, what)).transpose()
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Report {
            spec,
            points,
            samples,
            seed,
            tol,
            spread_tol,
            full_tensors,
            out,
        } => {
            let m = spec_file::load(&spec.spec)?;
            cmd_report(
                &m,
                &ReportArgs {
                    points,
                    samples,
                    seed,
                    tolerances: Tolerances {
                        identity: tol,
                        fit_spread: spread_tol,
                    },
                    full_tensors,
                    out,
                },
            )
        }
        Command::Verify {
            spec,
            suite,
            samples,
            seed,
            tol,
            x0,
            y0,
            t_end,
            steps,
            c,
            flows,
            out,
        } => {
            let m = spec_file::load(&spec.spec)?;
            cmd_verify(
                &m,
                &VerifyArgs {
                    suite,
                    samples,
                    seed,
                    tol,
                    x0: opt_vec(&x0, "--x0")?,
                    y0: opt_vec(&y0, "--y0")?,
                    t_end,
                    steps,
                    c,
                    flows: parse_flows(&flows)?,
                    out,
                },
            )
        }
        Command::Classify {
            spec,
            samples,
            seed,
            thresholds: th,
            out,
        } => {
            let m = spec_file::load(&spec.spec)?;
            let th = thresholds(th.as_deref())?;
            let verdict = classify(&m, samples.max(1), seed, &th);
            let doc = ClassifyDocument {
                schema: "finsler-classify/1",
                tool: TOOL,
                metric: m.spec().clone(),
                samples: samples.max(1),
                thresholds: th,
                verdict,
            };
            emit(out.as_deref(), &json_string(&doc)?)?;
            Ok(EXIT_OK)
        }
        Command::Geodesic {
            spec,
            x0,
            y0,
            t_end,
            samples,
            unit_speed,
            flows,
            c,
            parallelogram,
            nonlinear,
            support,
            out,
            summary,
            holonomy_out,
        } => {
            let m = spec_file::load(&spec.spec)?;
            let args = GeodesicArgs {
                x0: parse_vec(&x0, "--x0")?,
                y0: parse_vec(&y0, "--y0")?,
                t_end,
                samples,
                unit_speed,
                flows: parse_flows(&flows)?,
                c,
                parallelogram: parallelogram.as_deref().map(parse_parallelogram).transpose()?,
                nonlinear_holonomy: nonlinear,
                support: opt_vec(&support, "--support")?,
                out,
                summary,
                holonomy_out,
            };
            cmd_geodesic(&m, &args)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { output::EXIT_SPEC as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
