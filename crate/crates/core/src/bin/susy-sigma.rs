//! `susy-sigma`: run the identity checks, stream samples and evaluate the
//! closed-form Laplace transform from the command line.
//!
//! Exit status: 0 success, 1 a check failed, 2 usage error, 3 fixture error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use susy_sigma::graph::{Graph, GraphTower};
use susy_sigma::sampler::{draws, ChainConfig};
use susy_sigma::scaling::{laplace_closed_form, ScaleParams};
use susy_sigma::verify::{self, CheckSpec, Policy, Report, SuiteReport, CHECKS};
use susy_sigma::Error;

#[derive(Parser, Debug)]
#[command(name = "susy-sigma", version, about = "Supersymmetric hyperbolic sigma model on finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the registered checks.
    ListChecks(OutputArgs),
    /// Run one check.
    Run {
        #[arg(long)]
        check: String,
        #[command(flatten)]
        common: CheckArgs,
    },
    /// Run every check whose id matches a glob pattern.
    Suite {
        #[arg(long, default_value = "*")]
        filter: String,
        /// Checks run concurrently.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        common: CheckArgs,
    },
    /// Stream `(u, s)` draws of a graph as JSON lines.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form Laplace transform for scaling parameters `[a, b]`.
    Laplace {
        #[arg(long)]
        graph: PathBuf,
        /// One value for all free vertices or a comma-separated list.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        b: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long, default_value_t = ChainConfig::default().n_samples)]
    samples: usize,
    #[arg(long, default_value_t = ChainConfig::default().burn_in)]
    burnin: usize,
    #[arg(long, default_value_t = ChainConfig::default().thinning)]
    thin: usize,
    #[arg(long, default_value_t = ChainConfig::default().n_chains)]
    chains: usize,
    #[arg(long, env = "SUSY_SIGMA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ChainConfig::default().proposal_scale)]
    proposal_scale: f64,
}

impl ChainArgs {
    fn config(&self) -> ChainConfig {
        ChainConfig {
            n_samples: self.samples,
            burn_in: self.burnin,
            thinning: self.thin,
            n_chains: self.chains,
            proposal_scale: self.proposal_scale,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Graph fixture replacing the bundled graphs of graph-based checks.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Tower fixture replacing the bundled towers of tower-based checks.
    #[arg(long)]
    tower: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
    /// Deterministic tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Per-coefficient z threshold override.
    #[arg(long)]
    z_threshold: Option<f64>,
    /// Disable the multiplicity correction of the z threshold.
    #[arg(long)]
    no_bonferroni: bool,
    /// Uniform scaling parameter `a` for checks that take one.
    #[arg(long, allow_hyphen_values = true, requires = "b")]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "a")]
    b: Option<f64>,
    /// Report `runtime_s` as 0 so that repeated runs are byte-identical.
    #[arg(long)]
    reproducible: bool,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Checks,
    Usage(String),
    Fixture(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Fixture(_) | Error::Io(_) | Error::Json(_) | Error::Graph(_) => Failure::Fixture(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn fixture<T>(r: susy_sigma::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Fixture(e.to_string()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("serializable");
    s.push('\n');
    s
}

fn report_rows(reports: &[Report]) -> String {
    let mut s = format!("{:<26} {:<7} {:>6} {:>9} {:>10} {:>10}\n", "check", "verdict", "coefs", "max|z|", "threshold", "runtime_s");
    for r in reports {
        let verdict = if r.passed() { "pass" } else { "fail" };
        s.push_str(&format!(
            "{:<26} {:<7} {:>6} {:>9.3} {:>10.3} {:>10.3}\n",
            r.check,
            verdict,
            r.coefficients.len(),
            r.max_abs_z(),
            r.threshold,
            r.runtime_s
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("    error: {e}\n"));
        }
        for c in r.coefficients.iter().filter(|c| match c.tolerance {
            None => c.z.abs() > r.threshold,
            Some(_) => c.z.abs() > 1.0,
        }) {
            s.push_str(&format!("    {} {:?}: {} vs {} (z = {:.3})\n", c.label, c.subset, c.estimate, c.reference, c.z));
        }
    }
    s
}

fn base_spec(id: &str, args: &CheckArgs) -> Result<CheckSpec, Failure> {
    let mut spec = CheckSpec::new(id).with_chain(args.chain.config());
    if let Some(p) = &args.graph {
        spec.graph = Some(fixture(Graph::from_path(p))?);
    }
    if let Some(p) = &args.tower {
        spec.tower = Some(fixture(GraphTower::from_path(p))?);
    }
    if let Some(t) = args.tol {
        if !(t > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
        spec.tolerance = Some(t);
    }
    if args.z_threshold.is_some() || args.no_bonferroni {
        spec.policy = Some(Policy {
            z_threshold: args.z_threshold.unwrap_or(Policy::default().z_threshold),
            bonferroni: !args.no_bonferroni,
        });
    }
    if let (Some(a), Some(b)) = (args.a, args.b) {
        spec.ab = Some((a, b));
    }
    spec.chain.validate()?;
    Ok(spec)
}

fn scrub(r: &mut Report, reproducible: bool) {
    if reproducible {
        r.runtime_s = 0.0;
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ListChecks(o) => {
            let text = match o.format {
                Format::Json => to_json(
                    &CHECKS
                        .iter()
                        .map(|c| json!({"id": c.id, "description": c.description, "z_threshold": c.z_threshold}))
                        .collect::<Vec<_>>(),
                ),
                Format::Table => CHECKS.iter().map(|c| format!("{:<26} {}\n", c.id, c.description)).collect(),
            };
            emit(&o.out, &text)
        }
        Command::Run { check, common } => {
            let spec = base_spec(&check, &common)?;
            let mut report = verify::run_check(&spec)?;
            scrub(&mut report, common.reproducible);
            let text = match common.output.format {
                Format::Json => to_json(&report),
                Format::Table => report_rows(std::slice::from_ref(&report)),
            };
            emit(&common.output.out, &text)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Suite { filter, parallelism, common } => {
            let spec = base_spec("", &common)?;
            let mut suite: SuiteReport = verify::run_suite(&filter, parallelism, &spec)?;
            for r in &mut suite.reports {
                scrub(r, common.reproducible);
            }
            if common.reproducible {
                suite.runtime_s = 0.0;
            }
            let text = match common.output.format {
                Format::Json => to_json(&suite),
                Format::Table => format!(
                    "{}{} passed, {} failed, {:.1} s\n",
                    report_rows(&suite.reports),
                    suite.passed,
                    suite.failed,
                    suite.runtime_s
                ),
            };
            emit(&common.output.out, &text)?;
            if suite.all_passed() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Sample { graph, chain, out } => {
            let g = fixture(Graph::from_path(&graph))?;
            let cc = chain.config();
            cc.validate()?;
            let n = g.n_free();
            let mut text = String::new();
            for d in draws(&g, &cc)? {
                text.push_str(&json!({"u": &d.u[..n], "s": &d.s[..n]}).to_string());
                text.push('\n');
            }
            emit(&out, &text)
        }
        Command::Laplace { graph, a, b, output } => {
            let g = fixture(Graph::from_path(&graph))?;
            let n = g.n_free();
            let widen = |v: Vec<f64>, name: &str| -> Result<Vec<f64>, Failure> {
                match v.len() {
                    1 => Ok(vec![v[0]; n]),
                    k if k == n => Ok(v),
                    k => Err(Failure::Usage(format!("--{name} needs 1 or {n} values, got {k}"))),
                }
            };
            let p = ScaleParams::new(&widen(a, "a")?, &widen(b, "b")?)?;
            let value = laplace_closed_form(&g, &p)?;
            let text = match output.format {
                Format::Json => to_json(&json!({"laplace": value, "a": &p.a[..n], "b": &p.b[..n]})),
                Format::Table => format!("{value:.5}\n"),
            };
            emit(&output.out, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Fixture(m)) => {
            eprintln!("fixture error: {m}");
            ExitCode::from(3)
        }
    }
}
