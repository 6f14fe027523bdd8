//! Batch front end: load a JSON document of spaces, systems, relations and a
//! composition tree, then evaluate points, sweep grids, reproduce the
//! catalog ensembles, or run the law suites.
//!
//! Exit codes: 0 success, 1 validation error, 2 solver failure, 3 law or
//! tolerance breach.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use entroad::catalog;
use entroad::document::{self, AxisSpec, Document};
use entroad::laws;
use entroad::optimize::SolverConfig;
use entroad::Error;

#[derive(Parser)]
#[command(
    name = "entroad",
    version,
    about = "Compositional thermostatics runner"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the composed system at the document's query points.
    Eval {
        doc: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Print the normalized document instead of running.
        #[arg(long)]
        dump_normalized: bool,
    },
    /// Sweep a grid over target coordinates, one CSV row per point.
    Sweep {
        doc: PathBuf,
        /// Repeatable: name=lo:hi:steps over a target coordinate.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        dump_normalized: bool,
    },
    /// Run the randomized law suites and report pass/fail per suite.
    Laws {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Reproductions of the worked ensembles with closed-form references.
    Catalog {
        #[command(subcommand)]
        cmd: CatalogCmd,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Compare engine and reference on one entry; nonzero exit on breach.
    Run {
        /// One of: two_tanks, gas_equalization, bath_coupling, canonical,
        /// grand_canonical, microcanonical.
        name: String,
        /// Repeatable k=v overrides (e.g. C1=1.5, T=2, H0=0 H1=1).
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// List the entry names.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Convergence { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Eval {
            doc,
            format,
            dump_normalized,
        } => {
            let doc = load(&doc)?;
            if dump_normalized {
                println!("{}", doc.normalized_json());
                return Ok(ExitCode::SUCCESS);
            }
            let rdoc = document::resolve(&doc)?;
            let rows = document::run_eval(&rdoc)?;
            print!("{}", render(&rdoc, &rows, format));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep {
            doc,
            axes,
            format,
            dump_normalized,
        } => {
            let doc = load(&doc)?;
            if dump_normalized {
                println!("{}", doc.normalized_json());
                return Ok(ExitCode::SUCCESS);
            }
            let rdoc = document::resolve(&doc)?;
            let axes = axes
                .iter()
                .map(|a| AxisSpec::parse(a))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = document::run_sweep(&rdoc, &axes)?;
            print!("{}", render(&rdoc, &rows, format));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Laws { seed, trials } => {
            let report = laws::run_all(seed, trials, &SolverConfig::default())?;
            print!("{}", report.render());
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Cmd::Catalog { cmd } => match cmd {
            CatalogCmd::List => {
                for name in catalog::names() {
                    println!("{name}");
                }
                Ok(ExitCode::SUCCESS)
            }
            CatalogCmd::Run { name, params } => {
                let params = parse_params(&params)?;
                let entry = catalog::build(&name, &params)?;
                let rows = catalog::run(&entry, &SolverConfig::default())?;
                print_catalog(&entry.name, &rows);
                Ok(if rows.iter().all(|r| r.pass) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                })
            }
        },
    }
}

fn load(path: &PathBuf) -> Result<Document, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
    Document::from_json(&text)
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Document(format!("parameter {p:?}: expected k=v")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Document(format!("parameter {p:?}: unreadable value")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn render(rdoc: &document::ResolvedDocument, rows: &[document::EvalRow], format: Format) -> String {
    match format {
        Format::Csv => document::render_csv(rdoc, rows),
        Format::Table => document::render_table(rdoc, rows),
    }
}

fn print_catalog(name: &str, rows: &[catalog::CatalogRow]) {
    println!("catalog {name}");
    println!(
        "{:<24} {:>14} {:>14} {:>12} {:>12} {:>10}  ok",
        "query", "reference", "engine", "gap", "argmax_gap", "status"
    );
    for row in rows {
        let argmax_gap = row
            .argmax_gap
            .map(|g| format!("{g:.3e}"))
            .unwrap_or_else(|| "-".into());
        let gap = if row.gap.is_finite() {
            format!("{:.3e}", row.gap)
        } else {
            "tag mismatch".into()
        };
        println!(
            "{:<24} {:>14} {:>14} {:>12} {:>12} {:>10}  {}",
            row.query.to_string(),
            row.reference.to_string(),
            row.engine.to_string(),
            gap,
            argmax_gap,
            row.status.to_string(),
            if row.pass { "pass" } else { "FAIL" }
        );
    }
}
