use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use condenser_core::disc::{self, CondenserProblem, GridConfig};
use condenser_core::experiments::{
    cmd_blowup, cmd_compare, cmd_conjecture, cmd_lowerbound, cmd_plateau, parse_set_spec,
    BlowupParams, CompareParams, ConjectureParams, ExperimentReport, LowerBoundParams,
    PlateauParams,
};
use condenser_core::{
    builder, capacity, capacity_exact, condenser_capacity, condenser_capacity_exact,
    equilibrium_measure, extremal, Error,
};

#[derive(Parser)]
#[command(name = "condenser", version, about = "Capacities of dyadic boundary sets and disc condensers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Output {
    /// Output format; experiments support json and csv, the rest json and text.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct Grid {
    #[arg(long, default_value_t = 1024)]
    grid_angular: usize,
    #[arg(long, default_value_t = 200)]
    grid_radial: usize,
    /// Relative residual of the disc solve.
    #[arg(long, default_value_t = 1e-10)]
    solver_tol: f64,
}

impl Grid {
    fn config(self) -> GridConfig {
        GridConfig {
            angular: self.grid_angular,
            radial: self.grid_radial,
            tol: self.solver_tol,
            ..GridConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tree capacity of a set.
    CapTree {
        #[arg(long)]
        set: String,
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Tree condenser capacities for n = 0..=n_max.
    CapCond {
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Extremal function table, or the equilibrium measure with --measure.
    Extremal {
        #[arg(long)]
        set: String,
        #[arg(long)]
        measure: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Prefix set of prescribed capacity.
    BuildSet {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Equal-split family of capacity eps at depth n.
    EqualSplit {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Disc condenser capacity of a set against the disc of given radius.
    SolveDisc {
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[command(flatten)]
        grid: Grid,
        /// Use conjugate gradients on the whole grid instead of the boundary reduction.
        #[arg(long)]
        full_grid: bool,
        /// Write the potential as CSV rows rho,theta,u.
        #[arg(long)]
        dump_field: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run a named experiment.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
        #[command(flatten)]
        output: Output,
        /// Also write `x y` plot data for two columns, as X,Y.
        #[arg(long, requires = "plot_out", global = true)]
        plot: Option<String>,
        #[arg(long, global = true)]
        plot_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    Blowup {
        #[arg(long, default_value = "prefix:1/2")]
        set: String,
        #[arg(long, default_value_t = 20)]
        n_max: u32,
        #[arg(long, default_value_t = 1e3)]
        threshold: f64,
        /// Attach disc values up to this level.
        #[arg(long, default_value_t = 0)]
        disc_n_max: u32,
        #[command(flatten)]
        grid: Grid,
    },
    Plateau {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 12)]
        n_max: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Evaluate in exact rationals.
        #[arg(long)]
        exact: bool,
    },
    Lowerbound {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    Compare {
        #[arg(long, default_value = "shadow:1,0")]
        set: String,
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        #[command(flatten)]
        grid: Grid,
    },
    Conjecture {
        /// Comma-separated deficits.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.1, 0.03125, 0.00390625])]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        n_max: u32,
        #[arg(long, default_value_t = 0)]
        disc_n_max: u32,
        #[command(flatten)]
        grid: Grid,
    },
}

fn emit(output: &Output, body: &str) -> Result<(), Error> {
    match &output.out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values are serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::CapTree { set, exact, output } => {
            let e = parse_set_spec(&set)?;
            let value = capacity(&e);
            let exact = exact.then(|| capacity_exact(&e).to_string());
            let body = match output.format {
                Format::Text => match &exact {
                    Some(q) => format!("{value}\t{q}\n"),
                    None => format!("{value}\n"),
                },
                _ => pretty(&json!({ "set": set, "capacity": value, "exact": exact })),
            };
            emit(&output, &body)?;
        }
        Command::CapCond {
            set,
            n_max,
            exact,
            output,
        } => {
            let e = parse_set_spec(&set)?;
            let rows: Vec<(u32, f64, Option<String>)> = (0..=n_max)
                .map(|n| {
                    let q = exact.then(|| condenser_capacity_exact(&e, n as u64).to_string());
                    (n, condenser_capacity(&e, n as u64), q)
                })
                .collect();
            let body = match output.format {
                Format::Text => rows
                    .iter()
                    .map(|(n, v, q)| match q {
                        Some(q) => format!("{n}\t{v}\t{q}\n"),
                        None => format!("{n}\t{v}\n"),
                    })
                    .collect(),
                _ => pretty(&json!({
                    "set": set,
                    "rows": rows.iter().map(|(n, v, q)| json!({ "n": n, "value": v, "exact": q })).collect::<Vec<_>>(),
                })),
            };
            emit(&output, &body)?;
        }
        Command::Extremal {
            set,
            measure,
            output,
        } => {
            let e = parse_set_spec(&set)?;
            let value = if measure {
                serde_json::to_value(equilibrium_measure(&e)?.arcs())?
            } else {
                serde_json::to_value(extremal(&e)?)?
            };
            emit(&output, &pretty(&value))?;
        }
        Command::BuildSet { eps, tol, output } => {
            let (t, e) = builder::set_of_capacity_with(eps, tol, builder::BUILDER_MAX_RESOLUTION)?;
            let body = match output.format {
                Format::Text => format!("# t = {t}, capacity = {}\n{}", capacity(&e), e.to_text()?),
                _ => pretty(&json!({
                    "target": eps,
                    "t": t.to_string(),
                    "capacity": capacity(&e),
                    "leaves": e.to_json().ok(),
                })),
            };
            emit(&output, &body)?;
        }
        Command::EqualSplit { eps, n, tol, output } => {
            let fam = builder::equal_split(eps, n, tol)?;
            emit(&output, &pretty(&fam.to_json()))?;
        }
        Command::SolveDisc {
            set,
            radius,
            grid,
            full_grid,
            dump_field,
            output,
        } => {
            let e = parse_set_spec(&set)?;
            let problem = CondenserProblem::from_set(&e, radius)?;
            let config = grid.config();
            let (value, iterations, residual, field) = if full_grid {
                let s = disc::solve_full_grid(&problem, config)?;
                (s.capacity, s.iterations, s.residual, Some(s.field))
            } else {
                let s = disc::solve(&problem, config)?;
                let field = dump_field.as_ref().map(|_| s.potential_field());
                (s.capacity, s.iterations, s.residual, field)
            };
            if let (Some(path), Some(field)) = (&dump_field, &field) {
                let file = fs::File::create(path)?;
                field.write_csv(std::io::BufWriter::new(file))?;
            }
            let body = match output.format {
                Format::Text => format!("{value}\n"),
                _ => pretty(&json!({
                    "problem": problem,
                    "grid": config,
                    "capacity": value,
                    "iterations": iterations,
                    "residual": residual,
                })),
            };
            emit(&output, &body)?;
        }
        Command::Experiment {
            which,
            output,
            plot,
            plot_out,
        } => {
            let report = run_experiment(which)?;
            let body = match output.format {
                Format::Csv => report.to_csv(),
                _ => report.to_json()? + "\n",
            };
            emit(&output, &body)?;
            if let (Some(columns), Some(path)) = (plot, plot_out) {
                let (x, y) = columns
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("--plot expects X,Y, got {columns:?}")))?;
                fs::write(path, report.plot_data(x, y)?)?;
            }
            eprintln!(
                "{}: {} ({})",
                report.name,
                if report.verdict.passed { "pass" } else { "fail" },
                report.verdict.detail
            );
            return Ok(report.verdict.passed);
        }
    }
    Ok(true)
}

fn run_experiment(which: Experiment) -> Result<ExperimentReport, Error> {
    match which {
        Experiment::Blowup {
            set,
            n_max,
            threshold,
            disc_n_max,
            grid,
        } => cmd_blowup(&BlowupParams {
            set,
            n_max,
            threshold,
            disc_n_max,
            grid: grid.config(),
            ..BlowupParams::default()
        }),
        Experiment::Plateau {
            eps,
            n_max,
            tol,
            exact,
        } => cmd_plateau(&PlateauParams {
            epsilon: eps,
            n_max,
            tol,
            exact,
        }),
        Experiment::Lowerbound {
            eps,
            n_max,
            samples,
            seed,
            tol,
        } => cmd_lowerbound(&LowerBoundParams {
            n_max,
            samples,
            tol,
            ..LowerBoundParams::new(eps, seed)
        }),
        Experiment::Compare { set, n_max, grid } => cmd_compare(&CompareParams {
            set,
            n_max,
            grid: grid.config(),
            ..CompareParams::default()
        }),
        Experiment::Conjecture {
            delta,
            n_max,
            disc_n_max,
            grid,
        } => cmd_conjecture(&ConjectureParams {
            deltas: delta,
            n_max,
            disc_n_max,
            grid: grid.config(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
