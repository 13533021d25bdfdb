//! `padplan`: plan dynamic wireless charging pads on a road network.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::Value;

use padplan::charge_flow::{check_feasibility, evaluate_charge_flow, evaluate_cost};
use padplan::error::Error;
use padplan::formulation::{apply_capacity, build_model, FormulationOptions};
use padplan::instance_file::{load_instance, save_instance};
use padplan::network::{topology_report, NetworkInstance};
use padplan::scenario::{self, GeneratorSpec, SweepReport};
use padplan::solution::SolutionFile;
use padplan::solver::{elastic_rows, solve_milp, SolveStatus, SolverConfig};
use padplan::{fsutil, mps, render};

const BUNDLED_NAME: &str = "example8";
const LISTED_ROWS: usize = 8;

#[derive(Parser)]
#[command(name = "padplan", version, about = "Cost-minimal placement of dynamic wireless charging pads")]
#[command(after_help = "\
INSTANCE is a TOML instance file. `example8` (or any path ending in it that does not
exist) selects the bundled eight-node example. When no INSTANCE is given the bundled
example is used.

Exit status: 0 success, 1 infeasible model, 2 usage or input error, 3 internal or
numerical error, or no solution found within the limits.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and print its dimensions and topology.
    Validate {
        instance: Option<PathBuf>,
    },
    /// Solve one scenario and write a solution file.
    Solve {
        instance: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve once per minimum charge level and write a CSV (plus a TOML report).
    SweepMa {
        instance: Option<PathBuf>,
        /// Comma-separated minimum charge levels, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = scenario::DEFAULT_MA_VALUES.to_vec())]
        ma_values: Vec<f64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve once per solar fraction and write a CSV (plus a TOML report).
    SweepSolar {
        instance: Option<PathBuf>,
        /// Comma-separated solar fractions in [0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = scenario::DEFAULT_SOLAR_FRACTIONS.to_vec())]
        fractions: Vec<f64>,
        /// Minimum charge level for every row.
        #[arg(long, default_value_t = scenario::SOLAR_MA)]
        ma: f64,
        #[arg(long)]
        horizon: Option<usize>,
        /// Grid power per pad [default: largest pad rating].
        #[arg(long)]
        grid_cap: Option<f64>,
        /// Solar power per pad at fraction 1 [default: half the largest pad rating].
        #[arg(long)]
        solar_cap: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the MILP of one scenario as MPS or LP text.
    Export {
        instance: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draw the network, optionally with a solution's pads, as DOT or SVG.
    Render {
        instance: Option<PathBuf>,
        /// Solution file written by `solve` for the same instance and horizon.
        solution: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate a seeded instance of the eight-node example network.
    Generate {
        #[arg(long, default_value_t = scenario::BUNDLED_SEED)]
        seed: u64,
        #[arg(long, default_value_t = scenario::DEFAULT_HORIZON)]
        horizon: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Minimum acceptable average charge level.
    #[arg(long)]
    ma: Option<f64>,
    /// Keep only the first N periods.
    #[arg(long)]
    horizon: Option<usize>,
    /// Add a construction budget row with this limit.
    #[arg(long)]
    budget: Option<f64>,
    /// Grid power per pad [default: largest pad rating].
    #[arg(long)]
    grid_cap: Option<f64>,
    /// Solar power per pad at fraction 1 [default: half the largest pad rating].
    #[arg(long)]
    solar_cap: Option<f64>,
    /// Share of the solar power available, in [0, 1].
    #[arg(long)]
    solar_fraction: Option<f64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = scenario::SWEEP_GAP)]
    gap: f64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Tie-breaking seed for branching.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutArgs {
    /// Output file [default: a name derived from the instance, in the output directory].
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Directory for default output names.
    #[arg(long, env = "PADPLAN_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Mps,
    Lp,
    Csv,
    Dot,
    Svg,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Mps => "mps",
            Format::Lp => "lp",
            Format::Csv => "csv",
            Format::Dot => "dot",
            Format::Svg => "svg",
        }
    }
}

enum Failure {
    Infeasible(String),
    Usage(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Infeasible(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

/// Bad input files are the caller's to fix; everything else is ours.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Instance(_) | Error::Format(_) | Error::Mps(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

impl OutArgs {
    fn format(&self, allowed: &[Format], verb: &str) -> Result<Format, Failure> {
        match self.format {
            None => Ok(allowed[0]),
            Some(f) if allowed.contains(&f) => Ok(f),
            Some(f) => {
                let names: Vec<_> = allowed.iter().map(|a| a.extension()).collect();
                Err(Failure::Usage(format!("`{verb}` writes {}, not {}", names.join(" or "), f.extension())))
            }
        }
    }

    fn path(&self, default_name: String) -> PathBuf {
        self.output.clone().unwrap_or_else(|| self.out_dir.join(default_name))
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let time_limit = match self.time_limit {
            None => None,
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(Failure::Usage(format!("--time-limit must be positive, got {s}"))),
        };
        let config = SolverConfig { gap: self.gap, time_limit, seed: self.seed, ..SolverConfig::default() };
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

fn resolve_instance(path: Option<&Path>) -> Result<NetworkInstance, Failure> {
    let bundled = match path {
        None => true,
        Some(p) => !p.exists() && p.file_name().is_some_and(|n| n == BUNDLED_NAME),
    };
    if bundled {
        return Ok(scenario::bundled_instance());
    }
    let path = path.expect("checked above");
    load_instance(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn with_horizon(instance: NetworkInstance, horizon: Option<usize>) -> Result<NetworkInstance, Failure> {
    match horizon {
        Some(h) if h != instance.horizon => instance.truncated(h).map_err(|e| Failure::Usage(e.to_string())),
        _ => Ok(instance),
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

/// Applies the scenario flags and records them for the solution file.
fn scenario_instance(base: NetworkInstance, args: &ScenarioArgs, config: &mut toml::Table) -> Result<(NetworkInstance, FormulationOptions), Failure> {
    let mut inst = with_horizon(base, args.horizon)?;
    if let Some(ma) = args.ma {
        check_unit("ma", ma)?;
        inst = inst.with_ma(ma);
    }
    config.insert("ma".into(), Value::Float(inst.params.ma));
    config.insert("horizon".into(), Value::Integer(inst.horizon as i64));
    if args.grid_cap.is_some() || args.solar_cap.is_some() || args.solar_fraction.is_some() {
        let (grid_default, solar_default) = scenario::default_caps(&inst);
        let grid = args.grid_cap.unwrap_or(grid_default);
        let solar = args.solar_cap.unwrap_or(solar_default);
        let fraction = args.solar_fraction.unwrap_or(0.0);
        check_unit("solar-fraction", fraction)?;
        if !(grid >= 0.0 && solar >= 0.0) {
            return Err(Failure::Usage("--grid-cap and --solar-cap must be nonnegative".into()));
        }
        inst = apply_capacity(&inst, grid, solar, fraction);
        config.insert("grid_cap".into(), Value::Float(grid));
        config.insert("solar_cap".into(), Value::Float(solar));
        config.insert("solar_fraction".into(), Value::Float(fraction));
    }
    let mut options = FormulationOptions::default();
    if let Some(b) = args.budget {
        inst.params.budget = Some(b);
        options.use_budget = true;
        config.insert("budget".into(), Value::Float(b));
    }
    if let Some(p) = &inst.provenance {
        config.insert("instance_seed".into(), scenario::seed_value(p.seed));
        config.insert("generator".into(), Value::String(p.generator.clone()));
    }
    Ok((inst, options))
}

fn write(path: &Path, text: &str) -> Outcome {
    fsutil::write_atomic(path, text.as_bytes()).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

fn describe_conflict(rows: &[(String, f64)]) -> String {
    if rows.is_empty() {
        return "no inequality row can be singled out; the balance equations conflict on their own".into();
    }
    let listed: Vec<String> = rows.iter().take(LISTED_ROWS).map(|(name, s)| format!("{name} (short by {s:.4})")).collect();
    let more = rows.len().saturating_sub(LISTED_ROWS);
    let tail = if more > 0 { format!(", and {more} more") } else { String::new() };
    format!("binding constraints: {}{tail}", listed.join(", "))
}

fn validate(instance: Option<PathBuf>) -> Outcome {
    let inst = resolve_instance(instance.as_deref())?;
    inst.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let d = inst.dims();
    println!("{}: {} nodes, {} routes, {} sites per route, {} lengths, {} periods", inst.name, d.nodes, d.routes, d.sites, d.lengths, d.horizon);
    let topo = topology_report(&inst);
    match &topo.order {
        Some(order) => println!("acyclic; node order {order:?}"),
        None => println!("cyclic components {:?}", topo.cycles),
    }
    if let Some(p) = &inst.provenance {
        println!("generated by {} with seed {}", p.generator, p.seed);
    }
    Ok(())
}

fn solve(instance: Option<PathBuf>, args: &ScenarioArgs, solver: &SolverArgs, out: &OutArgs) -> Outcome {
    let config = solver.config()?;
    let mut table = scenario::config_table(&config);
    let (inst, mut options) = scenario_instance(resolve_instance(instance.as_deref())?, args, &mut table)?;
    options.count_columns = true;
    let (model, map) = build_model(&inst, &options).map_err(|e| Failure::from(Error::from(e)))?;
    let res = solve_milp(&model, &config).map_err(|e| Failure::Internal(e.to_string()))?;

    let values = match (res.status, res.values) {
        (SolveStatus::Infeasible, _) => {
            let rows = elastic_rows(&model, &config).map_err(|e| Failure::Internal(e.to_string()))?;
            return Err(Failure::Infeasible(format!("model is infeasible; {}", describe_conflict(&rows))));
        }
        (SolveStatus::Unbounded, _) => return Err(Failure::Internal("model is unbounded".into())),
        (_, None) => return Err(Failure::Internal(format!("no feasible solution found within the limits (bound {:.6})", res.bound))),
        (_, Some(v)) => v,
    };
    let assign = map.assignment(&values);
    let profile = evaluate_charge_flow(&inst, &assign).map_err(|e| Failure::Internal(e.to_string()))?;
    let verdict = check_feasibility(&inst, &assign, &profile).map_err(|e| Failure::Internal(e.to_string()))?;
    if !verdict.is_feasible() {
        return Err(Failure::Internal(format!("solver placement fails the charge-flow check: {:?}", verdict.violations.first())));
    }
    let cost = evaluate_cost(&inst, &assign);

    let solution = SolutionFile {
        instance: inst.name.clone(),
        status: res.status,
        objective: res.objective,
        bound: Some(res.bound),
        config: table,
        assignment: Some(assign.clone()),
    };
    let path = out.path(format!("{}.solution.toml", inst.name));
    solution.save(&path, &inst).map_err(Failure::from)?;
    let counts = assign.counts_by_length();
    let labels: Vec<String> = counts.iter().enumerate().map(|(l, n)| format!("{}={n}", scenario::length_label(l, inst.lengths))).collect();
    println!("status {} cost {cost:.6} bound {:.6} pads {} [{}]", res.status.as_str(), res.bound, assign.built_sites(), labels.join(" "));
    println!("wrote {}", path.display());
    if res.status != SolveStatus::Optimal {
        eprintln!("warning: search stopped at a limit; the cost is not proven within the requested gap");
    }
    Ok(())
}

fn write_report(report: &SweepReport, out: &OutArgs, stem: &str) -> Outcome {
    out.format(&[Format::Csv], "sweep")?;
    let csv_path = out.path(format!("{stem}.csv"));
    write(&csv_path, &report.to_csv())?;
    let toml_path = csv_path.with_extension("toml");
    write(&toml_path, &report.to_toml())?;
    for row in &report.rows {
        let cost = row.cost.map_or_else(|| "-".to_string(), |c| format!("{c:.2}"));
        println!("{:<12} {:<10} cost {cost:>14} pads {:?}", row.label, row.status_str(), row.pads_by_length);
        if let Some(e) = &row.error {
            eprintln!("{}: {e}", row.label);
        }
    }
    println!("wrote {} and {}", csv_path.display(), toml_path.display());
    if report.rows.iter().any(|r| r.error.is_some()) {
        return Err(Failure::Internal("some rows failed".into()));
    }
    Ok(())
}

fn sweep_ma(instance: Option<PathBuf>, values: &[f64], horizon: Option<usize>, solver: &SolverArgs, out: &OutArgs) -> Outcome {
    let config = solver.config()?;
    let inst = with_horizon(resolve_instance(instance.as_deref())?, horizon)?;
    let report = scenario::sweep_ma(&inst, values, &config).map_err(Failure::from)?;
    write_report(&report, out, &format!("{}.sweep_ma", inst.name))
}

#[allow(clippy::too_many_arguments)]
fn sweep_solar(
    instance: Option<PathBuf>,
    fractions: &[f64],
    ma: f64,
    horizon: Option<usize>,
    grid_cap: Option<f64>,
    solar_cap: Option<f64>,
    solver: &SolverArgs,
    out: &OutArgs,
) -> Outcome {
    check_unit("ma", ma)?;
    let config = solver.config()?;
    let inst = with_horizon(resolve_instance(instance.as_deref())?, horizon)?.with_ma(ma);
    let (grid_default, solar_default) = scenario::default_caps(&inst);
    let report = scenario::sweep_solar(&inst, fractions, grid_cap.unwrap_or(grid_default), solar_cap.unwrap_or(solar_default), &config)
        .map_err(Failure::from)?;
    write_report(&report, out, &format!("{}.sweep_solar", inst.name))
}

fn export(instance: Option<PathBuf>, args: &ScenarioArgs, out: &OutArgs) -> Outcome {
    let format = out.format(&[Format::Mps, Format::Lp], "export")?;
    let mut table = toml::Table::new();
    let (inst, options) = scenario_instance(resolve_instance(instance.as_deref())?, args, &mut table)?;
    let (model, _) = build_model(&inst, &options).map_err(|e| Failure::from(Error::from(e)))?;
    let text = match format {
        Format::Lp => mps::write_lp(&model),
        _ => mps::write_mps(&model),
    };
    let path = out.path(format!("{}.{}", inst.name, format.extension()));
    write(&path, &text)?;
    println!("{} columns, {} rows; wrote {}", model.num_vars(), model.num_rows(), path.display());
    Ok(())
}

fn render_cmd(instance: Option<PathBuf>, solution: Option<PathBuf>, horizon: Option<usize>, out: &OutArgs) -> Outcome {
    let format = out.format(&[Format::Dot, Format::Svg], "render")?;
    let inst = resolve_instance(instance.as_deref())?;
    let sol = match &solution {
        None => None,
        Some(path) => {
            // a solution records the horizon it was solved over
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let recorded = text.parse::<toml::Table>().ok().and_then(|t| t.get("config")?.get("horizon")?.as_integer()).map(|h| h as usize);
            let inst = with_horizon(inst.clone(), horizon.or(recorded))?;
            Some(SolutionFile::parse(&text, &inst).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)
        }
    };
    let assign = sol.as_ref().and_then(|s| s.assignment.as_ref());
    let text = match format {
        Format::Svg => render::to_svg(&inst, assign),
        _ => render::to_dot(&inst, assign),
    };
    let path = out.path(format!("{}.{}", inst.name, format.extension()));
    write(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn generate(seed: u64, horizon: usize, out: &OutArgs) -> Outcome {
    if out.format.is_some() {
        return Err(Failure::Usage("`generate` writes TOML and takes no --format".into()));
    }
    let spec = GeneratorSpec::example(seed);
    let inst = scenario::generate_instance(&spec, horizon).map_err(|e| Failure::Usage(e.to_string()))?;
    let path = out.path(format!("{}_seed{seed}_t{horizon}.toml", spec.name));
    save_instance(&path, &inst).map_err(|e| Failure::Internal(e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { instance } => validate(instance),
        Command::Solve { instance, scenario, solver, out } => {
            if out.format.is_some() {
                return Err(Failure::Usage("`solve` writes a TOML solution file and takes no --format".into()));
            }
            solve(instance, &scenario, &solver, &out)
        }
        Command::SweepMa { instance, ma_values, horizon, solver, out } => sweep_ma(instance, &ma_values, horizon, &solver, &out),
        Command::SweepSolar { instance, fractions, ma, horizon, grid_cap, solar_cap, solver, out } => {
            sweep_solar(instance, &fractions, ma, horizon, grid_cap, solar_cap, &solver, &out)
        }
        Command::Export { instance, scenario, out } => export(instance, &scenario, &out),
        Command::Render { instance, solution, horizon, out } => render_cmd(instance, solution, horizon, &out),
        Command::Generate { seed, horizon, out } => generate(seed, horizon, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Infeasible(msg) | Failure::Usage(msg) | Failure::Internal(msg)) = &f;
            eprintln!("padplan: {msg}");
            ExitCode::from(f.code())
        }
    }
}
