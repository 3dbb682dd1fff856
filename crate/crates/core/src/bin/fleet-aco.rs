use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fleet_aco::harness::{
    emit_report, render_csv, render_sweep_csv, render_sweep_timings, render_table,
    sweep_modification_limit, run_experiment, Algorithm, ExperimentPlan, Format, InstanceSource,
    SolverConfig,
};
use fleet_aco::instances::{self, parse_generator_spec};
use fleet_aco::{Error, Result};

#[derive(Parser)]
#[command(name = "fleet-aco", version, about = "Ant-colony fleet scheduling experiments")]
struct Cli {
    /// Worker threads for ant construction (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-seed campaign of one solver.
    Solve(SolveArgs),
    /// Run a partial variant once per modification limit.
    Sweep {
        #[command(flatten)]
        solve: SolveArgs,
        /// Comma-separated modification limits.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.4, 0.3, 0.2, 0.1])]
        limits: Vec<f64>,
    },
    /// Write a generated instance in the text format.
    Generate {
        /// Generator spec, e.g. `v=8,j=77,service=2829,seed=1` or `Week_1,seed=1`.
        spec: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file in the text format.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    instance: Option<PathBuf>,
    /// Generator spec, e.g. `v=8,j=77,service=2829` or `SixWeek_1`.
    #[arg(long)]
    generate: Option<String>,
    /// mmas, partial or partial-blocks.
    #[arg(long, default_value = "mmas")]
    algo: String,
    #[arg(long)]
    ants: Option<usize>,
    /// Evaluations per run.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Evaporation rate (mmas only).
    #[arg(long)]
    rho: Option<f64>,
    /// Fraction of a solution an ant may rebuild (partial variants only).
    #[arg(long)]
    mod_limit: Option<f64>,
    /// Chance of an unrestricted rebuild (partial variants only).
    #[arg(long)]
    escape: Option<f64>,
    #[arg(long, default_value_t = 25)]
    runs: usize,
    /// Seed of the first run; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for per-run rows, timings and the report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// table or csv.
    #[arg(long, default_value = "table")]
    format: String,
}

impl SolveArgs {
    fn plan(&self) -> Result<(ExperimentPlan, Format)> {
        let source = match (&self.instance, &self.generate) {
            (Some(path), _) => InstanceSource::File(path.clone()),
            (None, Some(spec)) => InstanceSource::Generated(parse_generator_spec(spec)?),
            (None, None) => return Err(Error::InvalidConfig("--instance or --generate is required".into())),
        };
        let algorithm: Algorithm = self.algo.parse()?;
        let mut solver = SolverConfig::for_algorithm(algorithm).with_seed(self.seed);
        match &mut solver {
            SolverConfig::Mmas(c) => {
                if self.mod_limit.is_some() || self.escape.is_some() {
                    return Err(Error::InvalidConfig(
                        "--mod-limit and --escape apply to partial variants only".into(),
                    ));
                }
                c.ants = self.ants.unwrap_or(c.ants);
                c.alpha = self.alpha.unwrap_or(c.alpha);
                c.beta = self.beta.unwrap_or(c.beta);
                c.rho = self.rho.unwrap_or(c.rho);
            }
            SolverConfig::Partial(c) => {
                if self.rho.is_some() {
                    return Err(Error::InvalidConfig("--rho applies to mmas only".into()));
                }
                c.ants = self.ants.unwrap_or(c.ants);
                c.alpha = self.alpha.unwrap_or(c.alpha);
                c.beta = self.beta.unwrap_or(c.beta);
                c.modification_limit = self.mod_limit.unwrap_or(c.modification_limit);
                c.escape_probability = self.escape.unwrap_or(c.escape_probability);
            }
        }
        let mut plan = ExperimentPlan::new(source, solver, self.budget);
        plan.runs = self.runs;
        plan.out_dir = self.out.clone();
        plan.validate()?;
        Ok((plan, self.format.parse()?))
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Solve(args) => {
            let (plan, format) = args.plan()?;
            let report = run_experiment(&plan)?;
            let body = match format {
                Format::Table => render_table(std::slice::from_ref(&report)),
                Format::Csv => render_csv(&report)?,
            };
            if let Some(dir) = &plan.out_dir {
                let path = emit_report(&report, format, dir)?;
                log::info!("report written to {}", path.display());
            }
            print(&body)
        }
        Command::Sweep { solve, limits } => {
            let (plan, format) = solve.plan()?;
            let reports = sweep_modification_limit(&plan, &limits)?;
            let body = match format {
                Format::Table => render_table(&reports),
                Format::Csv => render_sweep_csv(&reports)?,
            };
            if let Some(dir) = &plan.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                write(dir.join("sweep.csv"), &render_sweep_csv(&reports)?)?;
                write(dir.join("sweep_timings.csv"), &render_sweep_timings(&reports))?;
            }
            print(&body)
        }
        Command::Generate { spec, out } => {
            let instance = instances::generate(&parse_generator_spec(&spec)?)?;
            match out {
                Some(path) => instances::write(&path, &instance),
                None => print(&instances::serialize(&instance)),
            }
        }
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write(path: PathBuf, body: &str) -> Result<()> {
    std::fs::write(&path, body).map_err(|e| io_error(&path, e))
}

fn print(body: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_error("<stdout>".as_ref(), e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
