//! Multi-seed experiment campaigns and their reports.
//!
//! A campaign runs one solver configuration several times with seeds
//! `seed, seed + 1, ...` and compares every run to the company-style
//! baseline schedule. Per-run rows are appended to `runs.csv` as soon as a run
//! finishes when an output directory is given. Wall-clock times live in a
//! separate `timings.csv` so that result files are reproducible byte for byte.

use std::fmt::{self, Write as _};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::baseline::company_schedule;
use crate::colony::{run_mmas, MmasConfig};
use crate::error::{Error, Result};
use crate::instances::{self, GeneratorConfig};
use crate::model::Instance;
use crate::partial::{run_partial, PartialConfig, PreservationMode};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Mmas,
    PartialSegment,
    PartialBlocks,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mmas => "mmas",
            Algorithm::PartialSegment => "partial",
            Algorithm::PartialBlocks => "partial-blocks",
        }
    }

    pub fn is_partial(self) -> bool {
        self != Algorithm::Mmas
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmas" => Ok(Algorithm::Mmas),
            "partial" | "partial-segment" => Ok(Algorithm::PartialSegment),
            "partial-blocks" => Ok(Algorithm::PartialBlocks),
            other => Err(Error::config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generated(GeneratorConfig),
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSource::File(path) => instances::read(path),
            InstanceSource::Generated(cfg) => instances::generate(cfg),
        }
    }

    /// Short name used in reports.
    pub fn label(&self) -> String {
        match self {
            InstanceSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            InstanceSource::Generated(cfg) => {
                format!("generated-v{}-j{}-s{}", cfg.vehicles, cfg.jobs, cfg.seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverConfig {
    Mmas(MmasConfig),
    Partial(PartialConfig),
}

impl SolverConfig {
    /// Default parameters for `algorithm`.
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Mmas => SolverConfig::Mmas(MmasConfig::default()),
            Algorithm::PartialSegment => SolverConfig::Partial(PartialConfig {
                mode: PreservationMode::Segment,
                ..PartialConfig::default()
            }),
            Algorithm::PartialBlocks => SolverConfig::Partial(PartialConfig {
                mode: PreservationMode::Blocks,
                ..PartialConfig::default()
            }),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            SolverConfig::Mmas(_) => Algorithm::Mmas,
            SolverConfig::Partial(c) => match c.mode {
                PreservationMode::Segment => Algorithm::PartialSegment,
                PreservationMode::Blocks => Algorithm::PartialBlocks,
            },
        }
    }

    pub fn ants(&self) -> usize {
        match self {
            SolverConfig::Mmas(c) => c.ants,
            SolverConfig::Partial(c) => c.ants,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SolverConfig::Mmas(c) => c.seed,
            SolverConfig::Partial(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            SolverConfig::Mmas(c) => c.seed = seed,
            SolverConfig::Partial(c) => c.seed = seed,
        }
        self
    }

    pub fn with_evaluation_budget(self, evaluations: u64) -> Self {
        match self {
            SolverConfig::Mmas(c) => SolverConfig::Mmas(c.with_evaluation_budget(evaluations)),
            SolverConfig::Partial(c) => SolverConfig::Partial(c.with_evaluation_budget(evaluations)),
        }
    }

    pub fn modification_limit(&self) -> Option<f64> {
        match self {
            SolverConfig::Mmas(_) => None,
            SolverConfig::Partial(c) => Some(c.modification_limit),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SolverConfig::Mmas(c) => c.validate(),
            SolverConfig::Partial(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub instance: InstanceSource,
    /// Solver parameters; its seed is the seed of run 0.
    pub solver: SolverConfig,
    pub runs: usize,
    /// Evaluations per run.
    pub budget: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn new(instance: InstanceSource, solver: SolverConfig, budget: u64) -> Self {
        ExperimentPlan {
            instance,
            solver,
            runs: 25,
            budget,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("at least one run is required"));
        }
        if self.budget < self.solver.ants() as u64 {
            return Err(Error::config(format!(
                "budget of {} evaluations is below the {} ants of one round",
                self.budget,
                self.solver.ants()
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub serviced_percent: f64,
    pub traversal_minutes: f64,
    pub reduction_percent: f64,
    /// Probabilistic selections made, escape constructions excluded.
    pub decisions: u64,
    /// Most selections made by one construction, escape constructions
    /// excluded.
    pub max_decisions: usize,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Summary {
            mean: mean(values),
            std: sample_std(values),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub instance: String,
    pub algorithm: Algorithm,
    pub modification_limit: Option<f64>,
    pub vertices: usize,
    pub baseline_traversal: f64,
    pub rows: Vec<RunRow>,
    pub serviced: Summary,
    pub traversal: Summary,
    pub reduction: Summary,
    pub wall_seconds: Summary,
    pub decisions: Summary,
}

impl RunReport {
    /// Aggregates `rows`.
    pub fn from_rows(
        instance: String,
        algorithm: Algorithm,
        modification_limit: Option<f64>,
        vertices: usize,
        baseline_traversal: f64,
        rows: Vec<RunRow>,
    ) -> Self {
        let column = |f: fn(&RunRow) -> f64| Summary::of(&rows.iter().map(f).collect::<Vec<_>>());
        RunReport {
            serviced: column(|r| r.serviced_percent),
            traversal: column(|r| r.traversal_minutes),
            reduction: column(|r| r.reduction_percent),
            wall_seconds: column(|r| r.wall_seconds),
            decisions: column(|r| r.decisions as f64),
            instance,
            algorithm,
            modification_limit,
            vertices,
            baseline_traversal,
            rows,
        }
    }
}

pub fn reduction_percent(baseline: f64, traversal: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * (baseline - traversal) / baseline
    } else {
        0.0
    }
}

const RUN_HEADER: [&str; 8] = [
    "run",
    "seed",
    "serviced_percent",
    "traversal_minutes",
    "reduction_percent",
    "decisions",
    "max_decisions",
    "evaluations",
];

fn run_record(r: &RunRow) -> [String; 8] {
    [
        r.run.to_string(),
        r.seed.to_string(),
        format!("{:.4}", r.serviced_percent),
        format!("{:.4}", r.traversal_minutes),
        format!("{:.4}", r.reduction_percent),
        r.decisions.to_string(),
        r.max_decisions.to_string(),
        r.evaluations.to_string(),
    ]
}

/// Appends one line to a CSV file, writing `header` first if the file is new.
fn append_csv(path: &Path, header: &[&str], record: &[String]) -> Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(header).map_err(|e| csv_error(path, e))?;
    }
    w.write_record(record).map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for name in ["runs.csv", "timings.csv"] {
        let path = dir.join(name);
        if path.exists() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

struct SingleRun {
    serviced_percent: f64,
    traversal_minutes: f64,
    decisions: u64,
    max_decisions: usize,
    evaluations: u64,
}

fn solve_once(instance: &Instance, solver: &SolverConfig) -> Result<SingleRun> {
    let total = instance.total_service();
    match solver {
        SolverConfig::Mmas(c) => {
            let out = run_mmas(instance, c)?;
            Ok(SingleRun {
                serviced_percent: out.evaluation.score.serviced_percent(total),
                traversal_minutes: out.evaluation.traversal_time(),
                decisions: out.decisions,
                max_decisions: instance.num_vertices().saturating_sub(1),
                evaluations: out.evaluations,
            })
        }
        SolverConfig::Partial(c) => {
            let out = run_partial(instance, c)?;
            Ok(SingleRun {
                serviced_percent: out.evaluation.score.serviced_percent(total),
                traversal_minutes: out.evaluation.traversal_time(),
                decisions: out.stats.decisions,
                max_decisions: out.stats.max_decisions,
                evaluations: out.evaluations,
            })
        }
    }
}

/// Runs the campaign described by `plan`.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<RunReport> {
    plan.validate()?;
    let instance = plan.instance.load()?;
    run_on_instance(plan, &instance)
}

/// [`run_experiment`] on an already loaded instance; `plan.instance` only
/// supplies the report label.
pub fn run_on_instance(plan: &ExperimentPlan, instance: &Instance) -> Result<RunReport> {
    plan.validate()?;
    let baseline = company_schedule(instance)?.evaluation.traversal_time();
    if let Some(dir) = &plan.out_dir {
        prepare_dir(dir)?;
    }
    let label = plan.instance.label();
    let mut rows = Vec::with_capacity(plan.runs);
    for run in 0..plan.runs {
        let seed = plan.solver.seed().wrapping_add(run as u64);
        let solver = plan.solver.clone().with_seed(seed).with_evaluation_budget(plan.budget);
        let started = Instant::now();
        let single = solve_once(instance, &solver).map_err(|e| Error::Run {
            run,
            source: Box::new(e),
        })?;
        let row = RunRow {
            run,
            seed,
            serviced_percent: single.serviced_percent,
            traversal_minutes: single.traversal_minutes,
            reduction_percent: reduction_percent(baseline, single.traversal_minutes),
            decisions: single.decisions,
            max_decisions: single.max_decisions,
            evaluations: single.evaluations,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "{label} {} run {}/{}: serviced {:.2}% traversal {:.1} min ({:.1}s)",
            solver.algorithm(),
            run + 1,
            plan.runs,
            row.serviced_percent,
            row.traversal_minutes,
            row.wall_seconds
        );
        if let Some(dir) = &plan.out_dir {
            append_csv(&dir.join("runs.csv"), &RUN_HEADER, &run_record(&row))?;
            append_csv(
                &dir.join("timings.csv"),
                &["run", "wall_seconds"],
                &[run.to_string(), format!("{:.3}", row.wall_seconds)],
            )?;
        }
        rows.push(row);
    }
    Ok(RunReport::from_rows(
        label,
        plan.solver.algorithm(),
        plan.solver.modification_limit(),
        instance.num_vertices(),
        baseline,
        rows,
    ))
}

/// Runs `base` once per distinct limit, in the given order.
pub fn sweep_modification_limit(base: &ExperimentPlan, limits: &[f64]) -> Result<Vec<RunReport>> {
    let SolverConfig::Partial(partial) = &base.solver else {
        return Err(Error::config("the limit sweep needs a partial variant"));
    };
    let instance = base.instance.load()?;
    let mut seen: Vec<f64> = Vec::with_capacity(limits.len());
    for &l in limits {
        if seen.contains(&l) {
            log::warn!("dropping duplicate modification limit {l}");
        } else {
            seen.push(l);
        }
    }
    seen.iter()
        .map(|&limit| {
            let plan = ExperimentPlan {
                solver: SolverConfig::Partial(PartialConfig {
                    modification_limit: limit,
                    ..partial.clone()
                }),
                out_dir: base.out_dir.as_ref().map(|d| d.join(format!("limit-{limit:.2}"))),
                ..base.clone()
            };
            run_on_instance(&plan, &instance)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            other => Err(Error::config(format!("unknown format {other:?}"))),
        }
    }
}

const TABLE_HEADER: [&str; 5] = [
    "Instance",
    "Algorithm",
    "Job Time Serviced (%)",
    "Traversal Reduction (%)",
    "Execution Time (mins)",
];

/// Aligned mean ± std table with one line per report.
pub fn render_table(reports: &[RunReport]) -> String {
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            let algorithm = match r.modification_limit {
                Some(l) if l < 1.0 => format!("{} (limit {l})", r.algorithm),
                _ => r.algorithm.to_string(),
            };
            let minutes = Summary {
                mean: r.wall_seconds.mean / 60.0,
                std: r.wall_seconds.std / 60.0,
            };
            [
                r.instance.clone(),
                algorithm,
                r.serviced.to_string(),
                r.reduction.to_string(),
                minutes.to_string(),
            ]
        })
        .collect();
    let mut widths = TABLE_HEADER.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &TABLE_HEADER);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    for r in reports {
        let _ = writeln!(
            out,
            "{}: reduction is relative to the reimplemented company baseline ({:.1} min); ± is the sample standard deviation over {} runs",
            r.instance,
            r.baseline_traversal,
            r.rows.len()
        );
    }
    out
}

/// Header, one row per run and a final `mean` row.
pub fn render_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| Error::io("<memory>", std::io::Error::other(e));
    w.write_record(RUN_HEADER).map_err(bad)?;
    for r in &report.rows {
        w.write_record(run_record(r)).map_err(bad)?;
    }
    let total_evaluations: u64 = report.rows.iter().map(|r| r.evaluations).sum();
    let max_decisions = report.rows.iter().map(|r| r.max_decisions).max().unwrap_or(0);
    w.write_record([
        "mean".to_string(),
        String::new(),
        format!("{:.4}", report.serviced.mean),
        format!("{:.4}", report.traversal.mean),
        format!("{:.4}", report.reduction.mean),
        format!("{:.1}", report.decisions.mean),
        max_decisions.to_string(),
        format!("{:.1}", total_evaluations as f64 / report.rows.len().max(1) as f64),
    ])
    .map_err(bad)?;
    let bytes = w.into_inner().map_err(|e| bad(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One line per limit: the quality series of a sweep. Timings are reported
/// separately by [`render_sweep_timings`].
pub fn render_sweep_csv(reports: &[RunReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| Error::io("<memory>", std::io::Error::other(e));
    w.write_record([
        "limit",
        "serviced_mean",
        "serviced_std",
        "traversal_mean",
        "traversal_std",
        "reduction_mean",
        "reduction_std",
        "decisions_mean",
    ])
    .map_err(bad)?;
    for r in reports {
        w.write_record([
            format!("{:.2}", r.modification_limit.unwrap_or(1.0)),
            format!("{:.4}", r.serviced.mean),
            format!("{:.4}", r.serviced.std),
            format!("{:.4}", r.traversal.mean),
            format!("{:.4}", r.traversal.std),
            format!("{:.4}", r.reduction.mean),
            format!("{:.4}", r.reduction.std),
            format!("{:.1}", r.decisions.mean),
        ])
        .map_err(bad)?;
    }
    let bytes = w.into_inner().map_err(|e| bad(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Mean and std of wall-clock seconds per limit.
pub fn render_sweep_timings(reports: &[RunReport]) -> String {
    let mut out = String::from("limit,wall_seconds_mean,wall_seconds_std\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{:.2},{:.3},{:.3}",
            r.modification_limit.unwrap_or(1.0),
            r.wall_seconds.mean,
            r.wall_seconds.std
        );
    }
    out
}

/// Writes `report` into `dir` as `report.txt` or `report.csv` and returns
/// the path.
pub fn emit_report(report: &RunReport, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (name, body) = match format {
        Format::Table => ("report.txt", render_table(std::slice::from_ref(report))),
        Format::Csv => ("report.csv", render_csv(report)?),
    };
    let path = dir.join(name);
    write_file(&path, &body)?;
    Ok(path)
}

pub(crate) fn write_file(path: &Path, body: &str) -> Result<()> {
    use std::io::Write;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}
