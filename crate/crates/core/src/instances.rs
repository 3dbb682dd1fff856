//! Instance text format and a seeded synthetic generator.
//!
//! The format is line oriented UTF-8. `#` starts a comment. Recognised
//! lines:
//!
//! ```text
//! speed_kph 13
//! workday 480 1140
//! vehicle <id> <x km> <y km>
//! job <id> <x km> <y km> <duration min> [<open> <close>]
//! ```
//!
//! Times are integer minutes since midnight; coordinates are written with
//! three decimals, so instances whose coordinates are whole metres survive
//! a write/read cycle unchanged.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, Location, TimeWindow, Vehicle, Workday, DEFAULT_SPEED_KPH, DEFAULT_WORKDAY};
use crate::rng::{stream, Purpose};

pub fn parse(text: &str) -> Result<Instance> {
    let mut speed = None;
    let mut workday = None;
    let mut vehicles: Vec<(usize, Vehicle)> = Vec::new();
    let mut jobs: Vec<(usize, Job)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |reason: String| Error::Parse { line, reason };
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((&key, args)) = fields.split_first() else {
            continue;
        };
        match key {
            "speed_kph" => {
                let [v] = args else {
                    return Err(err(format!("speed_kph takes 1 value, found {}", args.len())));
                };
                let v: f64 = number(v, "speed").map_err(err)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(err(format!("speed must be positive, got {v}")));
                }
                speed = Some(v);
            }
            "workday" => {
                let [a, b] = args else {
                    return Err(err(format!("workday takes 2 values, found {}", args.len())));
                };
                let start = number(a, "workday start").map_err(err)?;
                let end = number(b, "workday end").map_err(err)?;
                if start >= end {
                    return Err(err(format!("workday start {start} is not before end {end}")));
                }
                workday = Some(Workday { start, end });
            }
            "vehicle" => {
                let [id, x, y] = args else {
                    return Err(err(format!("vehicle takes 3 values, found {}", args.len())));
                };
                let id = number(id, "vehicle id").map_err(err)?;
                let depot = Location::new(number(x, "x").map_err(err)?, number(y, "y").map_err(err)?);
                vehicles.push((line, Vehicle { id, depot }));
            }
            "job" => {
                if args.len() != 4 && args.len() != 6 {
                    return Err(err(format!("job takes 4 or 6 values, found {}", args.len())));
                }
                let id: usize = number(args[0], "job id").map_err(err)?;
                let location = Location::new(
                    number(args[1], "x").map_err(err)?,
                    number(args[2], "y").map_err(err)?,
                );
                let duration: u32 = number(args[3], "duration").map_err(err)?;
                if duration == 0 {
                    return Err(err(format!("job {id} has zero duration")));
                }
                let window = if args.len() == 6 {
                    let open = number(args[4], "window open").map_err(err)?;
                    let close = number(args[5], "window close").map_err(err)?;
                    if close <= open {
                        return Err(err(format!(
                            "job {id}: window close {close} is not after open {open}"
                        )));
                    }
                    Some(TimeWindow { open, close })
                } else {
                    None
                };
                jobs.push((
                    line,
                    Job {
                        id,
                        location,
                        duration,
                        window,
                    },
                ));
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }

    let workday = workday.unwrap_or(DEFAULT_WORKDAY);
    let speed = speed.unwrap_or(DEFAULT_SPEED_KPH);
    vehicles.sort_by_key(|(_, v)| v.id);
    jobs.sort_by_key(|(_, j)| j.id);
    for pair in vehicles.windows(2) {
        if pair[0].1.id == pair[1].1.id {
            return Err(Error::Parse {
                line: pair[1].0,
                reason: format!("duplicate vehicle id {}", pair[1].1.id),
            });
        }
    }
    for pair in jobs.windows(2) {
        if pair[0].1.id == pair[1].1.id {
            return Err(Error::Parse {
                line: pair[1].0,
                reason: format!("duplicate job id {}", pair[1].1.id),
            });
        }
    }
    for (line, v) in &vehicles {
        if jobs.iter().any(|(_, j)| j.id == v.id) {
            return Err(Error::Parse {
                line: *line,
                reason: format!("id {} is used by a vehicle and a job", v.id),
            });
        }
    }
    for (line, job) in &jobs {
        if let Some(w) = job.window {
            if w.open < workday.start || w.close > workday.end {
                return Err(Error::Parse {
                    line: *line,
                    reason: format!(
                        "job {}: window [{}, {}] lies outside the workday [{}, {}]",
                        job.id, w.open, w.close, workday.start, workday.end
                    ),
                });
            }
        }
    }
    Instance::new(
        vehicles.into_iter().map(|(_, v)| v).collect(),
        jobs.into_iter().map(|(_, j)| j).collect(),
        speed,
        workday,
    )
}

fn number<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, String> {
    token
        .parse()
        .map_err(|_| format!("cannot read {what} from `{token}`"))
}

pub fn serialize(instance: &Instance) -> String {
    let mut out = String::new();
    let wd = instance.workday();
    let _ = writeln!(
        out,
        "# {} vehicles, {} jobs, {} service minutes",
        instance.num_vehicles(),
        instance.num_jobs(),
        instance.total_service()
    );
    let _ = writeln!(out, "speed_kph {}", instance.speed_kph());
    let _ = writeln!(out, "workday {} {}", wd.start, wd.end);
    for v in instance.vehicles() {
        let _ = writeln!(out, "vehicle {} {:.3} {:.3}", v.id, v.depot.x, v.depot.y);
    }
    for j in instance.jobs() {
        let _ = write!(
            out,
            "job {} {:.3} {:.3} {}",
            j.id, j.location.x, j.location.y, j.duration
        );
        if let Some(w) = j.window {
            let _ = write!(out, " {} {}", w.open, w.close);
        }
        out.push('\n');
    }
    out
}

pub fn read(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

pub fn write(path: impl AsRef<Path>, instance: &Instance) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize(instance)).map_err(|e| Error::io(path, e))
}

/// Shape of a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub vehicles: usize,
    pub jobs: usize,
    /// Target for the sum of job durations; met within 5 %.
    pub total_service_minutes: f64,
    /// Fraction of jobs carrying a time window.
    pub window_fraction: f64,
    /// Side of the square service area in km.
    pub area_km: f64,
    /// Distinct depot locations; vehicles are spread over them.
    pub depot_count: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(vehicles: usize, jobs: usize, total_service_minutes: f64) -> Self {
        GeneratorConfig {
            vehicles,
            jobs,
            total_service_minutes,
            window_fraction: 0.3,
            area_km: 20.0,
            depot_count: 4,
            seed: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicles == 0 || self.jobs == 0 {
            return Err(Error::config("generator needs at least one vehicle and one job"));
        }
        let mean = self.total_service_minutes / self.jobs as f64;
        if !(MIN_MEAN_DURATION..=MAX_MEAN_DURATION).contains(&mean) {
            return Err(Error::config(format!(
                "mean job duration {mean:.1} min is outside [{MIN_MEAN_DURATION}, {MAX_MEAN_DURATION}]"
            )));
        }
        if !(0.0..=1.0).contains(&self.window_fraction) {
            return Err(Error::config("window fraction must lie in [0, 1]"));
        }
        if !(self.area_km > 0.0 && self.area_km.is_finite()) {
            return Err(Error::config("area must be positive"));
        }
        if self.depot_count == 0 {
            return Err(Error::config("at least one depot location is required"));
        }
        Ok(())
    }
}

pub const MIN_MEAN_DURATION: f64 = 10.0;
pub const MAX_MEAN_DURATION: f64 = 120.0;

const MIN_DURATION: u32 = 5;
const MAX_DURATION: u32 = 240;
const SERVICE_TOLERANCE: f64 = 0.05;
/// Share of jobs placed uniformly rather than around a district centre.
const SCATTER_SHARE: f64 = 0.2;

/// Scenario sizes of the maintenance company's planning horizons: vehicle
/// days, jobs, total service minutes and the traversal minutes of the
/// company's own schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub vehicles: usize,
    pub jobs: usize,
    pub service_minutes: u32,
    pub company_traversal_minutes: u32,
}

impl Scenario {
    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig::new(self.vehicles, self.jobs, f64::from(self.service_minutes))
    }
}

pub const SCENARIOS: [Scenario; 12] = [
    scenario("Week_1", 8, 77, 47, 9, 31, 12),
    scenario("Week_2", 8, 79, 48, 24, 22, 49),
    scenario("Week_3", 8, 81, 48, 33, 19, 54),
    scenario("Fortnight_1", 16, 156, 95, 33, 54, 1),
    scenario("Fortnight_2", 16, 138, 102, 1, 57, 7),
    scenario("Fortnight_3", 16, 160, 96, 57, 42, 43),
    scenario("ThreeWeek_1", 24, 237, 144, 6, 73, 55),
    scenario("ThreeWeek_2", 24, 217, 150, 25, 79, 56),
    scenario("ThreeWeek_3", 24, 219, 150, 34, 77, 1),
    scenario("Month_1", 32, 298, 198, 58, 99, 50),
    scenario("Month_2", 32, 313, 190, 26, 96, 28),
    scenario("SixWeek_1", 45, 437, 267, 47, 142, 46),
];

const fn scenario(
    name: &'static str,
    vehicles: usize,
    jobs: usize,
    service_h: u32,
    service_m: u32,
    traversal_h: u32,
    traversal_m: u32,
) -> Scenario {
    Scenario {
        name,
        vehicles,
        jobs,
        service_minutes: service_h * 60 + service_m,
        company_traversal_minutes: traversal_h * 60 + traversal_m,
    }
}

pub fn scenario_by_name(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

fn round_km(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Generates a clustered city instance. Equal configs give equal instances.
pub fn generate(config: &GeneratorConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = stream(config.seed, Purpose::Generate, 0, 0);
    let side = config.area_km;
    let workday = DEFAULT_WORKDAY;

    let depots: Vec<Location> = (0..config.depot_count.min(config.vehicles))
        .map(|_| {
            Location::new(
                round_km(rng.random_range(0.3 * side..=0.7 * side)),
                round_km(rng.random_range(0.3 * side..=0.7 * side)),
            )
        })
        .collect();
    let vehicles: Vec<Vehicle> = (0..config.vehicles)
        .map(|id| Vehicle {
            id,
            depot: depots[id % depots.len()],
        })
        .collect();

    let districts: Vec<(Location, f64)> = (0..rng.random_range(3..=6))
        .map(|_| {
            let centre = Location::new(
                rng.random_range(0.15 * side..=0.85 * side),
                rng.random_range(0.15 * side..=0.85 * side),
            );
            (centre, side * rng.random_range(0.05..0.12))
        })
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let locations: Vec<Location> = (0..config.jobs)
        .map(|_| {
            let (x, y) = if rng.random_bool(SCATTER_SHARE) {
                (rng.random_range(0.0..=side), rng.random_range(0.0..=side))
            } else {
                let (c, sigma) = districts[rng.random_range(0..districts.len())];
                (c.x + sigma * unit.sample(&mut rng), c.y + sigma * unit.sample(&mut rng))
            };
            Location::new(round_km(x.clamp(0.0, side)), round_km(y.clamp(0.0, side)))
        })
        .collect();

    let durations = durations(config, &mut rng)?;

    let mut windowed: Vec<usize> = (0..config.jobs).collect();
    windowed.shuffle(&mut rng);
    windowed.truncate((config.window_fraction * config.jobs as f64).round() as usize);
    let mut windows = vec![None; config.jobs];
    for &k in &windowed {
        // farthest depot bounds how early the job can possibly be finished
        let reach = depots
            .iter()
            .map(|d| d.distance_to(&locations[k]) / DEFAULT_SPEED_KPH * 60.0)
            .fold(0.0, f64::max)
            .ceil() as u32;
        let earliest_close = workday.start + reach + durations[k];
        let width = rng.random_range(120..=360).max(durations[k] + 30).min(workday.end - workday.start);
        let open = rng.random_range(workday.start..=workday.end - width);
        let close = (open + width).max(earliest_close).min(workday.end);
        let open = open.min(close - width);
        windows[k] = Some(TimeWindow { open, close });
    }

    let jobs = (0..config.jobs)
        .map(|k| Job {
            id: config.vehicles + k,
            location: locations[k],
            duration: durations[k],
            window: windows[k],
        })
        .collect();
    Instance::new(vehicles, jobs, DEFAULT_SPEED_KPH, workday)
}

/// Log-normal durations rescaled so that their sum lands on the target.
fn durations<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> Result<Vec<u32>> {
    let target = config.total_service_minutes;
    let shape = LogNormal::new(0.0, 0.6).expect("valid log-normal");
    let raw: Vec<f64> = (0..config.jobs).map(|_| shape.sample(rng)).collect();
    let mut scale = target / raw.iter().sum::<f64>();
    let mut out = Vec::new();
    for _ in 0..20 {
        out = raw
            .iter()
            .map(|r| ((r * scale).round() as u32).clamp(MIN_DURATION, MAX_DURATION))
            .collect();
        let total: f64 = out.iter().map(|&d| f64::from(d)).sum();
        if (total - target).abs() <= SERVICE_TOLERANCE * target * 0.5 {
            return Ok(out);
        }
        scale *= target / total;
    }
    let total: f64 = out.iter().map(|&d| f64::from(d)).sum();
    if (total - target).abs() <= SERVICE_TOLERANCE * target {
        Ok(out)
    } else {
        Err(Error::config(format!(
            "cannot reach {target} service minutes with {} jobs",
            config.jobs
        )))
    }
}

/// Reads `v=8,j=77,service=2829[,windows=0.3,area=20,depots=4,seed=1]`.
/// A scenario name such as `Week_1` may stand in for the three sizes.
pub fn parse_generator_spec(spec: &str) -> Result<GeneratorConfig> {
    let mut cfg = GeneratorConfig::new(0, 0, 0.0);
    let mut seen_service = false;
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, value)) = part.split_once('=') else {
            let scenario = scenario_by_name(part)
                .ok_or_else(|| Error::config(format!("expected key=value or a scenario name, found `{part}`")))?;
            cfg = GeneratorConfig {
                seed: cfg.seed,
                ..scenario.generator()
            };
            seen_service = true;
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = || Error::config(format!("bad value for {key}: `{value}`"));
        match key {
            "v" | "vehicles" => cfg.vehicles = value.parse().map_err(|_| bad())?,
            "j" | "jobs" => cfg.jobs = value.parse().map_err(|_| bad())?,
            "service" => {
                cfg.total_service_minutes = value.parse().map_err(|_| bad())?;
                seen_service = true;
            }
            "windows" => cfg.window_fraction = value.parse().map_err(|_| bad())?,
            "area" => cfg.area_km = value.parse().map_err(|_| bad())?,
            "depots" => cfg.depot_count = value.parse().map_err(|_| bad())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
            other => return Err(Error::config(format!("unknown generator key `{other}`"))),
        }
    }
    if !seen_service {
        // default to the company's average job length
        cfg.total_service_minutes = 36.7 * cfg.jobs as f64;
    }
    cfg.validate()?;
    Ok(cfg)
}
