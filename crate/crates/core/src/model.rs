//! Instance and solution data model, the route simulator and the
//! hierarchical objective.
//!
//! The graph has one vertex per vehicle and one per job. Vehicle vertices
//! occupy ids `0..num_vehicles()`, job vertices follow at
//! `num_vehicles()..num_vertices()`. A [`Solution`] is a permutation of all
//! vertices that starts with a vehicle; every vehicle vertex opens a route
//! made of the job vertices that follow it up to the next vehicle vertex.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Average city travel speed.
pub const DEFAULT_SPEED_KPH: f64 = 13.0;

/// Working day bounds in minutes since midnight (08:00 to 19:00).
pub const DEFAULT_WORKDAY: Workday = Workday {
    start: 8 * 60,
    end: 19 * 60,
};

/// A planar position in kilometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn distance_to(&self, other: &Location) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Minutes needed to drive from `a` to `b` in a straight line.
pub fn travel_time(a: &Location, b: &Location, speed_kph: f64) -> Result<f64> {
    if !(speed_kph > 0.0 && speed_kph.is_finite()) {
        return Err(Error::config(format!(
            "speed must be positive, got {speed_kph}"
        )));
    }
    Ok(raw_travel_time(a, b, speed_kph))
}

#[inline]
fn raw_travel_time(a: &Location, b: &Location, speed_kph: f64) -> f64 {
    a.distance_to(b) / speed_kph * 60.0
}

/// Minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workday {
    pub start: u32,
    pub end: u32,
}

/// Interval in which a job has to be completed, minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub open: u32,
    pub close: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// Vertex id.
    pub id: usize,
    pub location: Location,
    /// Predicted service minutes.
    pub duration: u32,
    pub window: Option<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    /// Vertex id.
    pub id: usize,
    pub depot: Location,
}

/// A validated fleet scheduling problem together with its precomputed
/// vertex-to-vertex travel times.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    vehicles: Vec<Vehicle>,
    jobs: Vec<Job>,
    speed_kph: f64,
    workday: Workday,
    total_service: f64,
    travel: Vec<f64>,
}

impl Instance {
    /// Builds an instance. Vehicles must carry ids `0..vehicles.len()` and
    /// jobs the ids directly after, both in ascending order.
    pub fn new(
        vehicles: Vec<Vehicle>,
        jobs: Vec<Job>,
        speed_kph: f64,
        workday: Workday,
    ) -> Result<Self> {
        if !(speed_kph > 0.0 && speed_kph.is_finite()) {
            return Err(Error::config(format!(
                "speed must be positive, got {speed_kph}"
            )));
        }
        if workday.start >= workday.end {
            return Err(Error::InvalidInstance(format!(
                "workday start {} is not before end {}",
                workday.start, workday.end
            )));
        }
        if vehicles.is_empty() {
            return Err(Error::InvalidInstance("at least one vehicle is required".into()));
        }
        for (i, v) in vehicles.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidInstance(format!(
                    "vehicle ids must be dense from 0, found {} at position {i}",
                    v.id
                )));
            }
            if !v.depot.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "vehicle {} has a non-finite depot",
                    v.id
                )));
            }
        }
        let nv = vehicles.len();
        for (k, job) in jobs.iter().enumerate() {
            if job.id != nv + k {
                return Err(Error::InvalidInstance(format!(
                    "job ids must follow vehicle ids densely, expected {} found {}",
                    nv + k,
                    job.id
                )));
            }
            validate_job(job, workday)?;
        }

        let total_service = jobs.iter().fold(0.0, |acc, j| acc + f64::from(j.duration));
        let locations: Vec<Location> = vehicles
            .iter()
            .map(|v| v.depot)
            .chain(jobs.iter().map(|j| j.location))
            .collect();
        let n = locations.len();
        let mut travel = vec![0.0; n * n];
        for (a, la) in locations.iter().enumerate() {
            for (b, lb) in locations.iter().enumerate() {
                travel[a * n + b] = raw_travel_time(la, lb, speed_kph);
            }
        }

        Ok(Instance {
            vehicles,
            jobs,
            speed_kph,
            workday,
            total_service,
            travel,
        })
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn speed_kph(&self) -> f64 {
        self.speed_kph
    }

    pub fn workday(&self) -> Workday {
        self.workday
    }

    /// Sum of all job durations (`S`).
    pub fn total_service(&self) -> f64 {
        self.total_service
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vehicles.len() + self.jobs.len()
    }

    #[inline]
    pub fn is_vehicle(&self, vertex: usize) -> bool {
        vertex < self.vehicles.len()
    }

    /// The job behind a job vertex.
    ///
    /// Panics if `vertex` is a vehicle vertex or out of range.
    #[inline]
    pub fn job(&self, vertex: usize) -> &Job {
        &self.jobs[vertex - self.vehicles.len()]
    }

    /// Depot location for vehicle vertices, job location otherwise.
    pub fn location(&self, vertex: usize) -> Location {
        if self.is_vehicle(vertex) {
            self.vehicles[vertex].depot
        } else {
            self.job(vertex).location
        }
    }

    /// Travel minutes between the locations of two vertices.
    #[inline]
    pub fn travel(&self, from: usize, to: usize) -> f64 {
        self.travel[from * self.num_vertices() + to]
    }
}

fn validate_job(job: &Job, workday: Workday) -> Result<()> {
    if job.duration == 0 {
        return Err(Error::InvalidInstance(format!(
            "job {} has zero duration",
            job.id
        )));
    }
    if !job.location.is_finite() {
        return Err(Error::InvalidInstance(format!(
            "job {} has a non-finite location",
            job.id
        )));
    }
    if let Some(w) = job.window {
        if w.open >= w.close {
            return Err(Error::InvalidInstance(format!(
                "job {}: window close {} is not after open {}",
                job.id, w.close, w.open
            )));
        }
        if w.open < workday.start || w.close > workday.end {
            return Err(Error::InvalidInstance(format!(
                "job {}: window [{}, {}] lies outside the workday [{}, {}]",
                job.id, w.open, w.close, workday.start, workday.end
            )));
        }
    }
    Ok(())
}

/// An ordering of every vertex, beginning with a vehicle vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    order: Vec<usize>,
}

impl Solution {
    pub fn new(order: Vec<usize>, instance: &Instance) -> Result<Self> {
        validate_order(&order, instance)?;
        Ok(Solution { order })
    }

    /// Solvers build permutations by construction; callers must uphold the
    /// invariants themselves.
    pub(crate) fn from_order_unchecked(order: Vec<usize>) -> Self {
        Solution { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        validate_order(&self.order, instance)
    }

    /// Splits the permutation into vehicle routes, in permutation order.
    pub fn routes(&self, instance: &Instance) -> Vec<Route> {
        decode_routes(&self.order, instance)
    }

    /// Consecutive vertex pairs including the closing pair from the last
    /// vertex back to the first.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..if n > 1 { n } else { 0 }).map(move |p| (self.order[p], self.order[(p + 1) % n]))
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.order {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn validate_order(order: &[usize], instance: &Instance) -> Result<()> {
    let n = instance.num_vertices();
    let mut seen = vec![0usize; n];
    let mut out_of_range = Vec::new();
    for &v in order {
        if v < n {
            seen[v] += 1;
        } else {
            out_of_range.push(v);
        }
    }
    let duplicates: Vec<usize> = (0..n).filter(|&v| seen[v] > 1).collect();
    let missing: Vec<usize> = (0..n).filter(|&v| seen[v] == 0).collect();
    if !duplicates.is_empty() || !missing.is_empty() || !out_of_range.is_empty() {
        return Err(Error::InvalidSolution(format!(
            "not a permutation of the {n} vertices: duplicates {duplicates:?}, \
             missing {missing:?}, unknown {out_of_range:?}"
        )));
    }
    if !instance.is_vehicle(order[0]) {
        return Err(Error::InvalidSolution(format!(
            "first vertex {} is not a vehicle",
            order[0]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub vehicle: usize,
    pub jobs: Vec<usize>,
}

/// Splits `order` into routes. Jobs that precede the first vehicle vertex
/// wrap around to the last vehicle.
pub fn decode_routes(order: &[usize], instance: &Instance) -> Vec<Route> {
    let mut routes: Vec<Route> = Vec::with_capacity(instance.num_vehicles());
    let mut leading = Vec::new();
    for &v in order {
        if instance.is_vehicle(v) {
            routes.push(Route {
                vehicle: v,
                jobs: Vec::new(),
            });
        } else if let Some(route) = routes.last_mut() {
            route.jobs.push(v);
        } else {
            leading.push(v);
        }
    }
    if let Some(last) = routes.last_mut() {
        last.jobs.extend(leading);
    }
    routes
}

/// Objective values of a solution: serviced job minutes `s`, fleet
/// traversal minutes `L` and the scalar quality `C = (S - s + 1) * L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub serviced: f64,
    pub traversal: f64,
    pub quality: f64,
}

impl Score {
    fn new(total_service: f64, serviced: f64, traversal: f64) -> Self {
        Score {
            serviced,
            traversal,
            quality: (total_service - serviced + 1.0) * traversal,
        }
    }

    pub fn is_better_than(&self, other: &Score) -> bool {
        compare(self, other) == Ordering::Greater
    }

    /// Serviced minutes as a percentage of `total_service`.
    pub fn serviced_percent(&self, total_service: f64) -> f64 {
        if total_service > 0.0 {
            100.0 * self.serviced / total_service
        } else {
            100.0
        }
    }
}

/// Ranks two scores, `Greater` meaning `a` is the better solution.
///
/// More serviced job time always wins; with equal serviced time the lower
/// fleet traversal wins.
pub fn compare(a: &Score, b: &Score) -> Ordering {
    match a.serviced.partial_cmp(&b.serviced) {
        Some(Ordering::Equal) | None => b
            .traversal
            .partial_cmp(&a.traversal)
            .unwrap_or(Ordering::Equal),
        Some(ord) => ord,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteSummary {
    pub vehicle: usize,
    pub jobs_attempted: usize,
    pub jobs_serviced: usize,
    /// Minute the vehicle is back at its depot.
    pub return_time: f64,
    pub travel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub score: Score,
    pub routes: Vec<RouteSummary>,
    pub unserviced: Vec<usize>,
}

impl Evaluation {
    pub fn serviced_time(&self) -> f64 {
        self.score.serviced
    }

    pub fn traversal_time(&self) -> f64 {
        self.score.traversal
    }

    pub fn quality(&self) -> f64 {
        self.score.quality
    }
}

/// Simulates one vehicle's day. Jobs that cannot be completed in time are
/// skipped without driving to them.
struct RouteSim<'a> {
    instance: &'a Instance,
    depot: usize,
    at: usize,
    clock: f64,
    travel: f64,
    serviced: f64,
}

impl<'a> RouteSim<'a> {
    fn start(instance: &'a Instance, vehicle: usize) -> Self {
        RouteSim {
            instance,
            depot: vehicle,
            at: vehicle,
            clock: f64::from(instance.workday.start),
            travel: 0.0,
            serviced: 0.0,
        }
    }

    #[inline]
    fn visit(&mut self, vertex: usize) -> bool {
        let inst = self.instance;
        let job = inst.job(vertex);
        let leg = inst.travel(self.at, vertex);
        let arrive = self.clock + leg;
        let begin = match job.window {
            Some(w) => arrive.max(f64::from(w.open)),
            None => arrive,
        };
        let finish = begin + f64::from(job.duration);
        let end = f64::from(inst.workday.end);
        let in_window = job.window.is_none_or(|w| finish <= f64::from(w.close));
        let home = finish + inst.travel(vertex, self.depot);
        if in_window && finish <= end && home <= end {
            self.clock = finish;
            self.travel += leg;
            self.serviced += f64::from(job.duration);
            self.at = vertex;
            true
        } else {
            false
        }
    }

    /// Drives home; returns (return time, route travel).
    fn finish(&mut self) -> (f64, f64) {
        let leg = self.instance.travel(self.at, self.depot);
        self.travel += leg;
        self.clock += leg;
        self.at = self.depot;
        (self.clock, self.travel)
    }
}

/// Score of a vertex ordering without building route summaries. The
/// ordering must be a valid solution for `instance`.
pub fn score_order(instance: &Instance, order: &[usize]) -> Score {
    let mut serviced = 0.0;
    let mut traversal = 0.0;
    let mut sim: Option<RouteSim<'_>> = None;
    let mut leading = 0;
    for (p, &v) in order.iter().enumerate() {
        if instance.is_vehicle(v) {
            if let Some(mut done) = sim.take() {
                traversal += done.finish().1;
                serviced += done.serviced;
            }
            sim = Some(RouteSim::start(instance, v));
        } else if let Some(s) = sim.as_mut() {
            s.visit(v);
        } else {
            leading = p + 1;
        }
    }
    if let Some(mut s) = sim {
        for &v in &order[..leading] {
            s.visit(v);
        }
        traversal += s.finish().1;
        serviced += s.serviced;
    }
    Score::new(instance.total_service, serviced, traversal)
}

/// Simulates one vehicle driving `jobs` in order. Returns the route summary
/// and whether each job was serviced.
pub fn simulate_route(instance: &Instance, vehicle: usize, jobs: &[usize]) -> (RouteSummary, Vec<bool>) {
    let mut sim = RouteSim::start(instance, vehicle);
    let flags: Vec<bool> = jobs.iter().map(|&j| sim.visit(j)).collect();
    let (return_time, travel) = sim.finish();
    let summary = RouteSummary {
        vehicle,
        jobs_attempted: jobs.len(),
        jobs_serviced: flags.iter().filter(|&&f| f).count(),
        return_time,
        travel,
    };
    (summary, flags)
}

/// Simulates every route of `solution` and scores it.
pub fn evaluate(instance: &Instance, solution: &Solution) -> Result<Evaluation> {
    solution.validate(instance)?;
    let mut serviced = 0.0;
    let mut traversal = 0.0;
    let mut routes = Vec::with_capacity(instance.num_vehicles());
    let mut unserviced = Vec::new();
    for route in solution.routes(instance) {
        let mut sim = RouteSim::start(instance, route.vehicle);
        let mut done = 0;
        for &job in &route.jobs {
            if sim.visit(job) {
                done += 1;
            } else {
                unserviced.push(job);
            }
        }
        let (return_time, travel) = sim.finish();
        serviced += sim.serviced;
        traversal += travel;
        routes.push(RouteSummary {
            vehicle: route.vehicle,
            jobs_attempted: route.jobs.len(),
            jobs_serviced: done,
            return_time,
            travel,
        });
    }
    Ok(Evaluation {
        score: Score::new(instance.total_service, serviced, traversal),
        routes,
        unserviced,
    })
}
