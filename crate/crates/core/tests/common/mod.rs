//! Reference implementations the library is checked against. Nothing here
//! calls the library's simulator.
#![allow(dead_code)]

use fleet_aco::model::{Instance, Job, Location, TimeWindow, Vehicle, Workday, DEFAULT_WORKDAY};
use proptest::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub serviced_minutes: f64,
    pub traversal: f64,
    pub serviced_jobs: Vec<usize>,
}

fn minutes(a: Location, b: Location, speed: f64) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    (dx * dx + dy * dy).sqrt() / speed * 60.0
}

/// Walks every route by hand: drive, wait for the window, work, and skip any
/// job that would finish late or leave no time to get home.
pub fn simulate(instance: &Instance, order: &[usize]) -> OracleResult {
    let nv = instance.num_vehicles();
    let speed = instance.speed_kph();
    let day = instance.workday();
    let mut routes: Vec<(usize, Vec<usize>)> = Vec::new();
    for &v in order {
        if v < nv {
            routes.push((v, Vec::new()));
        } else {
            routes.last_mut().expect("order starts with a vehicle").1.push(v);
        }
    }

    let mut result = OracleResult {
        serviced_minutes: 0.0,
        traversal: 0.0,
        serviced_jobs: Vec::new(),
    };
    for (vehicle, jobs) in routes {
        let depot = instance.vehicles()[vehicle].depot;
        let mut here = depot;
        let mut clock = f64::from(day.start);
        let mut driven = 0.0;
        for v in jobs {
            let job = &instance.jobs()[v - nv];
            let leg = minutes(here, job.location, speed);
            let mut begin = clock + leg;
            if let Some(w) = job.window {
                begin = begin.max(f64::from(w.open));
            }
            let done = begin + f64::from(job.duration);
            let in_window = job.window.is_none_or(|w| done <= f64::from(w.close));
            let home = done + minutes(job.location, depot, speed);
            if in_window && done <= f64::from(day.end) && home <= f64::from(day.end) {
                driven += leg;
                clock = done;
                here = job.location;
                result.serviced_minutes += f64::from(job.duration);
                result.serviced_jobs.push(v);
            }
        }
        driven += minutes(here, depot, speed);
        result.traversal += driven;
    }
    result.serviced_jobs.sort_unstable();
    result
}

/// Better of two oracle results: more serviced time, then less driving.
pub fn oracle_better(a: &OracleResult, b: &OracleResult) -> bool {
    a.serviced_minutes > b.serviced_minutes
        || (a.serviced_minutes == b.serviced_minutes && a.traversal < b.traversal)
}

/// Best result over every vertex order that starts with a vehicle.
pub fn exhaustive_optimum(instance: &Instance) -> OracleResult {
    let n = instance.num_vertices();
    let mut best: Option<OracleResult> = None;
    let mut order: Vec<usize> = (0..n).collect();
    permute(&mut order, 0, &mut |o| {
        if o[0] >= instance.num_vehicles() {
            return;
        }
        let r = simulate(instance, o);
        if best.as_ref().is_none_or(|b| oracle_better(&r, b)) {
            best = Some(r);
        }
    });
    best.expect("at least one vehicle")
}

fn permute(xs: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == xs.len() {
        visit(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, visit);
        xs.swap(k, i);
    }
}

/// Exact probabilities of the random proportional rule.
pub fn proportional(tau: &[f64], eta: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let w: Vec<f64> = tau
        .iter()
        .zip(eta)
        .map(|(t, e)| t.powf(alpha) * e.powf(beta))
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn coord() -> impl Strategy<Value = f64> {
    (0u32..=30_000).prop_map(|m| f64::from(m) / 1000.0)
}

fn window(duration: u32) -> impl Strategy<Value = Option<TimeWindow>> {
    let day = DEFAULT_WORKDAY;
    prop_oneof![
        2 => Just(None),
        1 => (day.start..day.end - duration.max(1), 1u32..=360).prop_map(move |(open, width)| {
            let close = (open + width.max(duration)).min(day.end);
            Some(TimeWindow { open, close })
        }),
    ]
}

fn job_parts() -> impl Strategy<Value = (f64, f64, u32, Option<TimeWindow>)> {
    (coord(), coord(), 5u32..=240)
        .prop_flat_map(|(x, y, d)| (Just(x), Just(y), Just(d), window(d)))
}

/// Small random instances: up to `max_vehicles` vehicles and `max_jobs`
/// jobs.
pub fn arb_instance(max_vehicles: usize, max_jobs: usize) -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec((coord(), coord()), 1..=max_vehicles),
        prop::collection::vec(job_parts(), 0..=max_jobs),
        prop_oneof![Just(13.0), 5.0f64..60.0],
        prop_oneof![
            3 => Just(DEFAULT_WORKDAY),
            1 => (300u32..600, 600u32..1400).prop_map(|(start, end)| Workday { start, end }),
        ],
    )
        .prop_map(|(depots, jobs, speed, workday)| {
            let nv = depots.len();
            let vehicles = depots
                .into_iter()
                .enumerate()
                .map(|(id, (x, y))| Vehicle { id, depot: Location::new(x, y) })
                .collect();
            let jobs = jobs
                .into_iter()
                .enumerate()
                .map(|(k, (x, y, duration, window))| Job {
                    id: nv + k,
                    location: Location::new(x, y),
                    duration,
                    window: window.filter(|w| w.open >= workday.start && w.close <= workday.end),
                })
                .collect();
            Instance::new(vehicles, jobs, speed, workday).expect("strategy builds valid instances")
        })
}

/// A permutation of the instance's vertices that starts with a vehicle.
pub fn arb_order(instance: &Instance) -> impl Strategy<Value = Vec<usize>> {
    let n = instance.num_vertices();
    let nv = instance.num_vehicles();
    (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 0..nv).prop_map(move |(mut order, first)| {
        let at = order.iter().position(|&v| v == first).unwrap();
        order.swap(0, at);
        order
    })
}

pub fn arb_pair(max_vehicles: usize, max_jobs: usize) -> impl Strategy<Value = (Instance, Vec<usize>)> {
    arb_instance(max_vehicles, max_jobs).prop_flat_map(|inst| {
        let order = arb_order(&inst);
        (Just(inst), order)
    })
}
