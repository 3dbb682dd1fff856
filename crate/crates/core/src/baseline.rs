//! The reference scheduler that solver results are measured against.
//!
//! Jobs are grouped geographically into one cluster per vehicle, clusters
//! are given to the vehicle with the nearest depot, and each vehicle drives
//! to its furthest job first and works its way back towards the depot.
//! Time window conflicts are patched by moving a missed job to the first
//! other position in its route that services more work.

use rand::Rng;

use crate::error::Result;
use crate::model::{compare, evaluate, score_order, simulate_route, Evaluation, Instance, Location, Solution};
use crate::rng::{stream, Purpose};

/// Allowed deviation of a cluster's service minutes from the mean.
pub const BALANCE_TOLERANCE: f64 = 0.2;

const KMEANS_SEED: u64 = 0x5eed;
const KMEANS_ROUNDS: usize = 100;

#[derive(Debug, Clone)]
pub struct BaselineSchedule {
    pub solution: Solution,
    pub evaluation: Evaluation,
}

pub fn company_schedule(instance: &Instance) -> Result<BaselineSchedule> {
    let clusters = balanced_clusters(instance);
    let assignment = assign_to_vehicles(instance, &clusters);

    let mut order = Vec::with_capacity(instance.num_vertices());
    for (vehicle, cluster) in assignment.iter().enumerate() {
        let mut route = furthest_first(instance, vehicle, &clusters[*cluster].members);
        repair_windows(instance, vehicle, &mut route);
        order.push(vehicle);
        order.extend(route);
    }
    let solution = Solution::new(order, instance)?;
    let evaluation = evaluate(instance, &solution)?;
    Ok(BaselineSchedule { solution, evaluation })
}

#[derive(Debug, Clone)]
struct Cluster {
    centre: Location,
    members: Vec<usize>,
}

fn load(instance: &Instance, members: &[usize]) -> f64 {
    members.iter().map(|&j| f64::from(instance.job(j).duration)).sum()
}

fn centroid(instance: &Instance, members: &[usize], fallback: Location) -> Location {
    if members.is_empty() {
        return fallback;
    }
    let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &j| {
        let l = instance.job(j).location;
        (sx + l.x, sy + l.y)
    });
    let n = members.len() as f64;
    Location::new(sx / n, sy / n)
}

fn nearest(centres: &[Location], at: &Location) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centre) in centres.iter().enumerate() {
        let d = centre.distance_to(at);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations, one cluster per vehicle.
fn kmeans(instance: &Instance) -> Vec<Cluster> {
    let k = instance.num_vehicles();
    let jobs: Vec<usize> = (instance.num_vehicles()..instance.num_vertices()).collect();
    let points: Vec<Location> = jobs.iter().map(|&j| instance.job(j).location).collect();
    if points.is_empty() {
        return vec![Cluster { centre: Location::new(0.0, 0.0), members: vec![] }; k];
    }

    let mut rng = stream(KMEANS_SEED, Purpose::Baseline, 0, 0);
    let mut centres = vec![points[rng.random_range(0..points.len())]];
    while centres.len() < k.min(points.len()) {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                let d = centres[nearest(&centres, p)].distance_to(p);
                d * d
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            if target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        centres.push(points[pick]);
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_ROUNDS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(&centres, p);
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<usize> = (0..points.len()).filter(|&i| assign[i] == c).map(|i| jobs[i]).collect();
            *centre = centroid(instance, &members, *centre);
        }
        if !changed {
            break;
        }
    }

    let mut clusters: Vec<Cluster> = centres
        .iter()
        .map(|&centre| Cluster { centre, members: vec![] })
        .collect();
    for (i, &c) in assign.iter().enumerate() {
        clusters[c].members.push(jobs[i]);
    }
    while clusters.len() < k {
        clusters.push(Cluster { centre: clusters[0].centre, members: vec![] });
    }
    clusters
}

/// Moves jobs between clusters until every cluster's service minutes lie
/// within the tolerance of the mean, or no admissible move remains.
fn balanced_clusters(instance: &Instance) -> Vec<Cluster> {
    let mut clusters = kmeans(instance);
    let k = clusters.len();
    if instance.num_jobs() < k {
        return clusters;
    }
    let mean = instance.total_service() / k as f64;
    let upper = mean * (1.0 + BALANCE_TOLERANCE);
    let lower = mean * (1.0 - BALANCE_TOLERANCE);

    for _ in 0..4 * instance.num_jobs() {
        let loads: Vec<f64> = clusters.iter().map(|c| load(instance, &c.members)).collect();
        // move out of the most overloaded cluster, else into the most underloaded
        let over = (0..k).filter(|&c| loads[c] > upper).max_by(|&a, &b| loads[a].total_cmp(&loads[b]));
        let under = (0..k).filter(|&c| loads[c] < lower).min_by(|&a, &b| loads[a].total_cmp(&loads[b]));
        let mut best: Option<(f64, usize, usize, usize)> = None;
        let mut consider = |from: usize, to: usize, idx: usize, job: usize| {
            let dur = f64::from(instance.job(job).duration);
            if from == to || loads[to] + dur > upper || loads[from] - dur < lower.min(loads[from]) {
                return;
            }
            let d = instance.job(job).location.distance_to(&clusters[to].centre);
            if best.is_none_or(|(bd, ..)| d < bd) {
                best = Some((d, from, to, idx));
            }
        };
        if let Some(from) = over {
            for (idx, &job) in clusters[from].members.iter().enumerate() {
                for to in 0..k {
                    consider(from, to, idx, job);
                }
            }
        } else if let Some(to) = under {
            for from in 0..k {
                if loads[from] <= mean {
                    continue;
                }
                for (idx, &job) in clusters[from].members.iter().enumerate() {
                    consider(from, to, idx, job);
                }
            }
        } else {
            break;
        }
        let Some((_, from, to, idx)) = best else { break };
        let job = clusters[from].members.remove(idx);
        clusters[to].members.push(job);
        for c in [from, to] {
            let fallback = clusters[c].centre;
            clusters[c].centre = centroid(instance, &clusters[c].members, fallback);
        }
    }
    clusters
}

/// Greedy matching of clusters to vehicles by centre-to-depot distance.
/// Returns the cluster index for each vehicle.
fn assign_to_vehicles(instance: &Instance, clusters: &[Cluster]) -> Vec<usize> {
    let vehicles = instance.vehicles();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(vehicles.len() * clusters.len());
    for (c, cluster) in clusters.iter().enumerate() {
        for v in vehicles {
            pairs.push((cluster.centre.distance_to(&v.depot), c, v.id));
        }
    }
    // empty clusters go last so loaded clusters get the nearest depots
    pairs.sort_by(|a, b| {
        clusters[a.1]
            .members
            .is_empty()
            .cmp(&clusters[b.1].members.is_empty())
            .then(a.0.total_cmp(&b.0))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut by_vehicle = vec![usize::MAX; vehicles.len()];
    let mut taken = vec![false; clusters.len()];
    for (_, c, v) in pairs {
        if by_vehicle[v] == usize::MAX && !taken[c] {
            by_vehicle[v] = c;
            taken[c] = true;
        }
    }
    by_vehicle
}

/// Jobs sorted by decreasing distance from the vehicle's depot.
fn furthest_first(instance: &Instance, vehicle: usize, members: &[usize]) -> Vec<usize> {
    let mut route = members.to_vec();
    route.sort_by(|&a, &b| {
        instance
            .travel(vehicle, b)
            .total_cmp(&instance.travel(vehicle, a))
            .then(a.cmp(&b))
    });
    route
}

fn route_score(instance: &Instance, vehicle: usize, route: &[usize], buf: &mut Vec<usize>) -> crate::model::Score {
    buf.clear();
    buf.push(vehicle);
    buf.extend_from_slice(route);
    score_order(instance, buf)
}

/// Moves the first missed job of the route to the first position, earlier
/// positions tried before later ones, that improves the route; repeats
/// until no missed job can be placed better.
fn repair_windows(instance: &Instance, vehicle: usize, route: &mut Vec<usize>) {
    let mut buf = Vec::with_capacity(route.len() + 1);
    let mut stuck = vec![false; route.len()];
    for _ in 0..route.len() * route.len() + 1 {
        let (_, flags) = simulate_route(instance, vehicle, route);
        let Some(i) = (0..route.len()).find(|&i| !flags[i] && !stuck[i]) else {
            return;
        };
        let current = route_score(instance, vehicle, route, &mut buf);
        let positions = (0..i).rev().chain(i + 1..route.len());
        let mut moved = false;
        for target in positions {
            let mut trial = route.clone();
            let job = trial.remove(i);
            trial.insert(target, job);
            if compare(&route_score(instance, vehicle, &trial, &mut buf), &current).is_gt() {
                *route = trial;
                stuck = vec![false; route.len()];
                moved = true;
                break;
            }
        }
        if !moved {
            stuck[i] = true;
        }
    }
}
