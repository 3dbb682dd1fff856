//! MAX-MIN Ant System over the vehicle/job permutation.
//!
//! Ants start from a random vehicle vertex and repeatedly apply the random
//! proportional rule over every unvisited vertex. After each round all
//! trails evaporate and only the global best solution deposits `1/C` on its
//! edges. Trails are kept inside `[tau_min, tau_max]`, where
//! `tau_max = 1/(rho * C_best)` and `tau_min = tau_max / (2|V|)` are reset
//! whenever a new global best appears.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{compare, evaluate, score_order, Evaluation, Instance, Score, Solution};
use crate::rng::{stream, Purpose};
use crate::sampling::{roulette, spin};

/// Floor applied to travel times before inverting them into heuristic
/// desirability.
pub const MIN_HEURISTIC_COST: f64 = 1e-3;

/// Lower bound on the quality used for pheromone arithmetic; a schedule with
/// zero traversal would otherwise give infinite trails.
const MIN_DEPOSIT_QUALITY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MmasConfig {
    pub ants: usize,
    /// Construction rounds after the initial round.
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub seed: u64,
}

impl Default for MmasConfig {
    fn default() -> Self {
        MmasConfig {
            ants: 192,
            iterations: 500,
            alpha: 1.0,
            beta: 1.0,
            rho: 0.02,
            seed: 0,
        }
    }
}

impl MmasConfig {
    /// Sets `iterations` so that the run evaluates about `evaluations`
    /// solutions, the initial round included.
    pub fn with_evaluation_budget(mut self, evaluations: u64) -> Self {
        self.iterations = rounds_for_budget(evaluations, self.ants);
        self
    }

    pub fn evaluations(&self) -> u64 {
        (self.ants as u64) * (self.iterations as u64 + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ants == 0 {
            return Err(Error::config("at least one ant is required"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }
}

pub(crate) fn rounds_for_budget(evaluations: u64, ants: usize) -> usize {
    let ants = ants.max(1) as u64;
    (evaluations / ants).saturating_sub(1) as usize
}

/// `x^e` with exact fast paths for the common small integer exponents.
#[inline]
pub(crate) fn weight_pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 0.0 {
        1.0
    } else if e == 2.0 {
        x * x
    } else if e == 3.0 {
        x * x * x
    } else {
        x.powf(e)
    }
}

/// Dense `eta_ij` matrix: inverse travel time, 1 between two vehicle
/// vertices, 0 on the diagonal.
#[derive(Debug, Clone)]
pub struct Heuristic {
    n: usize,
    eta: Vec<f64>,
}

impl Heuristic {
    pub fn new(instance: &Instance) -> Self {
        let n = instance.num_vertices();
        let mut eta = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                eta[i * n + j] = if instance.is_vehicle(i) && instance.is_vehicle(j) {
                    1.0
                } else {
                    1.0 / instance.travel(i, j).max(MIN_HEURISTIC_COST)
                };
            }
        }
        Heuristic { n, eta }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.eta[i * self.n + j]
    }

    /// The matrix raised element-wise to `beta`.
    pub(crate) fn powered(&self, beta: f64) -> Vec<f64> {
        self.eta.iter().map(|&e| weight_pow(e, beta)).collect()
    }
}

/// Directed trail levels with MAX-MIN bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneMatrix {
    n: usize,
    tau: Vec<f64>,
    tau_min: f64,
    tau_max: f64,
}

impl PheromoneMatrix {
    /// Every trail starts at `initial`, which is also the upper bound.
    pub fn new(n: usize, initial: f64) -> Self {
        PheromoneMatrix {
            n,
            tau: vec![initial; n * n],
            tau_min: 0.0,
            tau_max: initial,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.tau[i * self.n + j] = value;
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    /// Installs new bounds and clamps every trail into them.
    pub fn set_bounds(&mut self, tau_min: f64, tau_max: f64) {
        debug_assert!(tau_min <= tau_max);
        self.tau_min = tau_min;
        self.tau_max = tau_max;
        for t in &mut self.tau {
            *t = t.clamp(tau_min, tau_max);
        }
    }

    /// Bounds derived from the quality of the best solution.
    pub fn bounds_for(quality: f64, rho: f64, vertices: usize) -> (f64, f64) {
        let tau_max = 1.0 / (rho * quality.max(MIN_DEPOSIT_QUALITY));
        (tau_max / (2.0 * vertices.max(1) as f64), tau_max)
    }

    /// Whether every off-diagonal trail lies within the bounds.
    pub fn within_bounds(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n)
                .filter(|&j| j != i)
                .all(|j| (self.tau_min..=self.tau_max).contains(&self.get(i, j)))
        })
    }

    /// `tau <- (1 - rho) * tau`, floored at `tau_min`.
    pub fn evaporate(&mut self, rho: f64) {
        let keep = 1.0 - rho;
        let floor = self.tau_min;
        for t in &mut self.tau {
            *t = (*t * keep).max(floor);
        }
    }

    /// Adds `1/quality` to both directions of every edge of `best`, capped at
    /// `tau_max`. Other trails are untouched.
    pub fn deposit_best(&mut self, best: &Solution, quality: f64) {
        let amount = 1.0 / quality.max(MIN_DEPOSIT_QUALITY);
        let cap = self.tau_max;
        let n = self.n;
        for (i, j) in best.edges() {
            for idx in [i * n + j, j * n + i] {
                self.tau[idx] = (self.tau[idx] + amount).min(cap);
            }
        }
    }

    /// `tau^alpha * eta^beta` for every edge.
    pub(crate) fn choice_info(&self, alpha: f64, eta_beta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.tau
                .iter()
                .zip(eta_beta)
                .map(|(&t, &e)| weight_pow(t, alpha) * e),
        );
    }
}

/// Where an ant stands while building a solution.
#[derive(Debug, Clone)]
pub struct ConstructionState {
    pub current: usize,
    pub visited: Vec<bool>,
    /// Unvisited vertices, in no particular order.
    pub candidates: Vec<usize>,
}

impl ConstructionState {
    pub fn new(vertices: usize, start: usize) -> Self {
        let mut visited = vec![false; vertices];
        visited[start] = true;
        let candidates = (0..vertices).filter(|&v| v != start).collect();
        ConstructionState {
            current: start,
            visited,
            candidates,
        }
    }

    /// Moves to `candidates[index]`.
    pub fn advance(&mut self, index: usize) -> usize {
        let next = self.candidates.swap_remove(index);
        self.visited[next] = true;
        self.current = next;
        next
    }
}

/// Random proportional rule: picks candidate `j` with probability
/// proportional to `tau_ij^alpha * eta_ij^beta`. Returns the index into
/// `state.candidates`.
pub fn select_next<R: Rng + ?Sized>(
    state: &ConstructionState,
    pheromone: &PheromoneMatrix,
    heuristic: &Heuristic,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<usize> {
    let i = state.current;
    let weights: Vec<f64> = state
        .candidates
        .iter()
        .map(|&j| weight_pow(pheromone.get(i, j), alpha) * weight_pow(heuristic.get(i, j), beta))
        .collect();
    roulette(&weights, rng)
}

/// Builds one complete solution from the current trails.
pub fn construct_solution<R: Rng + ?Sized>(
    instance: &Instance,
    pheromone: &PheromoneMatrix,
    heuristic: &Heuristic,
    config: &MmasConfig,
    rng: &mut R,
) -> Result<Solution> {
    let n = instance.num_vertices();
    if pheromone.size() != n {
        return Err(Error::config(format!(
            "pheromone matrix has {} vertices, instance has {n}",
            pheromone.size()
        )));
    }
    let mut choice = Vec::new();
    pheromone.choice_info(config.alpha, &heuristic.powered(config.beta), &mut choice);
    let mut scratch = Default::default();
    Ok(construct_from_choice(instance, &choice, rng, &mut scratch))
}

/// Construction against a precomputed choice matrix.
pub(crate) fn construct_from_choice<R: Rng + ?Sized>(
    instance: &Instance,
    choice: &[f64],
    rng: &mut R,
    scratch: &mut (Vec<f64>, Vec<f64>),
) -> Solution {
    let (weights, chunk_sums) = scratch;
    let n = instance.num_vertices();
    let start = rng.random_range(0..instance.num_vehicles());
    let mut order = Vec::with_capacity(n);
    order.push(start);
    let mut candidates: Vec<usize> = (0..n).filter(|&v| v != start).collect();
    let mut current = start;
    weights.resize(n, 0.0);
    while !candidates.is_empty() {
        let row = &choice[current * n..(current + 1) * n];
        for (w, &j) in weights.iter_mut().zip(&candidates) {
            *w = row[j];
        }
        let k = spin(&weights[..candidates.len()], chunk_sums, rng);
        current = candidates.swap_remove(k);
        order.push(current);
    }
    Solution::from_order_unchecked(order)
}

/// Best-so-far objective after one construction round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub evaluations: u64,
    pub best: Score,
}

#[derive(Debug, Clone)]
pub struct MmasOutcome {
    pub best: Solution,
    pub evaluation: Evaluation,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    /// Probabilistic next-vertex selections made by all ants.
    pub decisions: u64,
}

/// Read-only view handed to an observer after every round.
pub struct RoundView<'a> {
    pub iteration: usize,
    pub pheromone: &'a PheromoneMatrix,
    pub best: &'a Score,
}

pub fn run_mmas(instance: &Instance, config: &MmasConfig) -> Result<MmasOutcome> {
    run_mmas_observed(instance, config, |_| {})
}

/// [`run_mmas`] with a callback after every round's pheromone update.
pub fn run_mmas_observed<F>(
    instance: &Instance,
    config: &MmasConfig,
    mut observe: F,
) -> Result<MmasOutcome>
where
    F: FnMut(&RoundView<'_>),
{
    config.validate()?;
    let n = instance.num_vertices();
    let eta_beta = Heuristic::new(instance).powered(config.beta);
    let mut pheromone = PheromoneMatrix::new(n, 1.0);
    let mut choice = Vec::with_capacity(n * n);

    let mut best: Option<(Solution, Score)> = None;
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut evaluations = 0u64;
    let per_construction = n.saturating_sub(1) as u64;

    for iteration in 0..=config.iterations {
        pheromone.choice_info(config.alpha, &eta_beta, &mut choice);
        let round: Vec<(Solution, Score)> = (0..config.ants)
            .into_par_iter()
            .map_init(Default::default, |scratch, ant| {
                let mut rng = stream(config.seed, Purpose::Construct, ant as u64, iteration as u64);
                let sol = construct_from_choice(instance, &choice, &mut rng, scratch);
                let score = score_order(instance, sol.order());
                (sol, score)
            })
            .collect();
        evaluations += round.len() as u64;

        let mut improved = false;
        for (sol, score) in round {
            let better = match &best {
                None => true,
                Some((_, b)) => compare(&score, b).is_gt(),
            };
            if better {
                best = Some((sol, score));
                improved = true;
            }
        }
        let (best_sol, best_score) = best.as_ref().expect("at least one ant");

        if iteration == 0 {
            let (lo, hi) = PheromoneMatrix::bounds_for(best_score.quality, config.rho, n);
            pheromone = PheromoneMatrix::new(n, hi);
            pheromone.set_bounds(lo, hi);
        } else {
            if improved {
                let (lo, hi) = PheromoneMatrix::bounds_for(best_score.quality, config.rho, n);
                pheromone.set_bounds(lo, hi);
            }
            pheromone.evaporate(config.rho);
        }
        if iteration > 0 {
            pheromone.deposit_best(best_sol, best_score.quality);
        }

        trace.push(TracePoint {
            iteration,
            evaluations,
            best: *best_score,
        });
        observe(&RoundView {
            iteration,
            pheromone: &pheromone,
            best: best_score,
        });
    }

    let (best, _) = best.expect("at least one round");
    let evaluation = evaluate(instance, &best)?;
    Ok(MmasOutcome {
        best,
        evaluation,
        trace,
        evaluations,
        decisions: evaluations * per_construction,
    })
}
