//! Partial-ACO.
//!
//! Each ant remembers the best solution it has built (`l_best`). Every
//! iteration it keeps part of that solution verbatim and rebuilds only the
//! rest with the random proportional rule, then replaces its memory if the
//! result is strictly better. There is no pheromone matrix: trail levels
//! for the edges leaving a vertex are reconstructed on demand from the
//! population of memories, each memory contributing `C_gbest / C_member` to
//! the edge it takes out of that vertex on top of a base level `tau_0`.
//!
//! Two preservation schemes are provided:
//!
//! * [`PreservationMode::Segment`] keeps one circular run of positions.
//! * [`PreservationMode::Blocks`] keeps a random subset of whole vehicle
//!   routes, so jobs from anywhere in the solution can move to any free
//!   vehicle.
//!
//! A modification limit bounds the fraction of positions an ant may
//! rebuild. With a small escape probability the limit is lifted for one
//! construction.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::colony::{weight_pow, Heuristic, TracePoint};
use crate::error::{Error, Result};
use crate::model::{compare, evaluate, score_order, Evaluation, Instance, Score, Solution};
use crate::rng::{stream, Purpose, SolverRng};
use crate::sampling::spin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreservationMode {
    Segment,
    Blocks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialConfig {
    pub ants: usize,
    /// Iterations after the initial full construction; each iteration every
    /// ant builds one solution.
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Trail level of an edge no memory uses.
    pub base_pheromone: f64,
    /// Largest fraction of positions an ant may rebuild, in (0, 1].
    pub modification_limit: f64,
    pub escape_probability: f64,
    pub mode: PreservationMode,
    pub seed: u64,
}

impl Default for PartialConfig {
    fn default() -> Self {
        PartialConfig {
            ants: 32,
            iterations: 3000,
            alpha: 3.0,
            beta: 1.0,
            base_pheromone: 0.1,
            modification_limit: 1.0,
            escape_probability: 0.001,
            mode: PreservationMode::Blocks,
            seed: 0,
        }
    }
}

impl PartialConfig {
    pub fn with_evaluation_budget(mut self, evaluations: u64) -> Self {
        self.iterations = crate::colony::rounds_for_budget(evaluations, self.ants);
        self
    }

    pub fn evaluations(&self) -> u64 {
        (self.ants as u64) * (self.iterations as u64 + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ants == 0 {
            return Err(Error::config("at least one ant is required"));
        }
        if !(self.modification_limit > 0.0 && self.modification_limit <= 1.0) {
            return Err(Error::config(format!(
                "modification limit must lie in (0, 1], got {}",
                self.modification_limit
            )));
        }
        if !(0.0..=1.0).contains(&self.escape_probability) {
            return Err(Error::config(format!(
                "escape probability must lie in [0, 1], got {}",
                self.escape_probability
            )));
        }
        if !(self.base_pheromone > 0.0 && self.base_pheromone.is_finite()) {
            return Err(Error::config(format!(
                "base pheromone must be positive, got {}",
                self.base_pheromone
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("alpha and beta must be non-negative"));
        }
        Ok(())
    }
}

/// Largest number of positions that may be rebuilt under `limit`.
pub fn max_free_positions(limit: f64, vertices: usize) -> usize {
    // the epsilon absorbs representation error, e.g. 0.29 * 100
    ((limit * vertices as f64) + 1e-9).floor().min(vertices as f64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntMemory {
    pub l_best: Solution,
    pub score: Score,
}

/// The ants' memories plus the successor table used for reconstruction.
#[derive(Debug, Clone)]
pub struct Population {
    memories: Vec<AntMemory>,
    /// `successors[k][v]`: vertex following `v` in memory `k`, cyclically.
    successors: Vec<Vec<usize>>,
    g_best: usize,
}

fn successor_table(solution: &Solution) -> Vec<usize> {
    let mut succ = vec![0; solution.len()];
    for (i, j) in solution.edges() {
        succ[i] = j;
    }
    succ
}

impl Population {
    pub fn new(memories: Vec<AntMemory>) -> Result<Self> {
        if memories.is_empty() {
            return Err(Error::config("population must not be empty"));
        }
        let successors = memories.iter().map(|m| successor_table(&m.l_best)).collect();
        let mut pop = Population {
            memories,
            successors,
            g_best: 0,
        };
        pop.g_best = (1..pop.memories.len()).fold(0, |best, k| {
            if compare(&pop.memories[k].score, &pop.memories[best].score).is_gt() {
                k
            } else {
                best
            }
        });
        Ok(pop)
    }

    pub fn memories(&self) -> &[AntMemory] {
        &self.memories
    }

    pub fn len(&self) -> usize {
        self.memories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memories.is_empty()
    }

    pub fn g_best(&self) -> usize {
        self.g_best
    }

    pub fn best(&self) -> &AntMemory {
        &self.memories[self.g_best]
    }

    /// Replaces ant `k`'s memory if `candidate` is strictly better. Returns
    /// whether it did.
    pub fn offer(&mut self, k: usize, candidate: Solution, score: Score) -> bool {
        if !compare(&score, &self.memories[k].score).is_gt() {
            return false;
        }
        self.successors[k] = successor_table(&candidate);
        self.memories[k] = AntMemory {
            l_best: candidate,
            score,
        };
        if compare(&score, &self.memories[self.g_best].score).is_gt() {
            self.g_best = k;
        }
        true
    }

    /// `C_gbest / C_member` for every member.
    pub fn quality_ratios(&self) -> Vec<f64> {
        let reference = self.best().score.quality;
        self.memories
            .iter()
            .map(|m| {
                if m.score.quality > 0.0 {
                    reference / m.score.quality
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Trail level on `from -> j` for every candidate `j`.
    pub fn reconstruct_weights(&self, from: usize, candidates: &[usize], base: f64) -> Vec<f64> {
        let ratios = self.quality_ratios();
        candidates
            .iter()
            .map(|&j| {
                base + self
                    .successors
                    .iter()
                    .zip(&ratios)
                    .filter(|(succ, _)| succ[from] == j)
                    .map(|(_, r)| r)
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Which positions of `l_best` are kept and in which order the others are
/// refilled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreservationPlan {
    pub preserved: Vec<bool>,
    /// Free positions in the order they are refilled.
    pub fill_order: Vec<usize>,
    /// Free positions that must receive a vehicle vertex, since a preserved
    /// route or the start of the permutation depends on one being there.
    pub route_starts: Vec<bool>,
}

impl PreservationPlan {
    pub fn preserved_count(&self) -> usize {
        self.preserved.iter().filter(|&&p| p).count()
    }

    pub fn free_count(&self) -> usize {
        self.fill_order.len()
    }

    /// Vertices of `l_best` sitting in free positions.
    pub fn free_vertices(&self, l_best: &Solution) -> Vec<usize> {
        self.fill_order.iter().map(|&p| l_best.order()[p]).collect()
    }

    /// Plan that rebuilds everything from position 0.
    pub fn rebuild_all(vertices: usize) -> Self {
        let mut route_starts = vec![false; vertices];
        if vertices > 0 {
            route_starts[0] = true;
        }
        PreservationPlan {
            preserved: vec![false; vertices],
            fill_order: (0..vertices).collect(),
            route_starts,
        }
    }
}

fn preserved_length<R: Rng + ?Sized>(limit: f64, vertices: usize, rng: &mut R) -> usize {
    let min_len = vertices - max_free_positions(limit, vertices);
    rng.random_range(min_len..=vertices)
}

/// Keeps one circular run of `l_best`, starting at a uniform position, with
/// a uniform length that leaves at most `limit` of the positions free.
pub fn plan_segment<R: Rng + ?Sized>(l_best: &Solution, limit: f64, rng: &mut R) -> PreservationPlan {
    let n = l_best.len();
    let start = rng.random_range(0..n);
    let len = preserved_length(limit, n, rng);
    segment_plan(n, start, len)
}

/// The segment plan for a fixed start and length.
pub fn segment_plan(n: usize, start: usize, len: usize) -> PreservationPlan {
    if len == 0 {
        return PreservationPlan::rebuild_all(n);
    }
    let mut preserved = vec![false; n];
    for k in 0..len {
        preserved[(start + k) % n] = true;
    }
    let fill_order: Vec<usize> = (0..n - len).map(|k| (start + len + k) % n).collect();
    let mut route_starts = vec![false; n];
    if !preserved[0] {
        route_starts[0] = true;
    }
    PreservationPlan {
        preserved,
        fill_order,
        route_starts,
    }
}

/// Keeps whole vehicle routes of `l_best`, picked in random order until a
/// uniformly drawn preserved length (bounded below by `limit`) is reached.
pub fn plan_blocks<R: Rng + ?Sized>(
    l_best: &Solution,
    instance: &Instance,
    limit: f64,
    rng: &mut R,
) -> PreservationPlan {
    let n = l_best.len();
    let target = preserved_length(limit, n, rng);
    let spans = route_spans(l_best, instance);
    let mut picks: Vec<usize> = (0..spans.len()).collect();
    picks.shuffle(rng);
    let mut keep = Vec::new();
    let mut kept = 0;
    for r in picks {
        if kept >= target {
            break;
        }
        kept += spans[r].1 - spans[r].0;
        keep.push(r);
    }
    blocks_plan(n, &spans, &keep)
}

/// Position ranges `[start, end)` of each route of `solution`.
pub fn route_spans(solution: &Solution, instance: &Instance) -> Vec<(usize, usize)> {
    let order = solution.order();
    let mut spans = Vec::new();
    for (p, &v) in order.iter().enumerate() {
        if instance.is_vehicle(v) {
            if let Some(last) = spans.last_mut() {
                let (_, end): &mut (usize, usize) = last;
                *end = p;
            }
            spans.push((p, order.len()));
        }
    }
    spans
}

/// The blocks plan preserving the routes `keep` (indices into `spans`).
pub fn blocks_plan(n: usize, spans: &[(usize, usize)], keep: &[usize]) -> PreservationPlan {
    let mut preserved = vec![false; n];
    for &r in keep {
        let (a, b) = spans[r];
        preserved[a..b].iter_mut().for_each(|p| *p = true);
    }
    let fill_order: Vec<usize> = (0..n).filter(|&p| !preserved[p]).collect();
    let mut route_starts = vec![false; n];
    for &p in &fill_order {
        if p == 0 || preserved[p - 1] {
            route_starts[p] = true;
        }
    }
    PreservationPlan {
        preserved,
        fill_order,
        route_starts,
    }
}

/// Trail and heuristic terms that stay fixed for a whole run.
struct Weights {
    eta_beta: Vec<f64>,
    /// `base^alpha * eta^beta`, the weight of an edge no member uses.
    base_choice: Vec<f64>,
}

impl Weights {
    fn new(instance: &Instance, config: &PartialConfig) -> Self {
        let eta_beta = Heuristic::new(instance).powered(config.beta);
        let base = weight_pow(config.base_pheromone, config.alpha);
        let base_choice = eta_beta.iter().map(|e| base * e).collect();
        Weights { eta_beta, base_choice }
    }
}

/// Read-only reconstruction inputs shared by all ants in an iteration.
struct Trails<'a> {
    population: Option<&'a Population>,
    ratios: Vec<f64>,
    weights: &'a Weights,
    alpha: f64,
    base: f64,
}

impl<'a> Trails<'a> {
    fn new(population: Option<&'a Population>, weights: &'a Weights, config: &PartialConfig) -> Self {
        Trails {
            ratios: population.map(|p| p.quality_ratios()).unwrap_or_default(),
            population,
            weights,
            alpha: config.alpha,
            base: config.base_pheromone,
        }
    }
}

#[derive(Default)]
struct Scratch {
    bonus: Vec<f64>,
    vehicles: Vec<usize>,
    jobs: Vec<usize>,
    weights: Vec<f64>,
    chunk_sums: Vec<f64>,
}

/// Copies the preserved positions of `l_best` and fills the free ones with
/// the random proportional rule over reconstructed trails. Returns the new
/// solution and the number of probabilistic selections made.
pub fn partial_construct<R: Rng + ?Sized>(
    instance: &Instance,
    l_best: &Solution,
    plan: &PreservationPlan,
    population: Option<&Population>,
    config: &PartialConfig,
    rng: &mut R,
) -> (Solution, usize) {
    let weights = Weights::new(instance, config);
    let trails = Trails::new(population, &weights, config);
    fill(instance, l_best, plan, &trails, rng, &mut Scratch::default())
}

fn fill<R: Rng + ?Sized>(
    instance: &Instance,
    l_best: &Solution,
    plan: &PreservationPlan,
    trails: &Trails<'_>,
    rng: &mut R,
    scratch: &mut Scratch,
) -> (Solution, usize) {
    const EMPTY: usize = usize::MAX;
    let n = l_best.len();
    let src = l_best.order();
    let mut order: Vec<usize> = (0..n)
        .map(|p| if plan.preserved[p] { src[p] } else { EMPTY })
        .collect();
    let Scratch {
        bonus,
        vehicles,
        jobs,
        weights,
        chunk_sums,
    } = scratch;
    vehicles.clear();
    jobs.clear();
    for &p in &plan.fill_order {
        let v = src[p];
        if instance.is_vehicle(v) {
            vehicles.push(v);
        } else {
            jobs.push(v);
        }
    }
    let mut anchors_left = plan.fill_order.iter().filter(|&&p| plan.route_starts[p]).count();
    debug_assert!(vehicles.len() >= anchors_left);

    bonus.clear();
    bonus.resize(n, 0.0);
    let mut decisions = 0;

    for &p in &plan.fill_order {
        let anchor = plan.route_starts[p];
        if anchor {
            anchors_left -= 1;
        }
        let jobs_only = !anchor && vehicles.len() <= anchors_left;
        // Candidates are the vehicles followed by the jobs, minus whichever
        // group is excluded at this position.
        let use_vehicles = !jobs_only;
        let use_jobs = !anchor;
        let nv = if use_vehicles { vehicles.len() } else { 0 };
        let total = nv + if use_jobs { jobs.len() } else { 0 };

        let prev = order[(p + n - 1) % n];
        let k = if prev == EMPTY {
            rng.random_range(0..total)
        } else {
            if let Some(pop) = trails.population {
                for (succ, r) in pop.successors.iter().zip(&trails.ratios) {
                    bonus[succ[prev]] += r;
                }
            }
            let row = prev * n..(prev + 1) * n;
            let base_row = &trails.weights.base_choice[row.clone()];
            let eta_row = &trails.weights.eta_beta[row];
            let weight = |j: usize| {
                let b = bonus[j];
                if b == 0.0 {
                    base_row[j]
                } else {
                    weight_pow(trails.base + b, trails.alpha) * eta_row[j]
                }
            };
            weights.clear();
            if use_vehicles {
                weights.extend(vehicles.iter().map(|&j| weight(j)));
            }
            if use_jobs {
                weights.extend(jobs.iter().map(|&j| weight(j)));
            }
            if let Some(pop) = trails.population {
                for succ in &pop.successors {
                    bonus[succ[prev]] = 0.0;
                }
            }
            spin(weights, chunk_sums, rng)
        };
        decisions += 1;
        order[p] = if k < nv {
            vehicles.swap_remove(k)
        } else {
            jobs.swap_remove(k - nv)
        };
    }
    (Solution::from_order_unchecked(order), decisions)
}

/// Counters describing how much decision making a run needed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecisionStats {
    /// Constructions after initialization, escapes included.
    pub constructions: u64,
    pub escapes: u64,
    /// Selections made in non-escape constructions.
    pub decisions: u64,
    pub escape_decisions: u64,
    /// Largest selection count of any single non-escape construction.
    pub max_decisions: usize,
}

#[derive(Debug, Clone)]
pub struct PartialOutcome {
    pub best: Solution,
    pub evaluation: Evaluation,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub stats: DecisionStats,
    pub population: Population,
}

struct Attempt {
    solution: Solution,
    score: Score,
    decisions: usize,
    escaped: bool,
}

fn attempt(
    instance: &Instance,
    memory: &AntMemory,
    trails: &Trails<'_>,
    config: &PartialConfig,
    rng: &mut SolverRng,
    scratch: &mut Scratch,
) -> Attempt {
    let escaped = config.escape_probability > 0.0 && rng.random_bool(config.escape_probability);
    let limit = if escaped { 1.0 } else { config.modification_limit };
    let plan = match config.mode {
        PreservationMode::Segment => plan_segment(&memory.l_best, limit, rng),
        PreservationMode::Blocks => plan_blocks(&memory.l_best, instance, limit, rng),
    };
    let (solution, decisions) = fill(instance, &memory.l_best, &plan, trails, rng, scratch);
    let score = score_order(instance, solution.order());
    Attempt {
        solution,
        score,
        decisions,
        escaped,
    }
}

pub fn run_partial(instance: &Instance, config: &PartialConfig) -> Result<PartialOutcome> {
    run_partial_observed(instance, config, |_, _| {})
}

/// [`run_partial`] with a callback after every iteration, receiving the
/// iteration number and the population.
pub fn run_partial_observed<F>(
    instance: &Instance,
    config: &PartialConfig,
    mut observe: F,
) -> Result<PartialOutcome>
where
    F: FnMut(usize, &Population),
{
    config.validate()?;
    let n = instance.num_vertices();
    let weights = Weights::new(instance, config);
    let placeholder = Solution::from_order_unchecked((0..n).collect());
    let fresh = PreservationPlan::rebuild_all(n);

    let initial = {
        let trails = Trails::new(None, &weights, config);
        (0..config.ants)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, ant| {
                let mut rng = stream(config.seed, Purpose::Partial, ant as u64, 0);
                let (l_best, _) = fill(instance, &placeholder, &fresh, &trails, &mut rng, scratch);
                let score = score_order(instance, l_best.order());
                AntMemory { l_best, score }
            })
            .collect()
    };
    let mut population = Population::new(initial)?;
    let mut evaluations = config.ants as u64;
    let mut stats = DecisionStats::default();
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(TracePoint {
        iteration: 0,
        evaluations,
        best: population.best().score,
    });
    observe(0, &population);

    for iteration in 1..=config.iterations {
        let attempts: Vec<Attempt> = {
            let trails = Trails::new(Some(&population), &weights, config);
            population
                .memories
                .par_iter()
                .enumerate()
                .map_init(Scratch::default, |scratch, (ant, memory)| {
                    let mut rng = stream(config.seed, Purpose::Partial, ant as u64, iteration as u64);
                    attempt(instance, memory, &trails, config, &mut rng, scratch)
                })
                .collect()
        };
        evaluations += attempts.len() as u64;
        for (ant, a) in attempts.into_iter().enumerate() {
            stats.constructions += 1;
            if a.escaped {
                stats.escapes += 1;
                stats.escape_decisions += a.decisions as u64;
            } else {
                stats.decisions += a.decisions as u64;
                stats.max_decisions = stats.max_decisions.max(a.decisions);
            }
            population.offer(ant, a.solution, a.score);
        }
        trace.push(TracePoint {
            iteration,
            evaluations,
            best: population.best().score,
        });
        observe(iteration, &population);
    }

    let best = population.best().l_best.clone();
    let evaluation = evaluate(instance, &best)?;
    Ok(PartialOutcome {
        best,
        evaluation,
        trace,
        evaluations,
        stats,
        population,
    })
}
