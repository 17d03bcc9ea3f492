//! Differential evolution (best/1/bin by default) over a bounded box,
//! minimizing a scalar objective.
//!
//! # Random stream
//!
//! A run draws every random number from one ChaCha8 generator seeded with
//! [`DeConfig::seed`], in this order:
//!
//! 1. initialization: one uniform `[0, 1)` draw per individual per
//!    dimension, individuals in index order;
//! 2. per generation: one draw for the scale factor `F` (uniform over
//!    [`DeConfig::mutation`]), then for each target in index order the
//!    mutation indices (rejection-sampled), the crossover index `k_rand`, and
//!    one uniform draw per dimension for the crossover test.
//!
//! Both updating modes consume the stream identically, so they differ only in
//! when survivors become visible.

use std::error::Error as StdError;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("population of {size} cannot supply {needed} distinct vectors besides the target")]
    PopulationTooSmall { size: usize, needed: usize },
    #[error("individual has no fitness")]
    Unevaluated,
    #[error("objective returned NaN at {genome:?}")]
    NanFitness { genome: Vec<f64> },
    #[error("objective failed at {genome:?}")]
    Objective {
        genome: Vec<f64>,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, EvolveError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(EvolveError::InvalidBounds(format!(
                "{} lower and {} upper values",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(EvolveError::InvalidBounds(format!("dimension {d}: [{lo}, {hi}]")));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// Bounds from `(lower, upper)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, EvolveError> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, genome: &mut [f64]) {
        for ((g, lo), hi) in genome.iter_mut().zip(&self.lower).zip(&self.upper) {
            *g = g.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, genome: &[f64]) -> bool {
        genome.len() == self.dim()
            && genome
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(g, (lo, hi))| (lo..=hi).contains(&g))
    }

    /// Maps a point of the unit cube onto the box: `lower + u·(upper − lower)`.
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Base vector is the current best individual.
    Best1Bin,
    /// Base vector is a third random individual.
    Rand1Bin,
}

impl Strategy {
    fn vectors_needed(self) -> usize {
        match self {
            Strategy::Best1Bin => 2,
            Strategy::Rand1Bin => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Updating {
    /// A surviving trial replaces its target at once and is visible to the
    /// rest of the generation.
    Immediate,
    /// Trials of a generation are built first, evaluated in parallel, then
    /// selected together.
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub pop_size: usize,
    pub crossover_prob: f64,
    /// Range the scale factor `F` is redrawn from each generation.
    pub mutation: (f64, f64),
    pub generations: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub updating: Updating,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            pop_size: 15,
            crossover_prob: 0.7,
            mutation: (0.5, 1.0),
            generations: 100,
            seed: 0,
            strategy: Strategy::Best1Bin,
            updating: Updating::Immediate,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if self.pop_size < 4 {
            return Err(EvolveError::InvalidConfig(format!(
                "population size {} is below 4",
                self.pop_size
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(EvolveError::InvalidConfig(format!(
                "crossover probability {} is outside [0, 1]",
                self.crossover_prob
            )));
        }
        let (lo, hi) = self.mutation;
        if !(0.0 <= lo && lo <= hi && hi <= 2.0) {
            return Err(EvolveError::InvalidConfig(format!(
                "mutation range ({lo}, {hi}) must satisfy 0 ≤ low ≤ high ≤ 2"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genome: Vec<f64>) -> Self {
        Individual { genome, fitness: None }
    }

    pub fn evaluated(genome: Vec<f64>, fitness: f64) -> Self {
        Individual {
            genome,
            fitness: Some(fitness),
        }
    }

    fn checked_fitness(&self) -> Result<f64, EvolveError> {
        match self.fitness {
            None => Err(EvolveError::Unevaluated),
            Some(f) if f.is_nan() => Err(EvolveError::NanFitness {
                genome: self.genome.clone(),
            }),
            Some(f) => Ok(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    /// Index of the best evaluated member (0 before evaluation).
    pub best: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best_individual(&self) -> &Individual {
        &self.members[self.best]
    }

    /// Recomputes `best` as the first member with the lowest fitness.
    fn refresh_best(&mut self) {
        let key = |m: &Individual| m.fitness.unwrap_or(f64::INFINITY);
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate() {
            if key(m) < key(&self.members[best]) {
                best = i;
            }
        }
        self.best = best;
    }
}

/// Result of one objective evaluation. Only `fitness` drives the search; the
/// other fields are carried into the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub accuracy: Option<f64>,
    pub n_features: Option<usize>,
}

impl From<f64> for Evaluation {
    fn from(fitness: f64) -> Self {
        Evaluation {
            fitness,
            accuracy: None,
            n_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation counter.
    pub evaluation: usize,
    pub genome: Vec<f64>,
    pub fitness: f64,
    pub accuracy: Option<f64>,
    pub n_features: Option<usize>,
}

/// Every objective evaluation of a run, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Running minimum of the recorded fitness values.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.fitness);
                Some(*best)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, genome: &[f64], eval: &Evaluation) {
        self.records.push(TraceRecord {
            evaluation: self.records.len() + 1,
            genome: genome.to_vec(),
            fitness: eval.fitness,
            accuracy: eval.accuracy,
            n_features: eval.n_features,
        });
    }
}

/// Random initial population (unevaluated) drawn from `rng`.
pub fn initialize_population_with<R: Rng>(bounds: &Bounds, pop_size: usize, rng: &mut R) -> Population {
    let members = (0..pop_size)
        .map(|_| {
            let unit: Vec<f64> = (0..bounds.dim()).map(|_| rng.gen::<f64>()).collect();
            Individual::new(bounds.from_unit(&unit))
        })
        .collect();
    Population { members, best: 0 }
}

/// Random initial population seeded from `config.seed`.
pub fn initialize_population(bounds: &Bounds, config: &DeConfig) -> Result<Population, EvolveError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(initialize_population_with(bounds, config.pop_size, &mut rng))
}

/// `base + F·(a_r2 − a_r1)`
pub fn difference_vector(base: &[f64], a_r1: &[f64], a_r2: &[f64], f: f64) -> Vec<f64> {
    base.iter()
        .zip(a_r1.iter().zip(a_r2))
        .map(|(b, (x1, x2))| b + f * (x2 - x1))
        .collect()
}

fn draw_distinct<R: Rng>(rng: &mut R, n: usize, exclude: usize, count: usize) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let r = rng.gen_range(0..n);
        if r != exclude && !picked.contains(&r) {
            picked.push(r);
        }
    }
    picked
}

/// Donor vector for `target`, clamped to `bounds`.
pub fn mutate<R: Rng>(
    population: &Population,
    target: usize,
    f: f64,
    rng: &mut R,
    strategy: Strategy,
    bounds: &Bounds,
) -> Result<Vec<f64>, EvolveError> {
    let needed = strategy.vectors_needed();
    if population.len() < needed + 1 {
        return Err(EvolveError::PopulationTooSmall {
            size: population.len(),
            needed,
        });
    }
    let picks = draw_distinct(rng, population.len(), target, needed);
    let genome = |i: usize| population.members[i].genome.as_slice();
    let base = match strategy {
        Strategy::Best1Bin => genome(population.best),
        Strategy::Rand1Bin => genome(picks[2]),
    };
    let mut donor = difference_vector(base, genome(picks[0]), genome(picks[1]), f);
    bounds.clamp(&mut donor);
    Ok(donor)
}

/// Binomial crossover with explicit random inputs: dimension `d` comes from
/// the donor when `draws[d] ≤ rp` or `d == k_rand`.
pub fn crossover_with_draws(target: &[f64], donor: &[f64], rp: f64, k_rand: usize, draws: &[f64]) -> Vec<f64> {
    target
        .iter()
        .zip(donor)
        .zip(draws)
        .enumerate()
        .map(|(d, ((t, m), u))| if *u <= rp || d == k_rand { *m } else { *t })
        .collect()
}

/// # Panics
/// If `target` and `donor` differ in length.
pub fn crossover_binomial<R: Rng>(target: &[f64], donor: &[f64], rp: f64, rng: &mut R) -> Vec<f64> {
    assert_eq!(target.len(), donor.len(), "crossover of vectors with different dimensions");
    let k_rand = rng.gen_range(0..target.len());
    let draws: Vec<f64> = (0..target.len()).map(|_| rng.gen::<f64>()).collect();
    crossover_with_draws(target, donor, rp, k_rand, &draws)
}

/// Keeps the trial only if it is strictly better than the target.
pub fn select_greedy(target: Individual, trial: Individual) -> Result<Individual, EvolveError> {
    let f_target = target.checked_fitness()?;
    let f_trial = trial.checked_fitness()?;
    Ok(if f_trial < f_target { trial } else { target })
}

fn evaluate<F, E>(objective: &F, genome: &[f64]) -> Result<Evaluation, EvolveError>
where
    F: Fn(&[f64]) -> Result<Evaluation, E>,
    E: StdError + Send + Sync + 'static,
{
    let eval = objective(genome).map_err(|e| EvolveError::Objective {
        genome: genome.to_vec(),
        source: Box::new(e),
    })?;
    if eval.fitness.is_nan() {
        return Err(EvolveError::NanFitness {
            genome: genome.to_vec(),
        });
    }
    Ok(eval)
}

/// Outcome of [`optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub best: Individual,
    pub trace: Trace,
    pub population: Population,
}

/// Runs `config.generations` generations of mutation, crossover, evaluation
/// and greedy selection, starting from a seeded random population.
pub fn optimize<F, E>(objective: F, bounds: &Bounds, config: &DeConfig) -> Result<DeResult, EvolveError>
where
    F: Fn(&[f64]) -> Result<Evaluation, E> + Sync,
    E: StdError + Send + Sync + 'static,
{
    config.validate()?;
    let needed = config.strategy.vectors_needed();
    if config.pop_size < needed + 1 {
        return Err(EvolveError::PopulationTooSmall {
            size: config.pop_size,
            needed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Trace::default();
    let mut pop = initialize_population_with(bounds, config.pop_size, &mut rng);
    for member in &mut pop.members {
        let eval = evaluate(&objective, &member.genome)?;
        trace.push(&member.genome, &eval);
        member.fitness = Some(eval.fitness);
    }
    pop.refresh_best();

    let (f_lo, f_hi) = config.mutation;
    for _ in 0..config.generations {
        let f = if f_hi > f_lo { rng.gen_range(f_lo..f_hi) } else { f_lo };
        match config.updating {
            Updating::Immediate => {
                for i in 0..pop.len() {
                    let donor = mutate(&pop, i, f, &mut rng, config.strategy, bounds)?;
                    let trial = crossover_binomial(&pop.members[i].genome, &donor, config.crossover_prob, &mut rng);
                    let eval = evaluate(&objective, &trial)?;
                    trace.push(&trial, &eval);
                    let challenger = Individual::evaluated(trial, eval.fitness);
                    let incumbent = pop.members[i].clone();
                    let survivor = select_greedy(incumbent, challenger)?;
                    pop.members[i] = survivor;
                    if pop.members[i].fitness < pop.members[pop.best].fitness {
                        pop.best = i;
                    }
                }
            }
            Updating::Deferred => {
                let mut trials = Vec::with_capacity(pop.len());
                for i in 0..pop.len() {
                    let donor = mutate(&pop, i, f, &mut rng, config.strategy, bounds)?;
                    trials.push(crossover_binomial(&pop.members[i].genome, &donor, config.crossover_prob, &mut rng));
                }
                let evals: Vec<Result<Evaluation, EvolveError>> =
                    trials.par_iter().map(|t| evaluate(&objective, t)).collect();
                for (i, (trial, eval)) in trials.into_iter().zip(evals).enumerate() {
                    let eval = eval?;
                    trace.push(&trial, &eval);
                    let incumbent = pop.members[i].clone();
                    pop.members[i] = select_greedy(incumbent, Individual::evaluated(trial, eval.fitness))?;
                }
                pop.refresh_best();
            }
        }
    }
    Ok(DeResult {
        best: pop.best_individual().clone(),
        trace,
        population: pop,
    })
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Best1Bin => "best1bin",
            Strategy::Rand1Bin => "rand1bin",
        })
    }
}
