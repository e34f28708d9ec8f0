//! Steady-state evolutionary loop.
//!
//! Each step creates one offspring: with probability `p_x` two parents are
//! selected and recombined, otherwise one parent is selected and mutated.
//! The offspring is evaluated and added to the population. The creation
//! counter includes the initial population.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::pairing::{sample_pair, CorrelatedSampler, PairMode};
use crate::population::{DeletionPolicy, Individual, Population};
use crate::problems::make_tsp_instance;
use crate::problems::tsp::TspProblem;
use crate::problems::{
    Continuous2d, Deceptive2d, DeceptiveNd, Line, Problem, ProblemSpec, Target, TspInstance, TspMove, TspSource,
};
use crate::rng::RandomSource;
use crate::selection::SelectionScheme;

/// Capacity of bounded populations when none is configured.
pub const DEFAULT_CAPACITY: usize = 100;

/// Upper bound on the number of points kept in a best-fitness curve.
pub const CURVE_POINTS: usize = 10_000;

/// How parents are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Random search: every offspring is a fresh random genome.
    Random,
    Select(SelectionScheme),
}

impl Strategy {
    pub fn scheme(&self) -> Option<SelectionScheme> {
        match self {
            Strategy::Random => None,
            Strategy::Select(s) => Some(*s),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Random => f.write_str("random"),
            Strategy::Select(s) => s.fmt(f),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(Strategy::Random),
            other => Ok(Strategy::Select(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub strategy: Strategy,
    pub pair_mode: PairMode,
    /// Probability that a step recombines two parents.
    pub crossover_rate: f64,
    /// Maximum number of created individuals, initial population included.
    pub budget: u64,
    /// `None` is the pure model: nothing is ever deleted.
    pub capacity: Option<usize>,
    pub deletion: DeletionPolicy,
    pub init_size: usize,
    pub seed: u64,
    pub target: Target,
    pub stop_on_hit: bool,
    /// Continuous problems: single FUSS selections use the ε̂ → 0 limit.
    pub zero_limit: bool,
    /// Also mutate offspring produced by crossover.
    pub mutate_after_crossover: bool,
    pub tsp_move: TspMove,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Configuration with the documented defaults: FUSS runs the pure model
    /// with most-occupied deletion if bounded; other strategies keep
    /// [`DEFAULT_CAPACITY`] individuals and delete a uniformly random member.
    pub fn new(problem: ProblemSpec, strategy: Strategy, seed: u64) -> Self {
        let fuss = strategy == Strategy::Select(SelectionScheme::Fuss);
        RunConfig {
            budget: default_budget(&problem),
            target: problem.default_target(),
            problem,
            strategy,
            pair_mode: PairMode::Independent,
            crossover_rate: 0.0,
            capacity: if fuss { None } else { Some(DEFAULT_CAPACITY) },
            deletion: if fuss {
                DeletionPolicy::MostOccupied
            } else {
                DeletionPolicy::Random
            },
            init_size: 1,
            seed,
            stop_on_hit: true,
            zero_limit: false,
            mutate_after_crossover: false,
            tsp_move: TspMove::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!(
                "p_x must be in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        if self.capacity == Some(0) {
            return Err(Error::Config("capacity must be >= 1".into()));
        }
        if self.init_size == 0 {
            return Err(Error::Config("init_size must be >= 1".into()));
        }
        if let Some(scheme) = self.strategy.scheme() {
            scheme.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.problem.is_tsp() && self.crossover_rate > 0.0 {
            return Err(Error::Config("TSP problems have no crossover; set p_x=0".into()));
        }
        self.problem.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Default creation budget: `50/Δ²` in two dimensions, `20/Δ^D` above,
/// `100·(N+1)²` on the line and `10⁵` for TSP.
pub fn default_budget(problem: &ProblemSpec) -> u64 {
    let b = match problem {
        ProblemSpec::Deceptive2d { width } | ProblemSpec::Cont2d { width } => 50.0 / (width * width),
        ProblemSpec::DeceptiveNd { dim, width } if *dim == 2 => 50.0 / (width * width),
        ProblemSpec::DeceptiveNd { dim, width } => 20.0 / width.powi(*dim as i32),
        ProblemSpec::Line { top } => 100.0 * ((top + 1) as f64).powi(2),
        ProblemSpec::Tsp(_) => 1e5,
    };
    b.ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub fitness: f64,
    pub count: usize,
    pub fraction: f64,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// The configuration as `key=value` pairs.
    pub config: std::collections::BTreeMap<String, String>,
    pub seed: u64,
    /// Creation index (1-based) of the first individual meeting the target.
    pub first_hit_time: Option<u64>,
    pub created: u64,
    pub best_fitness: Option<f64>,
    /// `[creation_index, best_fitness]` at each improvement.
    pub best_fitness_curve: Vec<(u64, f64)>,
    pub final_histogram: Vec<HistogramRow>,
    /// Correlated pair selections that fell back to dependent pairs.
    pub pair_fallbacks: u64,
}

/// Runs one steady-state EA as configured.
pub fn run_steady_state(config: &RunConfig) -> Result<RunTrace> {
    config.validate()?;
    match &config.problem {
        ProblemSpec::Deceptive2d { width } => run_problem(&Deceptive2d::new(*width)?, config),
        ProblemSpec::DeceptiveNd { dim, width } => run_problem(&DeceptiveNd::new(*dim, *width)?, config),
        ProblemSpec::Cont2d { width } => run_problem(&Continuous2d::new(*width)?, config),
        ProblemSpec::Line { top } => run_problem(&Line::new(*top)?, config),
        ProblemSpec::Tsp(source) => {
            let instance = load_tsp(source)?;
            run_problem(&TspProblem::new(Arc::new(instance), config.tsp_move)?, config)
        }
    }
}

pub fn load_tsp(source: &TspSource) -> Result<TspInstance> {
    match source {
        TspSource::File(path) => TspInstance::load(path),
        TspSource::Random { cities, seed } => make_tsp_instance(*cities, true, *seed),
    }
}

/// Runs the loop on an already constructed problem. `config.problem` is
/// only echoed.
pub fn run_problem<P: Problem>(problem: &P, config: &RunConfig) -> Result<RunTrace> {
    config.validate()?;
    if config.crossover_rate > 0.0 && !problem.supports_crossover() {
        return Err(Error::Config("problem has no crossover operator; set p_x=0".into()));
    }
    let mut rng = RandomSource::new(config.seed);
    let scale = match problem.scale() {
        FitnessScale::Continuous { .. } => FitnessScale::Continuous {
            zero_limit: config.zero_limit,
        },
        discrete => discrete,
    };
    let mut pop: Population<P::Genome> = match config.capacity {
        Some(cap) => Population::bounded(cap, config.deletion)?,
        None => Population::new(),
    };
    let mut sampler = CorrelatedSampler::new();
    let mut recorder = Recorder::new(config.target);
    let mut fallbacks = 0u64;

    let initial = config.init_size.min(config.budget as usize);
    for _ in 0..initial {
        let genome = problem.initial_genome(&mut rng);
        let fitness = problem.evaluate(&genome)?;
        pop.add(Individual::new(genome, fitness), &mut rng);
        recorder.observe(pop.created(), fitness);
    }

    while pop.created() < config.budget && !(config.stop_on_hit && recorder.hit.is_some()) {
        let genome = match config.strategy {
            Strategy::Random => problem.random_genome(&mut rng),
            Strategy::Select(scheme) => {
                if config.crossover_rate > 0.0 && rng.bernoulli(config.crossover_rate) {
                    let (first, second) = if scheme == SelectionScheme::Fuss {
                        let pair = sample_pair(&pop, config.pair_mode, scale, &mut sampler, &mut rng)?;
                        fallbacks += u64::from(pair.fell_back);
                        (pair.first, pair.second)
                    } else {
                        (
                            scheme.select(&pop, scale, &mut rng)?,
                            scheme.select(&pop, scale, &mut rng)?,
                        )
                    };
                    let child = problem.crossover(first.genome(), second.genome(), &mut rng)?;
                    if config.mutate_after_crossover {
                        problem.mutate(&child, &mut rng)
                    } else {
                        child
                    }
                } else {
                    let parent = scheme.select(&pop, scale, &mut rng)?;
                    problem.mutate(parent.genome(), &mut rng)
                }
            }
        };
        let fitness = problem.evaluate(&genome)?;
        pop.add(Individual::new(genome, fitness), &mut rng);
        recorder.observe(pop.created(), fitness);
    }

    let final_histogram = pop
        .occupation_histogram()
        .into_iter()
        .map(|(f, share)| HistogramRow {
            fitness: f.value(),
            count: share.count,
            fraction: share.fraction,
        })
        .collect();
    Ok(RunTrace {
        config: crate::config::run_config_pairs(config),
        seed: config.seed,
        first_hit_time: recorder.hit,
        created: pop.created(),
        best_fitness: recorder.best,
        best_fitness_curve: decimate(recorder.curve, CURVE_POINTS),
        final_histogram,
        pair_fallbacks: fallbacks,
    })
}

struct Recorder {
    target: Target,
    hit: Option<u64>,
    best: Option<f64>,
    curve: Vec<(u64, f64)>,
}

impl Recorder {
    fn new(target: Target) -> Self {
        Recorder {
            target,
            hit: None,
            best: None,
            curve: Vec::new(),
        }
    }

    fn observe(&mut self, created: u64, fitness: f64) {
        if self.best.is_none_or(|b| fitness > b) {
            self.best = Some(fitness);
            self.curve.push((created, fitness));
        }
        if self.hit.is_none() && self.target.is_hit(fitness) {
            self.hit = Some(created);
        }
    }
}

/// Keeps at most `limit` evenly spaced points, always including the first
/// and last.
pub fn decimate<T: Copy>(points: Vec<T>, limit: usize) -> Vec<T> {
    let n = points.len();
    if n <= limit || limit < 2 {
        return points;
    }
    (0..limit)
        .map(|k| points[(k * (n - 1) + (limit - 1) / 2) / (limit - 1)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(problem: &str, strategy: &str, seed: u64) -> RunConfig {
        RunConfig::new(problem.parse().unwrap(), strategy.parse().unwrap(), seed)
    }

    #[test]
    fn zero_budget_creates_nothing() {
        let mut c = config("deceptive2d:0.2", "fuss", 1);
        c.budget = 0;
        let trace = run_steady_state(&c).unwrap();
        assert_eq!(trace.created, 0);
        assert_eq!(trace.first_hit_time, None);
        assert!(trace.best_fitness_curve.is_empty());
        assert!(trace.final_histogram.is_empty());
    }

    #[test]
    fn replay_is_identical() {
        let mut c = config("deceptive2d:0.1", "fuss", 9);
        c.crossover_rate = 0.5;
        c.pair_mode = PairMode::Correlated;
        assert_eq!(run_steady_state(&c).unwrap(), run_steady_state(&c).unwrap());
        let other = RunConfig { seed: 10, ..c.clone() };
        assert_ne!(run_steady_state(&c).unwrap(), run_steady_state(&other).unwrap());
    }

    #[test]
    fn invalid_crossover_rate() {
        let mut c = config("deceptive2d:0.2", "fuss", 1);
        c.crossover_rate = 1.5;
        assert!(matches!(run_steady_state(&c), Err(Error::Config(_))));
        let mut t = config("tsp:random:8:1", "fuss", 1);
        t.crossover_rate = 0.5;
        assert!(matches!(run_steady_state(&t), Err(Error::Config(_))));
    }

    #[test]
    fn hit_time_and_stop() {
        let c = config("line:5", "tournament:2:1", 3);
        let trace = run_steady_state(&c).unwrap();
        let t = trace.first_hit_time.unwrap();
        assert_eq!(trace.created, t);
        assert_eq!(trace.best_fitness, Some(5.0));
        assert_eq!(*trace.best_fitness_curve.last().unwrap(), (t, 5.0));
    }

    #[test]
    fn pure_model_keeps_everything() {
        let mut c = config("deceptive2d:0.2", "fuss", 4);
        c.stop_on_hit = false;
        c.budget = 500;
        c.init_size = 10;
        let trace = run_steady_state(&c).unwrap();
        let total: usize = trace.final_histogram.iter().map(|r| r.count).sum();
        assert_eq!(total, 500);
    }

    #[test]
    fn bounded_population_respects_capacity() {
        let mut c = config("deceptive2d:0.2", "truncation:0.5", 4);
        c.stop_on_hit = false;
        c.budget = 500;
        let trace = run_steady_state(&c).unwrap();
        let total: usize = trace.final_histogram.iter().map(|r| r.count).sum();
        assert_eq!(total, DEFAULT_CAPACITY);
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let pts: Vec<u32> = (0..100_000).collect();
        let d = decimate(pts, 10_000);
        assert_eq!(d.len(), 10_000);
        assert_eq!(d[0], 0);
        assert_eq!(*d.last().unwrap(), 99_999);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(decimate(vec![1, 2, 3], 10), vec![1, 2, 3]);
    }
}
