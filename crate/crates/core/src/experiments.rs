//! First-hit-time sweeps, scaling fits, one-shot selection transforms and
//! the occupation and TSP experiments.

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::engine::{load_tsp, run_problem, run_steady_state, RunConfig, Strategy};
use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::pairing::PairMode;
use crate::population::{DeletionPolicy, Individual, Population};
use crate::problems::tsp::TspProblem;
use crate::problems::{ProblemSpec, Target, TspMove, TspSource};
use crate::rng::{derive_seed, RandomSource};
use crate::selection::{fuss_select, SelectionScheme};

/// Creation budget of each trial in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Per-problem default of the engine.
    Default,
    Fixed(u64),
    /// `factor / Δ^exponent`, rounded up.
    Scaled {
        factor: f64,
        exponent: f64,
    },
}

impl Budget {
    pub fn resolve(&self, problem: &ProblemSpec) -> Result<u64> {
        match *self {
            Budget::Default => Ok(crate::engine::default_budget(problem)),
            Budget::Fixed(b) => Ok(b),
            Budget::Scaled { factor, exponent } => {
                let delta = problem
                    .scaling_delta()
                    .ok_or_else(|| Error::Config(format!("{problem} has no Δ for a scaled budget")))?;
                Ok((factor / delta.powf(exponent)).ceil() as u64)
            }
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Default => f.write_str("default"),
            Budget::Fixed(b) => write!(f, "{b}"),
            Budget::Scaled { factor, exponent } => write!(f, "{factor}/delta^{exponent}"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "default" {
            return Ok(Budget::Default);
        }
        if let Some((factor, rest)) = s.split_once('/') {
            let exponent = match rest.trim() {
                "delta" => "1",
                r => r
                    .strip_prefix("delta^")
                    .ok_or_else(|| Error::Parse(format!("budget '{s}' must look like <c>/delta^<p>")))?,
            };
            let factor: f64 = factor
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("malformed budget factor '{factor}'")))?;
            let exponent: f64 = exponent
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("malformed budget exponent '{exponent}'")))?;
            if !(factor > 0.0 && factor.is_finite() && exponent.is_finite()) {
                return Err(Error::Parse(format!("budget '{s}' must have a positive factor")));
            }
            return Ok(Budget::Scaled { factor, exponent });
        }
        let b: u64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("budget '{s}' is neither an integer nor <c>/delta^<p>")))?;
        if b == 0 {
            return Err(Error::Parse("budget must be >= 1".into()));
        }
        Ok(Budget::Fixed(b))
    }
}

/// Population bound override for every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    Unbounded,
    Bounded(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// One entry per problem cell, e.g. the same family at several Δ.
    pub problems: Vec<ProblemSpec>,
    pub strategies: Vec<Strategy>,
    pub pair_mode: PairMode,
    pub crossover_rate: f64,
    pub trials: usize,
    pub budget: Budget,
    /// `None` keeps the per-strategy default.
    pub capacity: Option<Capacity>,
    /// `None` keeps the per-strategy default.
    pub deletion: Option<DeletionPolicy>,
    pub init_size: usize,
    pub target: Option<Target>,
    pub zero_limit: bool,
    pub mutate_after_crossover: bool,
    pub tsp_move: TspMove,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(problems: Vec<ProblemSpec>, strategies: Vec<Strategy>, trials: usize, seed: u64) -> Self {
        SweepSpec {
            problems,
            strategies,
            pair_mode: PairMode::Independent,
            crossover_rate: 0.0,
            trials,
            budget: Budget::Default,
            capacity: None,
            deletion: None,
            init_size: 1,
            target: None,
            zero_limit: false,
            mutate_after_crossover: false,
            tsp_move: TspMove::default(),
            seed,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.problems.is_empty() || self.strategies.is_empty() {
            return Err(Error::Config(
                "a sweep needs at least one problem and one scheme".into(),
            ));
        }
        for problem in &self.problems {
            if self.budget.resolve(problem)? == 0 {
                return Err(Error::Config(format!("budget for {problem} is 0")));
            }
        }
        for (p, s) in self.cells() {
            self.cell_config(p, s, 0)?.validate()?;
        }
        Ok(())
    }

    /// Cells in (problem, strategy) order; the position is the cell index
    /// used for seed derivation.
    pub fn cells(&self) -> impl Iterator<Item = (&ProblemSpec, Strategy)> + '_ {
        self.problems
            .iter()
            .flat_map(move |p| self.strategies.iter().map(move |s| (p, *s)))
    }

    pub fn cell_config(&self, problem: &ProblemSpec, strategy: Strategy, seed: u64) -> Result<RunConfig> {
        let mut c = RunConfig::new(problem.clone(), strategy, seed);
        c.pair_mode = self.pair_mode;
        c.crossover_rate = self.crossover_rate;
        c.budget = self.budget.resolve(problem)?;
        match self.capacity {
            Some(Capacity::Unbounded) => c.capacity = None,
            Some(Capacity::Bounded(n)) => c.capacity = Some(n),
            None => {}
        }
        if let Some(d) = self.deletion {
            c.deletion = d;
        }
        c.init_size = self.init_size;
        if let Some(t) = self.target {
            c.target = t;
        }
        c.zero_limit = self.zero_limit;
        c.mutate_after_crossover = self.mutate_after_crossover;
        c.tsp_move = self.tsp_move;
        Ok(c)
    }
}

/// Median of a cell where censored trials count as `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Median {
    Value(f64),
    /// Half or more of the trials did not hit within the budget.
    Censored,
}

impl Median {
    pub fn value(&self) -> Option<f64> {
        match self {
            Median::Value(v) => Some(*v),
            Median::Censored => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub problem: ProblemSpec,
    pub strategy: Strategy,
    pub pair_mode: PairMode,
    pub crossover_rate: f64,
    pub budget: u64,
    /// First-hit time per trial; `None` when the budget ran out.
    pub times: Vec<Option<u64>>,
}

impl CellResult {
    pub fn trials(&self) -> usize {
        self.times.len()
    }

    pub fn censored(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    pub fn median(&self) -> Median {
        median_censored(&self.times)
    }

    /// Mean with censored trials counted at the budget (a lower bound).
    pub fn mean(&self) -> f64 {
        let sum: f64 = self.times.iter().map(|t| t.unwrap_or(self.budget) as f64).sum();
        sum / self.times.len() as f64
    }
}

/// Sample median treating `None` as larger than every value.
pub fn median_censored(times: &[Option<u64>]) -> Median {
    let n = times.len();
    if n == 0 {
        return Median::Censored;
    }
    let mut hits: Vec<u64> = times.iter().flatten().copied().collect();
    hits.sort_unstable();
    let at = |k: usize| hits.get(k).map(|&v| v as f64);
    let value = if n % 2 == 1 {
        at(n / 2)
    } else {
        at(n / 2 - 1).zip(at(n / 2)).map(|(a, b)| (a + b) / 2.0)
    };
    value.map_or(Median::Censored, Median::Value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub problem: String,
    pub scheme: String,
    pub fit: Option<SlopeFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub slopes: Vec<SlopeRow>,
}

impl SweepResult {
    pub fn cell(&self, problem: &ProblemSpec, strategy: Strategy) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| &c.problem == problem && c.strategy == strategy)
    }

    pub fn slope(&self, family: &str, strategy: Strategy) -> Option<SlopeFit> {
        let scheme = strategy.to_string();
        self.slopes
            .iter()
            .find(|r| r.problem == family && r.scheme == scheme)
            .and_then(|r| r.fit)
    }
}

/// Runs every trial of every cell, in parallel. Trial `k` of cell `c` uses
/// seed `derive_seed(spec.seed, [c, k])`, so results do not depend on the
/// execution order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells: Vec<(usize, &ProblemSpec, Strategy)> = spec.cells().enumerate().map(|(i, (p, s))| (i, p, s)).collect();
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|&(i, _, _)| (0..spec.trials).map(move |k| (i, k)))
        .collect();
    // TSP instances are loaded once per problem and shared.
    let tsp: Vec<Option<Arc<crate::problems::TspInstance>>> = spec
        .problems
        .iter()
        .map(|p| match p {
            ProblemSpec::Tsp(source) => load_tsp(source).map(|i| Some(Arc::new(i))),
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;
    let times: Vec<Option<u64>> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let (_, problem, strategy) = cells[i];
            let seed = derive_seed(spec.seed, &[i as u64, k as u64]);
            let config = spec.cell_config(problem, strategy, seed)?;
            let trace = match &tsp[i / spec.strategies.len()] {
                Some(inst) => run_problem(&TspProblem::new(inst.clone(), config.tsp_move)?, &config)?,
                None => run_steady_state(&config)?,
            };
            Ok(trace.first_hit_time)
        })
        .collect::<Result<_>>()?;
    let mut results = Vec::with_capacity(cells.len());
    for (i, problem, strategy) in cells {
        results.push(CellResult {
            problem: problem.clone(),
            strategy,
            pair_mode: spec.pair_mode,
            crossover_rate: spec.crossover_rate,
            budget: spec.budget.resolve(problem)?,
            times: times[i * spec.trials..(i + 1) * spec.trials].to_vec(),
        });
    }
    let slopes = scaling_slopes(&results);
    Ok(SweepResult { cells: results, slopes })
}

/// One slope per (family, scheme) over the uncensored medians.
pub fn scaling_slopes(cells: &[CellResult]) -> Vec<SlopeRow> {
    let mut keys: Vec<(String, String)> = cells
        .iter()
        .filter(|c| c.problem.scaling_delta().is_some())
        .map(|c| (c.problem.family(), c.strategy.to_string()))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(problem, scheme)| {
            let points: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.problem.family() == problem && c.strategy.to_string() == scheme)
                .filter_map(|c| Some((c.problem.scaling_delta()?, c.median().value()?)))
                .collect();
            let fit = fit_loglog_slope(&points).ok();
            SlopeRow { problem, scheme, fit }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for three or fewer exactly collinear
    /// points.
    pub stderr: f64,
}

/// Least-squares slope of `ln T` against `ln(1/Δ)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(d, t)| !(d > 0.0 && t > 0.0)) {
        return Err(Error::InvalidParameter("slope fit needs Δ > 0 and T > 0".into()));
    }
    let xs: Vec<f64> = points.iter().map(|&(d, _)| -d.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct Δ values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

/// Report row for one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub params: String,
    pub scheme: String,
    pub pair_mode: PairMode,
    pub crossover_rate: f64,
    pub trials: usize,
    pub median: Median,
    pub mean: f64,
    pub censored: usize,
    pub budget: u64,
}

/// Cell rows ordered by (problem, scheme, Δ descending), and the slope rows.
pub fn summarize(result: &SweepResult) -> (Vec<SummaryRow>, Vec<SlopeRow>) {
    let mut cells: Vec<&CellResult> = result.cells.iter().collect();
    cells.sort_by(|a, b| {
        let da = a.problem.scaling_delta().unwrap_or(f64::INFINITY);
        let db = b.problem.scaling_delta().unwrap_or(f64::INFINITY);
        a.problem
            .family()
            .cmp(&b.problem.family())
            .then_with(|| a.strategy.to_string().cmp(&b.strategy.to_string()))
            .then_with(|| db.total_cmp(&da))
            .then_with(|| a.problem.params().cmp(&b.problem.params()))
    });
    let rows = cells
        .into_iter()
        .map(|c| SummaryRow {
            problem: c.problem.family(),
            params: c.problem.params(),
            scheme: c.strategy.to_string(),
            pair_mode: c.pair_mode,
            crossover_rate: c.crossover_rate,
            trials: c.trials(),
            median: c.median(),
            mean: c.mean(),
            censored: c.censored(),
            budget: c.budget,
        })
        .collect();
    let mut slopes = result.slopes.clone();
    slopes.sort_by(|a, b| (&a.problem, &a.scheme).cmp(&(&b.problem, &b.scheme)));
    (rows, slopes)
}

/// Applies `scheme` `offspring` times to a population with the given level
/// counts (selection only) and returns the offspring count per input level.
pub fn generational_transform(
    histogram: &[(f64, usize)],
    scheme: SelectionScheme,
    scale: FitnessScale,
    offspring: usize,
    rng: &mut RandomSource,
) -> Result<Vec<(f64, usize)>> {
    let pop = histogram_population(histogram)?;
    let mut out: Vec<(f64, usize)> = histogram.iter().map(|&(f, _)| (f, 0)).collect();
    for _ in 0..offspring {
        let f = scheme.select(&pop, scale, rng)?.fitness();
        let slot = out
            .iter_mut()
            .find(|(level, _)| *level == f)
            .expect("selected fitness comes from the input histogram");
        slot.1 += 1;
    }
    Ok(out)
}

/// Expected offspring counts per input level for `offspring` selections.
pub fn expected_transform(
    histogram: &[(f64, usize)],
    scheme: SelectionScheme,
    scale: FitnessScale,
    offspring: usize,
) -> Result<Vec<(f64, f64)>> {
    let pop = histogram_population(histogram)?;
    let probs = scheme.level_probabilities(&pop, scale)?;
    Ok(histogram
        .iter()
        .map(|&(f, _)| {
            let p = probs.iter().find(|(l, _)| *l == f).map_or(0.0, |&(_, p)| p);
            (f, p * offspring as f64)
        })
        .collect())
}

fn histogram_population(histogram: &[(f64, usize)]) -> Result<Population<()>> {
    if histogram.iter().all(|&(_, n)| n == 0) {
        return Err(Error::InvalidParameter("histogram has no occupied level".into()));
    }
    let mut pop = Population::new();
    let mut rng = RandomSource::new(0);
    for &(f, n) in histogram {
        if !f.is_finite() {
            return Err(Error::InvalidParameter(format!("histogram level {f} is not finite")));
        }
        for _ in 0..n {
            pop.add(Individual::new((), f), &mut rng);
        }
    }
    Ok(pop)
}

/// Per-level statistics of the selection-only occupation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationResult {
    pub levels: Vec<f64>,
    pub initial: usize,
    pub steps: usize,
    pub seeds: usize,
    /// Mean `n_t(f)` over seeds.
    pub mean_counts: Vec<f64>,
    /// Standard error of `mean_counts`.
    pub std_errors: Vec<f64>,
    /// Mean over seeds of the final fraction `n_t(f)/|P_t|`.
    pub mean_fractions: Vec<f64>,
}

impl OccupationResult {
    /// `n_0(f) + t/|F|`.
    pub fn expected_count(&self) -> f64 {
        self.initial as f64 + self.steps as f64 / self.levels.len() as f64
    }
}

/// FUSS without variation in the pure model: `levels` equally spaced levels
/// (ε = 1) start with `initial` members each, then every step adds a copy
/// of a FUSS-selected member.
pub fn occupation_experiment(
    levels: usize,
    initial: usize,
    steps: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<OccupationResult> {
    if levels == 0 || initial == 0 || seeds == 0 {
        return Err(Error::InvalidParameter(
            "occupation experiment needs levels, initial and seeds >= 1".into(),
        ));
    }
    let runs: Vec<Vec<usize>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut rng = RandomSource::new(derive_seed(base_seed, &[s as u64]));
            let mut pop: Population<()> = Population::new();
            for f in 0..levels {
                for _ in 0..initial {
                    pop.add(Individual::new((), f as f64), &mut rng);
                }
            }
            for _ in 0..steps {
                let f = fuss_select(&pop, 1.0, &mut rng)?.fitness();
                pop.add(Individual::new((), f), &mut rng);
            }
            Ok((0..levels).map(|f| pop.count(f as f64)).collect())
        })
        .collect::<Result<_>>()?;
    let total = (levels * initial + steps) as f64;
    let n = seeds as f64;
    let mut mean_counts = Vec::with_capacity(levels);
    let mut std_errors = Vec::with_capacity(levels);
    let mut mean_fractions = Vec::with_capacity(levels);
    for f in 0..levels {
        let xs: Vec<f64> = runs.iter().map(|r| r[f] as f64).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let var = if seeds > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean_counts.push(mean);
        std_errors.push((var / n).sqrt());
        mean_fractions.push(mean / total);
    }
    Ok(OccupationResult {
        levels: (0..levels).map(|f| f as f64).collect(),
        initial,
        steps,
        seeds,
        mean_counts,
        std_errors,
        mean_fractions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspRow {
    pub scheme: String,
    pub seed: u64,
    pub best_fitness: f64,
    pub best_length: f64,
}

/// Every strategy run for the full budget on one instance, over the same
/// derived seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct TspComparison {
    pub source: TspSource,
    pub strategies: Vec<Strategy>,
    pub budget: u64,
    pub seeds: usize,
    pub seed: u64,
    pub tsp_move: TspMove,
    /// `None` keeps the per-strategy default.
    pub capacity: Option<Capacity>,
    /// `None` keeps the per-strategy default.
    pub deletion: Option<DeletionPolicy>,
}

impl TspComparison {
    pub fn new(source: TspSource, strategies: Vec<Strategy>, seed: u64) -> Self {
        TspComparison {
            source,
            strategies,
            budget: 100_000,
            seeds: 20,
            seed,
            tsp_move: TspMove::default(),
            capacity: None,
            deletion: None,
        }
    }

    /// One row per (strategy, seed), strategies in order.
    pub fn run(&self) -> Result<Vec<TspRow>> {
        if self.budget == 0 || self.seeds == 0 || self.strategies.is_empty() {
            return Err(Error::Config("TSP comparison needs budget, seeds and schemes".into()));
        }
        let instance = Arc::new(load_tsp(&self.source)?);
        let problem = TspProblem::new(instance, self.tsp_move)?;
        let jobs: Vec<(usize, usize)> = (0..self.strategies.len())
            .flat_map(|s| (0..self.seeds).map(move |k| (s, k)))
            .collect();
        jobs.par_iter()
            .map(|&(s, k)| {
                let strategy = self.strategies[s];
                let seed = derive_seed(self.seed, &[k as u64]);
                let mut c = RunConfig::new(ProblemSpec::Tsp(self.source.clone()), strategy, seed);
                c.budget = self.budget;
                c.tsp_move = self.tsp_move;
                c.target = Target::None;
                match self.capacity {
                    Some(Capacity::Unbounded) => c.capacity = None,
                    Some(Capacity::Bounded(n)) => c.capacity = Some(n),
                    None => {}
                }
                if let Some(d) = self.deletion {
                    c.deletion = d;
                }
                let trace = run_problem(&problem, &c)?;
                let best = trace.best_fitness.ok_or(Error::EmptyPopulation)?;
                Ok(TspRow {
                    scheme: strategy.to_string(),
                    seed,
                    best_fitness: best,
                    best_length: 1.0 / best,
                })
            })
            .collect()
    }
}

/// Median of a nonempty slice of finite values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
