//! Selection of parent pairs for recombination.
//!
//! Three modes are supported: two independent FUSS selections, dependent
//! selection (one fitness draw, both parents from the nearest level), and
//! correlated selection from the scale-independent joint distribution
//!
//! ```text
//! p̃(f, f') = 1 / (2|F| ln|F|) · 1 / (|f − f'|/ε + 1)
//! p(f, f') = p̃(f, f')                        for f ≠ f'
//! p(f, f)  = p̃(f, f) + 1/|F| − Σ_f' p̃(f, f')
//! ```
//!
//! which has exactly uniform marginals and favours pairs of similar
//! fitness without excluding distant ones.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fitness::{FitnessGrid, FitnessScale};
use crate::population::{Individual, Population, TieRule};
use crate::rng::RandomSource;
use crate::selection::{fuss_level_at, fuss_select};

/// Largest grid for which the correlated sampler materializes the joint
/// table; larger grids sample rows from harmonic-number prefix sums.
pub const TABLE_LIMIT: usize = 1024;

fn check_levels(levels: usize) -> Result<()> {
    if levels < 3 {
        Err(Error::GridTooSmall { levels })
    } else {
        Ok(())
    }
}

/// `1 / (2 n ln n)`.
fn tilde_scale(levels: usize) -> f64 {
    let n = levels as f64;
    1.0 / (2.0 * n * n.ln())
}

fn tilde_by_index(levels: usize, i: usize, j: usize) -> f64 {
    tilde_scale(levels) / (i.abs_diff(j) as f64 + 1.0)
}

/// Uncorrected joint probability p̃(f, f') for grid values `f`, `f2`.
pub fn pair_prob_tilde(f: f64, f2: f64, grid: &FitnessGrid) -> Result<f64> {
    check_levels(grid.levels())?;
    let (i, j) = (grid.index_of(f)?, grid.index_of(f2)?);
    Ok(tilde_by_index(grid.levels(), i, j))
}

/// Marginal Σ_f' p̃(f, f').
pub fn marginal_tilde(f: f64, grid: &FitnessGrid) -> Result<f64> {
    check_levels(grid.levels())?;
    let i = grid.index_of(f)?;
    Ok(marginal_tilde_by_index(grid.levels(), i))
}

fn marginal_tilde_by_index(levels: usize, i: usize) -> f64 {
    (0..levels).map(|j| tilde_by_index(levels, i, j)).sum()
}

/// The corrected joint distribution p(f, f') over a grid, with per-row
/// cumulative tables for two-stage inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct PairDistribution {
    grid: FitnessGrid,
    joint: Vec<f64>,
    marginal: Vec<f64>,
    row_cdf: Vec<f64>,
}

impl PairDistribution {
    pub fn build(grid: FitnessGrid) -> Result<Self> {
        let n = grid.levels();
        check_levels(n)?;
        let mut joint = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                joint[i * n + j] = tilde_by_index(n, i, j);
            }
        }
        let uniform = 1.0 / n as f64;
        for i in 0..n {
            let correction = uniform - marginal_tilde_by_index(n, i);
            assert!(
                correction >= 0.0,
                "diagonal correction must be nonnegative, got {correction}"
            );
            joint[i * n + i] += correction;
        }
        let marginal: Vec<f64> = (0..n).map(|i| joint[i * n..(i + 1) * n].iter().sum()).collect();
        let mut row_cdf = vec![0.0; n * n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += joint[i * n + j] * n as f64;
                row_cdf[i * n + j] = acc;
            }
            row_cdf[i * n + n - 1] = 1.0;
        }
        Ok(PairDistribution {
            grid,
            joint,
            marginal,
            row_cdf,
        })
    }

    pub fn grid(&self) -> &FitnessGrid {
        &self.grid
    }

    pub fn levels(&self) -> usize {
        self.grid.levels()
    }

    /// p(f_i, f_j) by grid index.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.joint[i * self.levels() + j]
    }

    /// p̃(f_i, f_j) by grid index.
    pub fn tilde(&self, i: usize, j: usize) -> f64 {
        tilde_by_index(self.levels(), i, j)
    }

    pub fn marginal(&self, i: usize) -> f64 {
        self.marginal[i]
    }

    /// Row-major joint matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.joint
    }

    /// Conditional cumulative table of row `i`, ending at exactly 1.
    pub fn row_cdf(&self, i: usize) -> &[f64] {
        let n = self.levels();
        &self.row_cdf[i * n..(i + 1) * n]
    }

    /// Index pair for two uniform draws: `u1` picks the row from the uniform
    /// marginal, `u2` the column from the conditional row.
    pub fn sample_indices(&self, u1: f64, u2: f64) -> (usize, usize) {
        let n = self.levels();
        let i = ((u1 * n as f64) as usize).min(n - 1);
        let j = self.row_cdf(i).partition_point(|&c| c <= u2).min(n - 1);
        (i, j)
    }

    pub fn sample(&self, rng: &mut RandomSource) -> (f64, f64) {
        let (i, j) = self.sample_indices(rng.uniform(), rng.uniform());
        (self.grid.value(i), self.grid.value(j))
    }
}

/// Row sampler equivalent to [`PairDistribution`] that needs only the
/// harmonic numbers `H_k`, O(|F|) memory instead of O(|F|²).
#[derive(Debug, Clone, Default)]
pub struct HarmonicRows {
    harmonic: Vec<f64>,
}

impl HarmonicRows {
    fn ensure(&mut self, upto: usize) {
        if self.harmonic.is_empty() {
            self.harmonic.push(0.0);
        }
        while self.harmonic.len() <= upto {
            let k = self.harmonic.len();
            let next = self.harmonic[k - 1] + 1.0 / k as f64;
            self.harmonic.push(next);
        }
    }

    fn h(&self, k: usize) -> f64 {
        self.harmonic[k]
    }

    /// Conditional CDF value of row `i` at column `j` for a grid of `n` levels.
    pub fn row_cdf_at(&mut self, n: usize, i: usize, j: usize) -> f64 {
        self.ensure(n);
        let a = 1.0 / (2.0 * (n as f64).ln());
        let left = a * (self.h(i + 1) - 1.0);
        let right = a * (self.h(n - i) - 1.0);
        let diag = 1.0 - left - right;
        if j < i {
            a * (self.h(i + 1) - self.h(i - j))
        } else if j == i {
            left + diag
        } else if j + 1 == n {
            1.0
        } else {
            left + diag + a * (self.h(j - i + 1) - 1.0)
        }
    }

    /// Column for draw `u2` in row `i`: the smallest `j` whose conditional
    /// CDF exceeds `u2`.
    pub fn sample_column(&mut self, n: usize, i: usize, u2: f64) -> usize {
        self.ensure(n);
        let (mut lo, mut hi) = (0, n - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.row_cdf_at(n, i, mid) > u2 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

/// Correlated pair sampler that reuses tables while `|F_t|` is unchanged.
#[derive(Debug, Clone, Default)]
pub struct CorrelatedSampler {
    table: Option<PairDistribution>,
    rows: HarmonicRows,
    rebuilds: usize,
}

impl CorrelatedSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of table builds so far.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Joint table for `grid`, rebuilt only when the level count changes.
    pub fn table_for(&mut self, grid: FitnessGrid) -> Result<&PairDistribution> {
        check_levels(grid.levels())?;
        let stale = self.table.as_ref().is_none_or(|t| t.levels() != grid.levels());
        if stale {
            self.table = Some(PairDistribution::build(grid)?);
            self.rebuilds += 1;
        }
        Ok(self.table.as_ref().expect("table just built"))
    }

    /// Fitness-value pair drawn from p over `grid`.
    pub fn sample(&mut self, grid: FitnessGrid, rng: &mut RandomSource) -> Result<(f64, f64)> {
        let n = grid.levels();
        check_levels(n)?;
        let (u1, u2) = (rng.uniform(), rng.uniform());
        let (i, j) = if n <= TABLE_LIMIT {
            self.table_for(grid)?.sample_indices(u1, u2)
        } else {
            let i = ((u1 * n as f64) as usize).min(n - 1);
            (i, self.rows.sample_column(n, i, u2))
        };
        Ok((grid.value(i), grid.value(j)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairMode {
    #[default]
    Independent,
    Dependent,
    Correlated,
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairMode::Independent => "pair:independent",
            PairMode::Dependent => "pair:dependent",
            PairMode::Correlated => "pair:correlated",
        })
    }
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.strip_prefix("pair:").unwrap_or(s) {
            "independent" => Ok(PairMode::Independent),
            "dependent" => Ok(PairMode::Dependent),
            "correlated" => Ok(PairMode::Correlated),
            other => Err(Error::Parse(format!(
                "unknown pair mode '{other}' (expected pair:independent, pair:dependent or pair:correlated)"
            ))),
        }
    }
}

/// Two selected parents. `fell_back` is set when correlated selection was
/// requested but the current grid had fewer than 3 levels.
#[derive(Debug)]
pub struct PairSelection<'a, G> {
    pub first: &'a Individual<G>,
    pub second: &'a Individual<G>,
    pub fell_back: bool,
}

/// Current fitness grid `F_t` (discrete) or `F̂_t` (continuous), if the
/// population spans a non-degenerate range.
pub fn current_grid<G>(pop: &Population<G>, scale: FitnessScale) -> Option<FitnessGrid> {
    let (lo, hi) = (pop.f_min()?, pop.f_max()?);
    match scale {
        FitnessScale::Discrete(eps) => {
            let levels = ((hi - lo) / eps).round() as usize + 1;
            FitnessGrid::with_levels(lo, eps, levels).ok()
        }
        FitnessScale::Continuous { .. } => {
            let eps = pop.effective_epsilon().ok()?;
            FitnessGrid::with_levels(lo, eps, pop.len()).ok()
        }
    }
}

fn dependent_pair<'a, G>(
    pop: &'a Population<G>,
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<(&'a Individual<G>, &'a Individual<G>)> {
    let u = rng.uniform();
    let level = fuss_level_at(pop, epsilon, u, TieRule::Random, rng)?;
    let members = pop.level(level).expect("occupied level");
    let n = members.len();
    if n < 2 {
        return Ok((&members[0], &members[0]));
    }
    let a = rng.index(n);
    let mut b = rng.index(n - 1);
    if b >= a {
        b += 1;
    }
    Ok((&members[a], &members[b]))
}

pub fn sample_pair<'a, G>(
    pop: &'a Population<G>,
    mode: PairMode,
    scale: FitnessScale,
    sampler: &mut CorrelatedSampler,
    rng: &mut RandomSource,
) -> Result<PairSelection<'a, G>> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let epsilon = scale.fuss_epsilon(pop);
    match mode {
        PairMode::Independent => Ok(PairSelection {
            first: fuss_select(pop, epsilon, rng)?,
            second: fuss_select(pop, epsilon, rng)?,
            fell_back: false,
        }),
        PairMode::Dependent => {
            let (first, second) = dependent_pair(pop, epsilon, rng)?;
            Ok(PairSelection {
                first,
                second,
                fell_back: false,
            })
        }
        PairMode::Correlated => match current_grid(pop, scale).filter(|g| g.levels() >= 3) {
            Some(grid) => {
                if !scale.is_discrete() {
                    log::trace!(
                        "correlated pairs over {} levels, log suppression ln|P| = {:.3}",
                        grid.levels(),
                        (grid.levels() as f64).ln()
                    );
                }
                let (f, f2) = sampler.sample(grid, rng)?;
                Ok(PairSelection {
                    first: pop.nearest_fitness_individual(f, TieRule::Random, rng)?,
                    second: pop.nearest_fitness_individual(f2, TieRule::Random, rng)?,
                    fell_back: false,
                })
            }
            None => {
                let (first, second) = dependent_pair(pop, epsilon, rng)?;
                Ok(PairSelection {
                    first,
                    second,
                    fell_back: true,
                })
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(levels: usize) -> FitnessGrid {
        FitnessGrid::with_levels(0.0, 1.0, levels).unwrap()
    }

    #[test]
    fn tilde_values_three_levels() {
        let g = grid(3);
        let diag = pair_prob_tilde(1.0, 1.0, &g).unwrap();
        assert!((diag - 1.0 / (6.0 * 3f64.ln())).abs() < 1e-15);
        assert!((diag - 0.151_706_5).abs() < 1e-7);
        let far = pair_prob_tilde(0.0, 2.0, &g).unwrap();
        assert!((far - 0.050_568_85).abs() < 1e-7);
        assert_eq!(
            pair_prob_tilde(0.0, 2.0, &g).unwrap(),
            pair_prob_tilde(2.0, 0.0, &g).unwrap()
        );
    }

    #[test]
    fn tilde_marginals_three_levels() {
        let g = grid(3);
        let mid = marginal_tilde(1.0, &g).unwrap();
        assert!((mid - 1.0 / (3.0 * 3f64.ln())).abs() < 1e-15);
        assert!((mid - 0.303_413_1).abs() < 1e-7);
        let edge = marginal_tilde(0.0, &g).unwrap();
        assert!((edge - 0.278_128_65).abs() < 1e-7);
        for m in [mid, edge] {
            assert!((1.0 / 6.0..=1.0 / 3.0).contains(&m));
        }
    }

    #[test]
    fn small_grids_rejected() {
        let g = grid(2);
        assert_eq!(
            pair_prob_tilde(0.0, 1.0, &g).unwrap_err(),
            Error::GridTooSmall { levels: 2 }
        );
        assert!(marginal_tilde(0.0, &g).is_err());
        assert!(PairDistribution::build(g).is_err());
        assert!(Error::GridTooSmall { levels: 2 }.to_string().contains("grid too small"));
    }

    #[test]
    fn off_grid_values_rejected() {
        assert!(matches!(
            pair_prob_tilde(0.5, 1.0, &grid(3)),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn corrected_diagonal_three_levels() {
        let d = PairDistribution::build(grid(3)).unwrap();
        let expected = 0.151_702 + (1.0 / 3.0 - 0.303_40);
        assert!((d.joint(1, 1) - expected).abs() < 1e-5);
        assert!((d.joint(1, 1) - 0.181_63).abs() < 1e-5);
    }

    #[test]
    fn distribution_invariants() {
        for n in [3, 10, 100] {
            let d = PairDistribution::build(grid(n)).unwrap();
            let total: f64 = d.matrix().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for i in 0..n {
                assert!((d.marginal(i) - 1.0 / n as f64).abs() < 1e-12);
                for j in 0..n {
                    assert_eq!(d.joint(i, j), d.joint(j, i));
                    assert!(d.joint(i, j) >= d.tilde(i, j));
                }
                assert_eq!(*d.row_cdf(i).last().unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn sample_indices_follow_row_cdf() {
        let d = PairDistribution::build(grid(3)).unwrap();
        assert_eq!(d.sample_indices(0.0, 0.0), (0, 0));
        assert_eq!(d.sample_indices(0.999, 0.9999), (2, 2));
        let (i, j) = d.sample_indices(0.5, 0.0);
        assert_eq!((i, j), (1, 0));
    }

    #[test]
    fn harmonic_rows_agree_with_table() {
        let mut rows = HarmonicRows::default();
        for n in [3, 4, 17, 64, 300] {
            let d = PairDistribution::build(grid(n)).unwrap();
            for i in 0..n {
                let table = d.row_cdf(i);
                for (j, &c) in table.iter().enumerate() {
                    let h = rows.row_cdf_at(n, i, j);
                    assert!((h - c).abs() < 1e-12, "n={n} i={i} j={j}: {h} vs {c}");
                }
            }
            let mut rng = RandomSource::new(n as u64);
            let mut mismatches = 0;
            for _ in 0..2000 {
                let (u1, u2) = (rng.uniform(), rng.uniform());
                let (i, j) = d.sample_indices(u1, u2);
                if rows.sample_column(n, i, u2) != j {
                    mismatches += 1;
                }
            }
            assert!(mismatches <= 1, "n={n}: {mismatches}");
        }
    }

    #[test]
    fn sampler_rebuilds_only_on_level_change() {
        let mut s = CorrelatedSampler::new();
        s.table_for(grid(5)).unwrap();
        s.table_for(FitnessGrid::with_levels(3.0, 1.0, 5).unwrap()).unwrap();
        assert_eq!(s.rebuilds(), 1);
        let grown = s.table_for(grid(8)).unwrap().clone();
        assert_eq!(s.rebuilds(), 2);
        let fresh = PairDistribution::build(grid(8)).unwrap();
        assert_eq!(grown.matrix(), fresh.matrix());
    }

    #[test]
    fn pair_mode_strings() {
        for m in [PairMode::Independent, PairMode::Dependent, PairMode::Correlated] {
            assert_eq!(m.to_string().parse::<PairMode>().unwrap(), m);
        }
        assert_eq!("dependent".parse::<PairMode>().unwrap(), PairMode::Dependent);
        assert!("pair:sideways".parse::<PairMode>().is_err());
    }

    fn pop_from(levels: &[(f64, usize)]) -> Population<u32> {
        let mut rng = RandomSource::new(0);
        let mut pop = Population::new();
        let mut id = 0;
        for &(f, n) in levels {
            for _ in 0..n {
                pop.add(Individual::new(id, f), &mut rng);
                id += 1;
            }
        }
        pop
    }

    #[test]
    fn single_level_pairs() {
        let pop = pop_from(&[(2.0, 3)]);
        let mut rng = RandomSource::new(1);
        let mut sampler = CorrelatedSampler::new();
        for mode in [PairMode::Independent, PairMode::Dependent, PairMode::Correlated] {
            for _ in 0..50 {
                let p = sample_pair(&pop, mode, FitnessScale::Discrete(1.0), &mut sampler, &mut rng).unwrap();
                assert_eq!(p.first.fitness(), 2.0);
                assert_eq!(p.second.fitness(), 2.0);
                assert_eq!(p.fell_back, mode == PairMode::Correlated);
            }
        }
    }

    #[test]
    fn dependent_pairs_are_distinct_when_possible() {
        let pop = pop_from(&[(1.0, 1), (2.0, 4)]);
        let mut rng = RandomSource::new(2);
        let mut sampler = CorrelatedSampler::new();
        let mut self_pairs = 0;
        for _ in 0..2000 {
            let p = sample_pair(
                &pop,
                PairMode::Dependent,
                FitnessScale::Discrete(1.0),
                &mut sampler,
                &mut rng,
            )
            .unwrap();
            assert_eq!(p.first.fitness(), p.second.fitness());
            if p.first.fitness() == 2.0 {
                assert_ne!(p.first.genome(), p.second.genome());
            } else {
                self_pairs += 1;
                assert_eq!(p.first.genome(), p.second.genome());
            }
        }
        assert!(self_pairs > 800 && self_pairs < 1200, "{self_pairs}");
    }

    #[test]
    fn empty_population_pair_errors() {
        let pop: Population<u32> = Population::new();
        let mut rng = RandomSource::new(3);
        let mut sampler = CorrelatedSampler::new();
        assert!(sample_pair(
            &pop,
            PairMode::Correlated,
            FitnessScale::Discrete(1.0),
            &mut sampler,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn continuous_grid_has_population_size_levels() {
        let pop = pop_from(&[(0.0, 1), (0.37, 1), (0.5, 2), (2.0, 1)]);
        let g = current_grid(&pop, FitnessScale::continuous()).unwrap();
        assert_eq!(g.levels(), 5);
        assert!((g.epsilon() - 0.5).abs() < 1e-15);
        let single = pop_from(&[(1.0, 4)]);
        assert!(current_grid(&single, FitnessScale::continuous()).is_none());
    }
}
