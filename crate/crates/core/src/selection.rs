//! Selection schemes.
//!
//! FUSS picks a fitness value uniformly from the occupied fitness range
//! (widened by half a grid step on each side) and then a uniformly random
//! member of the level nearest to it. The standard schemes (proportionate,
//! truncation, linear ranking, tournament) and one-stage uniform selection
//! are provided for comparison. Every scheme is a function of the
//! population and the draws taken from the supplied [`RandomSource`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fitness::FitnessScale;
use crate::population::{Individual, Population, TieRule};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionScheme {
    /// Fitness uniform selection.
    Fuss,
    /// Probability linear in `f − f_min + δ`.
    Proportionate,
    /// Uniform over the fittest `fraction` of the population.
    Truncation { fraction: f64 },
    /// Linear ranking with best-rank weight `eta_plus` and worst `2 − eta_plus`.
    Ranking { eta_plus: f64 },
    /// Best `winners` of `size` uniform draws with replacement.
    Tournament { size: usize, winners: usize },
    /// One-stage uniform selection over individuals.
    Uniform,
}

impl SelectionScheme {
    pub fn truncation(fraction: f64) -> Result<Self> {
        let s = SelectionScheme::Truncation { fraction };
        s.validate()?;
        Ok(s)
    }

    pub fn ranking(eta_plus: f64) -> Result<Self> {
        let s = SelectionScheme::Ranking { eta_plus };
        s.validate()?;
        Ok(s)
    }

    pub fn tournament(size: usize, winners: usize) -> Result<Self> {
        let s = SelectionScheme::Tournament { size, winners };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionScheme::Truncation { fraction } if !(fraction > 0.0 && fraction <= 1.0) => Err(
                Error::InvalidParameter(format!("truncation fraction must be in (0, 1], got {fraction}")),
            ),
            SelectionScheme::Ranking { eta_plus } if !(1.0..=2.0).contains(&eta_plus) => Err(Error::InvalidParameter(
                format!("ranking eta+ must be in [1, 2], got {eta_plus}"),
            )),
            SelectionScheme::Tournament { size, winners } if winners < 1 || winners > size => Err(
                Error::InvalidParameter(format!("tournament needs 1 <= l <= k, got k={size} l={winners}")),
            ),
            _ => Ok(()),
        }
    }

    /// True for the standard schemes that bias toward higher fitness.
    pub fn is_standard(&self) -> bool {
        !matches!(self, SelectionScheme::Fuss | SelectionScheme::Uniform)
    }

    /// Selects one individual. For tournaments with `l > 1` the best winner
    /// is returned.
    pub fn select<'a, G>(
        &self,
        pop: &'a Population<G>,
        scale: FitnessScale,
        rng: &mut RandomSource,
    ) -> Result<&'a Individual<G>> {
        match *self {
            SelectionScheme::Fuss => fuss_select(pop, scale.fuss_epsilon(pop), rng),
            SelectionScheme::Proportionate => select_proportionate(pop, scale.spacing(pop), rng),
            SelectionScheme::Truncation { fraction } => select_truncation(pop, fraction, rng),
            SelectionScheme::Ranking { eta_plus } => select_ranking(pop, eta_plus, rng),
            SelectionScheme::Tournament { size, winners } => Ok(select_tournament(pop, size, winners, rng)?[0]),
            SelectionScheme::Uniform => select_uniform(pop, rng),
        }
    }

    /// Analytic probability that the selected individual comes from each
    /// occupied level, ascending by fitness. For tournaments this is the
    /// distribution of the best winner.
    pub fn level_probabilities<G>(&self, pop: &Population<G>, scale: FitnessScale) -> Result<Vec<(f64, f64)>> {
        match *self {
            SelectionScheme::Fuss => fuss_selection_probabilities(pop, scale.fuss_epsilon(pop)),
            SelectionScheme::Proportionate => proportionate_probabilities(pop, scale.spacing(pop)),
            SelectionScheme::Truncation { fraction } => truncation_probabilities(pop, fraction),
            SelectionScheme::Ranking { eta_plus } => {
                let per_rank = ranking_probabilities(pop, eta_plus)?;
                let mut out = Vec::with_capacity(pop.level_count());
                let mut offset = 0;
                for (f, n) in pop.counts() {
                    out.push((f, per_rank[offset..offset + n].iter().sum()));
                    offset += n;
                }
                Ok(out)
            }
            SelectionScheme::Tournament { size, .. } => tournament_probabilities(pop, size),
            SelectionScheme::Uniform => {
                non_empty(pop)?;
                let total = pop.len() as f64;
                Ok(pop.counts().map(|(f, n)| (f, n as f64 / total)).collect())
            }
        }
    }
}

impl fmt::Display for SelectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionScheme::Fuss => f.write_str("fuss"),
            SelectionScheme::Proportionate => f.write_str("proportionate"),
            SelectionScheme::Truncation { fraction } => write!(f, "truncation:{fraction}"),
            SelectionScheme::Ranking { eta_plus } => write!(f, "ranking:{eta_plus}"),
            SelectionScheme::Tournament { size, winners } => write!(f, "tournament:{size}:{winners}"),
            SelectionScheme::Uniform => f.write_str("uniform"),
        }
    }
}

fn arity(name: &str, args: &[&str], expected: usize, shape: &str) -> Result<()> {
    if args.len() != expected {
        return Err(Error::Parse(format!(
            "scheme '{name}' expects {expected} parameter(s) ({shape}), got {}",
            args.len()
        )));
    }
    Ok(())
}

fn parse_num<T: FromStr>(name: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("scheme '{name}': malformed number '{raw}'")))
}

impl FromStr for SelectionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let scheme = match name {
            "fuss" => {
                arity(name, &args, 0, "none")?;
                SelectionScheme::Fuss
            }
            "proportionate" => {
                arity(name, &args, 0, "none")?;
                SelectionScheme::Proportionate
            }
            "uniform" => {
                arity(name, &args, 0, "none")?;
                SelectionScheme::Uniform
            }
            "truncation" => {
                arity(name, &args, 1, "alpha")?;
                SelectionScheme::Truncation {
                    fraction: parse_num(name, args[0])?,
                }
            }
            "ranking" => {
                arity(name, &args, 1, "eta+")?;
                SelectionScheme::Ranking {
                    eta_plus: parse_num(name, args[0])?,
                }
            }
            "tournament" => {
                arity(name, &args, 2, "k:l")?;
                SelectionScheme::Tournament {
                    size: parse_num(name, args[0])?,
                    winners: parse_num(name, args[1])?,
                }
            }
            other => return Err(Error::Parse(format!("unknown selection scheme '{other}'"))),
        };
        scheme.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(scheme)
    }
}

fn non_empty<G>(pop: &Population<G>) -> Result<()> {
    if pop.is_empty() {
        Err(Error::EmptyPopulation)
    } else {
        Ok(())
    }
}

/// Sampling interval `[f_min − ε/2, f_max + ε/2]` as (start, width).
fn fuss_interval<G>(pop: &Population<G>, epsilon: f64) -> Result<(f64, f64)> {
    let (lo, hi) = match (pop.f_min(), pop.f_max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::EmptyPopulation),
    };
    Ok((lo - 0.5 * epsilon, hi - lo + epsilon))
}

/// FUSS level for the fitness-axis draw `u ∈ [0, 1)`.
pub fn fuss_level_at<G>(
    pop: &Population<G>,
    epsilon: f64,
    u: f64,
    tie: TieRule,
    rng: &mut RandomSource,
) -> Result<f64> {
    let (start, width) = fuss_interval(pop, epsilon)?;
    pop.nearest_level(start + u * width, tie, rng)
}

/// FUSS with an explicit fitness-axis draw `u`; `rng` only picks the member
/// within the level and breaks exact distance ties.
pub fn fuss_select_at<'a, G>(
    pop: &'a Population<G>,
    epsilon: f64,
    u: f64,
    tie: TieRule,
    rng: &mut RandomSource,
) -> Result<&'a Individual<G>> {
    let level = fuss_level_at(pop, epsilon, u, tie, rng)?;
    Ok(pop.pick_in_level(level, rng))
}

pub fn fuss_select<'a, G>(pop: &'a Population<G>, epsilon: f64, rng: &mut RandomSource) -> Result<&'a Individual<G>> {
    let u = rng.uniform();
    fuss_select_at(pop, epsilon, u, TieRule::Random, rng)
}

/// Probability of each occupied level under FUSS: the length of the level's
/// nearest-neighbour cell inside the sampling interval over the interval
/// length. An individual's probability is its level's divided by `n(f)`.
pub fn fuss_selection_probabilities<G>(pop: &Population<G>, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    let (start, width) = fuss_interval(pop, epsilon)?;
    let values: Vec<f64> = pop.counts().map(|(f, _)| f).collect();
    if values.len() == 1 || width <= 0.0 {
        return Ok(vec![(values[0], 1.0)]);
    }
    let end = start + width;
    let mut out = Vec::with_capacity(values.len());
    for (i, &f) in values.iter().enumerate() {
        let left = if i == 0 { start } else { 0.5 * (values[i - 1] + f) };
        let right = if i + 1 == values.len() {
            end
        } else {
            0.5 * (f + values[i + 1])
        };
        out.push((f, (right - left) / width));
    }
    Ok(out)
}

/// Level probabilities of proportionate selection with weights
/// `g(f) = f − f_min + δ`. Falls back to uniform when all weights vanish.
pub fn proportionate_probabilities<G>(pop: &Population<G>, delta: f64) -> Result<Vec<(f64, f64)>> {
    non_empty(pop)?;
    let f_min = pop.f_min().unwrap_or_default();
    let weights: Vec<(f64, f64)> = pop.counts().map(|(f, n)| (f, n as f64 * (f - f_min + delta))).collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        let n = pop.len() as f64;
        return Ok(pop.counts().map(|(f, c)| (f, c as f64 / n)).collect());
    }
    Ok(weights.into_iter().map(|(f, w)| (f, w / total)).collect())
}

pub fn select_proportionate<'a, G>(
    pop: &'a Population<G>,
    delta: f64,
    rng: &mut RandomSource,
) -> Result<&'a Individual<G>> {
    non_empty(pop)?;
    let f_min = pop.f_min().unwrap_or_default();
    let total: f64 = pop.counts().map(|(f, n)| n as f64 * (f - f_min + delta)).sum();
    if total <= 0.0 {
        return select_uniform(pop, rng);
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (f, n) in pop.counts() {
        acc += n as f64 * (f - f_min + delta);
        chosen = Some(f);
        if target < acc {
            break;
        }
    }
    let level = chosen.expect("non-empty");
    Ok(pop.pick_in_level(level, rng))
}

/// Number of fittest individuals kept by truncation: `⌈α·|P|⌉`, clamped to
/// `[1, |P|]`.
fn truncation_size(len: usize, fraction: f64) -> usize {
    let m = (fraction * len as f64 - 1e-9).ceil();
    (m.max(1.0) as usize).min(len)
}

/// Levels taken by truncation (from the top, whole tied groups) and the
/// number of members they hold.
fn truncation_cut<G>(pop: &Population<G>, fraction: f64) -> (f64, usize) {
    let wanted = truncation_size(pop.len(), fraction);
    let mut included = 0;
    let mut cutoff = f64::INFINITY;
    for (f, n) in pop.counts().rev() {
        included += n;
        cutoff = f;
        if included >= wanted {
            break;
        }
    }
    (cutoff, included)
}

pub fn truncation_probabilities<G>(pop: &Population<G>, fraction: f64) -> Result<Vec<(f64, f64)>> {
    non_empty(pop)?;
    let (cutoff, included) = truncation_cut(pop, fraction);
    Ok(pop
        .counts()
        .map(|(f, n)| (f, if f >= cutoff { n as f64 / included as f64 } else { 0.0 }))
        .collect())
}

pub fn select_truncation<'a, G>(
    pop: &'a Population<G>,
    fraction: f64,
    rng: &mut RandomSource,
) -> Result<&'a Individual<G>> {
    non_empty(pop)?;
    let (_, included) = truncation_cut(pop, fraction);
    let index = pop.len() - included + rng.index(included);
    Ok(pop.nth(index).expect("index within population"))
}

/// Cumulative linear-ranking mass of the `m` worst ranks.
fn ranking_cumulative(m: usize, n: usize, eta_plus: f64) -> f64 {
    if n == 1 {
        return if m >= 1 { 1.0 } else { 0.0 };
    }
    let eta_minus = 2.0 - eta_plus;
    let m = m as f64;
    (eta_minus * m + (eta_plus - eta_minus) * m * (m - 1.0) / (2.0 * (n as f64 - 1.0))) / n as f64
}

/// Per-individual linear-ranking probabilities in ascending fitness order
/// (rank 1 = worst).
pub fn ranking_probabilities<G>(pop: &Population<G>, eta_plus: f64) -> Result<Vec<f64>> {
    non_empty(pop)?;
    let n = pop.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let eta_minus = 2.0 - eta_plus;
    Ok((1..=n)
        .map(|r| (eta_minus + (eta_plus - eta_minus) * (r - 1) as f64 / (n - 1) as f64) / n as f64)
        .collect())
}

pub fn select_ranking<'a, G>(
    pop: &'a Population<G>,
    eta_plus: f64,
    rng: &mut RandomSource,
) -> Result<&'a Individual<G>> {
    non_empty(pop)?;
    let n = pop.len();
    let target = rng.uniform() * ranking_cumulative(n, n, eta_plus);
    // smallest m with cumulative(m) > target
    let (mut lo, mut hi) = (1, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ranking_cumulative(mid, n, eta_plus) > target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(pop.nth(lo - 1).expect("rank within population"))
}

/// Draws `size` individuals uniformly with replacement and returns the
/// `winners` fittest, best first; equal fitness keeps draw order.
pub fn select_tournament<'a, G>(
    pop: &'a Population<G>,
    size: usize,
    winners: usize,
    rng: &mut RandomSource,
) -> Result<Vec<&'a Individual<G>>> {
    non_empty(pop)?;
    SelectionScheme::Tournament { size, winners }.validate()?;
    let mut drawn: Vec<&Individual<G>> = (0..size).map(|_| select_uniform(pop, rng)).collect::<Result<_>>()?;
    drawn.sort_by(|a, b| b.fitness().total_cmp(&a.fitness()));
    drawn.truncate(winners);
    Ok(drawn)
}

/// Level distribution of the best of `size` uniform draws with replacement.
pub fn tournament_probabilities<G>(pop: &Population<G>, size: usize) -> Result<Vec<(f64, f64)>> {
    non_empty(pop)?;
    let n = pop.len() as f64;
    let k = size as i32;
    let mut below = 0usize;
    Ok(pop
        .counts()
        .map(|(f, c)| {
            let lo = below as f64 / n;
            below += c;
            let hi = below as f64 / n;
            (f, hi.powi(k) - lo.powi(k))
        })
        .collect())
}

pub fn select_uniform<'a, G>(pop: &'a Population<G>, rng: &mut RandomSource) -> Result<&'a Individual<G>> {
    non_empty(pop)?;
    Ok(pop.nth(rng.index(pop.len())).expect("index within population"))
}
