//! Fitness-indexed population.
//!
//! Members are bucketed by exact fitness value in an ordered map, so the
//! occupied level nearest to an arbitrary fitness is a predecessor/successor
//! query. Within a bucket members keep insertion order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::Fitness;
use crate::rng::RandomSource;

/// A genome with its cached fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual<G> {
    genome: G,
    fitness: f64,
    birth: u64,
}

impl<G> Individual<G> {
    pub fn new(genome: G, fitness: f64) -> Self {
        Individual {
            genome,
            fitness: Fitness::new(fitness).value(),
            birth: 0,
        }
    }

    pub fn genome(&self) -> &G {
        &self.genome
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    /// Creation index assigned when the individual joined a population.
    pub fn birth(&self) -> u64 {
        self.birth
    }

    pub fn into_genome(self) -> G {
        self.genome
    }
}

/// Which member to drop when a bounded population overflows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeletionPolicy {
    /// A uniformly random member of the lowest fitness level.
    #[default]
    Worst,
    /// A uniformly random member.
    Random,
    /// A uniformly random member of a level with maximal occupation.
    MostOccupied,
}

impl fmt::Display for DeletionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeletionPolicy::Worst => "worst",
            DeletionPolicy::Random => "random",
            DeletionPolicy::MostOccupied => "most-occupied",
        })
    }
}

impl FromStr for DeletionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "worst" => Ok(DeletionPolicy::Worst),
            "random" => Ok(DeletionPolicy::Random),
            "most-occupied" | "most_occupied" => Ok(DeletionPolicy::MostOccupied),
            other => Err(Error::Parse(format!(
                "unknown deletion policy '{other}' (expected worst, random or most-occupied)"
            ))),
        }
    }
}

/// Resolution of exact distance ties in nearest-level lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    Random,
    Lower,
}

/// Count and population fraction of one fitness level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelShare {
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Population<G> {
    levels: BTreeMap<Fitness, Vec<Individual<G>>>,
    len: usize,
    created: u64,
    capacity: Option<usize>,
    deletion: DeletionPolicy,
}

impl<G> Default for Population<G> {
    fn default() -> Self {
        Population::new()
    }
}

impl<G> Population<G> {
    /// Unbounded population: nothing is ever deleted.
    pub fn new() -> Self {
        Population {
            levels: BTreeMap::new(),
            len: 0,
            created: 0,
            capacity: None,
            deletion: DeletionPolicy::Worst,
        }
    }

    /// Population holding at most `capacity` members.
    pub fn bounded(capacity: usize, deletion: DeletionPolicy) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("capacity must be positive".into()));
        }
        Ok(Population {
            capacity: Some(capacity),
            deletion,
            ..Population::new()
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of individuals ever added.
    pub fn created(&self) -> u64 {
        self.created
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn deletion_policy(&self) -> DeletionPolicy {
        self.deletion
    }

    /// Number of occupied fitness levels.
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn count(&self, fitness: f64) -> usize {
        self.levels.get(&Fitness::new(fitness)).map_or(0, Vec::len)
    }

    /// Occupied levels in ascending fitness order.
    pub fn levels(&self) -> impl DoubleEndedIterator<Item = (f64, &[Individual<G>])> + '_ {
        self.levels.iter().map(|(k, v)| (k.value(), v.as_slice()))
    }

    pub fn level(&self, fitness: f64) -> Option<&[Individual<G>]> {
        self.levels.get(&Fitness::new(fitness)).map(Vec::as_slice)
    }

    /// `(fitness, n(f))` for each occupied level, ascending.
    pub fn counts(&self) -> impl DoubleEndedIterator<Item = (f64, usize)> + '_ {
        self.levels.iter().map(|(k, v)| (k.value(), v.len()))
    }

    /// Members in ascending fitness order, ties in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Individual<G>> + '_ {
        self.levels.values().flatten()
    }

    pub fn f_min(&self) -> Option<f64> {
        self.levels.keys().next().map(|k| k.value())
    }

    pub fn f_max(&self) -> Option<f64> {
        self.levels.keys().next_back().map(|k| k.value())
    }

    /// Oldest member of the top level.
    pub fn best(&self) -> Option<&Individual<G>> {
        self.levels.values().next_back().and_then(|v| v.first())
    }

    /// Member at `index` in ascending fitness order.
    pub fn nth(&self, index: usize) -> Option<&Individual<G>> {
        let mut rest = index;
        for bucket in self.levels.values() {
            if rest < bucket.len() {
                return Some(&bucket[rest]);
            }
            rest -= bucket.len();
        }
        None
    }

    /// Adds an individual, assigning its creation index. When a capacity is
    /// set and exceeded, one member is removed per the deletion policy and
    /// returned.
    pub fn add(&mut self, mut individual: Individual<G>, rng: &mut RandomSource) -> Option<Individual<G>> {
        individual.birth = self.created;
        self.created += 1;
        self.levels
            .entry(Fitness::new(individual.fitness))
            .or_default()
            .push(individual);
        self.len += 1;
        match self.capacity {
            Some(cap) if self.len > cap => self.delete(self.deletion, rng).ok(),
            _ => None,
        }
    }

    /// Removes one member per `policy`.
    pub fn delete(&mut self, policy: DeletionPolicy, rng: &mut RandomSource) -> Result<Individual<G>> {
        match policy {
            DeletionPolicy::Worst => self.delete_worst(rng),
            DeletionPolicy::Random => self.delete_random(rng),
            DeletionPolicy::MostOccupied => self.delete_from_most_occupied(rng),
        }
    }

    /// Removes a uniformly random member of a maximally occupied level;
    /// ties between such levels are broken uniformly.
    pub fn delete_from_most_occupied(&mut self, rng: &mut RandomSource) -> Result<Individual<G>> {
        let max = self.levels.values().map(Vec::len).max().ok_or(Error::EmptyPopulation)?;
        let tied: Vec<Fitness> = self
            .levels
            .iter()
            .filter(|(_, v)| v.len() == max)
            .map(|(k, _)| *k)
            .collect();
        let key = tied[rng.index(tied.len())];
        let slot = rng.index(max);
        Ok(self.remove(key, slot))
    }

    pub fn delete_worst(&mut self, rng: &mut RandomSource) -> Result<Individual<G>> {
        let (&key, bucket) = self.levels.iter().next().ok_or(Error::EmptyPopulation)?;
        let slot = rng.index(bucket.len());
        Ok(self.remove(key, slot))
    }

    pub fn delete_random(&mut self, rng: &mut RandomSource) -> Result<Individual<G>> {
        if self.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let mut rest = rng.index(self.len);
        let mut target = None;
        for (key, bucket) in &self.levels {
            if rest < bucket.len() {
                target = Some(*key);
                break;
            }
            rest -= bucket.len();
        }
        let key = target.expect("index within population length");
        Ok(self.remove(key, rest))
    }

    fn remove(&mut self, key: Fitness, slot: usize) -> Individual<G> {
        let bucket = self.levels.get_mut(&key).expect("occupied level");
        let removed = bucket.remove(slot);
        if bucket.is_empty() {
            self.levels.remove(&key);
        }
        self.len -= 1;
        removed
    }

    /// Occupied level whose value is nearest to `f`.
    pub fn nearest_level(&self, f: f64, tie: TieRule, rng: &mut RandomSource) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let key = Fitness::new(f);
        let below = self.levels.range(..=key).next_back().map(|(k, _)| k.value());
        let above = self.levels.range(key..).next().map(|(k, _)| k.value());
        let level = match (below, above) {
            (Some(lo), Some(hi)) => {
                let (d_lo, d_hi) = (f - lo, hi - f);
                if d_lo < d_hi {
                    lo
                } else if d_hi < d_lo {
                    hi
                } else {
                    match tie {
                        TieRule::Lower => lo,
                        TieRule::Random => {
                            if rng.coin() {
                                lo
                            } else {
                                hi
                            }
                        }
                    }
                }
            }
            (Some(lo), None) => lo,
            (None, Some(hi)) => hi,
            (None, None) => unreachable!("non-empty population has a level"),
        };
        Ok(level)
    }

    /// Uniformly random member of the occupied level nearest to `f`.
    pub fn nearest_fitness_individual(&self, f: f64, tie: TieRule, rng: &mut RandomSource) -> Result<&Individual<G>> {
        let level = self.nearest_level(f, tie, rng)?;
        Ok(self.pick_in_level(level, rng))
    }

    /// Uniformly random member of an occupied level. Panics if the level is
    /// empty.
    pub fn pick_in_level(&self, level: f64, rng: &mut RandomSource) -> &Individual<G> {
        let bucket = &self.levels[&Fitness::new(level)];
        &bucket[rng.index(bucket.len())]
    }

    /// Effective discretization scale ε̂ = (f_max − f_min)/(|P| − 1).
    pub fn effective_epsilon(&self) -> Result<f64> {
        match (self.f_min(), self.f_max()) {
            (Some(lo), Some(hi)) if self.len >= 2 && hi > lo => Ok((hi - lo) / (self.len - 1) as f64),
            _ => Err(Error::DegenerateRange),
        }
    }

    /// Count and fraction per occupied level.
    pub fn occupation_histogram(&self) -> BTreeMap<Fitness, LevelShare> {
        let total = self.len as f64;
        self.levels
            .iter()
            .map(|(k, v)| {
                (
                    *k,
                    LevelShare {
                        count: v.len(),
                        fraction: v.len() as f64 / total,
                    },
                )
            })
            .collect()
    }
}
